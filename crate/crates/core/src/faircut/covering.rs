//! Does `0` lie in the convex hull of a set of tangent directions? Decided
//! with Wolfe's minimum-norm-point algorithm on tangent-basis coordinates.

use crate::error::{invalid, Result};
use crate::geometry::{CurvatureSpace, Point, TangentVector};
use crate::linalg::{dot, null_vector, solve};

pub const MAX_ITERS: usize = 500;
/// Hull distance below which `0` counts as covered.
pub const COVER_TOL: f64 = 1e-9;

/// Minimum-norm point of the convex hull of `points`, as (weights, norm).
pub fn min_norm_point(points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let n = points.len();
    let combo = |support: &[usize], w: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; points[0].len()];
        for (&i, &l) in support.iter().zip(w) {
            x.iter_mut().zip(&points[i]).for_each(|(a, b)| *a += l * b);
        }
        x
    };
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(1e-300);
    let first = (0..n).min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b]))).unwrap();
    let mut support = vec![first];
    let mut lambda = vec![1.0];
    for _ in 0..MAX_ITERS {
        let x = combo(&support, &lambda);
        let xx = dot(&x, &x);
        if xx.sqrt() <= COVER_TOL * 1e-3 {
            break;
        }
        let j = (0..n).min_by(|&a, &b| dot(&x, &points[a]).total_cmp(&dot(&x, &points[b]))).unwrap();
        if dot(&x, &points[j]) > xx - 1e-12 * scale || support.contains(&j) {
            break;
        }
        support.push(j);
        lambda.push(0.0);
        loop {
            // affine minimizer over the support: [G 1; 1ᵀ 0][α; μ] = [0; 1]
            let s = support.len();
            let mut a = vec![vec![0.0; s + 1]; s + 1];
            for r in 0..s {
                for c in 0..s {
                    a[r][c] = dot(&points[support[r]], &points[support[c]]);
                }
                a[r][s] = 1.0;
                a[s][r] = 1.0;
            }
            let mut rhs = vec![0.0; s + 1];
            rhs[s] = 1.0;
            let alpha = match solve(&a, &rhs) {
                Some(sol) => sol[..s].to_vec(),
                None => {
                    // affinely dependent support: drop the newest point
                    support.pop();
                    lambda.pop();
                    break;
                }
            };
            if alpha.iter().all(|&v| v > 1e-14) {
                lambda = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for i in 0..s {
                if alpha[i] <= 1e-14 {
                    let d = lambda[i] - alpha[i];
                    if d > 0.0 {
                        theta = theta.min(lambda[i] / d);
                    }
                }
            }
            for i in 0..s {
                lambda[i] = theta * alpha[i] + (1.0 - theta) * lambda[i];
            }
            let keep: Vec<usize> = (0..s).filter(|&i| lambda[i] > 1e-14).collect();
            support = keep.iter().map(|&i| support[i]).collect();
            lambda = keep.iter().map(|&i| lambda[i]).collect();
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
    }
    let x = combo(&support, &lambda);
    let mut weights = vec![0.0; n];
    for (&i, &l) in support.iter().zip(&lambda) {
        weights[i] += l;
    }
    (weights, dot(&x, &x).sqrt())
}

fn coordinates(space: &CurvatureSpace, x0: &Point, v: &[TangentVector]) -> Result<Vec<Vec<f64>>> {
    let basis = space.tangent_basis(x0);
    v.iter()
        .map(|t| {
            if space.distance(t.base(), x0) > 1e-9 {
                return Err(invalid("all directions must be based at x0"));
            }
            Ok(basis.iter().map(|e| space.inner(t.vec(), e.vec())).collect())
        })
        .collect()
}

/// True iff `0` lies in the convex hull of `v` in `T_{x0}`; equivalently
/// the half-spaces `H(x0, v)` cover the whole space.
pub fn covering_check(space: &CurvatureSpace, x0: &Point, v: &[TangentVector]) -> Result<bool> {
    if v.is_empty() {
        return Ok(false);
    }
    let pts = coordinates(space, x0, v)?;
    Ok(min_norm_point(&pts).1 <= COVER_TOL)
}

/// At most `m + 1` members of `v` whose hull still contains `0`.
pub fn caratheodory_select(space: &CurvatureSpace, x0: &Point, v: &[TangentVector]) -> Result<Vec<TangentVector>> {
    if v.is_empty() {
        return Err(invalid("caratheodory_select needs a covering direction set"));
    }
    let pts = coordinates(space, x0, v)?;
    let (weights, norm) = min_norm_point(&pts);
    if norm > COVER_TOL {
        return Err(invalid(format!("directions do not cover: hull distance from 0 is {norm:e}")));
    }
    let mut support: Vec<usize> = (0..v.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut w: Vec<f64> = support.iter().map(|&i| weights[i]).collect();
    let m = space.dim();
    while support.len() > m + 1 {
        // a null vector of [pᵢ; 1] moves weight without changing Σ wᵢ pᵢ or Σ wᵢ
        let mut rows: Vec<Vec<f64>> = (0..m).map(|r| support.iter().map(|&i| pts[i][r]).collect()).collect();
        rows.push(vec![1.0; support.len()]);
        let Some(z) = null_vector(&rows) else { break };
        let step = support
            .iter()
            .enumerate()
            .filter(|&(j, _)| z[j] > 1e-15)
            .map(|(j, _)| w[j] / z[j])
            .fold(f64::INFINITY, f64::min);
        if !step.is_finite() {
            break;
        }
        w.iter_mut().zip(&z).for_each(|(a, b)| *a -= step * b);
        let keep: Vec<usize> = (0..support.len()).filter(|&j| w[j] > 1e-13).collect();
        support = keep.iter().map(|&j| support[j]).collect();
        w = keep.iter().map(|&j| w[j]).collect();
    }
    let out: Vec<TangentVector> = support.iter().map(|&i| v[i].clone()).collect();
    if !covering_check(space, x0, &out)? {
        return Err(invalid("Carathéodory reduction lost the covering property"));
    }
    Ok(out)
}
