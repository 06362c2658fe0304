//! Fair-cut index of simplices compared with `(m/(m+1))^m` (the value for
//! flat simplices) and with `1/e` (its limit and conjectured lower bound
//! for every convex domain).

use std::f64::consts::E;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::domain::{exact_phi_polygon, ConvexDomain};
use crate::error::{invalid, Result};
use crate::faircut::{fair_cut_search, FairCutOptions};
use crate::geometry::{CurvatureSpace, Point};
use crate::rng::{derive_seed, derive_seed_index, stream};

pub fn simplex_formula(m: usize) -> f64 {
    let m = m as f64;
    (m / (m + 1.0)).powf(m)
}

/// Vertices of a regular simplex in `R^m` with unit circumradius, centered
/// at the origin (Helmert coordinates of the standard simplex).
pub fn regular_simplex(m: usize) -> Vec<Vec<f64>> {
    let scale = ((m as f64 + 1.0) / m as f64).sqrt();
    (0..=m)
        .map(|i| {
            (1..=m)
                .map(|j| {
                    let norm = ((j * (j + 1)) as f64).sqrt();
                    let h = match i.cmp(&j) {
                        std::cmp::Ordering::Less => 1.0,
                        std::cmp::Ordering::Equal => -(j as f64),
                        std::cmp::Ordering::Greater => 0.0,
                    };
                    scale * h / norm
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ConjectureOptions {
    pub dims: Vec<usize>,
    pub k: f64,
    /// Extent of the simplices: circumradius for `k = 0`, Klein radius as a
    /// fraction of `1/k` otherwise.
    pub size: f64,
    /// Random simplices per dimension in addition to the regular one.
    pub random_simplices: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_evals: usize,
}

impl Default for ConjectureOptions {
    fn default() -> Self {
        ConjectureOptions {
            dims: vec![2, 3],
            k: 0.0,
            size: 0.6,
            random_simplices: 1,
            samples: crate::domain::DEFAULT_SAMPLES,
            seed: 0,
            max_evals: 400,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Finding {
    pub dim: usize,
    pub k: f64,
    pub label: String,
    pub vertices: Vec<Vec<f64>>,
    pub method: &'static str,
    pub phi: f64,
    pub std_error: f64,
    pub center: Vec<f64>,
    pub simplex_formula: f64,
    pub inverse_e: f64,
    /// `|Φ̂ - (m/(m+1))^m|` within 1e-6 (exact) or `4σ + 0.01` (Monte Carlo).
    pub matches_simplex_formula: bool,
    /// `Φ̂ ≥ 1/e - 4σ`.
    pub consistent_with_inverse_e: bool,
}

fn simplex_points(space: &CurvatureSpace, coords: &[Vec<f64>], size: f64) -> Result<Vec<Point>> {
    coords
        .iter()
        .map(|c| {
            let s: Vec<f64> = c.iter().map(|v| v * size).collect();
            if space.is_flat() {
                space.lift(&s)
            } else {
                let s: Vec<f64> = s.iter().map(|v| v / space.k()).collect();
                space.from_klein(&s)
            }
        })
        .collect()
}

/// Pattern search of the exact planar depth over the polygon.
fn exact_fair_cut(poly: &[[f64; 2]]) -> Result<([f64; 2], f64)> {
    let n = poly.len() as f64;
    let mut x = [poly.iter().map(|p| p[0]).sum::<f64>() / n, poly.iter().map(|p| p[1]).sum::<f64>() / n];
    let span = poly.iter().flat_map(|p| poly.iter().map(move |q| (p[0] - q[0]).hypot(p[1] - q[1]))).fold(0.0, f64::max);
    let mut best = exact_phi_polygon(poly, x)?.0;
    let mut step = 0.1 * span;
    while step > 1e-7 * span {
        let mut moved = false;
        for d in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let y = [x[0] + step * d[0], x[1] + step * d[1]];
            if let Ok((v, _)) = exact_phi_polygon(poly, y) {
                if v > best + 1e-13 {
                    best = v;
                    x = y;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok((x, best))
}

/// Regular and random simplices for each configured dimension; never fails
/// on disagreement with either bound, it only records it.
pub fn conjecture_sweep(opts: &ConjectureOptions) -> Result<Vec<Finding>> {
    if opts.dims.is_empty() || opts.dims.contains(&0) {
        return Err(invalid("dims must be a nonempty list of positive dimensions"));
    }
    if !(opts.size > 0.0 && (opts.k == 0.0 || opts.size < 1.0)) {
        return Err(invalid("size must be > 0 (and < 1 when k > 0)"));
    }
    let mut out = Vec::new();
    for &m in &opts.dims {
        let space = CurvatureSpace::new(m, opts.k)?;
        let mut shapes = vec![("regular".to_string(), regular_simplex(m))];
        let mut rng = stream(derive_seed(opts.seed, "conjecture.simplices"), m as u64);
        for i in 0..opts.random_simplices {
            let verts = (0..=m)
                .map(|_| {
                    let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let n = crate::linalg::norm(&v).max(1.0);
                    v.into_iter().map(|c| c / n).collect()
                })
                .collect();
            shapes.push((format!("random-{i}"), verts));
        }
        for (idx, (label, coords)) in shapes.into_iter().enumerate() {
            let points = simplex_points(&space, &coords, opts.size)?;
            let vertices: Vec<Vec<f64>> = points.iter().map(|p| p.coords().to_vec()).collect();
            let domain = match ConvexDomain::simplex(space, points) {
                Ok(d) => d,
                Err(_) => continue, // a degenerate random draw
            };
            let predicted = simplex_formula(m);
            let finding = if let Some(poly) = domain.polygon_2d() {
                let (c, phi) = exact_fair_cut(&poly)?;
                Finding {
                    dim: m,
                    k: opts.k,
                    label,
                    vertices,
                    method: "exact",
                    phi,
                    std_error: 0.0,
                    center: space.lift(&c)?.into_coords(),
                    simplex_formula: predicted,
                    inverse_e: 1.0 / E,
                    matches_simplex_formula: (phi - predicted).abs() <= 1e-6,
                    consistent_with_inverse_e: phi >= 1.0 / E,
                }
            } else {
                let fc = fair_cut_search(
                    &domain,
                    &FairCutOptions {
                        samples: opts.samples,
                        seed: derive_seed_index(opts.seed, (m * 1000 + idx) as u64),
                        max_evals: opts.max_evals,
                        ..Default::default()
                    },
                )?;
                let (phi, se) = (fc.phi.fraction, fc.phi.std_error);
                Finding {
                    dim: m,
                    k: opts.k,
                    label,
                    vertices,
                    method: "monte-carlo",
                    phi,
                    std_error: se,
                    center: fc.center.into_coords(),
                    simplex_formula: predicted,
                    inverse_e: 1.0 / E,
                    matches_simplex_formula: (phi - predicted).abs() <= 4.0 * se + 0.01,
                    consistent_with_inverse_e: phi >= 1.0 / E - 4.0 * se,
                }
            };
            out.push(finding);
        }
    }
    Ok(out)
}
