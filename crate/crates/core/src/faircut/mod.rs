//! Cut fractions `f_x(v) = vol H(x,v) / vol M`, the depth `φ(x) = min_v f_x(v)`,
//! and the search for fair-cut centers maximizing `φ`.

pub mod covering;
pub mod search;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{bernoulli_se, ConvexDomain, SampleSet, VolumeEstimate};
use crate::error::{invalid, Error, Result};
use crate::geometry::{CurvatureSpace, HalfSpace, Point, TangentVector};
use crate::linalg;
use crate::marching::{self, MarchRegion};
use crate::rng::{derive_seed, stream, CHUNK_SIZE};

pub use covering::{caratheodory_select, covering_check, min_norm_point};
pub use search::{AngularSweep, DirectionMin, DirectionSearch, ScanGolden, SearchRegistry, SphereNelderMead};

/// Minimum signed margin for [`nested_half_space`].
/// Scan directions closer than this cosine share one local polish.
const CLUSTER_COS: f64 = 0.94;

pub const NESTED_MARGIN: f64 = 1e-6;

/// Cut counts at a fixed base point over a fixed sample set. Each sample is
/// reduced to its coordinates `⟨q - x, eᵢ⟩` in an orthonormal basis of
/// `T_x`, so `q ∈ H(x, Σ cᵢeᵢ)` is a dot-product sign test.
#[derive(Clone, Debug)]
pub struct CutEvaluator {
    space: CurvatureSpace,
    base: Point,
    basis: Vec<TangentVector>,
    proj: Vec<f64>,
    m: usize,
    n: usize,
    seed: u64,
}

impl CutEvaluator {
    pub fn new(samples: &SampleSet, x: &Point) -> Self {
        let space = *samples.space();
        let basis = space.tangent_basis(x);
        let m = space.dim();
        let xc = x.coords();
        let proj: Vec<f64> = samples
            .points()
            .par_iter()
            .with_min_len(CHUNK_SIZE)
            .flat_map_iter(|q| {
                let w: Vec<f64> = q.coords().iter().zip(xc).map(|(a, b)| a - b).collect();
                basis.iter().map(move |e| space.inner(&w, e.vec())).collect::<Vec<_>>()
            })
            .collect();
        CutEvaluator { space, base: x.clone(), basis, proj, m, n: samples.len(), seed: samples.seed() }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn basis(&self) -> &[TangentVector] {
        &self.basis
    }

    /// Tangent coordinates of sample `j`.
    pub fn projection(&self, j: usize) -> &[f64] {
        &self.proj[j * self.m..(j + 1) * self.m]
    }

    /// Samples in the closed half-space with normal `Σ cᵢeᵢ`.
    pub fn count(&self, coeffs: &[f64]) -> usize {
        self.proj
            .par_chunks(self.m * CHUNK_SIZE)
            .map(|chunk| {
                chunk
                    .chunks_exact(self.m)
                    .filter(|p| p.iter().zip(coeffs).map(|(a, b)| a * b).sum::<f64>() >= 0.0)
                    .count()
            })
            .sum()
    }

    pub fn estimate(&self, coeffs: &[f64]) -> VolumeEstimate {
        VolumeEstimate::from_counts(self.count(coeffs), self.n, self.seed)
    }

    pub fn direction(&self, coeffs: &[f64]) -> TangentVector {
        self.space.combine(&self.base, &self.basis, coeffs)
    }

    pub fn coeffs_of(&self, v: &TangentVector) -> Vec<f64> {
        self.basis.iter().map(|e| self.space.inner(v.vec(), e.vec())).collect()
    }
}

fn check_inside(domain: &ConvexDomain, x: &Point) -> Result<()> {
    if x.coords().len() != domain.space().ambient_dim() {
        return Err(invalid("point has the wrong dimension"));
    }
    if !domain.contains(x) {
        return Err(invalid("base point lies outside the domain"));
    }
    Ok(())
}

/// `f_x(v)` on a shared sample set.
pub fn cut_fraction_on(
    domain: &ConvexDomain,
    samples: &SampleSet,
    x: &Point,
    v: &TangentVector,
) -> Result<VolumeEstimate> {
    check_inside(domain, x)?;
    let h = HalfSpace::new(domain.space(), v.clone())?;
    if domain.space().distance(h.base(), x) > 1e-9 {
        return Err(invalid("direction is not based at x"));
    }
    Ok(samples.half_space_fraction(&h))
}

/// `f_x(v)` on `n` fresh samples drawn with `seed`.
pub fn cut_fraction(domain: &ConvexDomain, x: &Point, v: &TangentVector, n: usize, seed: u64) -> Result<VolumeEstimate> {
    check_inside(domain, x)?;
    cut_fraction_on(domain, &domain.samples(n, seed)?, x, v)
}

#[derive(Clone, Debug)]
pub struct PhiValue {
    pub value: VolumeEstimate,
    pub argmin: TangentVector,
}

pub fn phi_with(eval: &CutEvaluator, search: &dyn DirectionSearch, seed: u64) -> PhiValue {
    let best = search.minimize(eval, seed);
    PhiValue { value: VolumeEstimate::from_counts(best.hits, eval.len(), eval.seed), argmin: eval.direction(&best.coeffs) }
}

/// `φ(x)` on a shared sample set with the named (or default) direction search.
pub fn phi_on(domain: &ConvexDomain, samples: &SampleSet, x: &Point, search: Option<&str>, seed: u64) -> Result<PhiValue> {
    check_inside(domain, x)?;
    let s = SearchRegistry::default().resolve(search, domain.dim())?;
    Ok(phi_with(&CutEvaluator::new(samples, x), s.as_ref(), seed))
}

pub fn phi(domain: &ConvexDomain, x: &Point, n: usize, seed: u64, search: Option<&str>) -> Result<PhiValue> {
    check_inside(domain, x)?;
    let samples = domain.samples(n, derive_seed(seed, "phi.samples"))?;
    phi_on(domain, &samples, x, search, derive_seed(seed, "phi.directions"))
}

/// Direction coefficients scanned when collecting near-minimizers: equal
/// angles in the plane, seeded Gaussian directions otherwise.
pub fn scan_directions(m: usize, seed: u64) -> Vec<Vec<f64>> {
    match m {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..512)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 512.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut rng = stream(seed, 0);
            (0..1024)
                .map(|_| {
                    let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let n = crate::linalg::norm(&v);
                    v.into_iter().map(|c| c / n).collect()
                })
                .collect()
        }
    }
}

/// Directions within `2σ` of the smallest fraction over a fixed scan plus
/// `extra`, as `(scan, min_coeffs, min_fraction, tol, near)`. Each cluster of
/// near-minimal scan directions is polished locally and the result appended,
/// so a minimizer between scan points is not missed.
fn near_minimizers(
    eval: &CutEvaluator,
    m: usize,
    seed: u64,
    extra: Option<(Vec<f64>, f64)>,
) -> (Vec<(Vec<f64>, f64)>, Vec<f64>, f64, f64, Vec<usize>) {
    let frac = |c: &[f64]| eval.count(c) as f64 / eval.len() as f64;
    let mut scan: Vec<(Vec<f64>, f64)> = scan_directions(m, seed)
        .into_iter()
        .map(|c| {
            let f = frac(&c);
            (c, f)
        })
        .collect();
    scan.extend(extra);
    let lowest = |scan: &[(Vec<f64>, f64)]| {
        let (c, f) = scan.iter().min_by(|a, b| a.1.total_cmp(&b.1)).cloned().expect("nonempty scan");
        (c, f, 2.0 * bernoulli_se(f, eval.len()))
    };
    let (_, min_f, tol) = lowest(&scan);
    let mut order: Vec<usize> = (0..scan.len()).filter(|&i| scan[i].1 <= min_f + tol).collect();
    order.sort_by(|&a, &b| scan[a].1.total_cmp(&scan[b].1));
    let mut reps: Vec<&[f64]> = Vec::new();
    for &i in &order {
        if reps.iter().all(|r| linalg::dot(r, &scan[i].0) < CLUSTER_COS) {
            reps.push(&scan[i].0);
        }
    }
    let polished: Vec<(Vec<f64>, f64)> = reps
        .iter()
        .map(|r| {
            let d = search::refine_direction(eval, r);
            let f = frac(&d.coeffs);
            (d.coeffs, f)
        })
        .collect();
    scan.extend(polished);
    let (min_c, min_f, tol) = lowest(&scan);
    let near = (0..scan.len()).filter(|&i| scan[i].1 <= min_f + tol).collect();
    (scan, min_c, min_f, tol, near)
}

/// For each slack, unit coefficients of a direction that moves every
/// half-space within `2σ + slack` of the minimum forward; slacks whose
/// directions cover are skipped.
fn ascent_directions(eval: &CutEvaluator, m: usize, seed: u64, slacks: &[f64]) -> Vec<Vec<f64>> {
    let (scan, _, min_f, tol, _) = near_minimizers(eval, m, seed, None);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for &slack in slacks {
        let pts: Vec<Vec<f64>> =
            scan.iter().filter(|(_, f)| *f <= min_f + tol + slack).map(|(c, _)| c.clone()).collect();
        let (w, norm) = covering::min_norm_point(&pts);
        if norm <= covering::COVER_TOL {
            continue;
        }
        let mut d = vec![0.0; m];
        for (wi, p) in w.iter().zip(&pts) {
            d.iter_mut().zip(p).for_each(|(a, b)| *a -= wi * b);
        }
        let n = linalg::norm(&d);
        d.iter_mut().for_each(|c| *c /= n);
        if out.iter().all(|o| linalg::dot(o, &d) < 1.0 - 1e-9) {
            out.push(d);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct FairCutOptions {
    pub samples: usize,
    pub seed: u64,
    /// Maximum number of `φ` evaluations in the pattern search.
    pub max_evals: usize,
    pub search: Option<String>,
    /// Marching probes for the warm start; `None` picks `max(8, 2(m+1))`,
    /// `Some(0)` starts from the domain's probe point.
    pub march_probes: Option<usize>,
}

impl Default for FairCutOptions {
    fn default() -> Self {
        FairCutOptions { samples: crate::domain::DEFAULT_SAMPLES, seed: 0, max_evals: 400, search: None, march_probes: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    pub eval: usize,
    pub point: Vec<f64>,
    pub phi: f64,
    pub step: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct FairCutResult {
    pub center: Point,
    pub phi: VolumeEstimate,
    pub argmin: TangentVector,
    /// Directions at the center whose cut fraction is within `tol_dir` of `phi`.
    pub minimizing_directions: Vec<TangentVector>,
    /// Cut fractions of `minimizing_directions`, in order.
    pub minimizing_fractions: Vec<f64>,
    /// At most `m + 1` of the minimizing directions still covering the domain.
    pub selected: Vec<TangentVector>,
    pub covering: bool,
    pub tol_dir: f64,
    pub converged: bool,
    pub on_boundary: bool,
    pub evaluations: usize,
    pub start: Point,
    pub region: Option<MarchRegion>,
    pub trace: Vec<TraceEntry>,
    /// Trace indices whose `φ` is within one standard error of the best.
    pub plateau: Vec<usize>,
    pub search: String,
    /// Every scanned direction at the center with its cut fraction.
    pub scan: Vec<(Vec<f64>, f64)>,
}

/// Maximizes `φ` over the domain. The march region's sample centroid is the
/// warm start; a pattern search with geodesic coordinate probes follows,
/// halving the step from `0.1 R` to `1e-3 R` (R the bounding radius).
pub fn fair_cut_search(domain: &ConvexDomain, opts: &FairCutOptions) -> Result<FairCutResult> {
    let space = *domain.space();
    let m = space.dim();
    let samples = domain.samples(opts.samples, derive_seed(opts.seed, "faircut.samples"))?;
    let search = SearchRegistry::default().resolve(opts.search.as_deref(), m)?;
    let dir_seed = derive_seed(opts.seed, "faircut.directions");
    let scan_seed = derive_seed(opts.seed, "faircut.scan");

    let probes = opts.march_probes.unwrap_or((2 * (m + 1)).max(8));
    let (start, region) = if probes == 0 {
        (domain.probe().clone(), None)
    } else {
        let th = 1.0 / (m as f64 + 1.0);
        match marching::march_region_with(domain, &samples, probes, th, derive_seed(opts.seed, "faircut.march")) {
            Ok(region) => {
                let c = marching::region_summary_with(&region, &samples)?.sample_centroid;
                let c = if domain.contains(&c) { c } else { domain.probe().clone() };
                (c, Some(region))
            }
            Err(Error::EmptyRegion(_)) => (domain.probe().clone(), None),
            Err(e) => return Err(e),
        }
    };

    let radius = domain.bounding().radius;
    let (mut step, min_step, floor) = (0.1 * radius, 1e-3 * radius, 1e-5 * radius);
    let eval_phi = |x: &Point| phi_with(&CutEvaluator::new(&samples, x), search.as_ref(), dir_seed);
    let mut x = start.clone();
    let mut best = eval_phi(&x);
    let mut evaluations = 1;
    let mut trace = vec![TraceEntry {
        eval: 0,
        point: x.coords().to_vec(),
        phi: best.value.fraction,
        step,
        accepted: true,
    }];
    let mut converged = true;
    while step >= floor {
        if evaluations >= opts.max_evals {
            converged = false;
            break;
        }
        let basis = space.tangent_basis(&x);
        let mut winner: Option<(Point, PhiValue)> = None;
        for e in &basis {
            for sign in [1.0, -1.0] {
                if evaluations >= opts.max_evals {
                    break;
                }
                let dir: Vec<f64> = e.vec().iter().map(|c| sign * c).collect();
                let y = space.exp_unchecked(&x, &dir, step);
                if !domain.contains(&y) {
                    continue;
                }
                let p = eval_phi(&y);
                evaluations += 1;
                let bar = winner.as_ref().map_or(best.value.fraction, |w| w.1.value.fraction);
                let better = p.value.fraction > bar;
                trace.push(TraceEntry {
                    eval: evaluations - 1,
                    point: y.coords().to_vec(),
                    phi: p.value.fraction,
                    step,
                    accepted: false,
                });
                if better {
                    winner = Some((y, p));
                }
            }
        }
        if winner.is_none() && evaluations < opts.max_evals {
            // the axis poll stalls on ridges of the max-min; follow the
            // covering certificate of the near-active directions, alone and
            // with those that can become active within one step
            let eval = CutEvaluator::new(&samples, &x);
            for d in ascent_directions(&eval, m, scan_seed, &[0.0, step / radius]) {
                if evaluations >= opts.max_evals {
                    break;
                }
                let y = space.exp_unchecked(&x, eval.direction(&d).vec(), step);
                if !domain.contains(&y) {
                    continue;
                }
                let p = eval_phi(&y);
                evaluations += 1;
                trace.push(TraceEntry {
                    eval: evaluations - 1,
                    point: y.coords().to_vec(),
                    phi: p.value.fraction,
                    step,
                    accepted: false,
                });
                let bar = winner.as_ref().map_or(best.value.fraction, |w| w.1.value.fraction);
                if p.value.fraction > bar {
                    winner = Some((y, p));
                }
            }
        }
        match winner {
            Some((y, p)) => {
                x = y;
                best = p;
                let coords = x.coords();
                if let Some(t) = trace.iter_mut().rev().find(|t| t.point == coords) {
                    t.accepted = true;
                }
            }
            None => {
                step *= 0.5;
                // below the tolerance, keep refining only while V̂ has a gap
                if step < min_step {
                    let eval = CutEvaluator::new(&samples, &x);
                    let extra = (eval.coeffs_of(&best.argmin), best.value.fraction);
                    let (scan, _, _, _, near) = near_minimizers(&eval, m, scan_seed, Some(extra));
                    let dirs: Vec<TangentVector> = near.iter().map(|&i| eval.direction(&scan[i].0)).collect();
                    if covering_check(&space, &x, &dirs)? {
                        break;
                    }
                }
            }
        }
    }

    // near-minimizing directions at the center
    let eval = CutEvaluator::new(&samples, &x);
    let extra = (eval.coeffs_of(&best.argmin), best.value.fraction);
    let (scan, min_c, min_f, tol_dir, near) = near_minimizers(&eval, m, scan_seed, Some(extra));
    let phi_est = VolumeEstimate::from_counts((min_f * eval.len() as f64).round() as usize, eval.len(), samples.seed());
    let argmin = if min_f < best.value.fraction { eval.direction(&min_c) } else { best.argmin.clone() };
    let (minimizing_directions, minimizing_fractions): (Vec<TangentVector>, Vec<f64>) =
        near.iter().map(|&i| (eval.direction(&scan[i].0), scan[i].1)).unzip();
    let covering = covering_check(&space, &x, &minimizing_directions)?;
    let selected = if covering { caratheodory_select(&space, &x, &minimizing_directions)? } else { Vec::new() };

    let edge = 2.0 * min_step;
    let on_boundary = space.tangent_basis(&x).iter().any(|e| {
        [1.0, -1.0].iter().any(|s| {
            let dir: Vec<f64> = e.vec().iter().map(|c| s * c).collect();
            !domain.contains(&space.exp_unchecked(&x, &dir, edge))
        })
    });
    let top = trace.iter().map(|t| t.phi).fold(f64::NEG_INFINITY, f64::max);
    let sigma = bernoulli_se(top, eval.len());
    let plateau = trace.iter().enumerate().filter(|(_, t)| t.phi >= top - sigma).map(|(i, _)| i).collect();

    Ok(FairCutResult {
        center: x,
        phi: phi_est,
        argmin,
        minimizing_directions,
        minimizing_fractions,
        selected,
        covering,
        tol_dir,
        converged,
        on_boundary,
        evaluations,
        start,
        region,
        trace,
        plateau,
        search: search.name().to_string(),
        scan,
    })
}

/// Signed distance from `x` to the boundary hyperplane of `h0`; positive
/// inside.
pub fn signed_margin(space: &CurvatureSpace, h0: &HalfSpace, x: &Point) -> f64 {
    space.hyperplane_distance(h0, x)
}

/// The half-space at `x` nested in `h0`: its normal is the direction of the
/// geodesic from the nearest boundary point of `h0` through `x`.
pub fn nested_half_space(domain: &ConvexDomain, h0: &HalfSpace, x: &Point) -> Result<HalfSpace> {
    let space = domain.space();
    if x.coords().len() != space.ambient_dim() {
        return Err(invalid("point has the wrong dimension"));
    }
    let margin = signed_margin(space, h0, x);
    if !(margin > NESTED_MARGIN) {
        return Err(invalid(format!("point is not strictly inside the half-space (margin {margin:e})")));
    }
    let z = space.hyperplane_foot(h0, x);
    HalfSpace::new(space, space.log_dir(x, &z)?.neg())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::cut_fraction_polygon;

    fn triangle() -> (ConvexDomain, Vec<[f64; 2]>) {
        let s = CurvatureSpace::euclidean(2).unwrap();
        let v = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]];
        let d = ConvexDomain::simplex(s, v.iter().map(|c| s.lift(c).unwrap()).collect()).unwrap();
        (d, v.to_vec())
    }

    #[test]
    fn evaluator_agrees_with_half_space_membership() {
        let s = CurvatureSpace::hyperbolic(3, 0.8).unwrap();
        let d = ConvexDomain::ball(s, s.lift(&[0.3, 0.0, -0.2]).unwrap(), 1.5).unwrap();
        let samples = d.samples(5000, 3).unwrap();
        let x = s.lift(&[0.5, 0.1, 0.0]).unwrap();
        let eval = CutEvaluator::new(&samples, &x);
        for c in [[1.0, 0.0, 0.0], [0.6, -0.8, 0.0], [0.0, 0.6, 0.8]] {
            let v = eval.direction(&c);
            let h = HalfSpace::new(&s, v).unwrap();
            assert_eq!(eval.count(&c), samples.count(|p| s.half_space_contains(&h, p)));
        }
    }

    #[test]
    fn ball_center_cuts_in_half() {
        let s = CurvatureSpace::hyperbolic(2, 1.0).unwrap();
        let d = ConvexDomain::ball(s, s.origin(), 2.0).unwrap();
        let x = s.origin();
        let samples = d.samples(100_000, 4).unwrap();
        let basis = s.tangent_basis(&x);
        for t in [0.0f64, 1.0, 2.5] {
            let v = s.combine(&x, &basis, &[t.cos(), t.sin()]);
            let f = cut_fraction_on(&d, &samples, &x, &v).unwrap();
            assert!((f.fraction - 0.5).abs() < 3.0 * f.std_error);
            let g = cut_fraction_on(&d, &samples, &x, &v.neg()).unwrap();
            assert_eq!(f.fraction + g.fraction, 1.0);
        }
        let p = phi(&d, &x, 100_000, 4, None).unwrap();
        assert!((p.value.fraction - 0.5).abs() < 3.0 * p.value.std_error + 0.004, "{}", p.value.fraction);
    }

    #[test]
    fn outside_point_is_rejected() {
        let (d, _) = triangle();
        let s = *d.space();
        let x = s.lift(&[2.0, 2.0]).unwrap();
        let v = s.unit_tangent(&x, &[1.0, 0.0]).unwrap();
        assert!(cut_fraction(&d, &x, &v, 1000, 1).is_err());
        assert!(phi(&d, &x, 1000, 1, None).is_err());
    }

    #[test]
    fn triangle_cut_and_phi_match_clipping() {
        let (d, poly) = triangle();
        let s = *d.space();
        let c = [0.5, 0.8 / 3.0];
        let x = s.lift(&c).unwrap();
        let v = s.unit_tangent(&x, &[0.0, 1.0]).unwrap();
        let f = cut_fraction(&d, &x, &v, 100_000, 9).unwrap();
        let exact = cut_fraction_polygon(&poly, c, [0.0, 1.0]).unwrap();
        assert!((exact - 4.0 / 9.0).abs() < 1e-12);
        assert!((f.fraction - exact).abs() < 3.0 * f.std_error);
        for name in ["scan-golden", "sweep", "nelder-mead"] {
            let p = phi(&d, &x, 100_000, 9, Some(name)).unwrap();
            assert!((p.value.fraction - 4.0 / 9.0).abs() < 3.0 * p.value.std_error + 0.003, "{name}: {}", p.value.fraction);
        }
        // near a vertex the depth is much lower
        let near = [0.1, 0.04];
        let xn = s.lift(&near).unwrap();
        let exact_near = crate::domain::exact_phi_polygon(&poly, near).unwrap().0;
        let p = phi(&d, &xn, 100_000, 9, None).unwrap();
        assert!(p.value.fraction < 4.0 / 9.0 - 3.0 * p.value.std_error);
        assert!((p.value.fraction - exact_near).abs() < 4.0 * p.value.std_error + 1e-3);
    }

    #[test]
    fn sweep_never_loses_to_scan() {
        let (d, _) = triangle();
        let s = *d.space();
        let samples = d.samples(20_000, 2).unwrap();
        for c in [[0.3, 0.2], [0.6, 0.1], [0.5, 0.5]] {
            let eval = CutEvaluator::new(&samples, &s.lift(&c).unwrap());
            let a = AngularSweep.minimize(&eval, 0);
            let b = ScanGolden::default().minimize(&eval, 0);
            assert!(a.hits <= b.hits);
            assert_eq!(a.hits, eval.count(&a.coeffs));
        }
    }

    #[test]
    fn registry_resolution() {
        let r = SearchRegistry::default();
        assert_eq!(r.names(), vec!["nelder-mead", "scan-golden", "sweep"]);
        assert_eq!(r.resolve(None, 2).unwrap().name(), "scan-golden");
        assert_eq!(r.resolve(None, 3).unwrap().name(), "nelder-mead");
        assert!(r.resolve(Some("sweep"), 3).is_err());
        assert!(r.resolve(Some("nope"), 2).is_err());
    }

    #[test]
    fn one_dimensional_depth() {
        let s = CurvatureSpace::hyperbolic(1, 1.0).unwrap();
        let d = ConvexDomain::ball(s, s.origin(), 1.0).unwrap();
        let x = s.lift(&[0.5]).unwrap();
        let p = phi(&d, &x, 20_000, 1, None).unwrap();
        // the interval [-1, 1] cut at 0.5 leaves a quarter on the short side
        assert!((p.value.fraction - 0.25).abs() < 4.0 * p.value.std_error);
    }

    #[test]
    fn nested_flat_example() {
        let s = CurvatureSpace::euclidean(2).unwrap();
        let d = ConvexDomain::ball(s, s.origin(), 3.0).unwrap();
        let h0 = HalfSpace::new(&s, s.unit_tangent(&s.origin(), &[0.0, 1.0]).unwrap()).unwrap();
        let h = nested_half_space(&d, &h0, &s.lift(&[0.0, 1.0]).unwrap()).unwrap();
        assert!((h.normal().vec()[1] - 1.0).abs() < 1e-12);
        assert!(h.base().coords()[1] == 1.0);
        assert!(nested_half_space(&d, &h0, &s.origin()).is_err());
        assert!(nested_half_space(&d, &h0, &s.lift(&[0.0, -1.0]).unwrap()).is_err());
    }

    /// Nearest point of `∂H0` by coordinate descent over `exp_{x0}` of the
    /// hyperplane's tangent directions.
    fn foot_by_descent(s: &CurvatureSpace, h0: &HalfSpace, x: &Point) -> Point {
        let x0 = h0.base();
        let v0 = h0.normal().vec();
        let mut perp: Vec<Vec<f64>> = Vec::new();
        for e in s.tangent_basis(x0) {
            let mut w = e.vec().to_vec();
            let c = s.inner(&w, v0);
            w.iter_mut().zip(v0).for_each(|(a, b)| *a -= c * b);
            for p in &perp {
                let c = s.inner(&w, p);
                w.iter_mut().zip(p).for_each(|(a, b)| *a -= c * b);
            }
            let n = s.norm(&w);
            if n > 1e-6 {
                perp.push(w.into_iter().map(|c| c / n).collect());
            }
        }
        let at = |a: &[f64]| {
            let mut w = vec![0.0; s.ambient_dim()];
            for (p, c) in perp.iter().zip(a) {
                w.iter_mut().zip(p).for_each(|(x, y)| *x += c * y);
            }
            s.exp_vec(&s.project_tangent(x0, &w))
        };
        let mut a = vec![0.0; perp.len()];
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..60 {
            for i in 0..a.len() {
                let f = |t: f64| {
                    let mut b = a.clone();
                    b[i] = t;
                    s.distance(x, &at(&b))
                };
                let (mut lo, mut hi) = (a[i] - 8.0, a[i] + 8.0);
                for _ in 0..100 {
                    let c = hi - g * (hi - lo);
                    let d = lo + g * (hi - lo);
                    if f(c) < f(d) {
                        hi = d;
                    } else {
                        lo = c;
                    }
                }
                a[i] = 0.5 * (lo + hi);
            }
        }
        at(&a)
    }

    #[test]
    fn nested_normal_matches_numeric_nearest_point() {
        for (m, k) in [(2, 1.0), (3, 0.6), (2, 0.0)] {
            let s = CurvatureSpace::new(m, k).unwrap();
            let mut sp = vec![0.0; m];
            sp[0] = -0.4;
            let x0 = s.lift(&sp).unwrap();
            let mut dir = vec![0.0; s.ambient_dim()];
            for (i, c) in dir.iter_mut().enumerate().skip(s.ambient_dim() - m) {
                *c = 0.3 + i as f64;
            }
            let h0 = HalfSpace::new(&s, s.unit_tangent(&x0, &dir).unwrap()).unwrap();
            let mut xs = vec![0.7; m];
            xs[0] = 0.2;
            let x = s.lift(&xs).unwrap();
            let d = ConvexDomain::ball(s, s.origin(), 4.0).unwrap();
            let h = nested_half_space(&d, &h0, &x).unwrap();
            let z = foot_by_descent(&s, &h0, &x);
            assert!(h0.side(&s, z.coords()).abs() < 1e-6);
            let want = s.log_dir(&x, &z).unwrap().neg();
            let cos = s.inner(want.vec(), h.normal().vec());
            assert!(cos > 1.0 - 1e-8, "m {m} k {k}: cos {cos}");
            assert!((s.distance(&x, &z) - signed_margin(&s, &h0, &x)).abs() < 1e-6);
        }
    }

    #[test]
    fn nested_half_space_is_inside() {
        let s = CurvatureSpace::hyperbolic(2, 1.0).unwrap();
        let d = ConvexDomain::ball(s, s.origin(), 2.5).unwrap();
        let x0 = s.lift(&[0.3, -0.2]).unwrap();
        let h0 = HalfSpace::new(&s, s.unit_tangent(&x0, &[0.0, 1.0, 0.4]).unwrap()).unwrap();
        let x = s.exp_unchecked(&x0, h0.normal().vec(), 0.4);
        let h = nested_half_space(&d, &h0, &x).unwrap();
        let samples = d.samples(100_000, 6).unwrap();
        let inside: Vec<&Point> = samples.points().iter().filter(|p| s.half_space_contains(&h, p)).collect();
        assert!(inside.len() > 10_000);
        assert!(inside.iter().all(|p| s.half_space_contains(&h0, p)));
        let f0 = samples.half_space_fraction(&h0);
        let f = samples.half_space_fraction(&h);
        assert!(f.fraction < f0.fraction);
        // approaching the boundary recovers H0's volume
        let xb = s.exp_unchecked(&x0, h0.normal().vec(), 1e-4);
        let hb = nested_half_space(&d, &h0, &xb).unwrap();
        let fb = samples.half_space_fraction(&hb);
        assert!((fb.fraction - f0.fraction).abs() < 3.0 * f0.std_error);
    }

    #[test]
    fn search_on_ball_finds_center() {
        let s = CurvatureSpace::hyperbolic(2, 1.0).unwrap();
        let c = s.lift(&[0.4, 0.1]).unwrap();
        let d = ConvexDomain::ball(s, c.clone(), 2.0).unwrap();
        let r = fair_cut_search(&d, &FairCutOptions { samples: 50_000, seed: 3, ..Default::default() }).unwrap();
        assert!(s.distance(&r.center, &c) < 0.1, "{}", s.distance(&r.center, &c));
        assert!((r.phi.fraction - 0.5).abs() < 0.015);
        assert!(r.converged);
        assert!(r.covering);
        assert!(!r.selected.is_empty() && r.selected.len() <= 3);
        assert!(r.region.as_ref().unwrap().contains(&r.center));
        assert!(!r.on_boundary);
        for f in &r.minimizing_fractions {
            assert!((f - r.phi.fraction).abs() <= r.tol_dir + 1e-12);
        }
    }

    #[test]
    fn search_budget_exhaustion_is_flagged() {
        let (d, _) = triangle();
        let r = fair_cut_search(&d, &FairCutOptions { samples: 5000, seed: 1, max_evals: 3, ..Default::default() }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.evaluations, 3);
    }
}
