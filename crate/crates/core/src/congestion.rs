//! Blocked views, geodesic traffic density `D(x, r)` and the congestion core.

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{ConvexDomain, RadialSampler, VolumeEstimate};
use crate::error::{invalid, Error, Result};
use crate::faircut::{self, FairCutOptions, FairCutResult};
use crate::geometry::{blocking_radius, CurvatureSpace, HalfSpace, Point};
use crate::rng::{derive_seed, stream, CHUNK_SIZE};

/// Slack on `d(x, [p,q]) ≤ r` absorbing the ternary-search error.
pub const VIOLATION_TOL: f64 = 1e-6;
/// Inner samples per outer point in the nested estimator.
pub const NESTED_INNER: usize = 100;
const MAX_PROPOSALS: u64 = 10_000_000;

/// Whether the closed segment `[p, q]` meets the closed ball `B(x, r)`.
pub fn is_blocked(space: &CurvatureSpace, p: &Point, q: &Point, x: &Point, r: f64) -> bool {
    blocked_raw(space, p.coords(), q.coords(), x.coords(), r)
}

fn blocked_raw(space: &CurvatureSpace, p: &[f64], q: &[f64], x: &[f64], r: f64) -> bool {
    space.distance_raw(x, p) <= r || space.distance_raw(x, q) <= r || space.dist_point_to_segment_raw(x, p, q) <= r
}

#[derive(Clone, Debug, Serialize)]
pub struct TrafficReport {
    pub x: Point,
    pub r: f64,
    pub density: VolumeEstimate,
    pub n_pairs: usize,
    pub seed: u64,
}

/// Independent uniform pairs `(p, q)` with their segment distances to `x`.
#[derive(Clone, Debug)]
pub struct PairDistances {
    pub x: Point,
    pub distances: Vec<f64>,
    pub seed: u64,
}

impl PairDistances {
    pub fn new(domain: &ConvexDomain, x: &Point, n_pairs: usize, seed: u64) -> Result<Self> {
        if !domain.contains(x) {
            return Err(invalid("traffic center lies outside the domain"));
        }
        if n_pairs == 0 {
            return Err(invalid("need at least one pair"));
        }
        let space = *domain.space();
        let ps = domain.samples(n_pairs, derive_seed(seed, "traffic.p"))?;
        let qs = domain.samples(n_pairs, derive_seed(seed, "traffic.q"))?;
        let xc = x.coords();
        let distances = ps
            .points()
            .par_iter()
            .zip(qs.points())
            .with_min_len(CHUNK_SIZE)
            .map(|(p, q)| space.dist_point_to_segment_raw(xc, p.coords(), q.coords()))
            .collect();
        Ok(PairDistances { x: x.clone(), distances, seed })
    }

    pub fn report(&self, r: f64) -> TrafficReport {
        let hits = self.distances.iter().filter(|&&d| d <= r).count();
        TrafficReport {
            x: self.x.clone(),
            r,
            density: VolumeEstimate::from_counts(hits, self.distances.len(), self.seed),
            n_pairs: self.distances.len(),
            seed: self.seed,
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid(format!("radius must be > 0, got {r}")));
    }
    Ok(())
}

/// Fraction of independent uniform pairs whose segment meets `B(x, r)`.
pub fn traffic_density(domain: &ConvexDomain, x: &Point, r: f64, n_pairs: usize, seed: u64) -> Result<TrafficReport> {
    check_radius(r)?;
    Ok(PairDistances::new(domain, x, n_pairs, seed)?.report(r))
}

/// `D(x, r)` over a radius grid on one pair sample, so the profile is
/// nondecreasing in `r` exactly.
pub fn density_profile(
    domain: &ConvexDomain,
    x: &Point,
    radii: &[f64],
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<TrafficReport>> {
    radii.iter().try_for_each(|&r| check_radius(r))?;
    let pairs = PairDistances::new(domain, x, n_pairs, seed)?;
    Ok(radii.iter().map(|&r| pairs.report(r)).collect())
}

/// Iterated estimator: for each outer `p`, the fraction of `NESTED_INNER`
/// inner points `q` blocked, averaged over `p`. The standard error is taken
/// across the outer means.
pub fn traffic_density_nested(
    domain: &ConvexDomain,
    x: &Point,
    r: f64,
    n_outer: usize,
    seed: u64,
) -> Result<TrafficReport> {
    check_radius(r)?;
    if !domain.contains(x) {
        return Err(invalid("traffic center lies outside the domain"));
    }
    let space = *domain.space();
    let ps = domain.samples(n_outer, derive_seed(seed, "nested.p"))?;
    let qs = domain.samples(n_outer * NESTED_INNER, derive_seed(seed, "nested.q"))?;
    let xc = x.coords();
    let means: Vec<f64> = ps
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let inner = &qs.points()[i * NESTED_INNER..(i + 1) * NESTED_INNER];
            inner.iter().filter(|q| blocked_raw(&space, p.coords(), q.coords(), xc, r)).count() as f64
                / NESTED_INNER as f64
        })
        .collect();
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(TrafficReport {
        x: x.clone(),
        r,
        density: VolumeEstimate { fraction: mean, std_error: (var / n).sqrt(), n_samples: n_outer * NESTED_INNER, seed },
        n_pairs: n_outer * NESTED_INNER,
        seed,
    })
}

/// The half-space at `x` facing away from `p`: `H(x, v_p)` with `v_p` the
/// tangent at `x` of the geodesic from `p` through `x`.
pub fn shadow_half_space(space: &CurvatureSpace, x: &Point, p: &Point) -> Result<HalfSpace> {
    HalfSpace::new(space, space.log_dir(x, p)?.neg())
}

/// `n` uniform domain points in `h`. When the bounding ball's center `c`
/// lies outside `h`, the cap `h ∩ B(c, R)` fits in the ball around the foot
/// `z` of `c` on `∂h` with `cosh kρ = cosh kR / cosh kd(c, z)` (flat:
/// `ρ² = R² − d²`), so proposals come from that smaller ball.
pub fn sample_in_half_space(domain: &ConvexDomain, h: &HalfSpace, n: usize, seed: u64) -> Result<Vec<Point>> {
    let space = *domain.space();
    let bound = domain.bounding();
    let gap = -space.hyperplane_distance(h, &bound.center);
    let sampler = if gap <= 0.0 {
        RadialSampler::new(space, bound.center.clone(), bound.radius)
    } else if gap >= bound.radius {
        return Err(Error::EmptyRegion("half-space misses the domain".into()));
    } else {
        let rho = if space.is_flat() {
            (bound.radius.powi(2) - gap.powi(2)).sqrt()
        } else {
            let k = space.k();
            ((k * bound.radius).cosh() / (k * gap).cosh()).acosh() / k
        };
        RadialSampler::new(space, space.hyperplane_foot(h, &bound.center), rho * (1.0 + 1e-9) + 1e-12)
    };
    let mut rng = stream(seed, 0);
    let mut out = Vec::with_capacity(n);
    let mut proposals = 0u64;
    while out.len() < n {
        if proposals >= MAX_PROPOSALS {
            return Err(Error::EmptyRegion(format!(
                "half-space holds too little of the domain: {} of {n} points after {proposals} proposals",
                out.len()
            )));
        }
        proposals += 1;
        let q = sampler.sample(&mut rng);
        if h.side(&space, q.coords()) >= 0.0 && domain.contains(&q) {
            out.push(q);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockedViewReport {
    pub violating_fraction: f64,
    pub violations: usize,
    pub n: usize,
    /// Largest `d(x, [p,q]) - r` over the sample.
    pub max_excess: f64,
}

/// Samples `q` uniformly in `H(x, v_p) ∩ M` and reports how many segments
/// `[p, q]` miss `B(x, r)` by more than [`VIOLATION_TOL`].
pub fn blocked_view_check(
    domain: &ConvexDomain,
    x: &Point,
    p: &Point,
    r: f64,
    n: usize,
    seed: u64,
) -> Result<BlockedViewReport> {
    check_radius(r)?;
    let space = *domain.space();
    let h = shadow_half_space(&space, x, p)?;
    let qs = sample_in_half_space(domain, &h, n, derive_seed(seed, "blocked.q"))?;
    let excess: Vec<f64> = qs
        .par_iter()
        .map(|q| space.dist_point_to_segment_raw(x.coords(), p.coords(), q.coords()) - r)
        .collect();
    let violations = excess.iter().filter(|&&e| e > VIOLATION_TOL).count();
    Ok(BlockedViewReport {
        violating_fraction: violations as f64 / n as f64,
        violations,
        n,
        max_excess: excess.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Clone, Debug)]
pub struct CoreOptions {
    pub faircut: FairCutOptions,
    pub n_pairs: usize,
}

impl Default for CoreOptions {
    fn default() -> Self {
        CoreOptions { faircut: FairCutOptions::default(), n_pairs: crate::domain::DEFAULT_SAMPLES }
    }
}

#[derive(Clone, Debug)]
pub struct CongestionCore {
    pub x0: Point,
    pub r0: f64,
    pub report: TrafficReport,
    pub faircut: FairCutResult,
}

/// Fair-cut center, blocking radius and the traffic through `B(x0, r0)`.
pub fn congestion_core(domain: &ConvexDomain, opts: &CoreOptions) -> Result<CongestionCore> {
    let k = domain.space().k();
    if k == 0.0 {
        return Err(Error::Unsupported(
            "congestion core needs k > 0: the blocking radius ln(1+√2)/k diverges in flat space".into(),
        ));
    }
    let r0 = blocking_radius(k)?;
    let fc = faircut::fair_cut_search(domain, &opts.faircut)?;
    let report = traffic_density(domain, &fc.center, r0, opts.n_pairs, derive_seed(opts.faircut.seed, "core.traffic"))?;
    Ok(CongestionCore { x0: fc.center.clone(), r0, report, faircut: fc })
}
