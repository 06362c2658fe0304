//! Marching hyperplanes: walk inward from boundary points along geodesics,
//! dragging the half-space behind the marcher, until that half-space holds
//! a given fraction of the volume. Any half-space holding less than `Φ(M)`
//! cannot contain a fair-cut center, so the marched half-spaces carve out a
//! region that localizes the centers.

use std::f64::consts::{E, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{ConvexDomain, SampleSet, VolumeEstimate};
use crate::error::{invalid, Error, Result};
use crate::geometry::{CurvatureSpace, HalfSpace, Point, TangentVector};
use crate::rng::{derive_seed, stream};

pub const BISECTION_ITERS: usize = 40;
pub const RAY_TOL: f64 = 1e-6;
const DIAMETER_PAIRS_CAP: usize = 1500;

/// Volume fraction at which a march stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    /// `1/(m+1)`, the proven lower bound on the fair-cut index.
    FairCut,
    /// `1/e`, the conjectured dimension-free lower bound.
    InverseE,
    Value(f64),
}

impl Threshold {
    pub fn value(self, m: usize) -> f64 {
        match self {
            Threshold::FairCut => 1.0 / (m as f64 + 1.0),
            Threshold::InverseE => 1.0 / E,
            Threshold::Value(t) => t,
        }
    }

    /// Accepts `"fair-cut"`, `"1/(m+1)"`, `"1/e"`, `"inverse-e"` or a number.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "fair-cut" | "1/(m+1)" => Ok(Threshold::FairCut),
            "1/e" | "inverse-e" => Ok(Threshold::InverseE),
            t => t
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && *v < 1.0)
                .map(Threshold::Value)
                .ok_or_else(|| invalid(format!("threshold must be 1/(m+1), 1/e or a number in (0,1), got {s:?}"))),
        }
    }
}

/// One marched half-space.
#[derive(Clone, Debug)]
pub struct MarchedHalfSpace {
    pub half_space: HalfSpace,
    pub fraction: VolumeEstimate,
    /// Arc length marched.
    pub t_star: f64,
    /// Length of the chord from the start point to the far boundary.
    pub chord: f64,
    pub start: Point,
    /// No point of the chord reached the threshold.
    pub saturated: bool,
}

/// Position and velocity at arc length `t` along the geodesic from `x` with
/// unit velocity `v`; the velocity is the parallel transport of `v`.
fn march_frame(space: &CurvatureSpace, x: &Point, v: &[f64], t: f64) -> (Point, Vec<f64>) {
    let g = space.exp_unchecked(x, v, t);
    if space.is_flat() {
        return (g, v.to_vec());
    }
    let k = space.k();
    let kt = k * t;
    let u = x.coords().iter().zip(v).map(|(xi, vi)| k * kt.sinh() * xi + kt.cosh() * vi).collect();
    (g, u)
}

fn behind(space: &CurvatureSpace, x: &Point, v: &[f64], t: f64) -> Result<HalfSpace> {
    let (g, u) = march_frame(space, x, v, t);
    let neg: Vec<f64> = u.iter().map(|c| -c).collect();
    HalfSpace::new(space, space.unit_tangent(&g, &neg)?)
}

/// Arc length at which the geodesic from `from` along `dir` leaves the
/// domain, by bisection on membership to [`RAY_TOL`]. Returns the last
/// inside point and its arc length.
pub fn ray_exit(domain: &ConvexDomain, from: &Point, dir: &TangentVector) -> Result<(Point, f64)> {
    let space = domain.space();
    if !space.is_unit(dir) {
        return Err(invalid("ray direction must be a unit tangent vector"));
    }
    let b = domain.bounding();
    let mut hi = space.distance(from, &b.center) + b.radius;
    hi = hi * (1.0 + 1e-9) + 1e-9;
    let mut lo = 0.0;
    let at = |t: f64| space.exp_unchecked(from, dir.vec(), t);
    if !domain.contains(from) {
        return Err(invalid("ray start is outside the domain"));
    }
    while hi - lo > RAY_TOL {
        let mid = 0.5 * (lo + hi);
        if domain.contains(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((at(lo), lo))
}

/// Marches from the boundary point `x1` along the inward unit normal `v1`
/// until the half-space behind the marcher reaches `threshold`, measured on
/// the fixed sample set so the fraction is monotone along the march.
pub fn march_once(
    domain: &ConvexDomain,
    samples: &SampleSet,
    x1: &Point,
    v1: &TangentVector,
    threshold: f64,
) -> Result<MarchedHalfSpace> {
    let space = domain.space();
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid(format!("threshold must lie in (0,1), got {threshold}")));
    }
    if !space.is_unit(v1) {
        return Err(invalid("march direction must be a unit tangent vector"));
    }
    let eps = 10.0 * RAY_TOL;
    if !domain.contains(&space.exp_unchecked(x1, v1.vec(), eps)) {
        return Err(invalid("march direction does not point into the domain"));
    }
    let (_, chord) = ray_exit(domain, x1, v1)?;
    let fraction_at = |t: f64| -> Result<(HalfSpace, VolumeEstimate)> {
        let h = behind(space, x1, v1.vec(), t)?;
        let est = samples.fraction(|p| h.side(space, p.coords()) >= 0.0);
        Ok((h, est))
    };
    let (h_end, f_end) = fraction_at(chord)?;
    if f_end.fraction < threshold {
        return Ok(MarchedHalfSpace {
            half_space: h_end,
            fraction: f_end,
            t_star: chord,
            chord,
            start: x1.clone(),
            saturated: true,
        });
    }
    let (mut lo, mut hi) = (0.0, chord);
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if fraction_at(mid)?.1.fraction < threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (half_space, fraction) = fraction_at(lo)?;
    Ok(MarchedHalfSpace { half_space, fraction, t_star: lo, chord, start: x1.clone(), saturated: false })
}

/// Convenience form drawing its own `n` samples.
pub fn march_once_seeded(
    domain: &ConvexDomain,
    x1: &Point,
    v1: &TangentVector,
    threshold: f64,
    n: usize,
    seed: u64,
) -> Result<MarchedHalfSpace> {
    let samples = domain.samples(n, seed)?;
    march_once(domain, &samples, x1, v1, threshold)
}

/// `n` unit directions in `R^m`: a symmetric pair for `m = 1`, equal angles
/// for `m = 2`, a Fibonacci lattice for `m = 3` and seeded Gaussian
/// directions above.
pub fn spread_directions(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    match m {
        1 => (0..n).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        2 => (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = stream(seed, 0);
            (0..n)
                .map(|_| {
                    let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                    v.into_iter().map(|c| c / norm).collect()
                })
                .collect()
        }
    }
}

/// The region of the domain outside every marched half-space.
#[derive(Clone, Debug)]
pub struct MarchRegion {
    pub marches: Vec<MarchedHalfSpace>,
    pub threshold: f64,
    space: CurvatureSpace,
}

impl MarchRegion {
    pub fn excluded(&self) -> impl Iterator<Item = &HalfSpace> {
        self.marches.iter().map(|m| &m.half_space)
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.excluded().all(|h| h.side(&self.space, p.coords()) < 0.0)
    }
}

/// Marches from `n_probes` boundary points, found by shooting rays from the
/// domain's probe point along spread directions; the inward normal at each
/// boundary point heads back toward the probe point.
pub fn march_region_with(
    domain: &ConvexDomain,
    samples: &SampleSet,
    n_probes: usize,
    threshold: f64,
    seed: u64,
) -> Result<MarchRegion> {
    let space = domain.space();
    if n_probes == 0 {
        return Err(invalid("march_region needs at least one probe"));
    }
    let center = domain.probe().clone();
    let basis = space.tangent_basis(&center);
    let dirs = spread_directions(space.dim(), n_probes, derive_seed(seed, "march.directions"));
    let marches = dirs
        .par_iter()
        .map(|c| {
            let u = space.combine(&center, &basis, c);
            let (x1, _) = ray_exit(domain, &center, &u)?;
            let v1 = space.log_dir(&x1, &center)?;
            march_once(domain, samples, &x1, &v1, threshold)
        })
        .collect::<Result<Vec<_>>>()?;
    let region = MarchRegion { marches, threshold, space: *space };
    if samples.count(|p| region.contains(p)) == 0 {
        return Err(Error::EmptyRegion(format!(
            "no sample survives {n_probes} marches at threshold {threshold:.4}; use threshold 1/(m+1) and more samples"
        )));
    }
    Ok(region)
}

pub fn march_region(
    domain: &ConvexDomain,
    n_probes: usize,
    threshold: f64,
    n: usize,
    seed: u64,
) -> Result<MarchRegion> {
    let samples = domain.samples(n, derive_seed(seed, "march.samples"))?;
    march_region_with(domain, &samples, n_probes, threshold, seed)
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionSummary {
    pub volume_fraction: VolumeEstimate,
    pub sample_centroid: Point,
    pub diameter_estimate: f64,
    pub accepted: usize,
}

/// Riemannian mean by iterated midpoints: `c_j = γ(c_{j-1}, s_j; 1/j)`.
pub fn iterated_mean(space: &CurvatureSpace, points: &[&Point]) -> Option<Point> {
    let mut it = points.iter();
    let mut c = (*it.next()?).clone();
    for (j, p) in it.enumerate() {
        c = space.interpolate(&c, p, 1.0 / (j as f64 + 2.0));
    }
    Some(c)
}

/// Monte Carlo statistics of the region on a given sample set.
pub fn region_summary_with(region: &MarchRegion, samples: &SampleSet) -> Result<RegionSummary> {
    let space = samples.space();
    let inside: Vec<&Point> = samples.points().iter().filter(|p| region.contains(p)).collect();
    if inside.is_empty() {
        return Err(Error::EmptyRegion("no accepted samples in the march region".into()));
    }
    let sample_centroid = iterated_mean(space, &inside).expect("nonempty");
    let head = &inside[..inside.len().min(DIAMETER_PAIRS_CAP)];
    let diameter_estimate = head
        .par_iter()
        .enumerate()
        .map(|(i, p)| head[i + 1..].iter().map(|q| space.distance(p, q)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    Ok(RegionSummary {
        volume_fraction: VolumeEstimate::from_counts(inside.len(), samples.len(), samples.seed()),
        sample_centroid,
        diameter_estimate,
        accepted: inside.len(),
    })
}

pub fn region_summary(region: &MarchRegion, domain: &ConvexDomain, n: usize, seed: u64) -> Result<RegionSummary> {
    let samples = domain.samples(n, derive_seed(seed, "march.summary"))?;
    region_summary_with(region, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(k: f64, r: f64) -> ConvexDomain {
        let s = CurvatureSpace::new(2, k).unwrap();
        ConvexDomain::ball(s, s.origin(), r).unwrap()
    }

    /// Area fraction of the disk `B(0,R)` (curvature -1) beyond the geodesic
    /// perpendicular to a diameter at signed distance `s` from the center,
    /// integrated in Fermi coordinates along the diameter.
    fn cap_fraction(r: f64, s: f64) -> f64 {
        let n = 4000;
        let h = (r - s) / n as f64;
        let f = |w: f64| {
            let c = r.cosh() / w.cosh();
            2.0 * (c * c - 1.0).max(0.0).sqrt()
        };
        let mut acc = f(s) + f(r);
        for i in 1..n {
            acc += f(s + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0 / (2.0 * PI * (r.cosh() - 1.0))
    }

    fn boundary_start(d: &ConvexDomain) -> (Point, TangentVector) {
        let s = d.space();
        let o = s.origin();
        let u = s.unit_tangent(&o, &[0.0, 1.0, 0.0]).unwrap();
        let (x1, _) = ray_exit(d, &o, &u).unwrap();
        let v1 = s.log_dir(&x1, &o).unwrap();
        (x1, v1)
    }

    #[test]
    fn cap_oracle_is_sane() {
        assert!((cap_fraction(2.0, 0.0) - 0.5).abs() < 1e-6);
        assert!(cap_fraction(2.0, 1.9) < 0.01);
    }

    #[test]
    fn ray_exit_hits_ball_boundary() {
        let d = disk(1.0, 2.0);
        let (x1, _) = boundary_start(&d);
        let t = d.space().distance(&x1, &d.space().origin());
        assert!((t - 2.0).abs() < 2e-6, "{t}");
        assert!(d.contains(&x1));
    }

    #[test]
    fn march_along_diameter_matches_cap_quadrature() {
        let r = 2.0;
        let d = disk(1.0, r);
        let samples = d.samples(100_000, 11).unwrap();
        let (x1, v1) = boundary_start(&d);
        let mut last = 0.0;
        for th in [0.2, 1.0 / 3.0, 0.45] {
            let m = march_once(&d, &samples, &x1, &v1, th).unwrap();
            assert!(!m.saturated);
            assert!((m.fraction.fraction - th).abs() <= 2.0 * m.fraction.std_error + 1e-4);
            // oracle: solve cap_fraction(R, R - t) = th
            let (mut lo, mut hi) = (-r, r);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if cap_fraction(r, mid) > th {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            let t_exact = r - s;
            let slope = {
                let c = r.cosh() / s.cosh();
                2.0 * (c * c - 1.0).sqrt() / (2.0 * PI * (r.cosh() - 1.0))
            };
            let tol = 4.0 * m.fraction.std_error / slope + 1e-3;
            assert!((m.t_star - t_exact).abs() < tol, "th {th}: {} vs {t_exact} (tol {tol})", m.t_star);
            assert!(m.t_star > last);
            last = m.t_star;
        }
    }

    #[test]
    fn half_threshold_reaches_center() {
        let d = disk(1.0, 2.0);
        let samples = d.samples(100_000, 12).unwrap();
        let (x1, v1) = boundary_start(&d);
        let m = march_once(&d, &samples, &x1, &v1, 0.5).unwrap();
        assert!((m.t_star - 2.0).abs() < 0.02, "{}", m.t_star);
    }

    #[test]
    fn flat_march_matches_segment_area() {
        // unit disk: the cap of height h has area acos(1-h) - (1-h)sqrt(2h - h²)
        let d = disk(0.0, 1.0);
        let samples = d.samples(100_000, 13).unwrap();
        let (x1, v1) = boundary_start(&d);
        let m = march_once(&d, &samples, &x1, &v1, 0.25).unwrap();
        let h = m.t_star;
        let area = (1.0 - h).acos() - (1.0 - h) * (2.0 * h - h * h).sqrt();
        assert!((area / PI - 0.25).abs() < 0.006, "{}", area / PI);
    }

    #[test]
    fn bad_direction_is_rejected() {
        let d = disk(1.0, 2.0);
        let samples = d.samples(1000, 1).unwrap();
        let (x1, v1) = boundary_start(&d);
        assert!(march_once(&d, &samples, &x1, &v1.neg(), 0.3).is_err());
        assert!(march_once(&d, &samples, &x1, &v1, 1.5).is_err());
    }

    #[test]
    fn ball_region_contains_center_and_is_small() {
        let d = disk(1.0, 2.0);
        let region = march_region(&d, 8, 1.0 / 3.0, 50_000, 5).unwrap();
        assert!(region.contains(&d.space().origin()));
        let summary = region_summary(&region, &d, 50_000, 5).unwrap();
        assert!(summary.volume_fraction.fraction < 0.5);
        assert!(d.space().distance(&summary.sample_centroid, &d.space().origin()) < 0.2);
    }

    #[test]
    fn triangle_region_contains_centroid() {
        let s = CurvatureSpace::euclidean(2).unwrap();
        let v = [[0.0, 0.0], [1.0, 0.0], [0.3, 0.9]];
        let d = ConvexDomain::simplex(s, v.iter().map(|c| s.lift(c).unwrap()).collect()).unwrap();
        let region = march_region(&d, 12, 1.0 / 3.0, 50_000, 8).unwrap();
        let c = s.lift(&[1.3 / 3.0, 0.3]).unwrap();
        assert!(region.contains(&c));
        // every marched half-plane is checked against the exact clipping oracle
        let poly = d.polygon_2d().unwrap();
        for m in &region.marches {
            let x = m.half_space.base().coords();
            let n = m.half_space.normal().vec();
            let exact = crate::domain::cut_fraction_polygon(&poly, [x[0], x[1]], [n[0], n[1]]).unwrap();
            assert!((exact - 1.0 / 3.0).abs() < 4.0 * m.fraction.std_error + 1e-3, "{exact}");
        }
    }

    #[test]
    fn thresholds_parse() {
        assert_eq!(Threshold::parse("1/e").unwrap().value(2), 1.0 / E);
        assert_eq!(Threshold::parse("1/(m+1)").unwrap().value(3), 0.25);
        assert_eq!(Threshold::parse("0.3").unwrap(), Threshold::Value(0.3));
        assert!(Threshold::parse("2").is_err());
    }

    #[test]
    fn spread_directions_are_unit() {
        for m in 1..=5 {
            for v in spread_directions(m, 7, 3) {
                let n: f64 = v.iter().map(|c| c * c).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn larger_threshold_region_is_inside_smaller() {
        let d = disk(1.0, 2.0);
        let samples = d.samples(50_000, 21).unwrap();
        let a = march_region_with(&d, &samples, 8, 1.0 / 3.0, 1).unwrap();
        let b = march_region_with(&d, &samples, 8, 1.0 / E, 1).unwrap();
        let violating = samples.count(|p| b.contains(p) && !a.contains(p));
        assert!(violating as f64 <= 0.002 * samples.len() as f64, "{violating}");
    }
}
