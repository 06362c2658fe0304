//! Convex domains, uniform Riemannian sampling and Monte Carlo volume
//! fractions.

pub mod exact;
pub mod sampler;
pub mod shape;

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::geometry::{CurvatureSpace, HalfSpace, Point};
use crate::rng::{stream, CHUNK_SIZE};

pub use exact::{ball_volume, clip_polygon, cut_fraction_polygon, exact_phi_polygon, signed_area};
pub use sampler::RadialSampler;
pub use shape::{Ball, BallShape, PolytopeShape, Shape, ShapeRegistry, SimplexShape};

/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLES: usize = 100_000;

const THIN_PROPOSALS: u64 = 1_000_000;
const THIN_RATE: f64 = 1e-4;

/// Bernoulli Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub fraction: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl VolumeEstimate {
    pub fn from_counts(hits: usize, n: usize, seed: u64) -> Self {
        let fraction = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        VolumeEstimate { fraction, std_error: bernoulli_se(fraction, n), n_samples: n, seed }
    }
}

pub fn bernoulli_se(fraction: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (fraction * (1.0 - fraction) / n as f64).max(0.0).sqrt()
}

/// JSON domain description: `{"dim": m, "k": k, "shape": {...}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainDescription {
    pub dim: usize,
    pub k: f64,
    pub shape: Value,
}

#[derive(Clone, Debug)]
pub struct ConvexDomain {
    space: CurvatureSpace,
    shape: Arc<dyn Shape>,
    sampler: Arc<RadialSampler>,
}

impl ConvexDomain {
    pub fn new(space: CurvatureSpace, shape: Box<dyn Shape>) -> Result<Self> {
        let b = shape.bounding();
        if b.center.coords().len() != space.ambient_dim() {
            return Err(invalid("bounding ball center has the wrong dimension"));
        }
        if !shape.contains(&space, shape.probe().coords()) {
            return Err(invalid(format!("{} domain is empty: probe point fails membership", shape.kind())));
        }
        let sampler = RadialSampler::new(space, b.center.clone(), b.radius);
        Ok(ConvexDomain { space, shape: Arc::from(shape), sampler: Arc::new(sampler) })
    }

    pub fn ball(space: CurvatureSpace, center: Point, radius: f64) -> Result<Self> {
        Self::new(space, Box::new(BallShape::new(&space, center, radius)?))
    }

    pub fn polytope(space: CurvatureSpace, faces: Vec<HalfSpace>, bounding: Ball, interior: Point) -> Result<Self> {
        Self::new(space, Box::new(PolytopeShape::new(&space, faces, bounding, interior)?))
    }

    pub fn simplex(space: CurvatureSpace, vertices: Vec<Point>) -> Result<Self> {
        Self::new(space, Box::new(SimplexShape::new(&space, vertices, None)?))
    }

    pub fn from_description(desc: &DomainDescription, registry: &ShapeRegistry) -> Result<Self> {
        let space = CurvatureSpace::new(desc.dim, desc.k)?;
        Self::new(space, registry.parse(&space, &desc.shape)?)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let desc: DomainDescription = serde_json::from_value(value.clone())?;
        Self::from_description(&desc, &ShapeRegistry::default())
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&serde_json::from_str(&text)?)
    }

    pub fn description(&self) -> DomainDescription {
        DomainDescription { dim: self.space.dim(), k: self.space.k(), shape: self.shape.describe() }
    }

    pub fn space(&self) -> &CurvatureSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn shape(&self) -> &dyn Shape {
        self.shape.as_ref()
    }

    pub fn bounding(&self) -> &Ball {
        self.shape.bounding()
    }

    pub fn probe(&self) -> &Point {
        self.shape.probe()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.shape.contains(&self.space, p.coords())
    }

    pub fn contains_raw(&self, p: &[f64]) -> bool {
        self.shape.contains(&self.space, p)
    }

    /// Upper bound on the diameter.
    pub fn diameter_bound(&self) -> f64 {
        2.0 * self.bounding().radius
    }

    /// Flat 2-d polygon, when the exact clipping oracle applies.
    pub fn polygon_2d(&self) -> Option<Vec<[f64; 2]>> {
        self.shape.polygon(&self.space)
    }

    /// One uniform point: rejection sampling from the bounding ball.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        let mut proposals = 0u64;
        loop {
            let p = self.sampler.sample(rng);
            proposals += 1;
            if self.contains(&p) {
                return Ok(p);
            }
            if proposals >= THIN_PROPOSALS {
                return Err(Error::DomainTooThin { accepted: 0, proposals });
            }
        }
    }

    fn sample_chunk(&self, seed: u64, chunk: usize, size: usize) -> Result<Vec<Point>> {
        let mut rng = stream(seed, chunk as u64);
        let mut out = Vec::with_capacity(size);
        let mut proposals = 0u64;
        while out.len() < size {
            let p = self.sampler.sample(&mut rng);
            proposals += 1;
            if self.contains(&p) {
                out.push(p);
            }
            if proposals >= THIN_PROPOSALS && (out.len() as f64) < THIN_RATE * proposals as f64 {
                return Err(Error::DomainTooThin { accepted: out.len() as u64, proposals });
            }
        }
        Ok(out)
    }

    /// `n` uniform points in fixed-size chunks; chunk `i` draws from stream
    /// `(seed, i)`, so the result does not depend on the thread count.
    pub fn samples(&self, n: usize, seed: u64) -> Result<SampleSet> {
        let chunks = n.div_ceil(CHUNK_SIZE);
        let parts: Vec<Vec<Point>> = (0..chunks)
            .into_par_iter()
            .map(|c| self.sample_chunk(seed, c, CHUNK_SIZE.min(n - c * CHUNK_SIZE)))
            .collect::<Result<_>>()?;
        let points: Vec<Point> = parts.into_iter().flatten().collect();
        Ok(SampleSet { space: self.space, points, seed })
    }

    /// Fraction of `n` uniform samples satisfying `predicate`.
    pub fn volume_fraction<F>(&self, predicate: F, n: usize, seed: u64) -> Result<VolumeEstimate>
    where
        F: Fn(&Point) -> bool + Sync,
    {
        if n < 100 {
            return Err(invalid(format!("volume_fraction needs n >= 100, got {n}")));
        }
        Ok(self.samples(n, seed)?.fraction(predicate))
    }
}

/// A fixed set of uniform domain samples, reused across compared estimates
/// (common random numbers).
#[derive(Clone, Debug)]
pub struct SampleSet {
    space: CurvatureSpace,
    points: Vec<Point>,
    seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn space(&self) -> &CurvatureSpace {
        &self.space
    }

    pub fn count<F>(&self, predicate: F) -> usize
    where
        F: Fn(&Point) -> bool + Sync,
    {
        self.points.par_iter().with_min_len(CHUNK_SIZE).filter(|p| predicate(p)).count()
    }

    pub fn fraction<F>(&self, predicate: F) -> VolumeEstimate
    where
        F: Fn(&Point) -> bool + Sync,
    {
        VolumeEstimate::from_counts(self.count(predicate), self.len(), self.seed)
    }

    pub fn half_space_fraction(&self, h: &HalfSpace) -> VolumeEstimate {
        let space = self.space;
        self.fraction(|p| space.half_space_contains(h, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use serde_json::json;

    fn disk(k: f64, r: f64) -> ConvexDomain {
        let s = CurvatureSpace::new(2, k).unwrap();
        ConvexDomain::ball(s, s.origin(), r).unwrap()
    }

    fn triangle() -> ConvexDomain {
        let s = CurvatureSpace::euclidean(2).unwrap();
        let v = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]].iter().map(|c| s.point(c.to_vec()).unwrap()).collect();
        ConvexDomain::simplex(s, v).unwrap()
    }

    #[test]
    fn ball_membership() {
        let d = disk(1.0, 1.0);
        assert!(d.contains(d.probe()));
        let s = *d.space();
        let v = s.tangent_basis(&s.origin()).remove(0);
        assert!(!d.contains(&s.exp_map(&v, 1.0 + 1e-3).unwrap()));
        assert!(d.contains(&s.exp_map(&v, 1.0 - 1e-3).unwrap()));
    }

    #[test]
    fn simplex_membership() {
        let d = triangle();
        assert!(d.contains_raw(&[0.25, 0.25]));
        assert!(!d.contains_raw(&[0.6, 0.6]));
    }

    #[test]
    fn hyperbolic_simplex_membership_matches_geodesic_convexity() {
        let s = CurvatureSpace::hyperbolic(2, 1.0).unwrap();
        let o = s.origin();
        let basis = s.tangent_basis(&o);
        let verts: Vec<Point> = (0..3)
            .map(|i| {
                let a = i as f64 * 2.1 + 0.3;
                s.exp_map(&s.combine(&o, &basis, &[a.cos(), a.sin()]), 1.5).unwrap()
            })
            .collect();
        let d = ConvexDomain::simplex(s, verts.clone()).unwrap();
        // points on geodesic edges are members; points just beyond an edge are not
        for i in 0..3 {
            let a = &verts[i];
            let b = &verts[(i + 1) % 3];
            let m = s.interpolate(a, b, 0.4);
            assert!(d.contains(&m) || s.distance(&m, a) < 1e-9);
            let out = s.log_dir(&d.probe().clone(), &m).unwrap();
            let far = s.exp_map(&out, s.distance(d.probe(), &m) + 1e-6).unwrap();
            assert!(!d.contains(&far));
        }
    }

    #[test]
    fn affinely_dependent_simplex_rejected() {
        let s = CurvatureSpace::euclidean(2).unwrap();
        let v = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]].iter().map(|c| s.point(c.to_vec()).unwrap()).collect();
        assert!(ConvexDomain::simplex(s, v).is_err());
    }

    #[test]
    fn same_seed_same_samples() {
        let d = disk(1.0, 2.0);
        let a = d.samples(3000, 11).unwrap();
        let b = d.samples(3000, 11).unwrap();
        assert_eq!(a.points(), b.points());
        let c = d.samples(3000, 12).unwrap();
        assert_ne!(a.points(), c.points());
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            assert_eq!(d.sample_uniform(&mut r1).unwrap(), d.sample_uniform(&mut r2).unwrap());
        }
    }

    #[test]
    fn thread_count_does_not_change_samples() {
        let d = disk(1.0, 2.0);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| d.samples(5000, 3).unwrap());
        let b = three.install(|| d.samples(5000, 3).unwrap());
        assert_eq!(a.points(), b.points());
    }

    #[test]
    fn radial_cdf_check() {
        let (k, r) = (1.0, 2.0);
        let d = disk(k, r);
        let n = 40_000;
        let set = d.samples(n, 1).unwrap();
        let o = d.space().origin();
        let est = set.fraction(|p| d.space().distance(&o, p) <= r / 2.0);
        // ∫ sinh = cosh - 1
        let expect = ((k * r / 2.0).cosh() - 1.0) / ((k * r).cosh() - 1.0);
        assert!((est.fraction - expect).abs() < 3.0 * bernoulli_se(expect, n), "{} vs {expect}", est.fraction);
    }

    #[test]
    fn radial_chi_square() {
        // 10 equiprobable radial bins in H³, chi-square at significance 0.001 (9 dof: 27.877)
        let s = CurvatureSpace::hyperbolic(3, 1.0).unwrap();
        let r = 1.5;
        let d = ConvexDomain::ball(s, s.origin(), r).unwrap();
        let n = 50_000;
        let set = d.samples(n, 9).unwrap();
        let cdf = |t: f64| ((2.0 * t).sinh() / 2.0 - t) / ((2.0 * r).sinh() / 2.0 - r);
        let mut bins = [0usize; 10];
        for p in set.points() {
            let u = cdf(s.distance(&s.origin(), p));
            bins[((u * 10.0) as usize).min(9)] += 1;
        }
        let e = n as f64 / 10.0;
        let chi2: f64 = bins.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 27.877, "chi2 = {chi2}");
    }

    #[test]
    fn flat_disk_mean_is_centered() {
        let d = disk(0.0, 1.0);
        let n = 20_000;
        let set = d.samples(n, 4).unwrap();
        for axis in 0..2 {
            let mean = set.points().iter().map(|p| p.coords()[axis]).sum::<f64>() / n as f64;
            // var of a coordinate in the unit disk is 1/4
            assert!(mean.abs() < 3.0 * (0.25 / n as f64).sqrt());
        }
    }

    #[test]
    fn volume_fraction_examples() {
        let d = disk(1.0, 1.5);
        let all = d.volume_fraction(|_| true, 1000, 1).unwrap();
        assert_eq!(all.fraction, 1.0);
        assert_eq!(all.std_error, 0.0);
        let s = *d.space();
        let h = HalfSpace::new(&s, s.tangent_basis(&s.origin()).remove(1)).unwrap();
        let n = 20_000;
        let f = d.volume_fraction(|p| s.half_space_contains(&h, p), n, 2).unwrap();
        assert!((f.fraction - 0.5).abs() < 3.0 * f.std_error);

        let t = triangle();
        let f = t.volume_fraction(|p| p.coords()[1] <= p.coords()[0], n, 3).unwrap();
        assert!((f.fraction - 0.5).abs() < 3.0 * f.std_error);
        assert!(d.volume_fraction(|_| true, 50, 1).is_err());
    }

    #[test]
    fn complementary_half_spaces_share_samples() {
        let d = disk(1.0, 1.5);
        let s = *d.space();
        let x = s.exp_map(&s.tangent_basis(&s.origin()).remove(0), 0.4).unwrap();
        let set = d.samples(10_000, 8).unwrap();
        for v in s.tangent_basis(&x) {
            let h = HalfSpace::new(&s, v).unwrap();
            let a = set.count(|p| s.half_space_contains(&h, p));
            let b = set.count(|p| s.half_space_contains(&h.opposite(), p));
            assert_eq!(a + b, set.len());
        }
    }

    #[test]
    fn mc_agrees_with_exact_clipping() {
        let d = triangle();
        let poly = d.polygon_2d().unwrap();
        let set = d.samples(20_000, 21).unwrap();
        let s = *d.space();
        for i in 0..20 {
            let x = [0.1 + 0.03 * i as f64, 0.2 + 0.01 * (i % 7) as f64];
            let t = i as f64 * 0.71;
            let v = [t.cos(), t.sin()];
            let exact = cut_fraction_polygon(&poly, x, v).unwrap();
            let xp = s.point(x.to_vec()).unwrap();
            let h = HalfSpace::new(&s, s.tangent(&xp, v.to_vec()).unwrap()).unwrap();
            let est = set.half_space_fraction(&h);
            let se = bernoulli_se(exact, set.len()).max(1e-4);
            assert!((est.fraction - exact).abs() < 4.0 * se, "case {i}: {} vs {exact}", est.fraction);
        }
    }

    #[test]
    fn too_thin_domain_errors() {
        let s = CurvatureSpace::euclidean(2).unwrap();
        let faces = vec![
            HalfSpace::new(&s, s.tangent(&s.point(vec![0.0, 0.0]).unwrap(), vec![0.0, 1.0]).unwrap()).unwrap(),
            HalfSpace::new(&s, s.tangent(&s.point(vec![0.0, 1e-7]).unwrap(), vec![0.0, -1.0]).unwrap()).unwrap(),
        ];
        let bounding = Ball { center: s.point(vec![0.0, 0.0]).unwrap(), radius: 1.0 };
        let d = ConvexDomain::polytope(s, faces, bounding, s.point(vec![0.0, 5e-8]).unwrap()).unwrap();
        assert!(matches!(d.samples(10, 1), Err(Error::DomainTooThin { .. })));
    }

    #[test]
    fn json_roundtrip_and_errors() {
        let v = json!({"dim": 2, "k": 0.0, "shape": {"type": "simplex", "vertices": [[0.0,0.0],[1.0,0.0],[0.0,1.0]]}});
        let d = ConvexDomain::from_json(&v).unwrap();
        let again = ConvexDomain::from_json(&serde_json::to_value(d.description()).unwrap()).unwrap();
        assert!(again.contains_raw(&[0.2, 0.2]));

        let ball = json!({"dim": 2, "k": 1.0, "shape": {"type": "ball", "radius": 2.0}});
        assert!(ConvexDomain::from_json(&ball).is_ok());
        let unknown = json!({"dim": 2, "k": 1.0, "shape": {"type": "ball", "radius": 2.0, "color": 1}});
        assert!(ConvexDomain::from_json(&unknown).is_err());
        let kind = json!({"dim": 2, "k": 1.0, "shape": {"type": "torus"}});
        assert!(ConvexDomain::from_json(&kind).is_err());
        let extra = json!({"dim": 2, "k": 1.0, "shape": {"type": "ball", "radius": 2.0}, "x": 1});
        assert!(ConvexDomain::from_json(&extra).is_err());

        let poly = json!({"dim": 2, "k": 1.0, "shape": {
            "type": "polytope",
            "faces": [{"point": [1.0, 0.0, 0.0], "normal": [0.0, 1.0, 0.0]}],
            "bounding": {"center": [1.0, 0.0, 0.0], "radius": 1.0},
            "interior": [1.0, 0.0, 0.0]}});
        let d = ConvexDomain::from_json(&poly).unwrap();
        assert_eq!(d.shape().kind(), "polytope");
        let again = ConvexDomain::from_json(&serde_json::to_value(d.description()).unwrap()).unwrap();
        assert_eq!(again.shape().kind(), "polytope");
    }
}
