//! Uniform sampling of a geodesic ball with respect to Riemannian volume.
//!
//! The radius is drawn from the density `∝ sinh^{m-1}(ks)` (or `s^{m-1}` when
//! flat) by inverting a tabulated CDF, the direction uniformly from the unit
//! sphere of the tangent space at the center.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{CurvatureSpace, Point, TangentVector};

const KNOTS: usize = 4096;

#[derive(Clone, Debug)]
pub struct RadialSampler {
    space: CurvatureSpace,
    center: Point,
    basis: Vec<TangentVector>,
    radius: f64,
    /// Unnormalized cumulative integral at the knots `radius * i / KNOTS`.
    cdf: Vec<f64>,
}

impl RadialSampler {
    pub fn new(space: CurvatureSpace, center: Point, radius: f64) -> Self {
        let basis = space.tangent_basis(&center);
        let mut sampler = RadialSampler { space, center, basis, radius, cdf: Vec::new() };
        if !space.is_flat() {
            let h = radius / KNOTS as f64;
            let mut acc = 0.0;
            sampler.cdf.push(0.0);
            for i in 0..KNOTS {
                acc += sampler.segment_integral(i as f64 * h, (i + 1) as f64 * h);
                sampler.cdf.push(acc);
            }
        }
        sampler
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    /// Radial density, unnormalized.
    pub fn density(&self, s: f64) -> f64 {
        let m = self.space.dim() as i32;
        if self.space.is_flat() {
            s.powi(m - 1)
        } else {
            (self.space.k() * s).sinh().powi(m - 1)
        }
    }

    fn segment_integral(&self, a: f64, b: f64) -> f64 {
        // two-panel Simpson
        let m = 0.5 * (a + b);
        let (q1, q3) = (0.5 * (a + m), 0.5 * (m + b));
        (b - a) / 12.0
            * (self.density(a) + 4.0 * self.density(q1) + 2.0 * self.density(m) + 4.0 * self.density(q3) + self.density(b))
    }

    /// Probability that a sampled radius is at most `s`.
    pub fn radial_cdf(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.radius);
        if self.space.is_flat() {
            return (s / self.radius).powi(self.space.dim() as i32);
        }
        let h = self.radius / KNOTS as f64;
        let i = ((s / h) as usize).min(KNOTS - 1);
        (self.cdf[i] + self.segment_integral(i as f64 * h, s)) / self.cdf[KNOTS]
    }

    /// Radius with `radial_cdf(s) = u`: bisection over the knot table, then
    /// two Newton steps.
    pub fn invert(&self, u: f64) -> f64 {
        if self.space.is_flat() {
            return self.radius * u.powf(1.0 / self.space.dim() as f64);
        }
        let total = self.cdf[KNOTS];
        let target = u * total;
        let i = self.cdf.partition_point(|&c| c <= target).clamp(1, KNOTS) - 1;
        let h = self.radius / KNOTS as f64;
        let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
        let span = self.cdf[i + 1] - self.cdf[i];
        let mut s = if span > 0.0 { lo + h * (target - self.cdf[i]) / span } else { lo };
        for _ in 0..2 {
            let g = self.density(s);
            if g <= 0.0 {
                break;
            }
            let f = self.cdf[i] + self.segment_integral(lo, s) - target;
            s = (s - f / g).clamp(lo, hi);
        }
        s
    }

    /// Uniform point of the ball.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let m = self.space.dim();
        let dir: Vec<f64> = loop {
            let g: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                break g.into_iter().map(|x| x / n).collect();
            }
        };
        let s = self.invert(rng.random::<f64>());
        let v = self.space.combine(&self.center, &self.basis, &dir);
        self.space.exp_unchecked(&self.center, v.vec(), s)
    }
}
