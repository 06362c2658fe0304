//! Minimizers of `v ↦ f_x(v)` over the unit tangent sphere, registered by
//! name. All of them work on a [`CutEvaluator`], so they see the same sample
//! set and only differ in how they explore directions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::CutEvaluator;
use crate::error::{invalid, Result};
use crate::rng::stream;

/// Best direction found, in tangent-basis coefficients, and its hit count.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionMin {
    pub coeffs: Vec<f64>,
    pub hits: usize,
}

pub trait DirectionSearch: Send + Sync {
    fn name(&self) -> &'static str;

    fn supports(&self, dim: usize) -> bool;

    fn minimize(&self, eval: &CutEvaluator, seed: u64) -> DirectionMin;
}

fn minimize_dim1(eval: &CutEvaluator) -> DirectionMin {
    let pos = eval.count(&[1.0]);
    let neg = eval.count(&[-1.0]);
    if pos <= neg {
        DirectionMin { coeffs: vec![1.0], hits: pos }
    } else {
        DirectionMin { coeffs: vec![-1.0], hits: neg }
    }
}

fn angle_dir(t: f64) -> [f64; 2] {
    [t.cos(), t.sin()]
}

/// Planar scan over 256 equally spaced angles; the lowest local minima of
/// the scan are refined by golden-section search to an angular tolerance.
#[derive(Clone, Debug)]
pub struct ScanGolden {
    pub angles: usize,
    pub angular_tol: f64,
    /// Scan minima refined.
    pub refine: usize,
}

impl Default for ScanGolden {
    fn default() -> Self {
        ScanGolden { angles: 256, angular_tol: 1e-4, refine: 3 }
    }
}

impl DirectionSearch for ScanGolden {
    fn name(&self) -> &'static str {
        "scan-golden"
    }

    fn supports(&self, dim: usize) -> bool {
        dim <= 2
    }

    fn minimize(&self, eval: &CutEvaluator, _seed: u64) -> DirectionMin {
        if eval.dim() == 1 {
            return minimize_dim1(eval);
        }
        let f = |t: f64| eval.count(&angle_dir(t));
        let step = 2.0 * PI / self.angles as f64;
        let vals: Vec<usize> = (0..self.angles).map(|i| f(i as f64 * step)).collect();
        let n = self.angles;
        let mut basins: Vec<usize> =
            (0..n).filter(|&i| vals[i] <= vals[(i + n - 1) % n] && vals[i] <= vals[(i + 1) % n]).collect();
        basins.sort_by_key(|&i| vals[i]);
        basins.truncate(self.refine);
        let (mut best_t, mut best) = (basins[0] as f64 * step, vals[basins[0]]);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for &i in &basins {
            let t0 = i as f64 * step;
            let (mut a, mut b) = (t0 - step, t0 + step);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (f(c), f(d));
            while b - a > self.angular_tol {
                if fc <= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = f(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = f(d);
                }
            }
            for (t, v) in [(c, fc), (d, fd)] {
                if v < best {
                    best = v;
                    best_t = t;
                }
            }
        }
        DirectionMin { coeffs: angle_dir(best_t).to_vec(), hits: best }
    }
}

/// Exact planar minimum on the sample set: each sample is inside `H(x, θ)`
/// for a closed arc of angles of width `π`, so sweeping the sorted arc
/// endpoints visits every distinct value of the count.
#[derive(Clone, Debug, Default)]
pub struct AngularSweep;

impl DirectionSearch for AngularSweep {
    fn name(&self) -> &'static str {
        "sweep"
    }

    fn supports(&self, dim: usize) -> bool {
        dim <= 2
    }

    fn minimize(&self, eval: &CutEvaluator, _seed: u64) -> DirectionMin {
        if eval.dim() == 1 {
            return minimize_dim1(eval);
        }
        let tau = 2.0 * PI;
        let wrap = |t: f64| t.rem_euclid(tau);
        let mut events: Vec<(f64, i64)> = Vec::with_capacity(2 * eval.len());
        for j in 0..eval.len() {
            let p = eval.projection(j);
            if p[0] == 0.0 && p[1] == 0.0 {
                continue; // the base point itself: inside every half-space
            }
            let psi = p[1].atan2(p[0]);
            events.push((wrap(psi - PI / 2.0), 1));
            events.push((wrap(psi + PI / 2.0), -1));
        }
        if events.is_empty() {
            return DirectionMin { coeffs: vec![1.0, 0.0], hits: eval.len() };
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let last = events[events.len() - 1].0;
        let start = wrap(0.5 * (last + events[0].0 + tau));
        let mut count = eval.count(&angle_dir(start)) as i64;
        let (mut best, mut best_t) = (count, start);
        for i in 0..events.len() {
            count += events[i].1;
            let next = if i + 1 < events.len() { events[i + 1].0 } else { events[0].0 + tau };
            if next > events[i].0 && count < best {
                best = count;
                best_t = wrap(0.5 * (events[i].0 + next));
            }
        }
        let coeffs = angle_dir(best_t).to_vec();
        let hits = eval.count(&coeffs);
        DirectionMin { coeffs, hits }
    }
}

/// Multistart Nelder–Mead on the tangent sphere through local charts
/// `y ↦ normalize(u + Σ yᵢ wᵢ)` around each start `u`.
#[derive(Clone, Debug)]
pub struct SphereNelderMead {
    /// Starts per dimension: `starts_per_dim * (m + 1)` local searches.
    pub starts_per_dim: usize,
    pub initial_step: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SphereNelderMead {
    fn default() -> Self {
        SphereNelderMead { starts_per_dim: 4, initial_step: 0.3, max_iters: 200, tol: 1e-4 }
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|c| *c /= n);
    }
}

/// Orthonormal complement of the unit vector `u` in `R^m`.
fn complement(u: &[f64]) -> Vec<Vec<f64>> {
    let m = u.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(m - 1);
    for i in 0..m {
        if out.len() == m - 1 {
            break;
        }
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        let c = crate::linalg::dot(&e, u);
        e.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
        for w in &out {
            let c = crate::linalg::dot(&e, w);
            e.iter_mut().zip(w).for_each(|(a, b)| *a -= c * b);
        }
        if crate::linalg::norm(&e) > 1e-6 {
            normalize(&mut e);
            out.push(e);
        }
    }
    out
}

impl SphereNelderMead {
    fn local(&self, eval: &CutEvaluator, start: &[f64]) -> DirectionMin {
        let m = start.len();
        let chart = complement(start);
        let to_dir = |y: &[f64]| {
            let mut v = start.to_vec();
            for (w, &c) in chart.iter().zip(y) {
                v.iter_mut().zip(w).for_each(|(a, b)| *a += c * b);
            }
            normalize(&mut v);
            v
        };
        let f = |y: &[f64]| eval.count(&to_dir(y)) as f64;
        let n = m - 1;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let origin = vec![0.0; n];
        simplex.push((origin.clone(), f(&origin)));
        for i in 0..n {
            let mut y = origin.clone();
            y[i] = self.initial_step;
            let v = f(&y);
            simplex.push((y, v));
        }
        for _ in 0..self.max_iters {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let size = simplex[1..]
                .iter()
                .map(|(y, _)| y.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if size < self.tol {
                break;
            }
            let centroid: Vec<f64> =
                (0..n).map(|i| simplex[..n].iter().map(|(y, _)| y[i]).sum::<f64>() / n as f64).collect();
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
            };
            let refl = along(1.0);
            let fr = f(&refl);
            if fr < simplex[0].1 {
                let exp = along(2.0);
                let fe = f(&exp);
                simplex[n] = if fe < fr { (exp, fe) } else { (refl, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (refl, fr);
            } else {
                let con = if fr < worst.1 { along(0.5) } else { along(-0.5) };
                let fc = f(&con);
                if fc < worst.1.min(fr) {
                    simplex[n] = (con, fc);
                } else {
                    let best = simplex[0].0.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        let y: Vec<f64> = best.iter().zip(&entry.0).map(|(b, y)| b + 0.5 * (y - b)).collect();
                        let v = f(&y);
                        *entry = (y, v);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let coeffs = to_dir(&simplex[0].0);
        DirectionMin { hits: simplex[0].1 as usize, coeffs }
    }
}

/// Local Nelder–Mead polish of a single direction.
pub(crate) fn refine_direction(eval: &CutEvaluator, start: &[f64]) -> DirectionMin {
    SphereNelderMead { starts_per_dim: 1, initial_step: 0.1, max_iters: 200, tol: 1e-4 }.local(eval, start)
}

impl DirectionSearch for SphereNelderMead {
    fn name(&self) -> &'static str {
        "nelder-mead"
    }

    fn supports(&self, _dim: usize) -> bool {
        true
    }

    fn minimize(&self, eval: &CutEvaluator, seed: u64) -> DirectionMin {
        let m = eval.dim();
        if m == 1 {
            return minimize_dim1(eval);
        }
        let starts = self.starts_per_dim * (m + 1);
        let mut rng = stream(seed, 0);
        // screen a pool of random directions; the best ones seed the local searches
        let mut pool: Vec<(usize, Vec<f64>)> = (0..8 * starts)
            .map(|_| {
                let mut v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                normalize(&mut v);
                (eval.count(&v), v)
            })
            .collect();
        pool.sort_by(|a, b| a.0.cmp(&b.0));
        let mut best = DirectionMin { coeffs: pool[0].1.clone(), hits: pool[0].0 };
        for (_, start) in pool.iter().take(starts) {
            let local = self.local(eval, start);
            if local.hits < best.hits {
                best = local;
            }
        }
        best
    }
}

/// Direction searches by name.
#[derive(Clone)]
pub struct SearchRegistry {
    entries: BTreeMap<&'static str, Arc<dyn DirectionSearch>>,
}

impl Default for SearchRegistry {
    fn default() -> Self {
        let mut r = SearchRegistry { entries: BTreeMap::new() };
        r.register(Arc::new(ScanGolden::default()));
        r.register(Arc::new(AngularSweep));
        r.register(Arc::new(SphereNelderMead::default()));
        r
    }
}

impl SearchRegistry {
    pub fn register(&mut self, s: Arc<dyn DirectionSearch>) {
        self.entries.insert(s.name(), s);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn default_name(dim: usize) -> &'static str {
        if dim <= 2 {
            "scan-golden"
        } else {
            "nelder-mead"
        }
    }

    /// Looks up `name` (or the per-dimension default) and checks it supports `dim`.
    pub fn resolve(&self, name: Option<&str>, dim: usize) -> Result<Arc<dyn DirectionSearch>> {
        let name = name.unwrap_or(Self::default_name(dim));
        let s = self
            .entries
            .get(name)
            .ok_or_else(|| invalid(format!("unknown direction search {name:?}; known: {:?}", self.names())))?;
        if !s.supports(dim) {
            return Err(invalid(format!("direction search {name:?} does not support dimension {dim}")));
        }
        Ok(s.clone())
    }
}
