//! Constant-curvature geometric kernel.
//!
//! Points of the model space of curvature `-k²` live on the upper sheet of the
//! hyperboloid `⟨p,p⟩ = -1/k²` in Minkowski space `R^{m,1}`, with
//! `⟨a,b⟩ = -a₀b₀ + Σ aᵢbᵢ`. When `k = 0` the same API works on plain
//! Euclidean `R^m`.
//!
//! In the hyperboloid model a half-space `H(x, v)` is the intersection of the
//! hyperboloid with the linear half-space `{q : ⟨q, v⟩ ≥ 0}` of the ambient
//! space. Most of the fast paths below rest on that fact.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance for the hyperboloid and unit-length invariants, scaled by the
/// squared magnitude of the coordinates involved.
pub const INVARIANT_TOL: f64 = 1e-9;

/// Distances below this are treated as coincident points.
pub const COINCIDENT: f64 = 1e-12;

const TERNARY_ITERS: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSpace {
    dim: usize,
    k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: Point,
    vec: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicSegment {
    pub p: Point,
    pub q: Point,
}

/// `H(x, v)`: points whose direction from `x` makes an angle `≤ π/2` with `v`.
/// Closed: the boundary hyperplane belongs to both `H(x,v)` and `H(x,-v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    normal: TangentVector,
}

impl Point {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl TangentVector {
    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn vec(&self) -> &[f64] {
        &self.vec
    }

    pub fn neg(&self) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: self.vec.iter().map(|v| -v).collect(),
        }
    }
}

impl GeodesicSegment {
    pub fn new(p: Point, q: Point) -> Self {
        GeodesicSegment { p, q }
    }
}

impl HalfSpace {
    /// Builds `H(x, v)` from a unit tangent vector based at `x`.
    pub fn new(space: &CurvatureSpace, normal: TangentVector) -> Result<Self> {
        space.check_unit(&normal)?;
        Ok(HalfSpace { normal })
    }

    pub fn base(&self) -> &Point {
        &self.normal.base
    }

    pub fn normal(&self) -> &TangentVector {
        &self.normal
    }

    pub fn opposite(&self) -> HalfSpace {
        HalfSpace { normal: self.normal.neg() }
    }

    /// Signed test value whose sign decides membership: `⟨q - x, v⟩` in the
    /// ambient metric. Positive inside, zero on the boundary.
    pub fn side(&self, space: &CurvatureSpace, q: &[f64]) -> f64 {
        let x = self.base().coords();
        let v = self.normal.vec();
        if space.is_flat() {
            q.iter().zip(x).zip(v).map(|((qi, xi), vi)| (qi - xi) * vi).sum()
        } else {
            // ⟨x, v⟩ = 0, so ⟨q - x, v⟩ = ⟨q, v⟩.
            space.inner(q, v)
        }
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn dot_e(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

impl CurvatureSpace {
    pub fn new(dim: usize, k: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(k.is_finite() && k >= 0.0) {
            return Err(invalid(format!("curvature scale k must be finite and >= 0, got {k}")));
        }
        Ok(CurvatureSpace { dim, k })
    }

    pub fn hyperbolic(dim: usize, k: f64) -> Result<Self> {
        if k <= 0.0 {
            return Err(invalid("hyperbolic space needs k > 0"));
        }
        Self::new(dim, k)
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(dim, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn is_flat(&self) -> bool {
        self.k == 0.0
    }

    /// Length of coordinate vectors: `m + 1` on the hyperboloid, `m` when flat.
    pub fn ambient_dim(&self) -> usize {
        if self.is_flat() {
            self.dim
        } else {
            self.dim + 1
        }
    }

    /// Minkowski product when `k > 0`, Euclidean dot product when flat.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.is_flat() {
            dot_e(a, b)
        } else {
            -a[0] * b[0] + dot_e(&a[1..], &b[1..])
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    pub fn origin(&self) -> Point {
        let mut c = vec![0.0; self.ambient_dim()];
        if !self.is_flat() {
            c[0] = 1.0 / self.k;
        }
        Point(c)
    }

    /// Validates coordinates and projects them back onto the model.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.ambient_dim() {
            return Err(invalid(format!(
                "point has {} coordinates, expected {}",
                coords.len(),
                self.ambient_dim()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point has non-finite coordinates"));
        }
        if !self.is_flat() {
            if coords[0] <= 0.0 {
                return Err(invalid("hyperboloid point must have positive time coordinate"));
            }
            let k2 = self.k * self.k;
            let resid = (k2 * self.inner(&coords, &coords) + 1.0).abs();
            let scale = 1.0 + k2 * coords[0] * coords[0];
            if resid > 1e-6 * scale {
                return Err(invalid(format!(
                    "point is off the hyperboloid: |k²⟨p,p⟩ + 1| = {resid:e}"
                )));
            }
        }
        Ok(self.renormalize(coords))
    }

    /// Hyperboloid point from its spatial coordinates.
    pub fn lift(&self, spatial: &[f64]) -> Result<Point> {
        if spatial.len() != self.dim {
            return Err(invalid("spatial coordinate count must equal dim"));
        }
        if self.is_flat() {
            return Ok(Point(spatial.to_vec()));
        }
        let mut c = Vec::with_capacity(self.dim + 1);
        c.push(0.0);
        c.extend_from_slice(spatial);
        Ok(self.renormalize(c))
    }

    /// Restores `⟨p,p⟩ = -1/k²` by recomputing the time coordinate.
    pub fn renormalize(&self, mut coords: Vec<f64>) -> Point {
        if !self.is_flat() {
            let s2: f64 = coords[1..].iter().map(|c| c * c).sum();
            coords[0] = (1.0 / (self.k * self.k) + s2).sqrt();
        }
        Point(coords)
    }

    /// `|k²⟨p,p⟩ + 1|`, zero when flat.
    pub fn constraint_residual(&self, p: &Point) -> f64 {
        if self.is_flat() {
            0.0
        } else {
            (self.k * self.k * self.inner(&p.0, &p.0) + 1.0).abs()
        }
    }

    fn check_dims(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.ambient_dim() {
            return Err(invalid(format!(
                "coordinate length {} does not match space (expected {})",
                c.len(),
                self.ambient_dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn distance_raw(&self, p: &[f64], q: &[f64]) -> f64 {
        if self.is_flat() {
            return p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        }
        let k = self.k;
        let a = -k * k * self.inner(p, q);
        if a > 2.0 {
            a.acosh() / k
        } else {
            // ⟨p-q,p-q⟩ = (4/k²) sinh²(kd/2); stable for nearby points.
            let mut s = -(p[0] - q[0]) * (p[0] - q[0]);
            for i in 1..p.len() {
                s += (p[i] - q[i]) * (p[i] - q[i]);
            }
            2.0 * (k * s.max(0.0).sqrt() / 2.0).asinh() / k
        }
    }

    pub fn distance(&self, p: &Point, q: &Point) -> f64 {
        self.distance_raw(&p.0, &q.0)
    }

    /// Distance with dimension and consistency checks: a `cosh` argument
    /// below `1 - 1e-6` means the inputs are not on the hyperboloid.
    pub fn try_distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_dims(&p.0)?;
        self.check_dims(&q.0)?;
        if !self.is_flat() {
            let a = -self.k * self.k * self.inner(&p.0, &q.0);
            if a < 1.0 - 1e-6 {
                return Err(Error::Numerical(format!("arccosh argument {a} < 1")));
            }
        }
        Ok(self.distance(p, q))
    }

    fn unit_residual(&self, v: &TangentVector) -> (f64, f64) {
        let n2 = self.inner(&v.vec, &v.vec);
        let scale = 1.0 + max_abs(&v.vec).powi(2);
        ((n2 - 1.0).abs(), scale)
    }

    pub fn is_unit(&self, v: &TangentVector) -> bool {
        let (r, s) = self.unit_residual(v);
        r <= INVARIANT_TOL * s
    }

    fn check_unit(&self, v: &TangentVector) -> Result<()> {
        self.check_dims(&v.vec)?;
        let (r, s) = self.unit_residual(v);
        if r > INVARIANT_TOL * s {
            return Err(invalid(format!("tangent vector is not unit: |⟨v,v⟩ - 1| = {r:e}")));
        }
        Ok(())
    }

    /// Orthogonal projection of an ambient vector onto `T_x`.
    pub fn project_tangent(&self, base: &Point, vec: &[f64]) -> TangentVector {
        let mut v = vec.to_vec();
        if !self.is_flat() {
            let c = self.k * self.k * self.inner(&base.0, vec);
            axpy(c, &base.0, &mut v);
        }
        TangentVector { base: base.clone(), vec: v }
    }

    /// Validates that `vec` is (nearly) tangent at `base`, then projects it.
    pub fn tangent(&self, base: &Point, vec: Vec<f64>) -> Result<TangentVector> {
        self.check_dims(&base.0)?;
        self.check_dims(&vec)?;
        if !self.is_flat() {
            let off = self.inner(&base.0, &vec).abs();
            let scale = 1.0 + max_abs(&base.0) * max_abs(&vec);
            if off > 1e-6 * scale {
                return Err(invalid(format!("vector is not tangent: ⟨x,v⟩ = {off:e}")));
            }
        }
        Ok(self.project_tangent(base, &vec))
    }

    /// Projects onto `T_x` and normalizes.
    pub fn unit_tangent(&self, base: &Point, vec: &[f64]) -> Result<TangentVector> {
        let mut t = self.project_tangent(base, vec);
        let n = self.norm(&t.vec);
        if !(n > 1e-300) {
            return Err(Error::DegenerateDirection(n));
        }
        t.vec.iter_mut().for_each(|c| *c /= n);
        Ok(t)
    }

    fn normalized(&self, mut t: TangentVector) -> TangentVector {
        let n = self.norm(&t.vec);
        if n > 0.0 {
            t.vec.iter_mut().for_each(|c| *c /= n);
        }
        t
    }

    /// Orthonormal basis of `T_x`, Gram–Schmidt over the projected spatial axes.
    pub fn tangent_basis(&self, x: &Point) -> Vec<TangentVector> {
        let ad = self.ambient_dim();
        let offset = ad - self.dim;
        let mut basis: Vec<TangentVector> = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut e = vec![0.0; ad];
            e[i + offset] = 1.0;
            let mut t = self.project_tangent(x, &e);
            for b in &basis {
                let c = self.inner(&t.vec, &b.vec);
                axpy(-c, &b.vec, &mut t.vec);
            }
            // second pass keeps the basis orthonormal far from the origin
            for b in &basis {
                let c = self.inner(&t.vec, &b.vec);
                axpy(-c, &b.vec, &mut t.vec);
            }
            basis.push(self.normalized(t));
        }
        basis
    }

    /// `x + Σ cᵢ eᵢ` for a basis of `T_x`; returns the ambient tangent vector.
    pub fn combine(&self, base: &Point, basis: &[TangentVector], coeffs: &[f64]) -> TangentVector {
        let mut v = vec![0.0; self.ambient_dim()];
        for (b, &c) in basis.iter().zip(coeffs) {
            axpy(c, &b.vec, &mut v);
        }
        TangentVector { base: base.clone(), vec: v }
    }

    /// Point at arc length `t` along the geodesic from `x` with unit velocity `v`.
    pub fn exp_map(&self, v: &TangentVector, t: f64) -> Result<Point> {
        self.check_unit(v)?;
        Ok(self.exp_unchecked(&v.base, &v.vec, t))
    }

    pub(crate) fn exp_unchecked(&self, x: &Point, v: &[f64], t: f64) -> Point {
        let mut out = x.0.clone();
        if self.is_flat() {
            axpy(t, v, &mut out);
            return Point(out);
        }
        let kt = self.k * t;
        out.iter_mut().for_each(|c| *c *= kt.cosh());
        axpy(kt.sinh() / self.k, v, &mut out);
        self.renormalize(out)
    }

    /// `exp_x(w)` for an arbitrary (non-unit) tangent vector.
    pub fn exp_vec(&self, w: &TangentVector) -> Point {
        let n = self.norm(&w.vec);
        if n == 0.0 {
            return w.base.clone();
        }
        let u: Vec<f64> = w.vec.iter().map(|c| c / n).collect();
        self.exp_unchecked(&w.base, &u, n)
    }

    /// Unit tangent at `x` of the geodesic `[x, q]`, pointing toward `q`.
    pub fn log_dir(&self, x: &Point, q: &Point) -> Result<TangentVector> {
        let d = self.distance(x, q);
        if d <= COINCIDENT {
            return Err(Error::DegenerateDirection(d));
        }
        let w: Vec<f64> = q.0.iter().zip(&x.0).map(|(a, b)| a - b).collect();
        let t = self.project_tangent(x, &w);
        let n = self.norm(&t.vec);
        if !(n > 0.0) {
            return Err(Error::Numerical("log direction has zero norm".into()));
        }
        Ok(self.normalized(t))
    }

    /// Parallel transport of `v` along the geodesic from its base to `y`.
    pub fn parallel_transport(&self, v: &TangentVector, y: &Point) -> TangentVector {
        let x = &v.base;
        if self.is_flat() || self.distance(x, y) <= COINCIDENT {
            return TangentVector { base: y.clone(), vec: v.vec.clone() };
        }
        let k2 = self.k * self.k;
        let c = k2 * self.inner(&y.0, &v.vec) / (1.0 - k2 * self.inner(&x.0, &y.0));
        let mut out = v.vec.clone();
        for i in 0..out.len() {
            out[i] += c * (x.0[i] + y.0[i]);
        }
        self.project_tangent(y, &out)
    }

    /// Point at fraction `t ∈ [0,1]` of the geodesic from `p` to `q`, via the
    /// two-endpoint form `(sinh((1-t)kd) p + sinh(tkd) q) / sinh(kd)`, which
    /// stays accurate when both endpoints are far from each other.
    pub fn interpolate(&self, p: &Point, q: &Point, t: f64) -> Point {
        let d = self.distance(p, q);
        let mut out = vec![0.0; p.0.len()];
        self.interpolate_into(&p.0, &q.0, d, t, &mut out);
        Point(out)
    }

    fn interpolate_into(&self, p: &[f64], q: &[f64], d: f64, t: f64, out: &mut [f64]) {
        let kd = self.k * d;
        let (a, b) = if self.is_flat() || kd < 1e-6 {
            (1.0 - t, t)
        } else {
            let s = kd.sinh();
            (((1.0 - t) * kd).sinh() / s, (t * kd).sinh() / s)
        };
        for i in 0..out.len() {
            out[i] = a * p[i] + b * q[i];
        }
        if !self.is_flat() {
            let s2: f64 = out[1..].iter().map(|c| c * c).sum();
            out[0] = (1.0 / (self.k * self.k) + s2).sqrt();
        }
    }

    /// Membership in the closed half-space `H(x, v)`, with angular slack
    /// `eps_angle` on `⟨log_dir(x,q), v⟩ ≥ -eps`.
    pub fn half_space_contains_eps(&self, h: &HalfSpace, q: &Point, eps_angle: f64) -> bool {
        if self.distance(h.base(), q) <= COINCIDENT {
            return true;
        }
        if eps_angle == 0.0 {
            return h.side(self, &q.0) >= 0.0;
        }
        match self.log_dir(h.base(), q) {
            Ok(u) => self.inner(&u.vec, &h.normal.vec) >= -eps_angle,
            Err(_) => true,
        }
    }

    pub fn half_space_contains(&self, h: &HalfSpace, q: &Point) -> bool {
        self.half_space_contains_eps(h, q, 0.0)
    }

    /// Signed distance from `x` to the boundary hyperplane of `h`; positive
    /// inside.
    pub fn hyperplane_distance(&self, h: &HalfSpace, x: &Point) -> f64 {
        let s = h.side(self, &x.0);
        if self.is_flat() {
            s
        } else {
            (self.k * s).asinh() / self.k
        }
    }

    /// Nearest point to `x` on the boundary hyperplane of `h`.
    pub fn hyperplane_foot(&self, h: &HalfSpace, x: &Point) -> Point {
        let v = &h.normal.vec;
        if self.is_flat() {
            let s = h.side(self, &x.0);
            return Point(x.0.iter().zip(v).map(|(a, b)| a - s * b).collect());
        }
        let s = self.inner(&x.0, v);
        let mut y: Vec<f64> = x.0.iter().zip(v).map(|(a, b)| a - s * b).collect();
        let scale = 1.0 / (self.k * (-self.inner(&y, &y)).sqrt());
        let sheet = if y[0] < 0.0 { -1.0 } else { 1.0 };
        y.iter_mut().for_each(|c| *c *= scale * sheet);
        self.renormalize(y)
    }

    /// `min_t d(x, γ(t))` over the closed segment by ternary search; the
    /// function is convex in nonpositive curvature.
    pub fn dist_point_to_segment(&self, x: &Point, seg: &GeodesicSegment) -> f64 {
        self.dist_point_to_segment_raw(&x.0, &seg.p.0, &seg.q.0)
    }

    pub(crate) fn dist_point_to_segment_raw(&self, x: &[f64], p: &[f64], q: &[f64]) -> f64 {
        let d = self.distance_raw(p, q);
        let dp = self.distance_raw(x, p);
        if d <= COINCIDENT {
            return dp;
        }
        let dq = self.distance_raw(x, q);
        let mut buf = vec![0.0; p.len()];
        let mut f = |t: f64| {
            self.interpolate_into(p, q, d, t, &mut buf);
            self.distance_raw(x, &buf)
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..TERNARY_ITERS {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1) <= f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        f(0.5 * (lo + hi)).min(dp).min(dq)
    }

    /// Sum of the interior angles of the geodesic triangle `pqr`.
    pub fn triangle_angle_sum(&self, p: &Point, q: &Point, r: &Point) -> Result<f64> {
        let verts = [p, q, r];
        let mut sum = 0.0;
        for i in 0..3 {
            let a = verts[i];
            let b = verts[(i + 1) % 3];
            let c = verts[(i + 2) % 3];
            let u = self
                .log_dir(a, b)
                .map_err(|_| Error::DegenerateTriangle("coincident vertices".into()))?;
            let w = self
                .log_dir(a, c)
                .map_err(|_| Error::DegenerateTriangle("coincident vertices".into()))?;
            let cos = self.inner(&u.vec, &w.vec).clamp(-1.0, 1.0);
            let angle = cos.acos();
            if angle < 1e-9 || angle > std::f64::consts::PI - 1e-9 {
                return Err(Error::DegenerateTriangle("collinear vertices".into()));
            }
            sum += angle;
        }
        Ok(sum)
    }

    /// Beltrami–Klein coordinates (straight-line geodesics).
    pub fn to_klein(&self, p: &Point) -> Vec<f64> {
        if self.is_flat() {
            p.0.clone()
        } else {
            p.0[1..].iter().map(|c| c / p.0[0]).collect()
        }
    }

    pub fn from_klein(&self, kc: &[f64]) -> Result<Point> {
        if kc.len() != self.dim {
            return Err(invalid("Klein coordinates must have dim entries"));
        }
        if self.is_flat() {
            return Ok(Point(kc.to_vec()));
        }
        let r2 = dot_e(kc, kc);
        if r2 >= 1.0 {
            return Err(invalid("Klein coordinates must lie in the open unit ball"));
        }
        let x0 = 1.0 / (self.k * (1.0 - r2).sqrt());
        let mut c = vec![x0];
        c.extend(kc.iter().map(|v| v * x0));
        Ok(self.renormalize(c))
    }

    pub fn to_poincare(&self, p: &Point) -> Vec<f64> {
        if self.is_flat() {
            return p.0.clone();
        }
        let den = 1.0 + self.k * p.0[0];
        p.0[1..].iter().map(|c| self.k * c / den).collect()
    }

    pub fn from_poincare(&self, b: &[f64]) -> Result<Point> {
        if b.len() != self.dim {
            return Err(invalid("Poincaré coordinates must have dim entries"));
        }
        if self.is_flat() {
            return Ok(Point(b.to_vec()));
        }
        let r2 = dot_e(b, b);
        if r2 >= 1.0 {
            return Err(invalid("Poincaré coordinates must lie in the open unit ball"));
        }
        let den = self.k * (1.0 - r2);
        let mut c = vec![(1.0 + r2) / den];
        c.extend(b.iter().map(|v| 2.0 * v / den));
        Ok(self.renormalize(c))
    }
}

/// Radius of a ball that blocks the view of a whole half-space:
/// `ln(1 + √2) / k`.
pub fn blocking_radius(k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(invalid(format!(
            "blocking radius needs k > 0 (it diverges in the flat limit), got {k}"
        )));
    }
    Ok((1.0 + 2f64.sqrt()).ln() / k)
}
