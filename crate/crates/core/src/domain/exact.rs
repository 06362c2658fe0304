//! Exact oracles: flat polygon clipping and ball volumes.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::geometry::CurvatureSpace;

/// Sutherland–Hodgman: keeps the part of `poly` with `(p - x)·v ≥ 0`.
pub fn clip_polygon(poly: &[[f64; 2]], x: [f64; 2], v: [f64; 2]) -> Vec<[f64; 2]> {
    let side = |p: &[f64; 2]| (p[0] - x[0]) * v[0] + (p[1] - x[1]) * v[1];
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (sa, sb) = (side(&a), side(&b));
        if sa >= 0.0 {
            out.push(a);
        }
        if (sa >= 0.0) != (sb >= 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Shoelace formula; positive for counter-clockwise vertex order.
pub fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

/// Area fraction of the polygon on the `v` side of the line through `x`.
pub fn cut_fraction_polygon(poly: &[[f64; 2]], x: [f64; 2], v: [f64; 2]) -> Result<f64> {
    let total = signed_area(poly).abs();
    if poly.len() < 3 || !(total > 1e-14) {
        return Err(invalid("degenerate polygon"));
    }
    let clipped = clip_polygon(poly, x, v);
    if clipped.len() < 3 {
        return Ok(0.0);
    }
    Ok((signed_area(&clipped).abs() / total).min(1.0))
}

/// `φ(x) = min_θ f_x(θ)` for a flat polygon, by a 256-angle scan whose
/// local minima are each refined by golden-section search. Returns the
/// minimum and the minimizing angle.
pub fn exact_phi_polygon(poly: &[[f64; 2]], x: [f64; 2]) -> Result<(f64, f64)> {
    let f = |t: f64| cut_fraction_polygon(poly, x, [t.cos(), t.sin()]);
    let scan = 256;
    let step = 2.0 * PI / scan as f64;
    let vals: Vec<f64> = (0..scan).map(|i| f(i as f64 * step)).collect::<Result<_>>()?;
    let mut best = (f64::INFINITY, 0.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for i in 0..scan {
        let (prev, next) = (vals[(i + scan - 1) % scan], vals[(i + 1) % scan]);
        if vals[i] < best.0 {
            best = (vals[i], i as f64 * step);
        }
        if vals[i] > prev || vals[i] > next {
            continue;
        }
        let t0 = i as f64 * step;
        let (mut a, mut b) = (t0 - step, t0 + step);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c)?, f(d)?);
        while b - a > 1e-10 {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d)?;
            }
        }
        let t = 0.5 * (a + b);
        let v = f(t)?;
        if v < best.0 {
            best = (v, t);
        }
    }
    Ok(best)
}

fn gamma_half(m: usize) -> f64 {
    // Γ(m/2) for integer m ≥ 1
    let mut g = if m % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut a = if m % 2 == 0 { 1.0 } else { 0.5 };
    while a < m as f64 / 2.0 - 1e-12 {
        g *= a;
        a += 1.0;
    }
    g
}

/// Area of the unit sphere `S^{m-1}`.
pub fn sphere_area(m: usize) -> f64 {
    2.0 * PI.powf(m as f64 / 2.0) / gamma_half(m)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Riemannian volume of a geodesic ball of radius `r`.
pub fn ball_volume(space: &CurvatureSpace, r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid("ball radius must be > 0"));
    }
    let m = space.dim();
    if space.is_flat() {
        return Ok(sphere_area(m) * r.powi(m as i32) / m as f64);
    }
    let k = space.k();
    let f = move |s: f64| ((k * s).sinh() / k).powi(m as i32 - 1);
    // scale-aware tolerance: the integrand is increasing, so r·f(r) bounds the integral
    let tol = 1e-13 * (r * f(r)).max(f64::MIN_POSITIVE);
    Ok(sphere_area(m) * adaptive_simpson(&f, 0.0, r, tol))
}
