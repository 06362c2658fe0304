//! Congestion cores, fair-cut centers and geodesic traffic densities for
//! compact convex domains of constant curvature `-k²`, plus the discrete
//! analogue on weighted graphs.
//!
//! Module map:
//! - [`geometry`]: points, geodesics, transports and half-spaces on the
//!   hyperboloid model (or flat space when `k = 0`).
//! - [`domain`]: convex domains, uniform Riemannian sampling, volume fractions.
//! - [`faircut`]: cut fractions `f_x(v)`, `φ(x)`, fair-cut search, covering.
//! - [`congestion`]: blocked views, traffic density, congestion core.
//! - [`marching`]: marching hyperplanes localization of fair-cut centers.
//! - [`graph`]: traffic densities and Gromov δ on weighted graphs.
//! - [`conjecture`]: simplex sweeps against `(m/(m+1))^m` and `1/e`.

pub mod congestion;
pub mod conjecture;
pub mod domain;
pub mod error;
pub mod faircut;
pub mod geometry;
pub mod graph;
pub mod linalg;
pub mod marching;
pub mod rng;

pub use error::{Error, Result};
pub use geometry::{blocking_radius, CurvatureSpace, GeodesicSegment, HalfSpace, Point, TangentVector};
