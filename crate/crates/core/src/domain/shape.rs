//! Domain shapes and the by-name registry that builds them from JSON.

use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, Result};
use crate::geometry::{CurvatureSpace, HalfSpace, Point};
use crate::linalg;

/// A closed geodesic ball `B(center, radius)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, space: &CurvatureSpace, p: &[f64]) -> bool {
        space.distance_raw(self.center.coords(), p) <= self.radius
    }
}

/// A compact convex shape with a membership oracle, a bounding ball and an
/// interior probe point.
pub trait Shape: Send + Sync + Debug {
    fn kind(&self) -> &'static str;

    fn contains(&self, space: &CurvatureSpace, p: &[f64]) -> bool;

    fn bounding(&self) -> &Ball;

    /// A point known to lie in the domain.
    fn probe(&self) -> &Point;

    /// JSON shape description, re-parseable by the registry.
    fn describe(&self) -> Value;

    /// Vertex list (counter-clockwise) when the shape is a flat polygon.
    fn polygon(&self, _space: &CurvatureSpace) -> Option<Vec<[f64; 2]>> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct BallShape {
    ball: Ball,
}

impl BallShape {
    pub fn new(space: &CurvatureSpace, center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid(format!("ball radius must be > 0, got {radius}")));
        }
        if center.coords().len() != space.ambient_dim() {
            return Err(invalid("ball center has the wrong dimension"));
        }
        Ok(BallShape { ball: Ball { center, radius } })
    }
}

impl Shape for BallShape {
    fn kind(&self) -> &'static str {
        "ball"
    }

    fn contains(&self, space: &CurvatureSpace, p: &[f64]) -> bool {
        self.ball.contains(space, p)
    }

    fn bounding(&self) -> &Ball {
        &self.ball
    }

    fn probe(&self) -> &Point {
        &self.ball.center
    }

    fn describe(&self) -> Value {
        json!({"type": "ball", "center": self.ball.center, "radius": self.ball.radius})
    }
}

/// Intersection of closed half-spaces, clipped to its bounding ball so the
/// domain is always compact.
#[derive(Debug, Clone)]
pub struct PolytopeShape {
    faces: Vec<HalfSpace>,
    bounding: Ball,
    interior: Point,
}

impl PolytopeShape {
    pub fn new(space: &CurvatureSpace, faces: Vec<HalfSpace>, bounding: Ball, interior: Point) -> Result<Self> {
        if faces.is_empty() {
            return Err(invalid("polytope needs at least one face"));
        }
        if !(bounding.radius > 0.0) {
            return Err(invalid("polytope bounding radius must be > 0"));
        }
        let shape = PolytopeShape { faces, bounding, interior };
        if !shape.contains(space, shape.interior.coords()) {
            return Err(invalid("polytope interior witness is not inside every face and the bounding ball"));
        }
        Ok(shape)
    }

    pub fn faces(&self) -> &[HalfSpace] {
        &self.faces
    }
}

impl Shape for PolytopeShape {
    fn kind(&self) -> &'static str {
        "polytope"
    }

    fn contains(&self, space: &CurvatureSpace, p: &[f64]) -> bool {
        self.faces.iter().all(|h| h.side(space, p) >= 0.0) && self.bounding.contains(space, p)
    }

    fn bounding(&self) -> &Ball {
        &self.bounding
    }

    fn probe(&self) -> &Point {
        &self.interior
    }

    fn describe(&self) -> Value {
        let faces: Vec<Value> = self
            .faces
            .iter()
            .map(|h| json!({"point": h.base(), "normal": h.normal().vec()}))
            .collect();
        json!({
            "type": "polytope",
            "faces": faces,
            "bounding": {"center": self.bounding.center, "radius": self.bounding.radius},
            "interior": self.interior,
        })
    }

    fn polygon(&self, space: &CurvatureSpace) -> Option<Vec<[f64; 2]>> {
        if !space.is_flat() || space.dim() != 2 {
            return None;
        }
        // Faces clip the bounding square; the ball cut itself is not polygonal,
        // so this is exact only when the faces alone already bound the shape
        // inside the ball.
        let c = self.bounding.center.coords();
        let r = self.bounding.radius;
        let mut poly = vec![[c[0] - r, c[1] - r], [c[0] + r, c[1] - r], [c[0] + r, c[1] + r], [c[0] - r, c[1] + r]];
        for h in &self.faces {
            let x = h.base().coords();
            let v = h.normal().vec();
            poly = super::exact::clip_polygon(&poly, [x[0], x[1]], [v[0], v[1]]);
        }
        let inside = poly.iter().all(|p| space.distance_raw(c, p) <= r * (1.0 + 1e-12));
        (inside && poly.len() >= 3).then_some(poly)
    }
}

/// Geodesic simplex: convex hull of `m + 1` vertices. Membership is a
/// barycentric test in Klein coordinates, where geodesics are straight.
#[derive(Debug, Clone)]
pub struct SimplexShape {
    vertices: Vec<Point>,
    klein_origin: Vec<f64>,
    /// Inverse of the edge matrix, row-major.
    inverse: Vec<Vec<f64>>,
    bounding: Ball,
    barycenter: Point,
}

impl SimplexShape {
    pub fn new(space: &CurvatureSpace, vertices: Vec<Point>, bounding: Option<Ball>) -> Result<Self> {
        let m = space.dim();
        if vertices.len() != m + 1 {
            return Err(invalid(format!("simplex in dimension {m} needs {} vertices, got {}", m + 1, vertices.len())));
        }
        let klein: Vec<Vec<f64>> = vertices.iter().map(|v| space.to_klein(v)).collect();
        let k0 = klein[0].clone();
        // edges[i][j] = (v_{j+1} - v_0)_i
        let edges: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| klein[j + 1][i] - k0[i]).collect()).collect();
        let mut cols = Vec::with_capacity(m);
        for j in 0..m {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            cols.push(linalg::solve(&edges, &e).ok_or_else(|| invalid("simplex vertices are affinely dependent"))?);
        }
        let inverse: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| cols[j][i]).collect()).collect();
        let mean: Vec<f64> = (0..m).map(|i| klein.iter().map(|kv| kv[i]).sum::<f64>() / (m + 1) as f64).collect();
        let barycenter = space.from_klein(&mean)?;
        let bounding = match bounding {
            Some(b) => b,
            None => {
                let r = vertices.iter().map(|v| space.distance(&barycenter, v)).fold(0.0, f64::max);
                Ball { center: barycenter.clone(), radius: r * (1.0 + 1e-9) + 1e-12 }
            }
        };
        let shape = SimplexShape { vertices, klein_origin: k0, inverse, bounding, barycenter };
        if !shape.vertices.iter().all(|v| shape.bounding.contains(space, v.coords())) {
            return Err(invalid("simplex bounding ball does not contain every vertex"));
        }
        Ok(shape)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn barycenter(&self) -> &Point {
        &self.barycenter
    }

    fn barycentric(&self, space: &CurvatureSpace, p: &[f64]) -> Vec<f64> {
        let kp: Vec<f64> = if space.is_flat() {
            p.to_vec()
        } else {
            p[1..].iter().map(|c| c / p[0]).collect()
        };
        let d: Vec<f64> = kp.iter().zip(&self.klein_origin).map(|(a, b)| a - b).collect();
        self.inverse.iter().map(|row| linalg::dot(row, &d)).collect()
    }
}

impl Shape for SimplexShape {
    fn kind(&self) -> &'static str {
        "simplex"
    }

    fn contains(&self, space: &CurvatureSpace, p: &[f64]) -> bool {
        let lam = self.barycentric(space, p);
        let tol = 1e-12;
        lam.iter().all(|&l| l >= -tol) && lam.iter().sum::<f64>() <= 1.0 + tol
    }

    fn bounding(&self) -> &Ball {
        &self.bounding
    }

    fn probe(&self) -> &Point {
        &self.barycenter
    }

    fn describe(&self) -> Value {
        json!({
            "type": "simplex",
            "vertices": self.vertices,
            "bounding": {"center": self.bounding.center, "radius": self.bounding.radius},
        })
    }

    fn polygon(&self, space: &CurvatureSpace) -> Option<Vec<[f64; 2]>> {
        if !space.is_flat() || space.dim() != 2 {
            return None;
        }
        let mut poly: Vec<[f64; 2]> = self.vertices.iter().map(|v| [v.coords()[0], v.coords()[1]]).collect();
        if super::exact::signed_area(&poly) < 0.0 {
            poly.reverse();
        }
        Some(poly)
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct BallSpec {
    #[serde(rename = "type")]
    _kind: String,
    center: Option<Vec<f64>>,
    radius: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct BallRef {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FaceSpec {
    point: Vec<f64>,
    normal: Vec<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PolytopeSpec {
    #[serde(rename = "type")]
    _kind: String,
    faces: Vec<FaceSpec>,
    bounding: BallRef,
    interior: Vec<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SimplexSpec {
    #[serde(rename = "type")]
    _kind: String,
    vertices: Vec<Vec<f64>>,
    bounding: Option<BallRef>,
}

fn parse_ball(space: &CurvatureSpace, v: &Value) -> Result<Box<dyn Shape>> {
    let spec: BallSpec = serde_json::from_value(v.clone())?;
    let center = match spec.center {
        Some(c) => space.point(c)?,
        None => space.origin(),
    };
    Ok(Box::new(BallShape::new(space, center, spec.radius)?))
}

fn parse_ball_ref(space: &CurvatureSpace, b: BallRef) -> Result<Ball> {
    Ok(Ball { center: space.point(b.center)?, radius: b.radius })
}

fn parse_polytope(space: &CurvatureSpace, v: &Value) -> Result<Box<dyn Shape>> {
    let spec: PolytopeSpec = serde_json::from_value(v.clone())?;
    let mut faces = Vec::with_capacity(spec.faces.len());
    for (i, f) in spec.faces.into_iter().enumerate() {
        let x = space.point(f.point).map_err(|e| invalid(format!("face {i}: {e}")))?;
        let t = space.tangent(&x, f.normal).map_err(|e| invalid(format!("face {i}: {e}")))?;
        let n = space.norm(t.vec());
        if (n - 1.0).abs() > 1e-6 {
            return Err(invalid(format!("face {i}: normal is not unit (norm {n})")));
        }
        let unit = space.unit_tangent(&x, t.vec())?;
        faces.push(HalfSpace::new(space, unit)?);
    }
    let bounding = parse_ball_ref(space, spec.bounding)?;
    let interior = space.point(spec.interior)?;
    Ok(Box::new(PolytopeShape::new(space, faces, bounding, interior)?))
}

fn parse_simplex(space: &CurvatureSpace, v: &Value) -> Result<Box<dyn Shape>> {
    let spec: SimplexSpec = serde_json::from_value(v.clone())?;
    let vertices = spec.vertices.into_iter().map(|c| space.point(c)).collect::<Result<Vec<_>>>()?;
    let bounding = spec.bounding.map(|b| parse_ball_ref(space, b)).transpose()?;
    Ok(Box::new(SimplexShape::new(space, vertices, bounding)?))
}

pub type ShapeParser = fn(&CurvatureSpace, &Value) -> Result<Box<dyn Shape>>;

/// Shape constructors keyed by the JSON `"type"` tag.
#[derive(Clone)]
pub struct ShapeRegistry {
    parsers: BTreeMap<String, ShapeParser>,
}

impl Default for ShapeRegistry {
    fn default() -> Self {
        let mut r = ShapeRegistry { parsers: BTreeMap::new() };
        r.register("ball", parse_ball);
        r.register("polytope", parse_polytope);
        r.register("simplex", parse_simplex);
        r
    }
}

impl ShapeRegistry {
    pub fn register(&mut self, name: &str, parser: ShapeParser) {
        self.parsers.insert(name.to_string(), parser);
    }

    pub fn names(&self) -> Vec<&str> {
        self.parsers.keys().map(String::as_str).collect()
    }

    pub fn parse(&self, space: &CurvatureSpace, value: &Value) -> Result<Box<dyn Shape>> {
        let kind = value
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| invalid("shape needs a string \"type\" field"))?;
        let parser = self
            .parsers
            .get(kind)
            .ok_or_else(|| invalid(format!("unknown shape type {kind:?}; known: {:?}", self.names())))?;
        parser(space, value)
    }
}
