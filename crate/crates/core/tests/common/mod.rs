#![allow(dead_code)]

use congestion_core::domain::{Ball, ConvexDomain};
use congestion_core::graph::{TrafficMode, WeightedGraph};
use congestion_core::rng::stream;
use congestion_core::{CurvatureSpace, HalfSpace, Point};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn unit(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / n).collect()
}

/// A random polytope around the origin: 3 to 7 half-spaces whose normals
/// point back at the origin, clipped by a bounding ball.
pub fn random_polytope(m: usize, k: f64, seed: u64) -> ConvexDomain {
    let s = CurvatureSpace::new(m, k).unwrap();
    let o = s.origin();
    let basis = s.tangent_basis(&o);
    let mut rng = stream(seed, 99);
    let faces: Vec<HalfSpace> = (0..rng.random_range(3..=7))
        .map(|_| {
            let u = s.combine(&o, &basis, &unit(m, &mut rng));
            let x = s.exp_map(&u, rng.random_range(0.4..1.2)).unwrap();
            HalfSpace::new(&s, s.log_dir(&x, &o).unwrap()).unwrap()
        })
        .collect();
    ConvexDomain::polytope(s, faces, Ball { center: o.clone(), radius: 1.5 }, o).unwrap()
}

/// A random flat triangle with vertices in the unit disk, not too thin.
pub fn random_triangle(seed: u64) -> (ConvexDomain, [[f64; 2]; 3]) {
    let s = CurvatureSpace::euclidean(2).unwrap();
    let mut rng = stream(seed, 98);
    loop {
        let v: Vec<[f64; 2]> = (0..3).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let area = 0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])).abs();
        if area < 0.15 {
            continue;
        }
        let pts: Vec<Point> = v.iter().map(|c| s.lift(c).unwrap()).collect();
        return (ConvexDomain::simplex(s, pts).unwrap(), [v[0], v[1], v[2]]);
    }
}

pub fn random_graph(seed: u64) -> WeightedGraph {
    let mut rng = stream(seed, 97);
    let n = rng.random_range(2..=8);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v, rng.random_range(1..=3) as f64));
    }
    for _ in 0..rng.random_range(0..=2 * n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && !edges.iter().any(|&(u, v, _)| (u, v) == (a, b) || (u, v) == (b, a)) {
            edges.push((a, b, rng.random_range(1..=3) as f64));
        }
    }
    WeightedGraph::new(n, edges).unwrap()
}

/// Exhaustive oracle: every simple path between every ordered pair.
pub fn brute_force_counts(g: &WeightedGraph, x: usize, r: f64, mode: TrafficMode) -> (usize, usize) {
    fn go(g: &WeightedGraph, v: usize, q: usize, len: f64, path: &mut Vec<usize>, out: &mut Vec<(f64, Vec<usize>)>) {
        if v == q {
            out.push((len, path.clone()));
            return;
        }
        for &(u, w) in g.neighbors(v) {
            if !path.contains(&u) {
                path.push(u);
                go(g, u, q, len + w, path, out);
                path.pop();
            }
        }
    }
    let n = g.n_vertices();
    let geodesics = |p: usize, q: usize| {
        let mut all = Vec::new();
        go(g, p, q, 0.0, &mut vec![p], &mut all);
        let best = all.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
        all.into_iter().filter(|t| t.0 == best).collect::<Vec<_>>()
    };
    let dx: Vec<f64> = (0..n).map(|w| geodesics(x, w)[0].0).collect();
    let (mut hits, mut total) = (0, 0);
    for p in 0..n {
        for q in 0..n {
            let geos = geodesics(p, q);
            if mode == TrafficMode::UniqueOnly && geos.len() != 1 {
                continue;
            }
            total += 1;
            if geos.iter().any(|(_, path)| path.iter().any(|&w| dx[w] <= r)) {
                hits += 1;
            }
        }
    }
    (hits, total)
}
