//! Shared test helpers: the brute-force Newton-diagram oracle and config
//! builders. The oracle is independent of the staircase-hull implementation
//! it checks: a point is a vertex iff no supporting direction of the
//! quadrant-hull of the remaining points covers it.

// Each test target uses its own subset of these helpers.
#![allow(dead_code)]

use kslope::diagram::DiagramPoint;
use kslope::poly::ComplexPoly;
use kslope::predictor::DegenerationConfig;
use num_complex::Complex64;

/// Is `x` inside the convex hull of the union of upper quadrants anchored at
/// `points`? Exact integer arithmetic: the hull is an intersection of
/// half-planes `a·p + b·q >= h(a,b)` with `a, b >= 0`, and the critical
/// directions are the axes plus the normals of all point pairs.
pub fn quadrant_hull_contains(points: &[(i64, i64)], x: (i64, i64)) -> bool {
    if points.is_empty() {
        return false;
    }
    let mut dirs: Vec<(i64, i64)> = vec![(1, 0), (0, 1)];
    for &(p1, q1) in points {
        for &(p2, q2) in points {
            if q1 > q2 && p2 > p1 {
                dirs.push((q1 - q2, p2 - p1));
            }
        }
    }
    for (a, b) in dirs {
        let h = points.iter().map(|&(p, q)| a * p + b * q).min().unwrap();
        if a * x.0 + b * x.1 < h {
            return false;
        }
    }
    true
}

/// Brute-force vertex set: deduplicated points that are not in the
/// quadrant-hull of the remaining points, sorted by p.
pub fn oracle_vertices(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut unique: Vec<(i64, i64)> = Vec::new();
    for &pt in points {
        if !unique.contains(&pt) {
            unique.push(pt);
        }
    }
    let mut vertices: Vec<(i64, i64)> = unique
        .iter()
        .filter(|&&pt| {
            let others: Vec<(i64, i64)> = unique.iter().copied().filter(|&o| o != pt).collect();
            !quadrant_hull_contains(&others, pt)
        })
        .copied()
        .collect();
    vertices.sort();
    vertices
}

pub fn to_diagram_points(points: &[(i64, i64)]) -> Vec<DiagramPoint> {
    points
        .iter()
        .map(|&(p, q)| DiagramPoint::from_ints(p as u32, q))
        .collect()
}

/// Monomial-basis configuration `(1, z, …, z^d)` with the given weights.
pub fn monomial_config(d: usize, weights: Vec<i64>, label: &str) -> DegenerationConfig {
    let sections = (0..=d).map(ComplexPoly::monomial).collect();
    DegenerationConfig::new(d, sections, weights, 0, label).unwrap()
}

/// The three worked configurations exercised by the acceptance suite:
/// reparametrization `(1,z,z²)/(1,0,−1)`, anchor collapse `(1,z,z²)/(2,−1,−1)`,
/// and the infinity-zero `(1,z²,z)/(1,1,−2)`.
pub fn worked_configs() -> Vec<(DegenerationConfig, f64, f64)> {
    let infinity = DegenerationConfig::new(
        2,
        vec![
            ComplexPoly::monomial(0),
            ComplexPoly::monomial(2),
            ComplexPoly::monomial(1),
        ],
        vec![1, 1, -2],
        0,
        "infinity-zero",
    )
    .unwrap();
    vec![
        (monomial_config(2, vec![1, 0, -1], "reparametrization"), 0.0, 0.0),
        (monomial_config(2, vec![2, -1, -1], "anchor-collapse"), 1.5, -0.5),
        (infinity, 3.0, -1.0),
    ]
}

pub fn complex(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
