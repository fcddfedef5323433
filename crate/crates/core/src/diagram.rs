//! Newton diagrams: the convex hull of the union of upper quadrants anchored
//! at a finite set of points `(p_j, q_j)`, with `p` a nonnegative integer
//! (vanishing order) and `q` a nonnegative rational (weight exponent).
//!
//! The boundary is a staircase of vertices `V_0..V_M` joined by faces of
//! strictly decreasing positive slope `m_1 > … > m_M`, with the sentinel
//! slopes `m_0 = +∞` and `m_{M+1} = 0`. All slope arithmetic is exact.

use num_rational::Rational64;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("EmptyPointSet: a Newton diagram needs at least one point")]
    EmptyPointSet,
    #[error("MissingQAxisPoint: no input point has p = 0 (the section norm would vanish)")]
    MissingQAxisPoint,
    #[error("MissingPAxisPoint: no input point has q = 0 (the anchor exponent is absent)")]
    MissingPAxisPoint,
    #[error("NegativeCoordinate: point ({p}, {q}) leaves the closed upper quadrant")]
    NegativeCoordinate { p: i64, q: Rational64 },
}

/// One input point of the diagram. `mass` carries `|u_j|²` for the section
/// that produced the point; it defaults to 1 for synthetic points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramPoint {
    pub p: u32,
    pub q: Rational64,
    pub mass: f64,
}

impl DiagramPoint {
    pub fn new(p: u32, q: Rational64) -> Self {
        Self { p, q, mass: 1.0 }
    }

    pub fn with_mass(p: u32, q: Rational64, mass: f64) -> Self {
        Self { p, q, mass }
    }

    pub fn from_ints(p: u32, q: i64) -> Self {
        Self::new(p, Rational64::from_integer(q))
    }
}

/// Where an input point sits relative to the diagram boundary.
///
/// `Face(k)` is the open face of slope `m_k` between `V_{k-1}` and `V_k`;
/// `Face(0)` is the vertical ray above `V_0` (sentinel slope `+∞`) and
/// `Face(M+1)` the horizontal ray right of `V_M` (sentinel slope `0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Vertex(usize),
    Face(usize),
    Interior,
}

/// Sentinel-aware slope of face `k` of the staircase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceSlope {
    Infinite,
    Finite(Rational64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonDiagram {
    vertices: Vec<(u32, Rational64)>,
    slopes: Vec<Rational64>,
    vertex_masses: Vec<f64>,
    membership: Vec<Membership>,
}

impl NewtonDiagram {
    /// Vertices `V_0..V_M` as `(p_α, q_α)`, strictly increasing in p and
    /// strictly decreasing in q.
    pub fn vertices(&self) -> &[(u32, Rational64)] {
        &self.vertices
    }

    /// Finite face slopes `m_1..m_M`, strictly decreasing and positive.
    pub fn slopes(&self) -> &[Rational64] {
        &self.slopes
    }

    /// Total input mass sitting exactly on each vertex.
    pub fn vertex_masses(&self) -> &[f64] {
        &self.vertex_masses
    }

    /// Classification of each input point (indexed as passed to
    /// `build_diagram`, prior to deduplication).
    pub fn membership(&self) -> &[Membership] {
        &self.membership
    }

    /// Number of faces with finite positive slope.
    pub fn face_count(&self) -> usize {
        self.slopes.len()
    }

    /// Slope of face `k` for `k` in `0..=M+1`, including both sentinels.
    pub fn sentinel_slope(&self, k: usize) -> FaceSlope {
        if k == 0 {
            FaceSlope::Infinite
        } else if k <= self.slopes.len() {
            FaceSlope::Finite(self.slopes[k - 1])
        } else {
            FaceSlope::Finite(Rational64::zero())
        }
    }

    /// `q_0`, the q-coordinate of the vertex on the q-axis.
    pub fn q_axis_intercept(&self) -> Rational64 {
        self.vertices[0].1
    }

    /// `Σ_{α=1}^{M} p_α (m_α − m_{α+1})` with `m_{M+1} = 0`; equals `q_0`
    /// exactly for every valid diagram.
    pub fn slope_sum_identity(&self) -> Rational64 {
        let mut sum = Rational64::zero();
        for alpha in 1..=self.slopes.len() {
            let m_a = self.slopes[alpha - 1];
            let m_next = if alpha < self.slopes.len() {
                self.slopes[alpha]
            } else {
                Rational64::zero()
            };
            let p_a = Rational64::from_integer(self.vertices[alpha].0 as i64);
            sum += p_a * (m_a - m_next);
        }
        sum
    }

    /// `Σ_{α=1}^{M} p_α² (m_α − m_{α+1})`, the combinatorial weight shared by
    /// both energy-slope formulas.
    pub fn squared_order_sum(&self) -> Rational64 {
        let mut sum = Rational64::zero();
        for alpha in 1..=self.slopes.len() {
            let m_a = self.slopes[alpha - 1];
            let m_next = if alpha < self.slopes.len() {
                self.slopes[alpha]
            } else {
                Rational64::zero()
            };
            let p_a = self.vertices[alpha].0 as i64;
            sum += Rational64::from_integer(p_a * p_a) * (m_a - m_next);
        }
        sum
    }
}

/// Builds the diagram of a point set.
///
/// Requires at least one point on each axis: some `p_j = 0` (the section
/// norm never vanishes) and some `q_j = 0` (the anchor exponent), which
/// forces `p_0 = 0`, `q_M = 0`, and all slopes finite and positive.
pub fn build_diagram(points: &[DiagramPoint]) -> Result<NewtonDiagram, DiagramError> {
    if points.is_empty() {
        return Err(DiagramError::EmptyPointSet);
    }
    for pt in points {
        if pt.q < Rational64::zero() {
            return Err(DiagramError::NegativeCoordinate {
                p: pt.p as i64,
                q: pt.q,
            });
        }
    }
    if !points.iter().any(|pt| pt.p == 0) {
        return Err(DiagramError::MissingQAxisPoint);
    }
    if !points.iter().any(|pt| pt.q.is_zero()) {
        return Err(DiagramError::MissingPAxisPoint);
    }

    // Deduplicate exact coordinate coincidences, accumulating masses.
    let mut unique: Vec<(u32, Rational64, f64)> = Vec::new();
    for pt in points {
        match unique.iter_mut().find(|(p, q, _)| *p == pt.p && *q == pt.q) {
            Some(entry) => entry.2 += pt.mass,
            None => unique.push((pt.p, pt.q, pt.mass)),
        }
    }

    // Pareto-minimal staircase: drop any point weakly dominated by another
    // (p' <= p and q' <= q); survivors have strictly increasing p and
    // strictly decreasing q once sorted.
    let mut minimal: Vec<(u32, Rational64, f64)> = unique
        .iter()
        .filter(|(p, q, _)| {
            !unique
                .iter()
                .any(|(p2, q2, _)| (*p2, *q2) != (*p, *q) && *p2 <= *p && *q2 <= *q)
        })
        .cloned()
        .collect();
    minimal.sort_by(|a, b| a.0.cmp(&b.0));

    // Lower-hull pass over the staircase: keep only corners where the slope
    // strictly decreases. Collinear interior points are faces, not vertices.
    let mut hull: Vec<(u32, Rational64, f64)> = Vec::new();
    for cand in minimal {
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            // b is a genuine corner iff the path a -> b -> cand turns
            // strictly convex (slope drop): (q_a - q_b)(p_c - p_b) > (q_b - q_c)(p_b - p_a).
            let lhs = (a.1 - b.1) * Rational64::from_integer((cand.0 - b.0) as i64);
            let rhs = (b.1 - cand.1) * Rational64::from_integer((b.0 - a.0) as i64);
            if lhs > rhs {
                break;
            }
            hull.pop();
        }
        hull.push(cand);
    }

    let vertices: Vec<(u32, Rational64)> = hull.iter().map(|(p, q, _)| (*p, *q)).collect();
    let slopes: Vec<Rational64> = vertices
        .windows(2)
        .map(|w| {
            let (p0, q0) = w[0];
            let (p1, q1) = w[1];
            (q0 - q1) / Rational64::from_integer((p1 - p0) as i64)
        })
        .collect();

    // Vertex masses sum over input points exactly equal to the vertex.
    let vertex_masses: Vec<f64> = vertices
        .iter()
        .map(|&(p, q)| {
            points
                .iter()
                .filter(|pt| pt.p == p && pt.q == q)
                .map(|pt| pt.mass)
                .sum()
        })
        .collect();

    let membership = points
        .iter()
        .map(|pt| classify(pt, &vertices, &slopes))
        .collect();

    debug_assert!(slopes.windows(2).all(|w| w[0] > w[1]));
    debug_assert!(slopes.iter().all(|m| *m > Rational64::zero()));

    Ok(NewtonDiagram {
        vertices,
        slopes,
        vertex_masses,
        membership,
    })
}

fn classify(
    pt: &DiagramPoint,
    vertices: &[(u32, Rational64)],
    slopes: &[Rational64],
) -> Membership {
    let p = Rational64::from_integer(pt.p as i64);
    if let Some(alpha) = vertices
        .iter()
        .position(|&(vp, vq)| vp == pt.p && vq == pt.q)
    {
        return Membership::Vertex(alpha);
    }
    // Vertical ray above V_0.
    let (p0, q0) = vertices[0];
    if pt.p == p0 && pt.q > q0 {
        return Membership::Face(0);
    }
    // Horizontal ray right of V_M.
    let (pm, qm) = *vertices.last().expect("nonempty");
    if pt.q == qm && pt.p > pm {
        return Membership::Face(slopes.len() + 1);
    }
    // Open faces between consecutive vertices: on the supporting line and
    // strictly between the endpoints in p.
    for (k, m) in slopes.iter().enumerate() {
        let (pa, qa) = vertices[k + 1];
        let support = pt.q - qa + *m * (p - Rational64::from_integer(pa as i64));
        let inside_span = pt.p > vertices[k].0 && pt.p < pa;
        if support.is_zero() && inside_span {
            return Membership::Face(k + 1);
        }
    }
    Membership::Interior
}
