//! Closed-form energy-slope prediction.
//!
//! Given an embedding of the sphere by a basis of degree-`d` polynomial
//! sections and an integer weight vector, the coefficient of `ln 1/|t|` in
//! each energy functional is determined by the Newton diagrams of the
//! sections at the zeroes of the anchor section (the one carrying the
//! minimal weight), including the zero at infinity:
//!
//! * Mabuchi slope: `Σ_zeroes (1/V)·(2 q_0 − μ Σ_α p_α² (m_α − m_{α+1}))`
//! * Futaki slope: `2 a_N + Σ_zeroes (1/V)·Σ_α p_α² (m_α − m_{α+1})`
//!
//! All diagram combinatorics stay in exact rational arithmetic; the final
//! conversion to `f64` is the only rounding step.

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{build_diagram, DiagramError, DiagramPoint, NewtonDiagram};
use crate::poly::{
    roots_with_multiplicity, vanishing_order, ComplexPoly, PolyError, DEFAULT_CLUSTER_TOL,
    DEFAULT_ORDER_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictorError {
    #[error("WeightSumNonzero: weights sum to {0}, expected 0")]
    WeightSumNonzero(i64),
    #[error("AnchorNotMinimal: last weight {last} is not the minimum (min is {min})")]
    AnchorNotMinimal { last: i64, min: i64 },
    #[error("SectionCountMismatch: {sections} sections but {weights} weights")]
    SectionCountMismatch { sections: usize, weights: usize },
    #[error("NotABasis: expected {expected} sections of degree <= {degree} spanning the full space, got {got} (rank {rank})")]
    NotABasis {
        expected: usize,
        got: usize,
        degree: usize,
        rank: usize,
    },
    #[error("SectionDegreeTooHigh: section {index} has effective degree {degree} > {bundle}")]
    SectionDegreeTooHigh {
        index: usize,
        degree: usize,
        bundle: usize,
    },
    #[error("ZeroSection: section {0} is identically zero")]
    ZeroSection(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// Which coordinate chart a point of the sphere is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Standard,
    Infinity,
}

impl std::fmt::Display for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Chart::Standard => write!(f, "standard"),
            Chart::Infinity => write!(f, "infinity"),
        }
    }
}

/// The embedding plus the one-parameter-subgroup weights: the single source
/// of truth for a run.
#[derive(Debug, Clone)]
pub struct DegenerationConfig {
    degree: usize,
    sections: Vec<ComplexPoly>,
    weights: Vec<i64>,
    genus: u32,
    label: String,
}

impl DegenerationConfig {
    pub fn new(
        degree: usize,
        sections: Vec<ComplexPoly>,
        weights: Vec<i64>,
        genus: u32,
        label: impl Into<String>,
    ) -> Result<Self, PredictorError> {
        let config = Self {
            degree,
            sections,
            weights,
            genus,
            label: label.into(),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), PredictorError> {
        if self.sections.len() != self.weights.len() {
            return Err(PredictorError::SectionCountMismatch {
                sections: self.sections.len(),
                weights: self.weights.len(),
            });
        }
        let sum: i64 = self.weights.iter().sum();
        if sum != 0 {
            return Err(PredictorError::WeightSumNonzero(sum));
        }
        let min = *self.weights.iter().min().expect("nonempty weights");
        let last = *self.weights.last().expect("nonempty weights");
        if last != min {
            return Err(PredictorError::AnchorNotMinimal { last, min });
        }
        for (index, s) in self.sections.iter().enumerate() {
            match s.effective_degree() {
                None => return Err(PredictorError::ZeroSection(index)),
                Some(deg) if deg > self.degree => {
                    return Err(PredictorError::SectionDegreeTooHigh {
                        index,
                        degree: deg,
                        bundle: self.degree,
                    })
                }
                _ => {}
            }
        }
        let rank = coefficient_rank(&self.sections, self.degree);
        if self.sections.len() != self.degree + 1 || rank != self.degree + 1 {
            return Err(PredictorError::NotABasis {
                expected: self.degree + 1,
                got: self.sections.len(),
                degree: self.degree,
                rank,
            });
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn sections(&self) -> &[ComplexPoly] {
        &self.sections
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn anchor(&self) -> &ComplexPoly {
        self.sections.last().expect("validated nonempty")
    }

    pub fn anchor_weight(&self) -> i64 {
        *self.weights.last().expect("validated nonempty")
    }

    /// Sections represented in the `w = 1/z` chart.
    pub fn sections_at_infinity(&self) -> Vec<ComplexPoly> {
        self.sections
            .iter()
            .map(|s| s.chart_swap(self.degree).expect("degree validated"))
            .collect()
    }
}

/// Rank of the `(N+1) x (d+1)` coefficient matrix via Gaussian elimination
/// with partial pivoting.
fn coefficient_rank(sections: &[ComplexPoly], degree: usize) -> usize {
    let rows = sections.len();
    let cols = degree + 1;
    let mut m = vec![vec![Complex64::ZERO; cols]; rows];
    let mut scale = 0.0f64;
    for (i, s) in sections.iter().enumerate() {
        for (k, &c) in s.coeffs().iter().enumerate() {
            if k < cols {
                m[i][k] = c;
                scale = scale.max(c.norm());
            }
        }
    }
    if scale == 0.0 {
        return 0;
    }
    let eps = 1e-12 * scale;
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows).max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()));
        let Some(pivot) = pivot else { break };
        if m[pivot][col].norm() <= eps {
            continue;
        }
        m.swap(rank, pivot);
        for row in (rank + 1)..rows {
            let factor = m[row][col] / m[rank][col];
            for k in col..cols {
                let sub = factor * m[rank][k];
                m[row][k] -= sub;
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Volume and average scalar curvature entering the slope formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricConstants {
    pub volume: f64,
    pub mu: f64,
}

impl GeometricConstants {
    pub fn new(volume: f64, mu: f64) -> Self {
        Self { volume, mu }
    }

    /// Canonical constants for the config's curve: `V = d` and
    /// `μ = (2 − 2·genus)/V`.
    pub fn for_config(config: &DegenerationConfig) -> Self {
        let volume = config.degree() as f64;
        Self {
            volume,
            mu: (2.0 - 2.0 * config.genus() as f64) / volume,
        }
    }
}

/// `q_j = a_j − a_N`: nonnegative exponents relative to the anchor weight.
pub fn weights_to_exponents(weights: &[i64]) -> Result<Vec<Rational64>, PredictorError> {
    let sum: i64 = weights.iter().sum();
    if sum != 0 {
        return Err(PredictorError::WeightSumNonzero(sum));
    }
    let min = *weights.iter().min().expect("nonempty");
    let last = *weights.last().expect("nonempty");
    if last != min {
        return Err(PredictorError::AnchorNotMinimal { last, min });
    }
    Ok(weights
        .iter()
        .map(|a| Rational64::from_integer(a - min))
        .collect())
}

/// One zero of the anchor section, in the chart where it is a finite point
/// of the closed unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorZero {
    pub chart: Chart,
    pub location: Complex64,
    pub multiplicity: usize,
}

/// All zeroes of the anchor section on the sphere; multiplicities sum to the
/// line-bundle degree. Zeroes with `|z| > 1` are reported in the infinity
/// chart at `w = 1/z`, so every location lies in its chart's closed disk.
pub fn zeroes_of_anchor(config: &DegenerationConfig) -> Result<Vec<AnchorZero>, PredictorError> {
    let anchor = config.anchor();
    let eff_deg = anchor.effective_degree().expect("validated nonzero");
    let mut zeroes = Vec::new();
    if eff_deg > 0 {
        for cluster in roots_with_multiplicity(anchor, DEFAULT_CLUSTER_TOL)? {
            if cluster.location.norm() <= 1.0 {
                zeroes.push(AnchorZero {
                    chart: Chart::Standard,
                    location: cluster.location,
                    multiplicity: cluster.multiplicity,
                });
            } else {
                zeroes.push(AnchorZero {
                    chart: Chart::Infinity,
                    location: cluster.location.inv(),
                    multiplicity: cluster.multiplicity,
                });
            }
        }
    }
    if eff_deg < config.degree() {
        zeroes.push(AnchorZero {
            chart: Chart::Infinity,
            location: Complex64::ZERO,
            multiplicity: config.degree() - eff_deg,
        });
    }
    debug_assert_eq!(
        zeroes.iter().map(|z| z.multiplicity).sum::<usize>(),
        config.degree()
    );
    Ok(zeroes)
}

/// Per-zero local data: vanishing orders, leading coefficients, exponents,
/// and the resulting Newton diagram.
#[derive(Debug, Clone)]
pub struct LocalZeroData {
    pub chart: Chart,
    pub location: Complex64,
    pub anchor_multiplicity: usize,
    pub orders: Vec<usize>,
    pub leading: Vec<Complex64>,
    pub exponents: Vec<Rational64>,
    pub diagram: NewtonDiagram,
}

/// Computes the local data of one anchor zero: orders and leading
/// coefficients of every section at the zero (in its chart), paired with the
/// weight exponents.
pub fn local_data(
    config: &DegenerationConfig,
    zero: &AnchorZero,
) -> Result<LocalZeroData, PredictorError> {
    let sections = match zero.chart {
        Chart::Standard => config.sections().to_vec(),
        Chart::Infinity => config.sections_at_infinity(),
    };
    let exponents = weights_to_exponents(config.weights())?;
    let mut orders = Vec::with_capacity(sections.len());
    let mut leading = Vec::with_capacity(sections.len());
    for s in &sections {
        let (k, u) = vanishing_order(s, zero.location, DEFAULT_ORDER_TOL)?;
        orders.push(k);
        leading.push(u);
    }
    let anchor_order = *orders.last().expect("nonempty");
    if anchor_order != zero.multiplicity {
        return Err(PredictorError::Poly(PolyError::RootClusterAmbiguity {
            location: zero.location,
            cluster_size: zero.multiplicity,
            taylor_order: anchor_order,
        }));
    }
    let points: Vec<DiagramPoint> = orders
        .iter()
        .zip(&exponents)
        .zip(&leading)
        .map(|((&p, &q), u)| DiagramPoint::with_mass(p as u32, q, u.norm_sqr()))
        .collect();
    let diagram = build_diagram(&points)?;
    Ok(LocalZeroData {
        chart: zero.chart,
        location: zero.location,
        anchor_multiplicity: zero.multiplicity,
        orders,
        leading,
        exponents,
        diagram,
    })
}

/// Local Mabuchi-slope contribution
/// `(1/V)·(2 q_0 − μ Σ_α p_α² (m_α − m_{α+1}))`.
pub fn local_mabuchi_coefficient(data: &LocalZeroData, consts: &GeometricConstants) -> f64 {
    let q0 = data.diagram.q_axis_intercept().to_f64().expect("small rational");
    let sum = data.diagram.squared_order_sum().to_f64().expect("small rational");
    (2.0 * q0 - consts.mu * sum) / consts.volume
}

/// Local Futaki-slope contribution `(1/V)·Σ_α p_α² (m_α − m_{α+1})`
/// (the per-zero part; the global `2 a_N` term is added once in `predict`).
pub fn local_futaki_coefficient(data: &LocalZeroData, consts: &GeometricConstants) -> f64 {
    let sum = data.diagram.squared_order_sum().to_f64().expect("small rational");
    sum / consts.volume
}

/// Per-zero slope contributions, plus identifying data for reports.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PerZeroContribution {
    pub chart: Chart,
    pub location: [f64; 2],
    pub multiplicity: usize,
    pub mabuchi: f64,
    pub futaki: f64,
}

/// Predicted `ln 1/|t|` coefficients of the two energy functionals.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SlopePrediction {
    pub futaki_coefficient: f64,
    pub mabuchi_coefficient: f64,
    pub per_zero: Vec<PerZeroContribution>,
}

/// Predicts both slopes from the diagrams at all zeroes of the anchor.
pub fn predict(config: &DegenerationConfig) -> Result<SlopePrediction, PredictorError> {
    predict_with_constants(config, &GeometricConstants::for_config(config))
}

pub fn predict_with_constants(
    config: &DegenerationConfig,
    consts: &GeometricConstants,
) -> Result<SlopePrediction, PredictorError> {
    let mut per_zero = Vec::new();
    // Exact rational accumulators; `V` and `μ` multiply in at the end when
    // they are the canonical rational constants of the sphere.
    let mut q0_total = Rational64::zero();
    let mut squared_total = Rational64::zero();
    for zero in zeroes_of_anchor(config)? {
        let data = local_data(config, &zero)?;
        q0_total += data.diagram.q_axis_intercept();
        squared_total += data.diagram.squared_order_sum();
        per_zero.push(PerZeroContribution {
            chart: zero.chart,
            location: [zero.location.re, zero.location.im],
            multiplicity: zero.multiplicity,
            mabuchi: local_mabuchi_coefficient(&data, consts),
            futaki: local_futaki_coefficient(&data, consts),
        });
    }
    let q0 = q0_total.to_f64().expect("small rational");
    let sq = squared_total.to_f64().expect("small rational");
    let mabuchi_coefficient = (2.0 * q0 - consts.mu * sq) / consts.volume;
    let futaki_coefficient = 2.0 * config.anchor_weight() as f64 + sq / consts.volume;
    Ok(SlopePrediction {
        futaki_coefficient,
        mabuchi_coefficient,
        per_zero,
    })
}
