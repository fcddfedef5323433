//! Numerical evaluation of the energy functionals on the sphere.
//!
//! Everything is computed chartwise from weighted section sums
//! `Σ_j exp(2·lw_j)·|P_j(z)|²`. Three stabilizations keep the evaluation
//! exact to relative rounding across the extreme scales a degeneration
//! produces:
//!
//! * all sums of exponentials go through a max-shift (log-sum-exp);
//! * second derivatives use the closed-form pairwise-Wronskian expression,
//!   never finite differences;
//! * quadrature accumulation uses pairwise summation in a fixed order, so
//!   results are reproducible bit-for-bit run to run.
//!
//! Conventions (fixed by two exact identities that the test suite asserts:
//! total mass of the metric equals the line-bundle degree, and the two
//! algebraic routes to the Futaki energy agree): densities are reported with
//! respect to Lebesgue measure `dA` of the chart, with the curvature form
//! carrying `1/π`, so the round metric of `O(1)` has total mass 1.

pub mod grid;

use std::time::Instant;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::NewtonDiagram;
use crate::poly::ComplexPoly;
use crate::predictor::{
    local_data, zeroes_of_anchor, Chart, DegenerationConfig, GeometricConstants, PredictorError,
};

pub use grid::{GridNode, GridParams, QuadratureGrid, ZeroInfo};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("AllTermsUnderflow: every term of the section sum vanished at {location} ({chart} chart)")]
    AllTermsUnderflow { chart: Chart, location: Complex64 },
    #[error("DegenerateEmbedding: nonpositive metric density at {location} ({chart} chart); the map is not an embedding there")]
    DegenerateEmbedding { chart: Chart, location: Complex64 },
    #[error("GridUnresolved: t = {t} is below the grid design minimum {design_t_min}")]
    GridUnresolved { t: f64, design_t_min: f64 },
    #[error("GenusUnsupported: quadrature is restricted to genus 0, got genus {0}")]
    GenusUnsupported(u32),
    #[error("InvalidSchedule: {0}")]
    InvalidSchedule(String),
    #[error("MismatchedLengths: {polys} polynomials but {weights} log-weights")]
    MismatchedLengths { polys: usize, weights: usize },
    #[error("EmptyFamily: a weighted section sum needs at least one nonzero polynomial")]
    EmptyFamily,
    #[error(transparent)]
    Prediction(#[from] PredictorError),
}

/// `Σ_j exp(2·lw_j)·|P_j(z)|²` with its derivative and pairwise-Wronskian
/// data precomputed.
#[derive(Debug, Clone)]
pub struct WeightedSectionSum {
    polys: Vec<ComplexPoly>,
    log_weights: Vec<f64>,
    derivs: Vec<ComplexPoly>,
    /// `(j, k, P_j P'_k − P_k P'_j)` for all pairs `j < k`.
    wronskians: Vec<(usize, usize, ComplexPoly)>,
}

impl WeightedSectionSum {
    pub fn new(polys: Vec<ComplexPoly>, log_weights: Vec<f64>) -> Result<Self, QuadratureError> {
        if polys.len() != log_weights.len() {
            return Err(QuadratureError::MismatchedLengths {
                polys: polys.len(),
                weights: log_weights.len(),
            });
        }
        if polys.iter().all(|p| p.is_zero()) {
            return Err(QuadratureError::EmptyFamily);
        }
        let derivs: Vec<ComplexPoly> = polys.iter().map(|p| p.derivative()).collect();
        let mut wronskians = Vec::new();
        for j in 0..polys.len() {
            for k in (j + 1)..polys.len() {
                let w = polys[j].mul(&derivs[k]).sub(&polys[k].mul(&derivs[j]));
                wronskians.push((j, k, w));
            }
        }
        Ok(Self {
            polys,
            log_weights,
            derivs,
            wronskians,
        })
    }

    pub fn unweighted(polys: Vec<ComplexPoly>) -> Result<Self, QuadratureError> {
        let n = polys.len();
        Self::new(polys, vec![0.0; n])
    }

    pub fn polys(&self) -> &[ComplexPoly] {
        &self.polys
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `ln Σ_j exp(2·lw_j)·|P_j(z)|²` via max-shift.
    pub fn log_sum(&self, z: Complex64) -> Result<f64, QuadratureError> {
        let value = logsumexp(
            self.polys
                .iter()
                .zip(&self.log_weights)
                .map(|(p, &lw)| 2.0 * lw + 2.0 * p.eval(z).norm().ln()),
        );
        if value == f64::NEG_INFINITY {
            Err(QuadratureError::AllTermsUnderflow {
                chart: Chart::Standard,
                location: z,
            })
        } else {
            Ok(value)
        }
    }

    /// `ln ∂_z∂_z̄ ln Σ`, using the exact identity
    /// `∂_z∂_z̄ ln Σ = (Σ_{j<k} w_j w_k |W_{jk}|²) / (Σ_j w_j |P_j|²)²`.
    ///
    /// Returns `-∞` when the numerator vanishes identically at `z` (a flat
    /// point: legitimate only for families without pairs).
    pub fn log_laplacian_ln(&self, z: Complex64) -> Result<f64, QuadratureError> {
        let den = self.log_sum(z)?;
        let num = logsumexp(self.wronskians.iter().map(|(j, k, w)| {
            2.0 * (self.log_weights[*j] + self.log_weights[*k]) + 2.0 * w.eval(z).norm().ln()
        }));
        Ok(num - 2.0 * den)
    }

    /// `∂_z∂_z̄ ln Σ` as a value.
    pub fn log_laplacian(&self, z: Complex64) -> Result<f64, QuadratureError> {
        Ok(self.log_laplacian_ln(z)?.exp())
    }

    pub fn has_pairs(&self) -> bool {
        !self.wronskians.is_empty()
    }

    /// `∂_z ln Σ = (Σ_j w_j P'_j conj(P_j)) / Σ_j w_j |P_j|²`, max-shifted.
    pub fn grad_log(&self, z: Complex64) -> Result<Complex64, QuadratureError> {
        let vals: Vec<Complex64> = self.polys.iter().map(|p| p.eval(z)).collect();
        let logs: Vec<f64> = vals
            .iter()
            .zip(&self.log_weights)
            .map(|(v, &lw)| 2.0 * lw + 2.0 * v.norm().ln())
            .collect();
        let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if shift == f64::NEG_INFINITY {
            return Err(QuadratureError::AllTermsUnderflow {
                chart: Chart::Standard,
                location: z,
            });
        }
        let mut den = 0.0;
        let mut num = Complex64::ZERO;
        for (j, (&log_j, v)) in logs.iter().zip(&vals).enumerate() {
            den += (log_j - shift).exp();
            let dv = self.derivs[j].eval(z);
            if v.norm() == 0.0 || dv.norm() == 0.0 {
                continue;
            }
            // w_j P'_j conj(P_j), assembled as magnitude-in-log times phases.
            let mag = (2.0 * self.log_weights[j] - shift + v.norm().ln() + dv.norm().ln()).exp();
            let phase = (dv / dv.norm()) * (v / v.norm()).conj();
            num += mag * phase;
        }
        Ok(num / den)
    }
}

fn logsumexp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let shift = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    shift + terms.map(|x| (x - shift).exp()).sum::<f64>().ln()
}

/// Deterministic pairwise (tree) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Per-chart section data for one configuration.
#[derive(Debug, Clone)]
struct ChartFamily {
    /// Unweighted sum `Σ |S_j|²` (the reference metric).
    unit: WeightedSectionSum,
    /// The pairwise Wronskians as a family of their own, for the curvature
    /// of the reference metric.
    wronski: WeightedSectionSum,
}

/// Chart-aware evaluator of all pointwise quantities for one configuration.
#[derive(Debug, Clone)]
pub struct Evaluator {
    standard: ChartFamily,
    infinity: ChartFamily,
    weights: Vec<f64>,
    consts: GeometricConstants,
    degree: usize,
}

impl Evaluator {
    pub fn new(config: &DegenerationConfig) -> Result<Self, QuadratureError> {
        let build = |sections: Vec<ComplexPoly>| -> Result<ChartFamily, QuadratureError> {
            let unit = WeightedSectionSum::unweighted(sections)?;
            let wron_polys: Vec<ComplexPoly> =
                unit.wronskians.iter().map(|(_, _, w)| w.clone()).collect();
            let wronski = WeightedSectionSum::unweighted(wron_polys)?;
            Ok(ChartFamily { unit, wronski })
        };
        Ok(Self {
            standard: build(config.sections().to_vec())?,
            infinity: build(config.sections_at_infinity())?,
            weights: config.weights().iter().map(|&a| a as f64).collect(),
            consts: GeometricConstants::for_config(config),
            degree: config.degree(),
        })
    }

    pub fn constants(&self) -> GeometricConstants {
        self.consts
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn family(&self, chart: Chart) -> &ChartFamily {
        match chart {
            Chart::Standard => &self.standard,
            Chart::Infinity => &self.infinity,
        }
    }

    /// The t-weighted sum in the given chart (`lw_j = a_j · ln t`).
    pub fn weighted_sum(&self, t: f64, chart: Chart) -> WeightedSectionSum {
        let lws: Vec<f64> = self.weights.iter().map(|a| a * t.ln()).collect();
        WeightedSectionSum::new(self.family(chart).unit.polys.to_vec(), lws)
            .expect("family validated at construction")
    }

    /// Potential `φ = ln(Σ |t|^{2a_j}|S_j|² / Σ |S_j|²)`; chart-invariant.
    pub fn phi(&self, t: f64, chart: Chart, z: Complex64) -> Result<f64, QuadratureError> {
        assert!(t > 0.0, "the degeneration parameter enters as |t| > 0");
        let weighted = self.weighted_sum(t, chart);
        let fam = self.family(chart);
        Ok(chart_err(weighted.log_sum(z), chart)? - chart_err(fam.unit.log_sum(z), chart)?)
    }

    /// Density of `ω_t` with respect to Lebesgue measure of the chart.
    pub fn omega_density(&self, t: f64, chart: Chart, z: Complex64) -> Result<f64, QuadratureError> {
        let weighted = self.weighted_sum(t, chart);
        let lap_ln = chart_err(weighted.log_laplacian_ln(z), chart)?;
        if lap_ln == f64::NEG_INFINITY {
            return Err(QuadratureError::DegenerateEmbedding { chart, location: z });
        }
        Ok(lap_ln.exp() / std::f64::consts::PI)
    }

    /// Density of the reference metric `ω₀` (the `t = 1` weighted sum).
    pub fn omega0_density(&self, chart: Chart, z: Complex64) -> Result<f64, QuadratureError> {
        let fam = self.family(chart);
        let lap_ln = chart_err(fam.unit.log_laplacian_ln(z), chart)?;
        if lap_ln == f64::NEG_INFINITY {
            return Err(QuadratureError::DegenerateEmbedding { chart, location: z });
        }
        Ok(lap_ln.exp() / std::f64::consts::PI)
    }

    /// Density of `Ric(ω₀) = −(1/π) ∂_z∂_z̄ ln ρ₀`, computed in closed form
    /// as `(2·∂∂̄ ln Σ|S|² − ∂∂̄ ln Σ|W|²)/π` with `W` the pairwise
    /// Wronskians (themselves polynomials).
    pub fn ricci_density(&self, chart: Chart, z: Complex64) -> Result<f64, QuadratureError> {
        let fam = self.family(chart);
        // Σ|W|² vanishing identically at a point means the map degenerates.
        if fam.wronski.log_sum(z).is_err() {
            return Err(QuadratureError::DegenerateEmbedding { chart, location: z });
        }
        let lap0 = chart_err(fam.unit.log_laplacian_ln(z), chart)?;
        if lap0 == f64::NEG_INFINITY {
            return Err(QuadratureError::DegenerateEmbedding { chart, location: z });
        }
        let lap_w = chart_err(fam.wronski.log_laplacian_ln(z), chart)?;
        Ok((2.0 * lap0.exp() - lap_w.exp()) / std::f64::consts::PI)
    }
}

fn chart_err<T>(r: Result<T, QuadratureError>, chart: Chart) -> Result<T, QuadratureError> {
    r.map_err(|e| match e {
        QuadratureError::AllTermsUnderflow { location, .. } => {
            QuadratureError::AllTermsUnderflow { chart, location }
        }
        other => other,
    })
}

/// Numerically evaluated energy functionals at one `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub f0_direct: f64,
    pub f0_via_j: f64,
    pub j: f64,
    pub i0: f64,
    pub nu: f64,
    pub volume: f64,
    pub wall_ms: f64,
}

/// One entry of a sampling run: a failed sample is recorded with its error
/// rather than dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SampleOutcome {
    Ok(EnergySample),
    Failed { t: f64, error: String },
}

struct RawIntegrals {
    volume: f64,
    i0_raw: f64,
    j_raw: f64,
    phi_pair_raw: f64,
    nu_log_raw: f64,
    nu_ric_raw: f64,
}

fn integrate(ev: &Evaluator, t: f64, grid: &QuadratureGrid) -> Result<RawIntegrals, QuadratureError> {
    assert!(t > 0.0, "the degeneration parameter enters as |t| > 0");
    if t < grid.design_t_min() * (1.0 - 1e-12) {
        return Err(QuadratureError::GridUnresolved {
            t,
            design_t_min: grid.design_t_min(),
        });
    }
    let weighted = [
        ev.weighted_sum(t, Chart::Standard),
        ev.weighted_sum(t, Chart::Infinity),
    ];
    let n = grid.nodes().len();
    let mut vol = Vec::with_capacity(n);
    let mut i0 = Vec::with_capacity(n);
    let mut jsq = Vec::with_capacity(n);
    let mut phi_pair = Vec::with_capacity(n);
    let mut nu_log = Vec::with_capacity(n);
    let mut nu_ric = Vec::with_capacity(n);

    for node in grid.nodes() {
        let chart = node.chart;
        let z = node.z;
        let fam = ev.family(chart);
        let wsum = match chart {
            Chart::Standard => &weighted[0],
            Chart::Infinity => &weighted[1],
        };
        let g_t = chart_err(wsum.log_sum(z), chart)?;
        let g_1 = chart_err(fam.unit.log_sum(z), chart)?;
        let phi = g_t - g_1;

        let lap_t_ln = chart_err(wsum.log_laplacian_ln(z), chart)?;
        let lap_0_ln = chart_err(fam.unit.log_laplacian_ln(z), chart)?;
        if lap_t_ln == f64::NEG_INFINITY || lap_0_ln == f64::NEG_INFINITY {
            return Err(QuadratureError::DegenerateEmbedding { chart, location: z });
        }
        if fam.wronski.log_sum(z).is_err() {
            return Err(QuadratureError::DegenerateEmbedding { chart, location: z });
        }
        let lap_w_ln = chart_err(fam.wronski.log_laplacian_ln(z), chart)?;

        let pi = std::f64::consts::PI;
        let rho_t = lap_t_ln.exp() / pi;
        let rho_0 = lap_0_ln.exp() / pi;
        let ric = (2.0 * lap_0_ln.exp() - lap_w_ln.exp()) / pi;

        let grad_t = chart_err(wsum.grad_log(z), chart)?;
        let grad_0 = chart_err(fam.unit.grad_log(z), chart)?;
        let dphi2 = (grad_t - grad_0).norm_sqr();

        let w = node.weight;
        vol.push(w * rho_t);
        i0.push(w * phi * rho_0);
        jsq.push(w * dphi2);
        phi_pair.push(w * phi * (rho_0 + rho_t));
        // x·ln x -> 0 as the density underflows.
        nu_log.push(if rho_t == 0.0 {
            0.0
        } else {
            w * (lap_t_ln - lap_0_ln) * rho_t
        });
        nu_ric.push(w * phi * ric);
    }

    Ok(RawIntegrals {
        volume: pairwise_sum(&vol),
        i0_raw: pairwise_sum(&i0),
        j_raw: pairwise_sum(&jsq),
        phi_pair_raw: pairwise_sum(&phi_pair),
        nu_log_raw: pairwise_sum(&nu_log),
        nu_ric_raw: pairwise_sum(&nu_ric),
    })
}

/// Mabuchi energy
/// `ν = (1/V) ∫ [ln(ω_t/ω₀)·ω_t − φ·Ric(ω₀) + (μ/2)·φ·(ω₀ + ω_t)]`.
pub fn mabuchi_energy(ev: &Evaluator, t: f64, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    let raw = integrate(ev, t, grid)?;
    let c = ev.constants();
    Ok((raw.nu_log_raw - raw.nu_ric_raw + 0.5 * c.mu * raw.phi_pair_raw) / c.volume)
}

/// Futaki energy by its defining expression `F⁰ = −(1/2V) ∫ φ (ω₀ + ω_t)`.
pub fn futaki_direct(ev: &Evaluator, t: f64, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    let raw = integrate(ev, t, grid)?;
    Ok(-raw.phi_pair_raw / (2.0 * ev.constants().volume))
}

/// Futaki energy via the gradient-energy route
/// `F⁰ = J − (1/V) ∫ φ ω₀` with `J = (1/2πV) ∫ |∂_z φ|² dA`.
pub fn futaki_via_j(ev: &Evaluator, t: f64, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    let raw = integrate(ev, t, grid)?;
    let v = ev.constants().volume;
    let j = raw.j_raw / (2.0 * std::f64::consts::PI * v);
    Ok(j - raw.i0_raw / v)
}

/// Total mass `∫ ω_t`; constant in `t` for an embedding.
pub fn omega_mass(ev: &Evaluator, t: f64, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    Ok(integrate(ev, t, grid)?.volume)
}

/// Total mass of `Ric(ω₀)`; equals the Euler characteristic for genus 0.
pub fn ricci_mass(ev: &Evaluator, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    let vals: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|node| Ok(node.weight * ev.ricci_density(node.chart, node.z)?))
        .collect::<Result<_, QuadratureError>>()?;
    Ok(pairwise_sum(&vals))
}

fn sample_one(ev: &Evaluator, t: f64, grid: &QuadratureGrid) -> Result<EnergySample, QuadratureError> {
    let start = Instant::now();
    let raw = integrate(ev, t, grid)?;
    let c = ev.constants();
    let v = c.volume;
    let i0 = raw.i0_raw / v;
    let j = raw.j_raw / (2.0 * std::f64::consts::PI * v);
    let f0_direct = -raw.phi_pair_raw / (2.0 * v);
    let f0_via_j = j - i0;
    let nu = (raw.nu_log_raw - raw.nu_ric_raw + 0.5 * c.mu * raw.phi_pair_raw) / v;
    Ok(EnergySample {
        t,
        f0_direct,
        f0_via_j,
        j,
        i0,
        nu,
        volume: raw.volume,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Zero metadata needed by the grid builder: one entry per anchor zero with
/// the steepest diagram slope controlling its innermost scale.
pub fn zero_infos(config: &DegenerationConfig) -> Result<Vec<ZeroInfo>, QuadratureError> {
    let mut infos = Vec::new();
    for zero in zeroes_of_anchor(config)? {
        let data = local_data(config, &zero)?;
        let max_slope = data
            .diagram
            .slopes()
            .first()
            .copied()
            .unwrap_or_else(|| Rational64::from_integer(0))
            .to_f64()
            .expect("small rational");
        infos.push(ZeroInfo {
            chart: zero.chart,
            location: zero.location,
            max_slope,
        });
    }
    Ok(infos)
}

/// Builds the grid for a schedule and evaluates every functional at each `t`.
/// A failed sample is recorded with its error, not dropped.
pub fn run_samples(
    config: &DegenerationConfig,
    t_schedule: &[f64],
    params: &GridParams,
) -> Result<Vec<SampleOutcome>, QuadratureError> {
    if config.genus() != 0 {
        return Err(QuadratureError::GenusUnsupported(config.genus()));
    }
    for t in t_schedule {
        if !(*t > 0.0 && *t <= 1.0) {
            return Err(QuadratureError::InvalidSchedule(format!(
                "t = {t} is outside (0, 1]"
            )));
        }
    }
    if t_schedule.windows(2).any(|w| w[0] <= w[1]) {
        return Err(QuadratureError::InvalidSchedule(
            "schedule must be strictly decreasing".into(),
        ));
    }
    if t_schedule.is_empty() {
        return Ok(Vec::new());
    }
    let ev = Evaluator::new(config)?;
    let infos = zero_infos(config)?;
    let t_min = params
        .design_t_min
        .unwrap_or_else(|| *t_schedule.last().expect("nonempty"));
    let grid = QuadratureGrid::build(&infos, params, t_min)?;
    Ok(t_schedule
        .iter()
        .map(|&t| match sample_one(&ev, t, &grid) {
            Ok(sample) => SampleOutcome::Ok(sample),
            Err(e) => SampleOutcome::Failed {
                t,
                error: e.to_string(),
            },
        })
        .collect())
}

/// Numerical check of the annulus asymptotics: integrates
/// `|t|^{2Σ(q_j−q_α)} |z|^{2Σ(p_j−p_α)} · dA/(2π|z|²)` over the annulus
/// `|t|^{m_α} ≤ |z| < |t|^{m_{α+1}}`. Equals
/// `δ_{V_α} · ln(1/|t|) · (m_α − m_{α+1})` plus a bounded remainder.
///
/// `q_list`/`p_list` are the coordinates of the selected diagram points
/// (empty lists integrate the bare measure); `alpha` indexes a finite-slope
/// face pair, `1 ≤ alpha ≤ M`.
pub fn annulus_oracle(
    q_list: &[Rational64],
    p_list: &[i64],
    alpha: usize,
    t: f64,
    diagram: &NewtonDiagram,
    params: &GridParams,
) -> f64 {
    assert!(t > 0.0 && t < 1.0);
    assert!(
        alpha >= 1 && alpha <= diagram.face_count(),
        "alpha must index a finite-slope vertex"
    );
    assert_eq!(q_list.len(), p_list.len());
    let (p_a, q_a) = diagram.vertices()[alpha];
    let m_a = diagram.slopes()[alpha - 1].to_f64().expect("small rational");
    let m_next = if alpha < diagram.face_count() {
        diagram.slopes()[alpha].to_f64().expect("small rational")
    } else {
        0.0
    };
    let a_sum: f64 = q_list
        .iter()
        .map(|q| (*q - q_a).to_f64().expect("small rational"))
        .sum();
    let b_sum: i64 = p_list.iter().map(|p| p - p_a as i64).sum();

    // In log-radius s the integrand is exp(2·a_sum·ln t + 2·b_sum·s)·ds·dθ/2π;
    // the angular integral cancels the 2π.
    let s_lo = m_a * t.ln();
    let s_hi = m_next * t.ln();
    let decades = (s_hi - s_lo) / std::f64::consts::LN_10;
    let panels = ((decades * grid::panels_per_decade(params) as f64).ceil() as usize).max(1);
    let mut contributions = Vec::new();
    grid::for_each_gauss_node(s_lo, s_hi, panels, |s, w| {
        contributions.push(w * (2.0 * a_sum * t.ln() + 2.0 * b_sum as f64 * s).exp());
    });
    pairwise_sum(&contributions)
}
