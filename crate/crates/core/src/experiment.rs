//! Orchestration: run a t-schedule, fit slopes against `ln(1/t)`, compare
//! with the closed-form prediction, and serialize reports.
//!
//! The energies carry an O(1) constant alongside the `ln(1/t)` term, so a
//! plain least-squares slope over a short schedule is biased by however much
//! the constant still drifts. Stepwise differencing cancels the constant
//! exactly, so verdicts use the last stepwise slope; the least-squares fit is
//! reported for context.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::predictor::{DegenerationConfig, PredictorError, SlopePrediction};
use crate::quadrature::{
    run_samples, EnergySample, GridParams, QuadratureError, SampleOutcome,
};

/// Absolute pass floor for zero-slope predictions, in energy per e-fold of
/// `1/t`; relative error is undefined at zero.
pub const ZERO_SLOPE_FLOOR: f64 = 0.02;

/// Default allowed gap between the last two stepwise slopes.
pub const DEFAULT_CONVERGENCE_TOL: f64 = 0.01;

/// Default relative tolerance for verdicts.
pub const DEFAULT_TOLERANCE: f64 = 0.03;

/// Default schedule `t_k = 10^{-k/2}`, k = 2..6.
pub fn default_schedule() -> Vec<f64> {
    (2..=6).map(|k| 10f64.powf(-(k as f64) / 2.0)).collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("TooFewSamples: slope fitting needs at least 3 successful samples, got {0}")]
    TooFewSamples(usize),
    #[error("UnconvergedFit: the {functional} stepwise slopes have not stabilized (last gap {gap:.3e} > {tol:.3e}); pass --override-unconverged to report anyway")]
    UnconvergedFit {
        functional: String,
        gap: f64,
        tol: f64,
    },
    #[error(transparent)]
    Prediction(#[from] PredictorError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Which energy functional a fit refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Nu,
    Futaki,
}

impl Functional {
    fn name(self) -> &'static str {
        match self {
            Functional::Nu => "nu",
            Functional::Futaki => "futaki",
        }
    }

    fn value(self, s: &EnergySample) -> f64 {
        match self {
            Functional::Nu => s.nu,
            Functional::Futaki => s.f0_direct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub stepwise_slopes: Vec<f64>,
    pub max_residual: f64,
    pub converged: bool,
}

impl FitResult {
    /// The verdict-bearing measurement: the last stepwise slope.
    pub fn last_stepwise(&self) -> f64 {
        *self
            .stepwise_slopes
            .last()
            .expect("fit requires >= 3 samples")
    }
}

/// Least-squares fit of `E` against `x = ln(1/t)`, plus successive-difference
/// slopes `(E_{k+1} − E_k)/(x_{k+1} − x_k)`.
pub fn fit_slope(
    samples: &[EnergySample],
    functional: Functional,
    convergence_tol: f64,
) -> Result<FitResult, ExperimentError> {
    if samples.len() < 3 {
        return Err(ExperimentError::TooFewSamples(samples.len()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| (1.0 / s.t).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| functional.value(s)).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    let stepwise_slopes: Vec<f64> = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    let k = stepwise_slopes.len();
    let converged = (stepwise_slopes[k - 1] - stepwise_slopes[k - 2]).abs() < convergence_tol;
    Ok(FitResult {
        slope,
        intercept,
        stepwise_slopes,
        max_residual,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    pub nu: FitResult,
    pub futaki: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub predicted: f64,
    pub measured: f64,
    pub abs_error: f64,
    /// Absent when the prediction is exactly zero.
    pub rel_error: Option<f64>,
    pub pass: bool,
}

fn verdict_for(predicted: f64, measured: f64, tolerance: f64) -> Verdict {
    let abs_error = (measured - predicted).abs();
    if predicted == 0.0 {
        Verdict {
            predicted,
            measured,
            abs_error,
            rel_error: None,
            pass: measured.abs() < ZERO_SLOPE_FLOOR,
        }
    } else {
        let rel = abs_error / predicted.abs();
        Verdict {
            predicted,
            measured,
            abs_error,
            rel_error: Some(rel),
            pass: rel <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub nu: Verdict,
    pub futaki: Verdict,
    pub overall_pass: bool,
}

/// Compares fitted slopes with the prediction. Errors on an unconverged fit
/// unless explicitly overridden.
pub fn compare(
    prediction: &SlopePrediction,
    fits: &Fits,
    tolerance: f64,
    override_unconverged: bool,
) -> Result<Verdicts, ExperimentError> {
    for (functional, fit) in [(Functional::Nu, &fits.nu), (Functional::Futaki, &fits.futaki)] {
        if !fit.converged && !override_unconverged {
            let k = fit.stepwise_slopes.len();
            return Err(ExperimentError::UnconvergedFit {
                functional: functional.name().into(),
                gap: (fit.stepwise_slopes[k - 1] - fit.stepwise_slopes[k - 2]).abs(),
                tol: DEFAULT_CONVERGENCE_TOL,
            });
        }
    }
    let nu = verdict_for(
        prediction.mabuchi_coefficient,
        fits.nu.last_stepwise(),
        tolerance,
    );
    let futaki = verdict_for(
        prediction.futaki_coefficient,
        fits.futaki.last_stepwise(),
        tolerance,
    );
    let overall_pass = nu.pass && futaki.pass;
    Ok(Verdicts {
        nu,
        futaki,
        overall_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub label: String,
    pub degree: usize,
    pub genus: u32,
    pub weights: Vec<i64>,
    /// Sections as coefficient lists of `[re, im]` pairs.
    pub sections: Vec<Vec<[f64; 2]>>,
    pub digest: String,
}

impl ConfigSummary {
    pub fn from_config(config: &DegenerationConfig) -> Self {
        let sections: Vec<Vec<[f64; 2]>> = config
            .sections()
            .iter()
            .map(|s| s.coeffs().iter().map(|c| [c.re, c.im]).collect())
            .collect();
        let mut hasher = Sha256::new();
        hasher.update(config.degree().to_le_bytes());
        hasher.update(config.genus().to_le_bytes());
        for w in config.weights() {
            hasher.update(w.to_le_bytes());
        }
        for s in &sections {
            for c in s {
                hasher.update(c[0].to_le_bytes());
                hasher.update(c[1].to_le_bytes());
            }
        }
        let digest = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>();
        Self {
            label: config.label().to_string(),
            degree: config.degree(),
            genus: config.genus(),
            weights: config.weights().to_vec(),
            sections,
            digest: format!("sha256:{digest}"),
        }
    }
}

/// One sample row of a report. Wall times are kept out of the report so that
/// identical configs serialize to identical bytes; the CSV rendering of a
/// live run carries them instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f0_direct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f0_via_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub i0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub volume: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl SampleRow {
    pub fn from_outcome(outcome: &SampleOutcome) -> Self {
        match outcome {
            SampleOutcome::Ok(s) => SampleRow {
                t: s.t,
                nu: Some(s.nu),
                f0_direct: Some(s.f0_direct),
                f0_via_j: Some(s.f0_via_j),
                j: Some(s.j),
                i0: Some(s.i0),
                volume: Some(s.volume),
                wall_ms: None,
                error: None,
            },
            SampleOutcome::Failed { t, error } => SampleRow {
                t: *t,
                nu: None,
                f0_direct: None,
                f0_via_j: None,
                j: None,
                i0: None,
                volume: None,
                wall_ms: None,
                error: Some(error.clone()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub t_schedule: Vec<f64>,
    pub grid: GridParams,
    pub tolerance: f64,
    pub convergence_tol: f64,
    pub zero_slope_floor: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub schema_version: u32,
    pub config: ConfigSummary,
    pub prediction: SlopePrediction,
    pub samples: Vec<SampleRow>,
    pub fits: Fits,
    pub verdicts: Verdicts,
    pub environment: Environment,
}

/// Settings for a full verify run; every default lives here and is printed
/// into the report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub t_schedule: Vec<f64>,
    pub grid: GridParams,
    pub tolerance: f64,
    pub convergence_tol: f64,
    pub override_unconverged: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            t_schedule: default_schedule(),
            grid: GridParams::default(),
            tolerance: DEFAULT_TOLERANCE,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            override_unconverged: false,
        }
    }
}

/// Predict, measure, fit, and compare in one pass.
pub fn run_experiment(
    config: &DegenerationConfig,
    settings: &RunSettings,
) -> Result<SlopeReport, ExperimentError> {
    let prediction = crate::predictor::predict(config)?;
    let outcomes = run_samples(config, &settings.t_schedule, &settings.grid)?;
    let ok_samples: Vec<EnergySample> = outcomes
        .iter()
        .filter_map(|o| match o {
            SampleOutcome::Ok(s) => Some(s.clone()),
            SampleOutcome::Failed { .. } => None,
        })
        .collect();
    let fits = Fits {
        nu: fit_slope(&ok_samples, Functional::Nu, settings.convergence_tol)?,
        futaki: fit_slope(&ok_samples, Functional::Futaki, settings.convergence_tol)?,
    };
    let verdicts = compare(
        &prediction,
        &fits,
        settings.tolerance,
        settings.override_unconverged,
    )?;
    Ok(SlopeReport {
        schema_version: 1,
        config: ConfigSummary::from_config(config),
        prediction,
        samples: outcomes.iter().map(SampleRow::from_outcome).collect(),
        fits,
        verdicts,
        environment: Environment {
            t_schedule: settings.t_schedule.clone(),
            grid: settings.grid,
            tolerance: settings.tolerance,
            convergence_tol: settings.convergence_tol,
            zero_slope_floor: ZERO_SLOPE_FLOOR,
            wall_ms_total: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Fixed float formatting for CSV: 17 significant digits, round-trip exact.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Deterministic, schema-versioned serialization.
pub fn serialize_report(report: &SlopeReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("report serializes") + "\n"
        }
        ReportFormat::Csv => {
            let mut out = String::from("t,functional,value,volume,wall_ms\n");
            for row in &report.samples {
                out.push_str(&format!(
                    "{},nu,{},{},{}\n",
                    fmt_f64(row.t),
                    fmt_opt(row.nu),
                    fmt_opt(row.volume),
                    fmt_opt(row.wall_ms),
                ));
                out.push_str(&format!(
                    "{},futaki,{},{},{}\n",
                    fmt_f64(row.t),
                    fmt_opt(row.f0_direct),
                    fmt_opt(row.volume),
                    fmt_opt(row.wall_ms),
                ));
            }
            for (name, verdict) in [("nu", &report.verdicts.nu), ("futaki", &report.verdicts.futaki)]
            {
                out.push_str(&format!(
                    "predicted,{name},{},,\n",
                    fmt_f64(verdict.predicted)
                ));
                out.push_str(&format!("measured,{name},{},,\n", fmt_f64(verdict.measured)));
                out.push_str(&format!(
                    "pass,{name},{},,\n",
                    if verdict.pass { 1 } else { 0 }
                ));
            }
            out.push_str(&format!(
                "overall,pass,{},,\n",
                if report.verdicts.overall_pass { 1 } else { 0 }
            ));
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine_samples(slope: f64, intercept: f64) -> Vec<EnergySample> {
        [0.1f64, 0.05, 0.01, 0.005]
            .iter()
            .map(|&t| {
                let x = (1.0 / t).ln();
                EnergySample {
                    t,
                    f0_direct: slope * x + intercept,
                    f0_via_j: slope * x + intercept,
                    j: 0.0,
                    i0: 0.0,
                    nu: slope * x + intercept,
                    volume: 2.0,
                    wall_ms: 1.0,
                }
            })
            .collect()
    }

    #[test]
    fn fit_exact_affine_data() {
        let fit = fit_slope(&affine_samples(3.0, 7.0), Functional::Nu, 0.01).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 7.0).abs() < 1e-12);
        assert!(fit.max_residual < 1e-12);
        assert!(fit.converged);
        for sw in &fit.stepwise_slopes {
            assert!((sw - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_constant_data_gives_zero_slope() {
        let fit = fit_slope(&affine_samples(0.0, 4.2), Functional::Futaki, 0.01).unwrap();
        assert!(fit.slope.abs() < 1e-13);
        assert!(fit.last_stepwise().abs() < 1e-13);
    }

    #[test]
    fn fit_needs_three_samples() {
        let samples = &affine_samples(1.0, 0.0)[..2];
        assert_eq!(
            fit_slope(samples, Functional::Nu, 0.01),
            Err(ExperimentError::TooFewSamples(2))
        );
    }

    fn fits_with(measured: f64) -> Fits {
        let fit = FitResult {
            slope: measured,
            intercept: 0.0,
            stepwise_slopes: vec![measured, measured],
            max_residual: 0.0,
            converged: true,
        };
        Fits {
            nu: fit.clone(),
            futaki: fit,
        }
    }

    fn prediction_of(nu: f64, futaki: f64) -> SlopePrediction {
        SlopePrediction {
            futaki_coefficient: futaki,
            mabuchi_coefficient: nu,
            per_zero: vec![],
        }
    }

    #[test]
    fn compare_examples() {
        // predicted 1.5, measured 1.48, tol 3% -> pass
        let v = compare(&prediction_of(1.5, 1.5), &fits_with(1.48), 0.03, false).unwrap();
        assert!(v.nu.pass && v.futaki.pass && v.overall_pass);

        // predicted 0, measured 0.004 -> pass under the absolute floor
        let v = compare(&prediction_of(0.0, 0.0), &fits_with(0.004), 0.03, false).unwrap();
        assert!(v.nu.pass);
        assert_eq!(v.nu.rel_error, None);

        // predicted -0.5, measured -0.4 -> fail at 3%
        let v = compare(&prediction_of(-0.5, -0.5), &fits_with(-0.4), 0.03, false).unwrap();
        assert!(!v.nu.pass && !v.overall_pass);
    }

    #[test]
    fn compare_is_monotone_in_tolerance() {
        for tol in [0.01, 0.05, 0.2, 0.5] {
            let v = compare(&prediction_of(1.0, 1.0), &fits_with(0.9), tol, false).unwrap();
            let looser = compare(&prediction_of(1.0, 1.0), &fits_with(0.9), tol * 2.0, false)
                .unwrap();
            if v.nu.pass {
                assert!(looser.nu.pass);
            }
        }
    }

    #[test]
    fn unconverged_fit_is_an_error_unless_overridden() {
        let mut fits = fits_with(1.0);
        fits.nu.converged = false;
        fits.nu.stepwise_slopes = vec![0.5, 1.0];
        let err = compare(&prediction_of(1.0, 1.0), &fits, 0.03, false).unwrap_err();
        assert!(matches!(err, ExperimentError::UnconvergedFit { .. }));
        assert!(compare(&prediction_of(1.0, 1.0), &fits, 0.03, true).is_ok());
    }

    fn tiny_report() -> SlopeReport {
        let fits = fits_with(1.5);
        SlopeReport {
            schema_version: 1,
            config: ConfigSummary {
                label: "x".into(),
                degree: 2,
                genus: 0,
                weights: vec![2, -1, -1],
                sections: vec![vec![[1.0, 0.0]]],
                digest: "sha256:00".into(),
            },
            prediction: prediction_of(1.5, -0.5),
            samples: vec![SampleRow {
                t: 0.1,
                nu: Some(1.0),
                f0_direct: Some(-0.3),
                f0_via_j: Some(-0.3),
                j: Some(0.1),
                i0: Some(0.4),
                volume: Some(2.0),
                wall_ms: None,
                error: None,
            }],
            verdicts: compare(&prediction_of(1.5, -0.5), &fits, 0.03, false).unwrap(),
            fits,
            environment: Environment {
                t_schedule: vec![0.1],
                grid: GridParams::default(),
                tolerance: 0.03,
                convergence_tol: 0.01,
                zero_slope_floor: ZERO_SLOPE_FLOOR,
                wall_ms_total: None,
            },
        }
    }

    #[test]
    fn json_round_trip_is_identity() {
        let report = tiny_report();
        let json = serialize_report(&report, ReportFormat::Json);
        let back: SlopeReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn json_serialization_is_deterministic() {
        let a = serialize_report(&tiny_report(), ReportFormat::Json);
        let b = serialize_report(&tiny_report(), ReportFormat::Json);
        assert_eq!(a, b);
    }

    #[test]
    fn csv_row_count_contract() {
        let report = tiny_report();
        let csv = serialize_report(&report, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,functional,value,volume,wall_ms");
        // header + 2 per sample + 3 summary rows per functional + overall
        assert_eq!(lines.len(), 1 + 2 * report.samples.len() + 7);
    }

    #[test]
    fn empty_schedule_report_serializes() {
        let mut report = tiny_report();
        report.samples.clear();
        let json = serialize_report(&report, ReportFormat::Json);
        let back: SlopeReport = serde_json::from_str(&json).unwrap();
        assert!(back.samples.is_empty());
    }
}
