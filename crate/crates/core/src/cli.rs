//! Command-line front end: config parsing, subcommand dispatch, reports.
//!
//! Exit codes are a stable contract: 0 success/pass, 1 verify-fail, 2 config
//! error, 3 math/runtime error, 4 unconverged fit.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;

use crate::experiment::{
    self, run_experiment, serialize_report, ExperimentError, ReportFormat, RunSettings, SampleRow,
};
use crate::poly::ComplexPoly;
use crate::predictor::{self, DegenerationConfig, PredictorError};
use crate::quadrature::{run_samples, GridParams, SampleOutcome};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;
pub const EXIT_MATH_ERROR: i32 = 3;
pub const EXIT_UNCONVERGED: i32 = 4;

/// On-disk run configuration. Complex numbers are `[re, im]` pairs; every
/// optional field has a default that is echoed into the report.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub degree: usize,
    pub sections: Vec<Vec<[f64; 2]>>,
    pub weights: Vec<i64>,
    #[serde(default)]
    pub genus: u32,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub t_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<GridParams>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub output: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl From<OutputFormat> for ReportFormat {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => ReportFormat::Json,
            OutputFormat::Csv => ReportFormat::Csv,
        }
    }
}

/// A loaded run: validated config plus fully-resolved settings.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub config: DegenerationConfig,
    pub settings: RunSettings,
    pub format: OutputFormat,
}

fn config_error(msg: String) -> (i32, String) {
    (EXIT_CONFIG_ERROR, msg)
}

pub fn load_run(path: &Path) -> Result<LoadedRun, (i32, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
    // serde_json errors carry line and column.
    let file: RunConfigFile = serde_json::from_str(&text)
        .map_err(|e| config_error(format!("config parse error in {}: {e}", path.display())))?;
    let sections: Vec<ComplexPoly> = file
        .sections
        .iter()
        .map(|coeffs| {
            ComplexPoly::new(coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        })
        .collect();
    let label = file
        .label
        .clone()
        .unwrap_or_else(|| path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()));
    let config = DegenerationConfig::new(file.degree, sections, file.weights.clone(), file.genus, label)
        .map_err(|e| config_error(format!("invalid config {}: {e}", path.display())))?;
    if let Some(schedule) = &file.t_schedule {
        if schedule.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) || schedule.windows(2).any(|w| w[0] <= w[1])
        {
            return Err(config_error(format!(
                "invalid config {}: t_schedule must be strictly decreasing within (0, 1]",
                path.display()
            )));
        }
    }
    if let Some(tol) = file.tolerance {
        if !(tol > 0.0) {
            return Err(config_error(format!(
                "invalid config {}: tolerance must be positive",
                path.display()
            )));
        }
    }
    let defaults = RunSettings::default();
    let settings = RunSettings {
        t_schedule: file.t_schedule.clone().unwrap_or(defaults.t_schedule),
        grid: file.grid.unwrap_or(defaults.grid),
        tolerance: file.tolerance.unwrap_or(defaults.tolerance),
        convergence_tol: defaults.convergence_tol,
        override_unconverged: false,
    };
    Ok(LoadedRun {
        config,
        settings,
        format: file.output.unwrap_or(OutputFormat::Json),
    })
}

#[derive(Debug, Parser)]
#[command(
    name = "kslope",
    about = "Predict and numerically verify energy-functional slopes along one-parameter degenerations of embedded curves"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output format (overrides the config's `output` field).
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Relative slope tolerance (overrides the config's `tolerance`).
    #[arg(long)]
    tolerance: Option<f64>,
    /// Report even if the stepwise slopes have not stabilized.
    #[arg(long)]
    override_unconverged: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the Newton diagram at every zero of the anchor section.
    Diagram {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print the predicted slope coefficients.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the energy functionals over the t-schedule.
    Measure {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Predict, measure, fit, and compare; exit 0 iff all verdicts pass.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn apply_overrides(run: &mut LoadedRun, common: &CommonArgs) {
    if let Some(f) = common.format {
        run.format = f;
    }
    if let Some(tol) = common.tolerance {
        run.settings.tolerance = tol;
    }
    run.settings.override_unconverged = common.override_unconverged;
}

fn math_exit(e: &ExperimentError) -> i32 {
    match e {
        ExperimentError::UnconvergedFit { .. } => EXIT_UNCONVERGED,
        _ => EXIT_MATH_ERROR,
    }
}

/// Runs the CLI against explicit arguments; returns the process exit code.
/// Reports go to `stdout`, diagnostics to `stderr`.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Let clap render its own help/usage text.
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG_ERROR } else { EXIT_PASS };
        }
    };
    let common = match &cli.command {
        Command::Diagram { common }
        | Command::Predict { common }
        | Command::Measure { common }
        | Command::Verify { common } => common,
    };
    let mut run = match load_run(&common.config) {
        Ok(run) => run,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return code;
        }
    };
    apply_overrides(&mut run, common);
    match &cli.command {
        Command::Diagram { .. } => cmd_diagram(&run),
        Command::Predict { .. } => cmd_predict(&run),
        Command::Measure { .. } => cmd_measure(&run),
        Command::Verify { .. } => cmd_verify(&run),
    }
}

fn cmd_diagram(run: &LoadedRun) -> i32 {
    let config = &run.config;
    let zeroes = match predictor::zeroes_of_anchor(config) {
        Ok(z) => z,
        Err(e) => return math_error(&e),
    };
    println!("label: {}", config.label());
    println!("anchor zeroes: {}", zeroes.len());
    let mut all_trivial = true;
    for (idx, zero) in zeroes.iter().enumerate() {
        let data = match predictor::local_data(config, zero) {
            Ok(d) => d,
            Err(e) => return math_error(&e),
        };
        println!(
            "zero {idx}: chart {}, location {:+.12e}{:+.12e}i, multiplicity {}",
            zero.chart, zero.location.re, zero.location.im, zero.multiplicity
        );
        let pts: Vec<String> = data
            .orders
            .iter()
            .zip(&data.exponents)
            .map(|(p, q)| format!("({p}, {q})"))
            .collect();
        println!("  points (p_j, q_j): {}", pts.join(" "));
        let verts: Vec<String> = data
            .diagram
            .vertices()
            .iter()
            .map(|(p, q)| format!("({p}, {q})"))
            .collect();
        println!("  vertices: {}", verts.join(" "));
        let slopes: Vec<String> = data.diagram.slopes().iter().map(|m| m.to_string()).collect();
        println!("  slopes: {}", if slopes.is_empty() { "none".into() } else { slopes.join(" ") });
        println!("  q_0 = {}", data.diagram.q_axis_intercept());
        let tele = data.diagram.slope_sum_identity();
        println!(
            "  telescoping sum = {} (equals q_0: {})",
            tele,
            tele == data.diagram.q_axis_intercept()
        );
        if !data.diagram.slopes().is_empty() {
            all_trivial = false;
        }
    }
    if all_trivial {
        println!("all diagrams trivial; predicted slopes 0");
    }
    match predictor::predict(config) {
        Ok(p) => {
            println!("predicted mabuchi slope: {}", p.mabuchi_coefficient);
            println!("predicted futaki slope: {}", p.futaki_coefficient);
            EXIT_PASS
        }
        Err(e) => math_error(&e),
    }
}

fn math_error(e: &PredictorError) -> i32 {
    eprintln!("error: {e}");
    EXIT_MATH_ERROR
}

fn cmd_predict(run: &LoadedRun) -> i32 {
    match predictor::predict(&run.config) {
        Ok(p) => {
            let json = serde_json::to_string_pretty(&p).expect("prediction serializes");
            println!("{json}");
            EXIT_PASS
        }
        Err(e) => math_error(&e),
    }
}

fn cmd_measure(run: &LoadedRun) -> i32 {
    let outcomes = match run_samples(&run.config, &run.settings.t_schedule, &run.settings.grid) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_MATH_ERROR;
        }
    };
    match run.format {
        OutputFormat::Json => {
            let rows: Vec<SampleRow> = outcomes.iter().map(SampleRow::from_outcome).collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&rows).expect("samples serialize")
            );
        }
        OutputFormat::Csv => {
            print!("{}", measure_csv(&outcomes));
        }
    }
    if outcomes
        .iter()
        .any(|o| matches!(o, SampleOutcome::Failed { .. }))
    {
        return EXIT_MATH_ERROR;
    }
    EXIT_PASS
}

fn measure_csv(outcomes: &[SampleOutcome]) -> String {
    let mut out = String::from("t,functional,value,volume,wall_ms\n");
    for outcome in outcomes {
        match outcome {
            SampleOutcome::Ok(s) => {
                out.push_str(&format!(
                    "{:.16e},nu,{:.16e},{:.16e},{:.3}\n",
                    s.t, s.nu, s.volume, s.wall_ms
                ));
                out.push_str(&format!(
                    "{:.16e},futaki,{:.16e},{:.16e},{:.3}\n",
                    s.t, s.f0_direct, s.volume, s.wall_ms
                ));
            }
            SampleOutcome::Failed { t, error } => {
                out.push_str(&format!("{t:.16e},error,\"{}\",,\n", error.replace('"', "'")));
            }
        }
    }
    out
}

fn cmd_verify(run: &LoadedRun) -> i32 {
    match run_experiment(&run.config, &run.settings) {
        Ok(report) => {
            print!("{}", serialize_report(&report, run.format.into()));
            if report.verdicts.overall_pass {
                EXIT_PASS
            } else {
                eprintln!(
                    "verify: FAIL (nu: {}, futaki: {})",
                    report.verdicts.nu.pass, report.verdicts.futaki.pass
                );
                EXIT_VERIFY_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            math_exit(&e)
        }
    }
}

/// Convenience wrappers mirroring the subcommands, used by integration tests.
pub fn cmd_verify_report(path: &Path) -> Result<experiment::SlopeReport, (i32, String)> {
    let run = load_run(path)?;
    run_experiment(&run.config, &run.settings).map_err(|e| (math_exit(&e), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(json: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(json.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    const WORKED: &str = r#"{
        "degree": 2,
        "sections": [[[1,0]], [[0,0],[1,0]], [[0,0],[0,0],[1,0]]],
        "weights": [2,-1,-1]
    }"#;

    #[test]
    fn loads_worked_config_with_defaults() {
        let f = write_config(WORKED);
        let run = load_run(f.path()).unwrap();
        assert_eq!(run.config.degree(), 2);
        assert_eq!(run.settings.t_schedule.len(), 5);
        assert_eq!(run.settings.grid, GridParams::default());
        assert_eq!(run.settings.tolerance, 0.03);
        assert_eq!(run.format, OutputFormat::Json);
    }

    #[test]
    fn rejects_weight_sum_nonzero_with_named_error() {
        let f = write_config(
            r#"{"degree":2,"sections":[[[1,0]],[[0,0],[1,0]],[[0,0],[0,0],[1,0]]],"weights":[2,-1,0]}"#,
        );
        let (code, msg) = load_run(f.path()).unwrap_err();
        assert_eq!(code, EXIT_CONFIG_ERROR);
        assert!(msg.contains("WeightSumNonzero"), "{msg}");
    }

    #[test]
    fn rejects_malformed_json_with_position() {
        let f = write_config("{\"degree\": 2,\n  broken");
        let (code, msg) = load_run(f.path()).unwrap_err();
        assert_eq!(code, EXIT_CONFIG_ERROR);
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn rejects_unknown_fields() {
        let f = write_config(
            r#"{"degree":2,"sections":[[[1,0]],[[0,0],[1,0]],[[0,0],[0,0],[1,0]]],"weights":[2,-1,-1],"typo_field":1}"#,
        );
        let (code, msg) = load_run(f.path()).unwrap_err();
        assert_eq!(code, EXIT_CONFIG_ERROR);
        assert!(msg.contains("typo_field"), "{msg}");
    }

    #[test]
    fn rejects_bad_schedule() {
        let f = write_config(
            r#"{"degree":2,"sections":[[[1,0]],[[0,0],[1,0]],[[0,0],[0,0],[1,0]]],"weights":[2,-1,-1],"t_schedule":[0.1,0.5]}"#,
        );
        let (code, _) = load_run(f.path()).unwrap_err();
        assert_eq!(code, EXIT_CONFIG_ERROR);
    }

    #[test]
    fn predict_subcommand_runs() {
        let f = write_config(WORKED);
        let code = run_from_args([
            "kslope",
            "predict",
            "--config",
            f.path().to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_PASS);
    }

    #[test]
    fn diagram_subcommand_runs() {
        let f = write_config(WORKED);
        let code = run_from_args([
            "kslope",
            "diagram",
            "--config",
            f.path().to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_PASS);
    }

    #[test]
    fn missing_config_file_is_config_error() {
        let code = run_from_args(["kslope", "predict", "--config", "/nonexistent/x.json"]);
        assert_eq!(code, EXIT_CONFIG_ERROR);
    }
}
