//! Command-line front end.
//!
//! Every subcommand reads a JSON [`RunConfig`], writes its outputs into
//! `--out`, and always leaves a `manifest.json` there describing the run,
//! including failures. Exit codes: 0 success, 1 configuration error,
//! 2 solver error, 3 I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::calibration::{empirical_pdf, empirical_stats, fit_search, MomentTarget};
use crate::dataio::{self, load_catches, normalize, CatchDataset, RunConfig};
use crate::dynamics::{eta_convergence_table, run_to_stationary, run_until, NoiseMode, Trajectory};
use crate::error::{Error, Result};
use crate::kexp::Kappa;
use crate::measure::Grid;

#[derive(Debug, Parser)]
#[command(name = "ratlogit", version, about = "Rational logit dynamics on [0, 1]")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate to the largest record time and write the trajectory.
    Simulate(Common),
    /// Run to the stationary state and write its PDF and moments.
    Stationary(Common),
    /// Calibrate against the catch data by grid search.
    Fit {
        #[command(flatten)]
        common: Common,
        /// `year,catch` CSV; defaults to the bundled dataset.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Max-norm PDF error against the limit equation for several η.
    ConvergenceEta {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-4, 1e-3, 1e-2, 1e-1])]
        etas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0])]
        times: Vec<f64>,
    },
    /// Stationary PDFs for several κ, side by side.
    SweepKappa {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.5, 1.0])]
        kappas: Vec<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Stationary(_) => "stationary",
            Command::Fit { .. } => "fit",
            Command::ConvergenceEta { .. } => "convergence-eta",
            Command::SweepKappa { .. } => "sweep-kappa",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c) | Command::Stationary(c) => c,
            Command::Fit { common, .. }
            | Command::ConvergenceEta { common, .. }
            | Command::SweepKappa { common, .. } => common,
        }
    }
}

/// Describes one invocation; serialized as `manifest.json`.
#[derive(Debug)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub config: Option<Value>,
    pub inputs: Vec<(String, PathBuf)>,
    pub outputs: Vec<PathBuf>,
    pub duration_seconds: f64,
    pub status: String,
    pub details: Value,
    pub error: Option<String>,
    pub exit_code: i32,
}

impl RunManifest {
    fn to_json(&self) -> Value {
        let inputs: serde_json::Map<String, Value> =
            self.inputs.iter().map(|(k, p)| (k.clone(), json!(p.display().to_string()))).collect();
        json!({
            "subcommand": self.subcommand,
            "config": self.config,
            "inputs": inputs,
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "duration_seconds": self.duration_seconds,
            "status": self.status,
            "details": self.details,
            "error": self.error,
            "exit_code": self.exit_code,
        })
    }
}

/// What a subcommand body reports back to the manifest.
struct Outcome {
    outputs: Vec<PathBuf>,
    details: Value,
    /// A failure discovered after outputs were written.
    soft_error: Option<Error>,
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n";
    dataio::write_text(path, &text)
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                1
            } else {
                0
            }
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let started = Instant::now();
    let command = &cli.command;
    let common = command.common();
    if let Err(e) = std::fs::create_dir_all(&common.out) {
        eprintln!("error: {}: {e}", common.out.display());
        return 3;
    }
    let mut manifest = RunManifest {
        subcommand: command.name(),
        config: None,
        inputs: vec![("config".into(), common.config.clone())],
        outputs: Vec::new(),
        duration_seconds: 0.0,
        status: "ok".into(),
        details: Value::Null,
        error: None,
        exit_code: 0,
    };
    if let Command::Fit { data: Some(d), .. } = command {
        manifest.inputs.push(("data".into(), d.clone()));
    }

    let result = RunConfig::load(&common.config).and_then(|config| {
        manifest.config = Some(config.to_json());
        execute(command, &config)
    });
    let failure = match result {
        Ok(outcome) => {
            manifest.outputs = outcome.outputs;
            manifest.details = outcome.details;
            outcome.soft_error
        }
        Err(e) => Some(e),
    };
    if let Some(e) = failure {
        eprintln!("error: {e}");
        manifest.status = "error".into();
        manifest.exit_code = e.exit_code();
        manifest.error = Some(e.to_string());
    }
    manifest.duration_seconds = started.elapsed().as_secs_f64();
    let path = common.out.join("manifest.json");
    if let Err(e) = write_json(&path, &manifest.to_json()) {
        eprintln!("error: {e}");
        return 3;
    }
    manifest.exit_code
}

fn execute(command: &Command, config: &RunConfig) -> Result<Outcome> {
    let out = &command.common().out;
    match command {
        Command::Simulate(_) => cmd_simulate(config, out),
        Command::Stationary(_) => cmd_stationary(config, out),
        Command::Fit { data, .. } => cmd_fit(config, data.as_deref(), out),
        Command::ConvergenceEta { etas, times, .. } => cmd_convergence_eta(config, etas, times, out),
        Command::SweepKappa { kappas, .. } => cmd_sweep_kappa(config, kappas, out),
    }
}

fn cmd_simulate(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let model = config.model()?;
    let traj = run_until(&config.dynamic, &model, &config.initial_measure(), config.t_final(), &config.record_times)?;
    let path = out.join("trajectory.csv");
    dataio::write_text(&path, &dataio::trajectory_csv(&traj))?;
    Ok(Outcome {
        outputs: vec![path],
        details: json!({
            "snapshots": traj.snapshots.len(),
            "steps": traj.steps,
            "termination": "reached_final_time",
        }),
        soft_error: None,
    })
}

fn stationary_summary(traj: &Trajectory, grid: Grid) -> Value {
    let mu = traj.final_measure();
    let (mean, std) = mu.mean_and_std();
    let pdf = mu.pdf_values();
    let step = match traj.termination {
        crate::dynamics::Termination::Stationary { step } => Some(step),
        _ => None,
    };
    json!({
        "stationary": traj.is_stationary(),
        "stationary_step": step,
        "steps": traj.steps,
        "time": traj.last().time,
        "mean": mean,
        "std": std,
        "rightmost_pdf": pdf[grid.n_cells() - 1],
        "max_pdf": pdf.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        "min_pdf": pdf.iter().cloned().fold(f64::INFINITY, f64::min),
    })
}

fn cmd_stationary(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let model = config.model()?;
    let grid = config.grid();
    let traj = run_to_stationary(&config.dynamic, &model, &config.initial_measure(), config.max_steps)?;
    let pdf_path = out.join("stationary_pdf.csv");
    dataio::write_pdf_table(&pdf_path, &grid.midpoints(), &[("pdf", &traj.final_measure().pdf_values())])?;
    let summary = stationary_summary(&traj, grid);
    let doc_path = out.join("stationary.json");
    write_json(&doc_path, &summary)?;
    let soft_error = (!traj.is_stationary()).then_some(Error::NotStationary { max_steps: config.max_steps });
    Ok(Outcome { outputs: vec![pdf_path, doc_path], details: summary, soft_error })
}

fn cmd_fit(config: &RunConfig, data: Option<&Path>, out: &Path) -> Result<Outcome> {
    let dataset = match data {
        Some(p) => load_catches(p)?,
        None => CatchDataset::shipped(),
    };
    let sample = normalize(&dataset);
    let (mean, std) = empirical_stats(&sample)?;
    let target = MomentTarget { mean, std };
    let mut spec = config
        .fit_spec()
        .ok_or_else(|| Error::Config(vec!["fit: section required (with a numeric dynamic.eta)".into()]))?;
    spec.solver = config.solver_settings();
    let bins = config.fit.as_ref().map_or(20, |f| f.bins);

    let result = fit_search(&spec, target)?;
    let rel = |m: f64, t: f64| (m - t) / t;
    let doc = json!({
        "parameters": {
            "a": result.best.a,
            "b": result.best.b,
            "eta": result.best.eta,
            "kappa": result.best.kappa,
            "c": spec.utility.c,
            "d": spec.utility.d,
            "alpha": spec.utility.alpha,
        },
        "free": spec.free.keys().map(|p| p.name()).collect::<Vec<_>>(),
        "objective": result.evaluation.objective,
        "model": { "mean": result.evaluation.mean, "std": result.evaluation.std, "steps": result.evaluation.steps },
        "target": { "mean": target.mean, "std": target.std },
        "relative_error": {
            "mean": rel(result.evaluation.mean, target.mean),
            "std": rel(result.evaluation.std, target.std),
        },
        "evaluations": result.log.len(),
        "trace": result.trace,
        "log": result.log,
    });
    let doc_path = out.join("fit.json");
    write_json(&doc_path, &doc)?;

    let hist = empirical_pdf(&sample, bins)?;
    let bin_grid = Grid::new(bins)?;
    let pdf_path = out.join("empirical_pdf.csv");
    dataio::write_pdf_table(&pdf_path, &bin_grid.midpoints(), &[("pdf", &hist)])?;
    Ok(Outcome {
        outputs: vec![doc_path, pdf_path],
        details: json!({ "objective": result.evaluation.objective, "evaluations": result.log.len() }),
        soft_error: None,
    })
}

fn cmd_convergence_eta(config: &RunConfig, etas: &[f64], times: &[f64], out: &Path) -> Result<Outcome> {
    let mut etas = etas.to_vec();
    etas.sort_by(|a, b| b.total_cmp(a));
    etas.dedup();
    let mut times = times.to_vec();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let model = config.model()?;
    let rows = eta_convergence_table(&config.dynamic, &model, &config.initial_measure(), &etas, &times)?;
    let path = out.join("convergence_eta.csv");
    dataio::write_text(&path, &dataio::convergence_csv(&rows))?;
    Ok(Outcome { outputs: vec![path], details: json!({ "rows": rows.len() }), soft_error: None })
}

fn cmd_sweep_kappa(config: &RunConfig, kappas: &[f64], out: &Path) -> Result<Outcome> {
    let invalid: Vec<String> = kappas
        .iter()
        .filter(|k| Kappa::new(**k).is_err())
        .map(|k| format!("--kappas: {k} is outside [0, 1]"))
        .collect();
    if !invalid.is_empty() || kappas.is_empty() {
        let mut v = invalid;
        if kappas.is_empty() {
            v.push("--kappas: need at least one value".into());
        }
        return Err(Error::Config(v));
    }
    let model = config.model()?;
    let grid = config.grid();
    let init = config.initial_measure();
    let runs: Vec<Result<Trajectory>> = kappas
        .par_iter()
        .map(|&k| {
            let dynamic = config.dynamic.with_kappa(Kappa::new(k)?)?;
            let traj = run_to_stationary(&dynamic, &model, &init, config.max_steps)?;
            if traj.is_stationary() {
                Ok(traj)
            } else {
                Err(Error::NotStationary { max_steps: config.max_steps })
            }
        })
        .collect();

    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut per_kappa = Vec::new();
    let mut first_error = None;
    for (&k, run) in kappas.iter().zip(runs) {
        match run {
            Ok(traj) => {
                per_kappa.push(json!({ "kappa": k, "summary": stationary_summary(&traj, grid) }));
                names.push(format!("pdf_kappa_{k}"));
                columns.push(traj.final_measure().pdf_values());
            }
            Err(e) => {
                per_kappa.push(json!({ "kappa": k, "error": e.to_string() }));
                first_error.get_or_insert(e);
            }
        }
    }
    let mut outputs = Vec::new();
    if !columns.is_empty() {
        let series: Vec<(&str, &[f64])> = names.iter().map(String::as_str).zip(columns.iter().map(Vec::as_slice)).collect();
        let path = out.join("sweep_kappa.csv");
        dataio::write_pdf_table(&path, &grid.midpoints(), &series)?;
        outputs.push(path);
    }
    let noise = match config.dynamic.noise {
        NoiseMode::Positive(e) => json!(e),
        NoiseMode::VanishingLimit => json!("limit"),
    };
    Ok(Outcome { outputs, details: json!({ "eta": noise, "runs": per_kappa }), soft_error: first_error })
}
