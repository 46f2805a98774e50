//! `awd`: run adaptive window decoding experiments from JSON configs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use awd_core::harness::{
    commit_size_sweep, commit_sweep_csv, controller_trace_csv, detector_separation, ler_vs_p_csv,
    ler_vs_q_csv, oracle_agreement, q_bins_from_shots, records_csv, run_experiment_detailed,
    separation_cdf_csv, time_vs_w_csv, window_time_scaling, CodeSpec, ExperimentReport,
    ExperimentSpec, HarnessError, WindowMode, ORACLE_MAX_FAULTS,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

const SCHEMA_VERSION: u32 = 1;

/// Agreement required by `oracle-check`.
const ORACLE_PASS: f64 = 0.99;

#[derive(Parser)]
#[command(name = "awd", version, about = "Adaptive sliding-window decoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (or file for dem-export); overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
    /// Worker threads for shot-level parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report and tables.
    Benchmark(Common),
    /// Run one experiment per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Overrides the config's sweep axis.
        #[arg(long, value_enum)]
        axis: Option<Axis>,
        /// Comma-separated values; overrides the config's values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Compare BP+LSD with exhaustive decoding on a tiny model.
    OracleCheck(Common),
    /// Write the experiment's detector model as JSON.
    DemExport(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
enum Axis {
    #[serde(rename = "p")]
    #[value(name = "p")]
    P,
    #[serde(rename = "W")]
    #[value(name = "W")]
    W,
    #[serde(rename = "C")]
    #[value(name = "C")]
    C,
    #[serde(rename = "alpha")]
    #[value(name = "alpha")]
    Alpha,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    axis: Axis,
    values: Vec<f64>,
}

/// Optional extra studies for `benchmark`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Studies {
    /// Equal-count Q bins (global window mode only).
    q_bins: Option<usize>,
    /// Detector separation CDFs (toric, fixed window).
    separation: bool,
    /// Window sizes for the decode-time scaling table.
    time_windows: Vec<usize>,
    /// Commit sizes for the commit sweep (buffer d - 1).
    commits: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    schema_version: u32,
    experiment: ExperimentSpec,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    sweep: Option<SweepConfig>,
    #[serde(default)]
    studies: Studies,
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    schema_version: u32,
    config: RunConfig,
    report: ExperimentReport,
}

/// Errors that map to exit code 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Invalid specs and unreadable or malformed inputs are configuration errors.
fn classify(e: HarnessError) -> anyhow::Error {
    match e {
        HarnessError::Config(_) | HarnessError::Code(_) | HarnessError::Io { .. } => {
            config_err(e.to_string())
        }
        HarnessError::Decode(awd_core::DecodeError::Config(_)) => config_err(e.to_string()),
        other => anyhow::Error::new(other),
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let path = &common.config;
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("invalid config {}: {e}", path.display())))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(config_err(format!(
            "{}: schema_version {} unsupported (expected {SCHEMA_VERSION})",
            path.display(),
            cfg.schema_version
        )));
    }
    // Relative model paths resolve against the config's directory.
    if let CodeSpec::DemFile { path: dem } = &mut cfg.experiment.code {
        if dem.is_relative() {
            if let Some(dir) = path.parent() {
                *dem = dir.join(&*dem);
            }
        }
    }
    if let Some(s) = common.shots {
        cfg.experiment.shots = s;
    }
    if let Some(s) = common.seed {
        cfg.experiment.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    cfg.experiment.validate().map_err(classify)?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.out
        .clone()
        .ok_or_else(|| config_err("no output location: set \"out\" or pass --out"))
}

/// Writes via a sibling temporary file and a rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

fn git_revision() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
}

fn write_report(path: &Path, cfg: &RunConfig, mut report: ExperimentReport) -> Result<()> {
    report.metadata.git_revision = git_revision();
    let file = ReportFile {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        report,
    };
    write_atomic(path, &serde_json::to_string_pretty(&file)?)
}

fn guard_existing(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(config_err(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

fn benchmark(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let dir = out_dir(&cfg)?;
    let report_path = dir.join("report.json");
    guard_existing(&report_path, common.force)?;
    let spec = &cfg.experiment;
    let (report, shots) = run_experiment_detailed(spec).map_err(classify)?;

    write_atomic(&dir.join("records.csv"), &records_csv(&shots))?;
    write_atomic(&dir.join("ler_vs_p.csv"), &ler_vs_p_csv(std::slice::from_ref(&report)))?;
    if spec.window == WindowMode::Adaptive {
        write_atomic(&dir.join("controller_trace.csv"), &controller_trace_csv(&shots))?;
    }
    let studies = &cfg.studies;
    if let Some(bins) = studies.q_bins {
        if spec.window != WindowMode::Global {
            return Err(config_err("studies.q_bins needs window mode \"global\""));
        }
        let table = q_bins_from_shots(&shots, bins, report.clone()).map_err(classify)?;
        write_atomic(&dir.join("ler_vs_q.csv"), &ler_vs_q_csv(&table))?;
    }
    if studies.separation {
        let stats = detector_separation(spec).map_err(classify)?;
        write_atomic(&dir.join("separation_cdf.csv"), &separation_cdf_csv(&stats))?;
    }
    if !studies.time_windows.is_empty() {
        let points = window_time_scaling(spec, &studies.time_windows).map_err(classify)?;
        write_atomic(&dir.join("time_vs_w.csv"), &time_vs_w_csv(&points))?;
    }
    if !studies.commits.is_empty() {
        let points = commit_size_sweep(spec, &studies.commits).map_err(classify)?;
        write_atomic(&dir.join("commit_sweep.csv"), &commit_sweep_csv(&points))?;
    }
    println!(
        "{}: {} shots, {} logical errors, LER {:.3e} [{:.3e}, {:.3e}], retry rate {:.3}",
        report.code_label,
        report.shots,
        report.logical_errors,
        report.ler.estimate,
        report.ler.lo,
        report.ler.hi,
        report.retry_rate
    );
    write_report(&report_path, &cfg, report)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn as_count(axis: Axis, v: f64) -> Result<usize> {
    if v < 1.0 || v.fract() != 0.0 {
        return Err(config_err(format!("{axis:?} values must be positive integers, got {v}")));
    }
    Ok(v as usize)
}

fn apply_axis(spec: &ExperimentSpec, axis: Axis, v: f64) -> Result<ExperimentSpec> {
    let mut s = spec.clone();
    match axis {
        Axis::P => s.noise.p = v,
        Axis::W => match s.window {
            WindowMode::Adaptive => s.adaptive.baseline_window = as_count(axis, v)?,
            _ => s.window = WindowMode::Fixed { window: as_count(axis, v)? },
        },
        Axis::C => s.commit = as_count(axis, v)?,
        Axis::Alpha => s.adaptive.q.alpha = v,
    }
    s.validate().map_err(classify)?;
    Ok(s)
}

fn sweep(common: &Common, axis: Option<Axis>, values: Option<Vec<f64>>) -> Result<()> {
    let mut cfg = load_config(common)?;
    let dir = out_dir(&cfg)?;
    let mut sweep = cfg.sweep.clone().unwrap_or(SweepConfig {
        axis: Axis::P,
        values: Vec::new(),
    });
    if let Some(a) = axis {
        sweep.axis = a;
    }
    if let Some(v) = values {
        sweep.values = v;
    }
    if sweep.values.is_empty() {
        return Err(config_err("sweep has no values: set \"sweep\" or pass --values"));
    }
    cfg.sweep = Some(sweep.clone());
    let label = serde_json::to_value(sweep.axis)?;
    let label = label.as_str().unwrap_or("axis");

    let mut reports = Vec::new();
    for &v in &sweep.values {
        let spec = apply_axis(&cfg.experiment, sweep.axis, v)?;
        let path = dir.join(format!("{label}_{v}")).join("report.json");
        if path.exists() && !common.force {
            let text = fs::read_to_string(&path)?;
            let file: ReportFile = serde_json::from_str(&text)
                .with_context(|| format!("existing {} is unreadable; use --force", path.display()))?;
            println!("{label}={v}: kept existing {}", path.display());
            reports.push(file.report);
            continue;
        }
        let (report, _) = run_experiment_detailed(&spec).map_err(classify)?;
        println!(
            "{label}={v}: {} logical errors in {} shots",
            report.logical_errors, report.shots
        );
        let point_cfg = RunConfig {
            experiment: spec,
            ..cfg.clone()
        };
        write_report(&path, &point_cfg, report.clone())?;
        reports.push(report);
    }
    let table = match sweep.axis {
        Axis::P => "ler_vs_p.csv",
        Axis::W => "time_vs_w.csv",
        Axis::C => "commit_sweep.csv",
        Axis::Alpha => "ler_vs_alpha.csv",
    };
    // Every axis shares the row layout of the LER table; it carries timing and commit too.
    write_atomic(&dir.join(table), &ler_vs_p_csv(&reports))?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn oracle_check(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let (_, dem) = cfg.experiment.build().map_err(classify)?;
    if dem.n_faults() > ORACLE_MAX_FAULTS {
        return Err(config_err(format!(
            "model has |F| = {} faults; the exhaustive oracle accepts at most {ORACLE_MAX_FAULTS}",
            dem.n_faults()
        )));
    }
    let a = oracle_agreement(&dem, &cfg.experiment.decoder).map_err(classify)?;
    let pass = a.probability_weighted >= ORACLE_PASS;
    println!(
        "{}: |F| = {}, {} syndromes ({} tied), agreement {:.4} by count, {:.6} by probability: {}",
        cfg.experiment.code.label(),
        a.n_faults,
        a.syndromes,
        a.ties_excluded,
        a.fraction,
        a.probability_weighted,
        if pass { "PASS" } else { "FAIL" }
    );
    if !pass {
        anyhow::bail!("decoder disagrees with the oracle");
    }
    Ok(())
}

fn dem_export(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let path = common
        .out
        .clone()
        .or_else(|| cfg.out.clone().map(|d| d.join("dem.json")))
        .ok_or_else(|| config_err("no output location: set \"out\" or pass --out"))?;
    guard_existing(&path, common.force)?;
    let (_, dem) = cfg.experiment.build().map_err(classify)?;
    write_atomic(&path, &dem.to_json())?;
    println!(
        "wrote {} ({} detectors, {} faults)",
        path.display(),
        dem.n_detectors(),
        dem.n_faults()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Benchmark(c) | Command::OracleCheck(c) | Command::DemExport(c) => c,
        Command::Sweep { common, .. } => common,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_err(format!("--threads {n}: {e}")))?;
    }
    match &cli.command {
        Command::Benchmark(c) => benchmark(c),
        Command::Sweep {
            common,
            axis,
            values,
        } => sweep(common, *axis, values.clone()),
        Command::OracleCheck(c) => oracle_check(c),
        Command::DemExport(c) => dem_export(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
