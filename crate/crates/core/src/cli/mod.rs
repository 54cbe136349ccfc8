//! The `hgl` experiment runner: JSON configs in, JSON reports (and CSV for
//! tabular experiments) out. Reports contain no timing or host data, so a
//! rerun with the same config, seed and worker count reproduces them byte
//! for byte.

mod experiments;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loglaplace::{Backend, DEFAULT_WORKERS};
use crate::measures::MeasureSpec;
use crate::shell::{self, ShellStats};

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LaplaceCheck,
    Gromov,
    Duality,
    Invariance,
    Distance,
    Shell,
    Harmonics,
    Lemma35,
    Curvature,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        write!(f, "{}", s.as_str().expect("string"))
    }
}

/// Experiment-specific knobs; all optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_c: Option<f64>,
    /// Radius of the box random tilts are drawn from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_radius: Option<f64>,
    /// Random directions for the volume chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    /// Rejection samples for `Vol(K_t)` in the volume chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kt_count: Option<usize>,
    /// Random symmetric tensors tested by the harmonics experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_tensors: Option<usize>,
}

/// One experiment. `count` is the sample size of stochastic experiments
/// and the number of random trials of property checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    /// Measure document; its `dim` is replaced by each entry of `dims`.
    pub measure: serde_json::Value,
    /// Replace the measure by its isotropic normalization.
    #[serde(default)]
    pub isotropize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default)]
    pub params: Params,
}

/// A list of experiments run as one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub runs: Vec<ExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

fn config_error<E: fmt::Display>(err: serde_path_to_error::Error<E>) -> Error {
    let path = err.path().to_string();
    Error::Config {
        path: if path.is_empty() { "<root>".into() } else { path },
        message: err.into_inner().to_string(),
    }
}

fn parse_with_path<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(config_error)
}

fn check_schema(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Config {
            path: "schema_version".into(),
            message: format!("unsupported schema version {version}, expected {SCHEMA_VERSION}"),
        });
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_with_path(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        if let Some(d) = &self.dims {
            if d.is_empty() || d.contains(&0) {
                return Err(Error::Config {
                    path: "dims".into(),
                    message: "must be a nonempty list of positive integers".into(),
                });
            }
        }
        if self.count == Some(0) {
            return Err(Error::Config { path: "count".into(), message: "must be positive".into() });
        }
        for n in self.dim_list()? {
            self.measure_at(n)?;
        }
        Ok(())
    }

    /// Dimensions to run: `dims`, or the measure's own `dim`.
    pub fn dim_list(&self) -> Result<Vec<usize>> {
        if let Some(d) = &self.dims {
            return Ok(d.clone());
        }
        self.measure
            .get("dim")
            .and_then(|d| d.as_u64())
            .map(|d| vec![d as usize])
            .ok_or_else(|| Error::Config {
                path: "measure.dim".into(),
                message: "missing or not a positive integer".into(),
            })
    }

    /// The measure at dimension `n`, isotropized if requested.
    pub fn measure_at(&self, n: usize) -> Result<MeasureSpec> {
        let mut doc = self.measure.clone();
        match doc.as_object_mut() {
            Some(obj) => {
                obj.insert("dim".into(), n.into());
            }
            None => {
                return Err(Error::Config { path: "measure".into(), message: "must be an object".into() })
            }
        }
        let text = doc.to_string();
        let spec: MeasureSpec = parse_with_path(&text).map_err(|e| match e {
            Error::Config { path, message } => Error::Config {
                path: if path == "<root>" { "measure".into() } else { format!("measure.{path}") },
                message,
            },
            other => other,
        })?;
        if self.isotropize {
            Ok(spec.isotropize()?.1)
        } else {
            Ok(spec)
        }
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(c) = o.count {
            self.count = Some(c);
        }
        if let Some(d) = o.dim {
            self.dims = Some(vec![d]);
        }
        if let Some(p) = &o.out {
            self.output_path = Some(p.display().to_string());
        }
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Diagnostic,
}

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub dim: usize,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub std_error: f64,
    pub count: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Check {
    fn new(name: &str, status: Status, dim: usize, value: f64) -> Self {
        Self {
            name: name.into(),
            status,
            dim,
            value: Some(value),
            threshold: None,
            std_error: 0.0,
            count: 0,
            seed: 0,
            message: None,
        }
    }

    /// Pass iff `value <= threshold`.
    pub fn at_most(name: &str, dim: usize, value: f64, threshold: f64) -> Self {
        let status = if value <= threshold { Status::Pass } else { Status::Fail };
        Self { threshold: Some(threshold), ..Self::new(name, status, dim, value) }
    }

    pub fn flag(name: &str, dim: usize, ok: bool, value: f64) -> Self {
        Self::new(name, if ok { Status::Pass } else { Status::Fail }, dim, value)
    }

    pub fn diagnostic(name: &str, dim: usize, value: f64) -> Self {
        Self::new(name, Status::Diagnostic, dim, value)
    }

    /// A failure carrying an error message instead of a value.
    pub fn error(name: &str, dim: usize, err: &Error) -> Self {
        Self {
            value: None,
            message: Some(err.to_string()),
            ..Self::new(name, Status::Fail, dim, 0.0)
        }
    }

    pub fn with_stats(mut self, std_error: f64, count: u64, seed: u64) -> Self {
        self.std_error = std_error;
        self.count = count;
        self.seed = seed;
        self
    }

    pub fn with_message(mut self, message: impl Into<String>) -> Self {
        self.message = Some(message.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub artifact_version: String,
    pub experiment: Experiment,
    pub workers: usize,
    pub config: ExperimentConfig,
    pub status: Status,
    pub checks: Vec<Check>,
    /// Per-dimension payloads (volume reports, shell statistics, ...).
    pub results: Vec<serde_json::Value>,
    #[serde(skip)]
    pub shell_rows: Vec<ShellStats>,
}

impl RunReport {
    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }
}

/// Runs one experiment with `workers` threads of random substreams.
pub fn run(config: &ExperimentConfig, workers: usize) -> Result<RunReport> {
    let workers = workers.max(1);
    let mut checks = Vec::new();
    let mut results = Vec::new();
    let mut shell_rows = Vec::new();
    for n in config.dim_list()? {
        let spec = config.measure_at(n)?;
        let out = experiments::dispatch(config, &spec, workers)?;
        checks.extend(out.checks);
        if let Some(r) = out.result {
            results.push(r);
        }
        shell_rows.extend(out.shell);
    }
    let status = if checks.iter().any(|c| c.status == Status::Fail) { Status::Fail } else { Status::Pass };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION.into(),
        experiment: config.experiment,
        workers,
        config: config.clone(),
        status,
        checks,
        results,
        shell_rows,
    })
}

/// Result of one sweep entry.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub index: usize,
    pub experiment: Experiment,
    pub seed: u64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RunReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub artifact_version: String,
    pub workers: usize,
    pub status: Status,
    pub runs: Vec<SweepEntry>,
}

/// Runs every entry; a failing entry is recorded and the sweep goes on.
/// With `jobs > 1` entries run concurrently; the output order is the input
/// order either way.
pub fn sweep(configs: &[ExperimentConfig], workers: usize, jobs: usize) -> Result<SweepReport> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one run".into()));
    }
    let one = |(index, cfg): (usize, &ExperimentConfig)| {
        let (status, error, report) = match run(cfg, workers) {
            Ok(r) => (if r.failed() { Status::Fail } else { Status::Pass }, None, Some(r)),
            Err(e) => (Status::Fail, Some(e.to_string()), None),
        };
        SweepEntry { index, experiment: cfg.experiment, seed: cfg.seed, status, error, report }
    };
    let runs: Vec<SweepEntry> = if jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| configs.par_iter().enumerate().map(one).collect())
    } else {
        configs.iter().enumerate().map(one).collect()
    };
    let status = if runs.iter().any(|r| r.status == Status::Fail) { Status::Fail } else { Status::Pass };
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION.into(),
        workers,
        status,
        runs,
    })
}

/// CSV next to a JSON report: `report.json` → `report.csv`.
pub fn csv_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

/// Wall-time record next to a JSON report: `report.json` →
/// `report.timing.json`. Kept out of the report so reruns compare equal.
pub fn timing_path(out: &Path) -> PathBuf {
    out.with_extension("timing.json")
}

/// Checks table next to a JSON report: `report.json` → `report.checks.csv`.
pub fn checks_csv_path(out: &Path) -> PathBuf {
    out.with_extension("checks.csv")
}

#[derive(Serialize)]
struct CheckRow<'a> {
    run: usize,
    experiment: String,
    measure: &'a str,
    dim: usize,
    check: &'a str,
    status: Status,
    value: Option<f64>,
    threshold: Option<f64>,
    std_error: f64,
    count: u64,
    seed: u64,
}

fn write_checks_csv(reports: &[(usize, &RunReport)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (run, r) in reports {
        let measure = r.config.measure.get("kind").and_then(|k| k.as_str()).unwrap_or("");
        for c in &r.checks {
            w.serialize(CheckRow {
                run: *run,
                experiment: r.experiment.to_string(),
                measure,
                dim: c.dim,
                check: &c.name,
                status: c.status,
                value: c.value,
                threshold: c.threshold,
                std_error: c.std_error,
                count: c.count,
                seed: c.seed,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes the JSON report and its CSV companions.
pub fn write_report(report: &RunReport, out: &Path) -> Result<()> {
    write_json(report, out)?;
    write_checks_csv(&[(0, report)], &checks_csv_path(out))?;
    if !report.shell_rows.is_empty() {
        shell::write_csv(&report.shell_rows, &csv_path(out))?;
    }
    Ok(())
}

pub fn write_sweep(report: &SweepReport, out: &Path) -> Result<()> {
    write_json(report, out)?;
    let done: Vec<(usize, &RunReport)> =
        report.runs.iter().filter_map(|e| e.report.as_ref().map(|r| (e.index, r))).collect();
    write_checks_csv(&done, &checks_csv_path(out))?;
    let rows: Vec<ShellStats> = done.iter().flat_map(|(_, r)| r.shell_rows.iter().cloned()).collect();
    if !rows.is_empty() {
        shell::write_csv(&rows, &csv_path(out))?;
    }
    Ok(())
}

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Report path; CSV companions are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Worker threads (and random substreams) per experiment.
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,
    /// Sweep entries run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Λ(0) = 0, moments at the origin, tilt identities, Legendre inversion.
    LaplaceCheck(RunArgs),
    /// ∫ det ∇²Λ against the volume of the support.
    Gromov(RunArgs),
    /// [∇²Λ(ξ)]⁻¹ against ∇²Λ*(∇Λ(ξ)), and Ψ against Φ∘∇Λ.
    Duality(RunArgs),
    /// Metric and potential under affine maps and translations.
    Invariance(RunArgs),
    /// Straight-segment lengths against the distance bound.
    Distance(RunArgs),
    /// Thin-shell functionals and E X|X|² (writes CSV).
    Shell(RunArgs),
    /// Third-moment tensor, harmonic part and the sphere-integral bound.
    Harmonics(RunArgs),
    /// The volume chain on K_t.
    Lemma35(RunArgs),
    /// Sectional curvature probes.
    Curvature(RunArgs),
    /// A list of experiments from one file.
    Sweep(SweepArgs),
}

#[derive(Debug, Parser)]
#[command(name = "hgl", version, about = "Riemannian packages of log-concave measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

impl Command {
    fn experiment(&self) -> Option<(Experiment, &RunArgs)> {
        Some(match self {
            Command::LaplaceCheck(a) => (Experiment::LaplaceCheck, a),
            Command::Gromov(a) => (Experiment::Gromov, a),
            Command::Duality(a) => (Experiment::Duality, a),
            Command::Invariance(a) => (Experiment::Invariance, a),
            Command::Distance(a) => (Experiment::Distance, a),
            Command::Shell(a) => (Experiment::Shell, a),
            Command::Harmonics(a) => (Experiment::Harmonics, a),
            Command::Lemma35(a) => (Experiment::Lemma35, a),
            Command::Curvature(a) => (Experiment::Curvature, a),
            Command::Sweep(_) => return None,
        })
    }
}

fn summarize(checks: &[Check]) {
    for c in checks {
        let value = c.value.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Diagnostic => "INFO",
        };
        eprintln!("{status} n={} {} = {value}{}", c.dim, c.name, c.message.as_deref().map(|m| format!(" ({m})")).unwrap_or_default());
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let started = std::time::Instant::now();
    let mut out_path: Option<PathBuf> = None;
    let failed = match &cli.command {
        Command::Sweep(a) => {
            let text = std::fs::read_to_string(&a.config)?;
            let cfg: SweepConfig = parse_with_path(&text)?;
            check_schema(cfg.schema_version)?;
            for r in &cfg.runs {
                r.validate()?;
            }
            let report = sweep(&cfg.runs, a.workers, a.jobs)?;
            for e in &report.runs {
                match (&e.report, &e.error) {
                    (Some(r), _) => summarize(&r.checks),
                    (None, Some(err)) => eprintln!("FAIL run {} ({}): {err}", e.index, e.experiment),
                    _ => {}
                }
            }
            match a.out.clone().or(cfg.output_path.map(PathBuf::from)) {
                Some(out) => {
                    write_sweep(&report, &out)?;
                    out_path = Some(out);
                }
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
            report.status == Status::Fail
        }
        cmd => {
            let (experiment, a) = cmd.experiment().expect("experiment subcommand");
            let cfg = ExperimentConfig::from_path(&a.config)?.with_overrides(&a.overrides)?;
            if cfg.experiment != experiment {
                return Err(Error::Config {
                    path: "experiment".into(),
                    message: format!("config is for `{}` but the subcommand is `{experiment}`", cfg.experiment),
                });
            }
            let report = run(&cfg, a.workers)?;
            summarize(&report.checks);
            match &cfg.output_path {
                Some(out) => {
                    write_report(&report, Path::new(out))?;
                    out_path = Some(PathBuf::from(out));
                }
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
            report.failed()
        }
    };
    let seconds = started.elapsed().as_secs_f64();
    eprintln!("elapsed {seconds:.2} s");
    if let Some(out) = out_path {
        write_json(&serde_json::json!({"wall_time_seconds": seconds}), &timing_path(&out))?;
    }
    Ok(failed)
}

/// Entry point of the binary; returns the process exit code (0 when no
/// check failed, 1 when one did, 2 on errors).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(false) => 0,
        Ok(true) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
