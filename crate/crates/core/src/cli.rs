//! Command-line front end shared by the `radwalk` binary and the tests.
//!
//! Exit statuses: 0 success, 1 configuration or input error, 2 solver
//! error, 3 denoiser error.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use glam::DVec3;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boundary_field::{read_samples_csv, ProxyField};
use crate::config::{ConfigError, DenoiseMode, DenoiseSection, SolverConfig};
use crate::picard::{run_picard, snapshot_name, PicardHistory};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "RADWALK_THREADS";
pub const DEFAULT_OUTPUT_DIR: &str = "radwalk_out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("denoiser failed: {0}")]
    Denoiser(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Denoiser(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "radwalk", version, about = "Walk-on-stars solver for nonlinear radiative boundary problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's output_dir.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Replaces estimator.seed.
    #[arg(long, global = true)]
    pub seed_override: Option<u64>,
    /// Worker threads; falls back to RADWALK_THREADS, then all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the Picard iteration and export snapshots, metrics and a manifest.
    Solve,
    /// Like solve, plus an iteration × MSE table against the exact solution.
    Bench,
    /// Evaluate the final proxy of a finished run at given points.
    Query {
        /// CSV with header x,y,z.
        #[arg(long)]
        points: PathBuf,
        /// Run directory; defaults to the output directory.
        #[arg(long)]
        run_dir: Option<PathBuf>,
        /// Destination CSV; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Invoke the external denoiser on a snapshot file.
    #[command(alias = "denoise-passthrough")]
    Denoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        epochs: Option<u32>,
        #[arg(long, value_parser = ["hetero", "homo"])]
        mode: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Denoiser executable; defaults to the config's denoise.command.
        #[arg(long)]
        command: Option<String>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let threads = thread_count(cli.global.threads)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Input(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Solve => cmd_solve(&cli.global).map(|_| ()),
        Command::Bench => cmd_bench(&cli.global),
        Command::Query { points, run_dir, output } => {
            cmd_query(&cli.global, points, run_dir.as_deref(), output.as_deref())
        }
        Command::Denoise {
            input,
            output,
            beta,
            epochs,
            mode,
            seed,
            command,
        } => {
            let mut job = match &cli.global.config {
                Some(path) => SolverConfig::load(path)?.denoise,
                None => DenoiseSection::default(),
            };
            if let Some(b) = beta {
                job.beta = *b;
            }
            if let Some(e) = epochs {
                job.epochs = *e;
            }
            if let Some(m) = mode {
                job.mode = if m == "homo" { DenoiseMode::Homo } else { DenoiseMode::Hetero };
            }
            if let Some(s) = seed {
                job.seed = *s;
            }
            if let Some(c) = command {
                job.command = c.clone();
            }
            run_denoiser(&job, input, output)
        }
    })
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Input(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            ),
            _ => None,
        },
    };
    match n {
        Some(0) => Err(CliError::Input("thread count must be >= 1".into())),
        n => Ok(n),
    }
}

/// Config with command-line overrides applied.
fn effective_config(global: &GlobalArgs) -> Result<(SolverConfig, PathBuf), CliError> {
    let path = global
        .config
        .as_ref()
        .ok_or_else(|| CliError::Input("--config is required".into()))?;
    let mut cfg = SolverConfig::load(path)?;
    if let Some(seed) = global.seed_override {
        cfg.estimator.seed = seed;
    }
    let out = global
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    Ok((cfg, out))
}

#[derive(Debug, Serialize)]
struct Manifest {
    config_sha256: String,
    seed: u64,
    scenario: String,
    iterations: usize,
    scale_factor: f64,
    snapshots: Vec<String>,
    metrics: String,
    denoised: Option<String>,
    versions: Versions,
}

#[derive(Debug, Serialize)]
struct Versions {
    radwalk: &'static str,
    config_format: u32,
}

pub struct SolveOutcome {
    pub history: PicardHistory,
    pub output_dir: PathBuf,
    /// Path of the denoised final snapshot, when denoising ran and succeeded.
    pub denoised: Option<PathBuf>,
    pub config: SolverConfig,
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Solver(format!("cannot write {}: {e}", path.display()))
}

fn scenario_name(cfg: &SolverConfig) -> String {
    let value = toml::Value::try_from(&cfg.scenario).expect("scenario serializes");
    value
        .get("type")
        .and_then(|t| t.as_str())
        .unwrap_or("unknown")
        .to_string()
}

/// Runs the configured problem and writes all artifacts. A denoiser failure
/// still leaves the solver artifacts and manifest on disk.
pub fn cmd_solve(global: &GlobalArgs) -> Result<SolveOutcome, CliError> {
    let (cfg, out) = effective_config(global)?;
    let scene = Arc::new(cfg.scene()?);
    let problem = cfg.problem(scene.clone());
    let picard = cfg.picard(&scene, &problem)?;
    let reference = problem.reference.clone();
    let history = run_picard(
        &scene,
        &problem.bc,
        &picard,
        reference.as_ref().map(|f| f.as_ref() as &(dyn Fn(DVec3) -> f64 + Sync)),
    )
    .map_err(|e| CliError::Solver(e.to_string()))?;

    history
        .export(&out)
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let effective = toml::to_string(&cfg).expect("config serializes");
    let config_path = out.join("config.toml");
    std::fs::write(&config_path, &effective).map_err(io_error(&config_path))?;

    let mut denoise_result = Ok(None);
    if cfg.denoise.enabled {
        let last = out.join(snapshot_name(history.iterations()));
        let target = out.join(denoised_name(history.iterations()));
        denoise_result = run_denoiser(&cfg.denoise, &last, &target).map(|()| Some(target));
    }
    let denoised = denoise_result.as_ref().ok().cloned().flatten();

    let manifest = Manifest {
        config_sha256: format!("{:x}", Sha256::digest(effective.as_bytes())),
        seed: cfg.estimator.seed,
        scenario: scenario_name(&cfg),
        iterations: history.iterations(),
        scale_factor: history.scale,
        snapshots: (0..history.snapshots.len()).map(snapshot_name).collect(),
        metrics: "metrics.json".into(),
        denoised: denoised
            .as_ref()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned()),
        versions: Versions {
            radwalk: env!("CARGO_PKG_VERSION"),
            config_format: 1,
        },
    };
    let manifest_path = out.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, json + "\n").map_err(io_error(&manifest_path))?;
    denoise_result?;
    Ok(SolveOutcome {
        history,
        output_dir: out,
        denoised,
        config: cfg,
    })
}

pub fn denoised_name(iteration: usize) -> String {
    format!("iter_{iteration:03}_denoised.csv")
}

/// One row of the benchmark table.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub label: String,
    pub mse: f64,
    /// Cumulative solver wall time, mesh loading excluded.
    pub seconds: f64,
}

/// Iteration rows from a finished history; every metric needs an MSE.
pub fn bench_rows(history: &PicardHistory) -> Result<Vec<BenchRow>, CliError> {
    let mut elapsed = 0.0;
    history
        .metrics
        .iter()
        .map(|m| {
            elapsed += m.seconds;
            let mse = m
                .mse
                .ok_or_else(|| CliError::Input("bench needs a scenario with an exact solution".into()))?;
            Ok(BenchRow {
                label: m.iteration.to_string(),
                mse,
                seconds: elapsed,
            })
        })
        .collect()
}

pub fn write_bench_table(path: &Path, rows: &[BenchRow]) -> Result<(), CliError> {
    let mut text = String::from("iteration,mse,runtime_s\n");
    for r in rows {
        text += &format!("{},{},{}\n", r.label, r.mse, r.seconds);
    }
    std::fs::write(path, text).map_err(io_error(path))
}

pub fn write_mse_vs_time(path: &Path, rows: &[BenchRow]) -> Result<(), CliError> {
    let mut text = String::from("seconds,mse\n");
    for r in rows {
        text += &format!("{},{}\n", r.seconds, r.mse);
    }
    std::fs::write(path, text).map_err(io_error(path))
}

/// Solve, then tabulate MSE per iteration (and for the denoised field).
pub fn cmd_bench(global: &GlobalArgs) -> Result<(), CliError> {
    let (cfg, _) = effective_config(global)?;
    let scene = Arc::new(cfg.scene()?);
    let Some(reference) = cfg.problem(scene).reference else {
        return Err(CliError::Input(
            "scenario.type: bench needs a scenario with an exact solution".into(),
        ));
    };
    let start = Instant::now();
    let outcome = cmd_solve(global);
    let total = start.elapsed().as_secs_f64();
    let outcome = outcome?;
    let mut rows = bench_rows(&outcome.history)?;
    if let Some(path) = &outcome.denoised {
        let samples = read_samples_csv(path).map_err(|e| CliError::Denoiser(e.to_string()))?;
        if samples.is_empty() {
            return Err(CliError::Denoiser(format!("{} holds no samples", path.display())));
        }
        let mse = samples
            .iter()
            .map(|s| (s.value - reference(s.position)).powi(2))
            .sum::<f64>()
            / samples.len() as f64;
        rows.push(BenchRow {
            label: "denoised".into(),
            mse,
            seconds: total,
        });
    }
    let dir = &outcome.output_dir;
    write_bench_table(&dir.join("bench_table.csv"), &rows)?;
    write_mse_vs_time(&dir.join("mse_vs_time.csv"), &rows)?;
    for r in &rows {
        println!("{:>9}  mse {:.6e}  {:.1}s", r.label, r.mse, r.seconds);
    }
    Ok(())
}

/// Highest-numbered `iter_XXX.csv` in `dir`.
pub fn final_snapshot(dir: &Path) -> Result<PathBuf, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Input(format!("run directory {}: {e}", dir.display())))?;
    let mut best: Option<(usize, PathBuf)> = None;
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(n) = name
            .strip_prefix("iter_")
            .and_then(|r| r.strip_suffix(".csv"))
            .and_then(|r| r.parse::<usize>().ok())
        else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| n > *b) {
            best = Some((n, entry.path()));
        }
    }
    best.map(|(_, p)| p)
        .ok_or_else(|| CliError::Input(format!("no snapshots in {}", dir.display())))
}

/// Reads `x,y,z` rows. An empty file yields no points.
pub fn read_points_csv(path: &Path) -> Result<Vec<DVec3>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let err = |line: u64, reason: String| CliError::Input(format!("{}:{line}: {reason}", path.display()));
    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    if headers.iter().take(3).collect::<Vec<_>>() != ["x", "y", "z"] {
        return Err(err(1, "expected header x,y,z".into()));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut c = [0.0; 3];
        for (k, v) in c.iter_mut().enumerate() {
            let s = record.get(k).unwrap_or("");
            *v = s
                .parse()
                .map_err(|_| err(line, format!("column {k} is not a number: {s:?}")))?;
        }
        out.push(DVec3::from_array(c));
    }
    Ok(out)
}

/// Evaluates the final proxy of a run at the points in `points`.
pub fn cmd_query(
    global: &GlobalArgs,
    points: &Path,
    run_dir: Option<&Path>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let (cfg, out) = effective_config(global)?;
    let queries = read_points_csv(points)?;
    let mut text = String::new();
    if !queries.is_empty() {
        let snapshot = final_snapshot(run_dir.unwrap_or(&out))?;
        let samples = read_samples_csv(&snapshot).map_err(|e| CliError::Input(e.to_string()))?;
        let field = ProxyField::build(samples, cfg.mls()).map_err(|e| CliError::Input(e.to_string()))?;
        text.push_str("x,y,z,value\n");
        for q in &queries {
            text += &format!("{},{},{},{}\n", q.x, q.y, q.z, field.eval_mls(*q));
        }
    }
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(e.to_string())),
    }
}

/// Shells out to the denoiser; any failure is a `Denoiser` error.
pub fn run_denoiser(job: &DenoiseSection, input: &Path, output: &Path) -> Result<(), CliError> {
    let status = Process::new(&job.command)
        .arg("--input")
        .arg(input)
        .arg("--output")
        .arg(output)
        .args(["--beta", &job.beta.to_string()])
        .args(["--epochs", &job.epochs.to_string()])
        .args(["--mode", job.mode.as_str()])
        .args(["--seed", &job.seed.to_string()])
        .status()
        .map_err(|e| CliError::Denoiser(format!("cannot start {:?}: {e}", job.command)))?;
    if !status.success() {
        return Err(CliError::Denoiser(format!("{:?} exited with {status}", job.command)));
    }
    if !output.is_file() {
        return Err(CliError::Denoiser(format!("{} was not written", output.display())));
    }
    Ok(())
}
