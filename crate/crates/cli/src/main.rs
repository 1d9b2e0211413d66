//! `pathmeasure`: run one experiment from a JSON config and write its
//! artifacts plus a manifest.

mod config;
mod error;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use config::{Experiment, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pathmeasure",
    version,
    about = "Boundary-condition measures on classical path spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for parallel loops.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment named in the config.
    Run,
    /// Sample digit sequences and their zero frequencies.
    Bernoulli,
    /// Integrate a trajectory.
    Propagate,
    /// Shoot every branch between two endpoints and build the semiclassical density.
    Semiclassical,
    /// Two-slit fringe profile.
    Fringes,
    /// Deflection function and cross-section table.
    Scatter,
    /// Least-action decay vertex.
    Decay,
    /// Collision densities: covariances and transport residuals.
    Correlate,
}

impl Command {
    fn experiment(&self) -> Option<Experiment> {
        Some(match self {
            Command::Run => return None,
            Command::Bernoulli => Experiment::Bernoulli,
            Command::Propagate => Experiment::Propagate,
            Command::Semiclassical => Experiment::Semiclassical,
            Command::Fringes => Experiment::Fringes,
            Command::Scatter => Experiment::Scatter,
            Command::Decay => Experiment::Decay,
            Command::Correlate => Experiment::Correlate,
        })
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<PathBuf, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig {
            experiment: None,
            parameters: json!({}),
            output_dir: None,
            seed: None,
        },
    };
    let experiment = match (cli.command.experiment(), cfg.experiment) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::validation(format!(
                "field `experiment`: config names `{}` but the `{}` subcommand was invoked",
                b.name(),
                a.name()
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => {
            return Err(CliError::validation(
                "field `experiment`: missing (required by `run`)",
            ))
        }
    };
    cfg.experiment = Some(experiment);
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.output.is_some() {
        cfg.output_dir = cli.output.clone();
    }
    let seed = cfg.seed.unwrap_or(0);
    cfg.seed = Some(seed);
    let out_dir = cfg
        .output_dir
        .clone()
        .ok_or_else(|| CliError::validation("field `output_dir`: missing (or pass --output)"))?;
    if cli.threads == 0 {
        return Err(CliError::validation("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::io(format!("thread pool: {e}")))?;

    let canonical = serde_json::to_vec(&cfg).expect("config serializes");
    log::info!(
        "running {} with seed {seed} on {} thread(s)",
        experiment.name(),
        cli.threads
    );
    let started = Instant::now();
    let report = experiments::run(experiment, &cfg.parameters, seed)?;
    let wall = started.elapsed().as_secs_f64();

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::io(format!("{}: {e}", out_dir.display())))?;
    let mut listed = Vec::new();
    for a in &report.artifacts {
        write(&out_dir.join(&a.name), &a.bytes)?;
        log::debug!("wrote {} ({} bytes)", a.name, a.bytes.len());
        listed.push(
            json!({ "path": a.name, "sha256": sha256_hex(&a.bytes), "bytes": a.bytes.len() }),
        );
    }
    let manifest = json!({
        "tool": "pathmeasure",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment.name(),
        "seed": seed,
        "threads": cli.threads,
        "config_sha256": sha256_hex(&canonical),
        "wall_time_seconds": wall,
        "artifacts": listed,
        "summary": report.summary,
    });
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    let path = out_dir.join("manifest.json");
    write(&path, &bytes)?;
    Ok(path)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PATHMEASURE_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
