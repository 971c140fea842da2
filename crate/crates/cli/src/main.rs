//! Batch experiment runner for the beam-coordinate mean-radius toolkit.
//!
//! One subcommand per operation family; a TOML config file supplies the
//! experiment parameters and the flags override its top-level knobs. Every
//! run writes its payload files plus a manifest named by the config hash.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{FileConfig, OutputFormat, Resolved};
use output::{write_all, RunOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration or arguments (exit code 2).
    #[error("{0}")]
    Config(String),
    /// Numerical estimation failure (exit code 3).
    #[error("{0}")]
    Numerical(String),
}

impl From<qcbeam::Error> for CliError {
    fn from(e: qcbeam::Error) -> Self {
        match e {
            qcbeam::Error::Estimation(_) | qcbeam::Error::Degenerate(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qcbeam",
    version,
    about = "Experiments on the mean-radius growth of quasiconformal maps"
)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: results).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed; mandatory for stochastic experiments.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo effort: samples per volume, triples, or per-box samples.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Worker thread cap (0 = library default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// List the built-in map catalog and the builder families.
    Zoo,
    /// Logarithmic mean-radius curve over a height grid.
    RhoCurve,
    /// Difference quotients, slopes and the bi-Lipschitz bracket.
    Dq,
    /// Slice integrals of the area-power integrand with a trend verdict.
    Bip,
    /// Box subdivision of a slab with ratio ranges and bound chains.
    Subdivide,
    /// Weak quasisymmetry sampling in the beam metric.
    Qs,
    /// Image size of a horizontal slice across resolutions.
    SliceSize,
    /// Asymptotic representative with residuals against the map.
    AsymRep,
    /// Rescaled boundary restrictions along shrinking radii.
    GenDerivative,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Zoo => "zoo",
            Command::RhoCurve => "rho-curve",
            Command::Dq => "dq",
            Command::Bip => "bip",
            Command::Subdivide => "subdivide",
            Command::Qs => "qs",
            Command::SliceSize => "slice-size",
            Command::AsymRep => "asym-rep",
            Command::GenDerivative => "gen-derivative",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = match &e {
                CliError::Config(_) => ("config", 2),
                CliError::Numerical(_) => ("numerical", 3),
            };
            eprintln!(
                "{}",
                serde_json::json!({ "error": kind, "message": e.to_string() })
            );
            ExitCode::from(code)
        }
    }
}

fn real_main(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let command = cli.command;
    if let Command::Zoo = command {
        print!("{}", run::run_zoo()?);
        return Ok(());
    }

    let threads = cli.threads.or(file.threads).unwrap_or(0);
    if threads > 0 {
        // Ignore re-initialization: the pool is process-global.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let map_spec = file.map.clone().unwrap_or_default();
    let (params, runner): (serde_json::Value, RunnerFn) = match command {
        Command::Zoo => unreachable!(),
        Command::RhoCurve => {
            let s = file.rho_curve.clone().unwrap_or_default();
            (to_params(&s)?, Box::new(move |r| run::run_rho_curve(r, &s)))
        }
        Command::Dq => {
            let s = file.dq.clone().unwrap_or_default();
            (to_params(&s)?, Box::new(move |r| run::run_dq(r, &s)))
        }
        Command::Bip => {
            let s = file.bip.clone().unwrap_or_default();
            (to_params(&s)?, Box::new(move |r| run::run_bip(r, &s)))
        }
        Command::Subdivide => {
            let s = file.subdivide.clone().unwrap_or_default();
            (to_params(&s)?, Box::new(move |r| run::run_subdivide(r, &s)))
        }
        Command::Qs => {
            let s = file.qs.clone().unwrap_or_default();
            (to_params(&s)?, Box::new(move |r| run::run_qs(r, &s)))
        }
        Command::SliceSize => {
            let s = file.slice_size.clone().unwrap_or_default();
            (to_params(&s)?, Box::new(move |r| run::run_slice_size(r, &s)))
        }
        Command::AsymRep => {
            let s = file.asym_rep.clone().unwrap_or_default();
            (to_params(&s)?, Box::new(move |r| run::run_asym_rep(r, &s)))
        }
        Command::GenDerivative => {
            let s = file.gen_derivative.clone().unwrap_or_default();
            (
                to_params(&s)?,
                Box::new(move |r| run::run_gen_derivative(r, &s)),
            )
        }
    };

    let resolved = Resolved {
        command: command.name().to_string(),
        map: map_spec,
        seed: cli.seed.or(file.seed),
        budget: cli.budget.or(file.budget).unwrap_or(1 << 16),
        format: cli.format.or(file.format).unwrap_or(OutputFormat::Csv),
        params,
        out: cli
            .out
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("results")),
        threads,
    };

    let started = Instant::now();
    let output = runner(&resolved)?;
    let compute_ms = started.elapsed().as_millis();
    let paths = write_all(&resolved, &output, compute_ms)?;
    for p in &paths {
        println!("{}", p.display());
    }
    if output.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{} estimation failure(s); partial results written",
            output.failures.len()
        )))
    }
}

type RunnerFn = Box<dyn FnOnce(&Resolved) -> Result<RunOutput, CliError>>;

fn to_params<S: serde::Serialize>(s: &S) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(s).map_err(|e| CliError::Config(format!("config serialization: {e}")))
}
