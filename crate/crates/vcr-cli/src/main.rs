//! `vcr` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 missing
//! prerequisite, 4 a benchmark condition failed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{DatasetKind, RunConfig, Suite};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("missing prerequisite: {0}")]
    Missing(String),
    #[error("failed: {0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Failed(_) => 4,
        }
    }
}

impl From<vcr::synthgen::SynthError> for CliError {
    fn from(e: vcr::synthgen::SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<vcr::toy_lmm::ModelError> for CliError {
    fn from(e: vcr::toy_lmm::ModelError) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<vcr::ranking::VcrError> for CliError {
    fn from(e: vcr::ranking::VcrError) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<vcr::evaluation::EvalError> for CliError {
    fn from(e: vcr::evaluation::EvalError) -> Self {
        CliError::Failed(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "vcr", version, about = "Visual concept ranking on synthetic benchmarks")]
struct Cli {
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed from which every section seed is derived.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; the VCR_OUT environment variable takes precedence.
    #[arg(long, global = true, default_value = "vcr-out")]
    out: PathBuf,
    /// Worker threads for benchmark conditions.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Report the five-component timing breakdown of an audit.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a dataset to PPM images with CSV manifests.
    Generate {
        #[arg(long, value_enum)]
        kind: Option<DatasetKind>,
        #[arg(long)]
        pair: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        rho_a: Option<f64>,
    },
    /// Fine-tune a fresh model on the generated training set.
    Train {
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Rank concepts for the trained model on the generated test set.
    Audit {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Run benchmark suites on freshly generated data.
    Benchmark {
        #[arg(long, value_enum, value_delimiter = ',')]
        suites: Option<Vec<Suite>>,
        /// Replicates for the grid and adversarial suites.
        #[arg(long)]
        replicates: Option<usize>,
        /// Comma-separated pair ids for the grid and adversarial suites.
        #[arg(long, value_delimiter = ',')]
        pairs: Option<Vec<String>>,
        /// Training epochs for the grid and adversarial suites.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Rebuild summaries and charts from results on disk.
    Report,
}

fn parse_pair(s: &str) -> Result<vcr::synthgen::FeaturePair, CliError> {
    s.parse().map_err(CliError::Config)
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.derive_seeds();
    match &cli.command {
        Command::Generate { kind, pair, rho_a } => {
            if let Some(k) = kind {
                cfg.generate.kind = *k;
            }
            if let Some(p) = pair {
                cfg.generate.pair = parse_pair(p)?;
            }
            if let Some(r) = rho_a {
                cfg.generate.rho_a = *r;
            }
        }
        Command::Train { epochs } => {
            if let Some(e) = epochs {
                cfg.train.train.epochs = *e;
            }
        }
        Command::Audit { k, bootstrap } => {
            if let Some(k) = k {
                cfg.audit.k = *k;
            }
            if let Some(b) = bootstrap {
                cfg.audit.vcr.bootstrap_b = *b;
            }
        }
        Command::Benchmark { suites, replicates, pairs, epochs } => {
            let b = &mut cfg.benchmark;
            if let Some(s) = suites {
                b.suites = s.clone();
            }
            if let Some(r) = replicates {
                b.grid.replicates = *r;
                b.adversarial.replicates = *r;
            }
            if let Some(ps) = pairs {
                let ps = ps.iter().map(|p| parse_pair(p)).collect::<Result<Vec<_>, _>>()?;
                b.grid.pairs = ps.clone();
                b.adversarial.pairs = ps.into_iter().filter(|p| !p.is_positional()).collect();
            }
            if let Some(e) = epochs {
                b.grid.train.epochs = *e;
                b.adversarial.train.epochs = *e;
            }
        }
        Command::Report => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    let out = std::env::var_os("VCR_OUT").map(PathBuf::from).unwrap_or_else(|| cli.out.clone());
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Generate { .. } => commands::generate(&cfg, &out),
        Command::Train { .. } => commands::train(&cfg, &out),
        Command::Audit { .. } => commands::audit(&cfg, &out, cli.timing),
        Command::Benchmark { .. } => commands::benchmark(&cfg, &out),
        Command::Report => commands::report_cmd(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vcr: {e}");
            ExitCode::from(e.code())
        }
    }
}
