//! `wnuc`: weight reports, phase-transition curves, statistical-dimension
//! estimates and spectral sanity checks.
//!
//! Exit codes: 0 success, 1 runtime or numeric failure, 2 configuration error.

mod commands;
mod config;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{ConfigFile, ExperimentConfig, Overrides};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl From<wnuc::Error> for CliError {
    fn from(e: wnuc::Error) -> Self {
        match e {
            wnuc::Error::Config(_) | wnuc::Error::InvalidInstance(_) | wnuc::Error::InvalidWeights(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "wnuc", version, about = "Weighted nuclear-norm recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal weights and predicted thresholds for one prior.
    Weights(Common),
    /// Success rate against measurement count, as CSV (and optionally SVG).
    Phase {
        #[command(flatten)]
        common: Common,
        /// Also write phase.svg (needs --out).
        #[arg(long)]
        svg: bool,
    },
    /// Closed-form thresholds against a Monte-Carlo estimate.
    Sdim(Common),
    /// Marchenko–Pastur and shrinkage-table checks.
    Checks(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    r_prime: Option<usize>,
    /// Comma-separated angles in degrees.
    #[arg(long, value_delimiter = ',')]
    theta_u: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    theta_v: Option<Vec<f64>>,
    /// Comma-separated measurement counts.
    #[arg(long, value_delimiter = ',')]
    m_grid: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, command: &str, default_trials: usize) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(p) => config::read_config(p)?,
            None => ConfigFile::default(),
        };
        let o = Overrides {
            n: self.n,
            r: self.r,
            r_prime: self.r_prime,
            theta_u: self.theta_u.clone(),
            theta_v: self.theta_v.clone(),
            m_grid: self.m_grid.clone(),
            trials: self.trials,
            seed: self.seed,
        };
        ExperimentConfig::resolve(command, file, o, default_trials)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RECOVERY_THREADS") else { return Ok(()) };
    let k: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|k| *k >= 1)
        .ok_or_else(|| CliError::Config(format!("RECOVERY_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn emit_report(out: Option<&Path>, name: &str, report: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    match out {
        Some(dir) => write_file(dir, name, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Weights(c) => {
            let cfg = c.resolve("weights", 50)?;
            emit_report(c.out.as_deref(), "weights.json", &commands::weights(&cfg)?)
        }
        Command::Phase { common: c, svg } => {
            if svg && c.out.is_none() {
                return Err(CliError::Config("--svg needs --out".into()));
            }
            let cfg = c.resolve("phase", 50)?;
            let res = commands::phase(&cfg)?;
            match c.out.as_deref() {
                Some(dir) => {
                    write_file(dir, "phase.csv", &res.csv)?;
                    emit_report(Some(dir), "phase.json", &res.report)?;
                    if svg {
                        write_file(dir, "phase.svg", res.svg.as_bytes())?;
                    }
                }
                None => print!("{}", String::from_utf8_lossy(&res.csv)),
            }
            Ok(())
        }
        Command::Sdim(c) => {
            let cfg = c.resolve("sdim", 50)?;
            emit_report(c.out.as_deref(), "sdim.json", &commands::sdim(&cfg)?)
        }
        Command::Checks(c) => {
            let cfg = c.resolve("checks", 5000)?;
            let (report, csv) = commands::checks(&cfg)?;
            if let Some(dir) = c.out.as_deref() {
                write_file(dir, "checks.csv", &csv)?;
            }
            emit_report(c.out.as_deref(), "checks.json", &report)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("wnuc: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("wnuc: {msg}");
            ExitCode::from(1)
        }
    }
}
