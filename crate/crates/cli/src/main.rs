//! `twocharge`: batch runs of the two-charge problem.
//!
//! Settings come from built-in defaults, then an optional `key = value` file
//! (`--config`), then individual flags. Exit status: 0 success, 1 invalid
//! input, 2 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use config::{parse_list, ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "twocharge", version, about = "Two point charges under retarded and advanced fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write trajectory.csv and summary.txt.
    Simulate(Settings),
    /// Singularity times over a list of mass ratios, written to sweep.csv.
    Sweep {
        /// Comma-separated mass ratios; may be empty.
        #[arg(long, allow_hyphen_values = true)]
        etas: String,
        #[command(flatten)]
        settings: Settings,
    },
    /// Mean distances between consecutive levels, written to compare.csv.
    Compare {
        /// Comma-separated levels, at least two.
        #[arg(long)]
        levels: String,
        #[command(flatten)]
        settings: Settings,
    },
}

/// Flags mirroring the configuration file keys.
#[derive(Args)]
struct Settings {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mass ratio m1/m2.
    #[arg(long)]
    eta: Option<f64>,
    /// Sign of q1 q2 (-1 attracts).
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<i32>,
    /// Retarded weight minus one half, in [-1/2, 1/2].
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Initial separation of the circular orbit.
    #[arg(long)]
    r0: Option<f64>,
    /// Explicit initial state: 12 comma-separated numbers r1,v1,r2,v2.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "r0")]
    state: Option<String>,
    /// Level of the iterated field.
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    v_threshold: Option<f64>,
    #[arg(long)]
    min_separation: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    delay_tol: Option<f64>,
    /// Finite-difference step as a fraction of the separation.
    #[arg(long)]
    dtau_factor: Option<f64>,
    /// `difference` or `exact`.
    #[arg(long)]
    accel: Option<String>,
    /// `per_evaluation` or `none`.
    #[arg(long)]
    cache: Option<String>,
    /// Output directory (default: $TWOCHARGE_OUTPUT_DIR or ./twocharge-out).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write every k-th integration step.
    #[arg(long)]
    stride: Option<usize>,
}

impl Settings {
    fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.load(path)?;
        }
        let flags: [(&str, Option<String>); 16] = [
            ("eta", self.eta.map(|v| v.to_string())),
            ("sign", self.sign.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("r0", self.r0.map(|v| v.to_string())),
            ("state", self.state.clone()),
            ("level", self.level.map(|v| v.to_string())),
            ("v_threshold", self.v_threshold.map(|v| v.to_string())),
            ("min_separation", self.min_separation.map(|v| v.to_string())),
            ("t_max", self.t_max.map(|v| v.to_string())),
            ("abs_tol", self.abs_tol.map(|v| v.to_string())),
            ("rel_tol", self.rel_tol.map(|v| v.to_string())),
            ("delay_tol", self.delay_tol.map(|v| v.to_string())),
            ("dtau_factor", self.dtau_factor.map(|v| v.to_string())),
            ("accel", self.accel.clone()),
            ("cache", self.cache.clone()),
            ("stride", self.stride.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                cfg.set(key, &value)?;
            }
        }
        if let Some(dir) = &self.output {
            cfg.output = dir.clone();
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Simulate(settings) => commands::simulate(&settings.resolve()?),
        Command::Sweep { etas, settings } => {
            let cfg = settings.resolve()?;
            let etas = parse_list::<f64>("etas", &etas)?;
            commands::sweep(&cfg, &etas, cfg.level)
        }
        Command::Compare { levels, settings } => {
            let cfg = settings.resolve()?;
            let levels = parse_list::<usize>("levels", &levels)?;
            commands::compare(&cfg, &levels)
        }
    }
}

fn main() -> ExitCode {
    // clap's own usage errors would exit with 2, which is reserved here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
