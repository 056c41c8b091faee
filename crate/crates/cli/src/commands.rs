//! The three subcommands.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use twocharge_core::{
    linear_fit, singularity_time, trajectory, trajectory_distance, Trajectory, DEFAULT_DISTANCE_POINTS,
};

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, SweepRow};

/// Why a command failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad input, including unreadable files or unwritable output (status 1).
    Config(ConfigError),
    /// The numerics gave up (status 2).
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "invalid configuration: {e}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    output::write_atomic(path, contents)
        .map_err(|e| Failure::Config(ConfigError(format!("cannot write {}: {e}", path.display()))))
}

/// Runs one configured trajectory. A failed run still returns what was
/// computed before the failure.
fn run(cfg: &RunConfig, level: usize) -> Result<(Trajectory, Option<String>), Failure> {
    let params = cfg.params()?;
    let x0 = cfg.initial_state(&params)?;
    let stop = cfg.stop()?;
    let level_cfg = cfg.level_config(level)?;
    match trajectory(level, &x0, &params, &level_cfg, stop) {
        Ok(tr) => Ok((tr, None)),
        Err(f) => match f.partial {
            Some(p) if f.error.is_validation() => Err(Failure::Config(ConfigError(format!(
                "{} (level {} stopped at t = {})",
                f.error,
                p.level,
                p.span().1
            )))),
            Some(p) => {
                let message = f.error.to_string();
                Ok((p, Some(message)))
            }
            None if f.error.is_validation() => Err(Failure::Config(ConfigError(f.error.to_string()))),
            None => Err(Failure::Numerical(f.error.to_string())),
        },
    }
}

fn summary(cfg: &RunConfig, tr: &Trajectory, error: Option<&str>) -> String {
    let mut lines = vec!["# twocharge simulate".to_string()];
    lines.extend(cfg.to_lines());
    let end = tr.segment.final_state();
    lines.push(format!(
        "termination = {}",
        if error.is_some() { "failed".to_string() } else { tr.termination.reason.to_string() }
    ));
    lines.push(format!("t_end = {}", output::float(tr.span().1)));
    if let Ok(t) = singularity_time(tr, cfg.v_threshold) {
        if error.is_none() {
            lines.push(format!("t_n = {}", output::float(t)));
        }
    }
    lines.push(format!("knots = {}", tr.segment.knots().len()));
    lines.push(format!("evaluations = {}", tr.segment.evaluations()));
    lines.push(format!(
        "final_state = {}",
        end.to_array().iter().map(|v| output::float(*v)).collect::<Vec<_>>().join(",")
    ));
    lines.push(format!("final_separation = {}", output::float(end.separation())));
    lines.push(format!("final_max_speed = {}", output::float(end.max_speed())));
    if let Some(e) = error {
        lines.push(format!("error = {e}"));
    }
    lines.join("\n") + "\n"
}

/// Writes `trajectory.csv` and `summary.txt` into the output directory.
pub fn simulate(cfg: &RunConfig) -> Result<String, Failure> {
    cfg.validate()?;
    let (tr, error) = run(cfg, cfg.level)?;
    write(&cfg.output.join("trajectory.csv"), &output::trajectory_csv(&tr, cfg.stride))?;
    let text = summary(cfg, &tr, error.as_deref());
    write(&cfg.output.join("summary.txt"), &text)?;
    match error {
        Some(e) => Err(Failure::Numerical(format!("{e} (partial output written to {})", cfg.output.display()))),
        None => Ok(text),
    }
}

fn sweep_row(cfg: &RunConfig, eta: f64, level: usize) -> SweepRow {
    let outcome = (|| {
        let row_cfg = cfg.with_eta(eta);
        row_cfg.validate().map_err(|e| e.to_string())?;
        match run(&row_cfg, level) {
            Ok((tr, None)) => singularity_time(&tr, cfg.v_threshold).map_err(|e| e.to_string()),
            Ok((_, Some(e))) => Err(e),
            Err(f) => Err(f.to_string()),
        }
    })();
    SweepRow { eta, level, outcome }
}

/// Singularity times over a list of mass ratios, with a least-squares line
/// through the successful rows. Rows run in parallel.
pub fn sweep(cfg: &RunConfig, etas: &[f64], level: usize) -> Result<String, Failure> {
    let rows: Vec<SweepRow> = etas.par_iter().map(|&eta| sweep_row(cfg, eta, level)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|t| (r.eta, *t)))
        .unzip();
    let fit = (!rows.is_empty()).then(|| linear_fit(&xs, &ys).map_err(|e| e.to_string()));
    let text = output::sweep_csv(&rows, fit);
    write(&cfg.output.join("sweep.csv"), &text)?;
    Ok(text)
}

/// Distances between consecutive levels. Runs that stall contribute the part
/// computed before the stall; the common time range shrinks accordingly.
pub fn compare(cfg: &RunConfig, levels: &[usize]) -> Result<String, Failure> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() < 2 {
        return Err(Failure::Config(ConfigError("compare needs at least two distinct levels".into())));
    }
    cfg.validate()?;
    let runs: Vec<(Trajectory, Option<String>)> =
        levels.par_iter().map(|&n| run(cfg, n)).collect::<Result<_, _>>()?;
    for (tr, error) in &runs {
        if let Some(e) = error {
            eprintln!("warning: level {} ended early at t = {}: {e}", tr.level, tr.span().1);
        }
    }
    let rows = runs
        .windows(2)
        .map(|w| trajectory_distance(&w[0].0, &w[1].0, None, DEFAULT_DISTANCE_POINTS))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    let text = output::distance_csv(&rows);
    write(&cfg.output.join("compare.csv"), &text)?;
    Ok(text)
}
