//! Run configuration: a `key = value` file overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use twocharge_core::{
    circular_initial_condition, make_params, AccelSource, CachePolicy, LevelConfig, StateVector, StopCondition,
    SystemParams, Tolerances,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "TWOCHARGE_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "twocharge-out";

/// A problem with the user's input. Maps to exit status 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Circular { r0: f64 },
    Explicit(StateVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eta: f64,
    pub sign: i32,
    pub alpha: f64,
    pub ic: InitialCondition,
    pub level: usize,
    pub v_threshold: f64,
    pub min_separation: f64,
    pub t_max: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub delay_tol: f64,
    pub dtau_factor: f64,
    pub accel: AccelSource,
    pub cache: CachePolicy,
    pub output: PathBuf,
    pub stride: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let level = LevelConfig::default();
        let stop = StopCondition::default();
        Self {
            eta: 1.0,
            sign: -1,
            alpha: 0.5,
            ic: InitialCondition::Circular { r0: 50.0 },
            level: 0,
            v_threshold: stop.v_threshold,
            min_separation: stop.min_separation,
            t_max: stop.t_limit,
            abs_tol: level.tolerances.integration.abs,
            rel_tol: level.tolerances.integration.rel,
            delay_tol: level.tolerances.delay_tol,
            dtau_factor: level.tolerances.dtau_factor,
            accel: level.accel,
            cache: level.cache,
            output: std::env::var_os(OUTPUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            stride: 1,
        }
    }
}

fn number(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| bad(format!("{key}: '{value}' is not a number")))
}

fn count(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| bad(format!("{key}: '{value}' is not a non-negative integer")))
}

/// Twelve comma-separated numbers `r1, v1, r2, v2`.
pub fn parse_state(value: &str) -> Result<StateVector, ConfigError> {
    let xs: Vec<f64> = value
        .split(',')
        .map(|s| number("state", s))
        .collect::<Result<_, _>>()?;
    let a: [f64; 12] = xs
        .try_into()
        .map_err(|v: Vec<f64>| bad(format!("state: expected 12 numbers, got {}", v.len())))?;
    Ok(StateVector::from_array(&a))
}

/// Comma-separated list; an empty string is an empty list.
pub fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| bad(format!("{key}: cannot parse '{s}'"))))
        .collect()
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key.trim() {
            "eta" => self.eta = number(key, value)?,
            "sign" => {
                self.sign = value
                    .parse()
                    .map_err(|_| bad(format!("sign: '{value}' must be -1 or 1")))?
            }
            "alpha" => self.alpha = number(key, value)?,
            "r0" => self.ic = InitialCondition::Circular { r0: number(key, value)? },
            "state" => self.ic = InitialCondition::Explicit(parse_state(value)?),
            "level" => self.level = count(key, value)?,
            "v_threshold" => self.v_threshold = number(key, value)?,
            "min_separation" => self.min_separation = number(key, value)?,
            "t_max" => self.t_max = number(key, value)?,
            "abs_tol" => self.abs_tol = number(key, value)?,
            "rel_tol" => self.rel_tol = number(key, value)?,
            "delay_tol" => self.delay_tol = number(key, value)?,
            "dtau_factor" => self.dtau_factor = number(key, value)?,
            "accel" => {
                self.accel = match value {
                    "difference" => AccelSource::ForwardDifference,
                    "exact" => AccelSource::Exact,
                    _ => return Err(bad(format!("accel: '{value}' must be 'difference' or 'exact'"))),
                }
            }
            "cache" => {
                self.cache = match value {
                    "per_evaluation" => CachePolicy::PerEvaluation,
                    "none" => CachePolicy::None,
                    _ => return Err(bad(format!("cache: '{value}' must be 'per_evaluation' or 'none'"))),
                }
            }
            "output" => self.output = PathBuf::from(value),
            "stride" => {
                self.stride = count(key, value)?;
                if self.stride == 0 {
                    return Err(bad("stride: must be at least 1"));
                }
            }
            other => return Err(bad(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    /// Reads a configuration file on top of the current values. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn load(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("{}:{}: expected 'key = value'", path.display(), i + 1)))?;
            self.set(key, value)
                .map_err(|e| bad(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SystemParams, ConfigError> {
        make_params(self.eta, self.sign, self.alpha).map_err(|e| bad(e.to_string()))
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        Self { eta, ..self.clone() }
    }

    pub fn initial_state(&self, params: &SystemParams) -> Result<StateVector, ConfigError> {
        let x = match &self.ic {
            InitialCondition::Circular { r0 } => circular_initial_condition(params, *r0),
            InitialCondition::Explicit(x) => Ok(*x),
        }
        .map_err(|e| bad(e.to_string()))?;
        x.validate().map_err(|e| bad(e.to_string()))?;
        Ok(x)
    }

    pub fn stop(&self) -> Result<StopCondition, ConfigError> {
        StopCondition::new(self.v_threshold, self.min_separation, self.t_max).map_err(|e| bad(e.to_string()))
    }

    pub fn level_config(&self, level: usize) -> Result<LevelConfig, ConfigError> {
        let mut cfg = LevelConfig::new(level);
        cfg.tolerances.integration = Tolerances::new(self.abs_tol, self.rel_tol).map_err(|e| bad(e.to_string()))?;
        cfg.tolerances.delay_tol = self.delay_tol;
        cfg.tolerances.dtau_factor = self.dtau_factor;
        cfg.accel = self.accel;
        cfg.cache = self.cache;
        cfg.validate().map_err(|e| bad(e.to_string()))?;
        Ok(cfg)
    }

    /// Checks everything a run needs before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let params = self.params()?;
        self.initial_state(&params)?;
        self.stop()?;
        self.level_config(self.level)?;
        Ok(())
    }

    /// `key = value` lines reproducing this configuration.
    pub fn to_lines(&self) -> Vec<String> {
        let ic = match &self.ic {
            InitialCondition::Circular { r0 } => format!("r0 = {r0}"),
            InitialCondition::Explicit(x) => format!(
                "state = {}",
                x.to_array().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ),
        };
        vec![
            format!("eta = {}", self.eta),
            format!("sign = {}", self.sign),
            format!("alpha = {}", self.alpha),
            ic,
            format!("level = {}", self.level),
            format!("v_threshold = {}", self.v_threshold),
            format!("min_separation = {}", self.min_separation),
            format!("t_max = {}", self.t_max),
            format!("abs_tol = {}", self.abs_tol),
            format!("rel_tol = {}", self.rel_tol),
            format!("delay_tol = {}", self.delay_tol),
            format!("dtau_factor = {}", self.dtau_factor),
            format!(
                "accel = {}",
                match self.accel {
                    AccelSource::ForwardDifference => "difference",
                    AccelSource::Exact => "exact",
                }
            ),
            format!(
                "cache = {}",
                match self.cache {
                    CachePolicy::PerEvaluation => "per_evaluation",
                    CachePolicy::None => "none",
                }
            ),
            format!("stride = {}", self.stride),
        ]
    }
}
