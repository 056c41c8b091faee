use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller-supplied value is outside its admissible range.
    #[error("invalid {name}: {reason}")]
    Validation { name: &'static str, reason: String },

    #[error("charges coincide (distance {distance:e})")]
    Coincident { distance: f64 },

    #[error("light-cone denominator {denominator:e} is too close to zero")]
    LightCone { denominator: f64 },

    #[error("speed {speed} is not below the speed of light")]
    Superluminal { speed: f64 },

    #[error("coupling matrix is degenerate (condition number {condition:e})")]
    Degenerate { condition: f64 },

    #[error("integration stalled at t = {t} (step {step:e})")]
    IntegrationStall { t: f64, step: f64 },

    #[error("time {tau} lies outside the segment span [{lo}, {hi}]")]
    OutOfSpan { tau: f64, lo: f64, hi: f64 },

    #[error("flow does not reach the delay root; extend it to at least {needed}")]
    FlowTooShort { needed: f64 },

    #[error("no light-cone root within the sub-luminal bound {bound}")]
    NoRoot { bound: f64 },

    #[error("bisection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("at level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn validation(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            name,
            reason: reason.into(),
        }
    }

    /// Wraps the error with the level of the field hierarchy it came from.
    /// Errors already carrying a level are left untouched so the innermost
    /// origin is reported.
    pub fn at_level(self, level: usize) -> Self {
        match self {
            e @ Error::AtLevel { .. } => e,
            e => Error::AtLevel {
                level,
                source: Box::new(e),
            },
        }
    }

    /// The underlying error with any level annotation stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLevel { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(self.root(), Error::Validation { .. })
    }
}
