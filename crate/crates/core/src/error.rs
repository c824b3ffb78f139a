use thiserror::Error;

/// Errors returned by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("truncation too small: {levels} levels (need at least {min})")]
    TooFewLevels { levels: usize, min: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("closed form requires {0}")]
    SymmetryViolated(&'static str),

    #[error("degenerate denominator {what}: |value| = {magnitude:e} below floor")]
    Degenerate { what: &'static str, magnitude: f64 },

    #[error("singular linear system (pivot {pivot:e} at column {column}, condition estimate {condition:e})")]
    Singular {
        column: usize,
        pivot: f64,
        condition: f64,
    },

    #[error("integrator step-size failure at t = {t}")]
    StepFailure { t: f64 },

    #[error("{mode} mode unpopulated: <a^dag a> = {occupation:e}")]
    Unpopulated { mode: &'static str, occupation: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("empty scan range [{lo}, {hi}] with {n_points} points")]
    EmptyRange { lo: f64, hi: f64, n_points: usize },

    #[error("evaluation failed at every scan point")]
    AllPointsFailed,

    #[error("no interior minimum found within bounds")]
    NoInteriorMinimum,
}

pub type Result<T> = std::result::Result<T, Error>;
