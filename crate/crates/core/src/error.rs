//! Error type shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong while evaluating, fitting or simulating.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation that needs at least one value received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Adaptive quadrature exhausted its panel budget before meeting the tolerance.
    #[error(
        "quadrature did not converge after {panels} panels \
         (value {value:e}, error estimate {abs_error:e})"
    )]
    QuadratureBudget { value: f64, abs_error: f64, panels: usize },

    /// The survival function underflowed past the range where it is trusted.
    #[error("tail exhausted at n = {requested}; largest reliable n is {largest_reliable_n}")]
    TailExhausted { requested: u64, largest_reliable_n: u64 },

    /// The operation requires a mixing family it was not given.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Too few points above the threshold to fit anything.
    #[error("insufficient excesses: found {found}, need at least {required}")]
    InsufficientExcesses { found: usize, required: usize },

    /// A numerical optimiser stopped without converging.
    #[error("optimizer did not converge (best objective {best_value}, best point {best_point:?})")]
    OptimizerFailed { best_point: Vec<f64>, best_value: f64 },

    /// Two inputs that must describe the same sample do not.
    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    /// Bad configuration or serialised input.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Config(err.to_string())
    }
}
