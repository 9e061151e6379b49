use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("time {t} lies outside the sampled table range [{start}, {end}]")]
    Extrapolation { t: f64, start: f64, end: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field lives on a grid with {found} nodes, expected {expected}")]
    GridMismatch { expected: usize, found: usize },

    #[error("mode count {modes} exceeds the {nodes} interior nodes of the grid")]
    TooManyModes { modes: usize, nodes: usize },

    #[error("step size rejected: dt * omega1 = {product} must be < 1")]
    StepSizeRejected { product: f64 },

    #[error("time {time} is not aligned to the step lattice dt = {dt}")]
    Misaligned { time: f64, dt: f64 },

    #[error("invalid time interval: start {start} must not exceed end {end}")]
    InvalidInterval { start: f64, end: f64 },

    #[error("undefined decay slope: no nonzero coefficients")]
    UndefinedSlope,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("mismatched discretizations: {0}")]
    Mismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
