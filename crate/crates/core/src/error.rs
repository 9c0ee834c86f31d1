//! Error type shared across the solver suite.

/// Errors surfaced by profile construction, geometry validation, the slice
/// solvers, and field reconstruction.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("incoming profile must be strictly positive (min v1 = {min_v1:.6e} at x2 = {at:.6})")]
    NonPositiveProfile { min_v1: f64, at: f64 },

    #[error("stream value {value:.6e} outside [0, {c:.6e}]")]
    OutOfRange { value: f64, c: f64 },

    #[error("second derivative of the incoming profile is not available")]
    MissingSecondDerivative,

    #[error("nozzle width is not positive (min s = {min_width:.6e} at x1 = {at:.6})")]
    DegenerateWidth { min_width: f64, at: f64 },

    #[error("point ({x1:.6}, {x2:.6}) lies outside the nozzle")]
    OutsideNozzle { x1: f64, x2: f64 },

    #[error("fixed-point iteration did not converge in {max_iter} iterations (last update {residual:.3e})")]
    NoConvergence { max_iter: usize, residual: f64 },

    #[error("root bracketing failed: {context}")]
    BracketFailure { context: String },

    #[error(
        "inverse height map is not strictly increasing; the normalization constant is corrupted"
    )]
    InversionFailure,

    #[error("reconstructed v1 is not positive everywhere (min v1 = {min_v1:.6e})")]
    NonPositiveV1 { min_v1: f64 },

    #[error("gradient-flow curve stalled: |grad phi| = {speed:.3e} below floor {floor:.3e}")]
    Stagnation { speed: f64, floor: f64 },

    #[error("seed ({x1:.6}, {x2:.6}) is not strictly inside the domain")]
    OutsideInterior { x1: f64, x2: f64 },

    #[error("invalid samples: {0}")]
    InvalidSamples(String),
}

pub type Result<T> = std::result::Result<T, Error>;
