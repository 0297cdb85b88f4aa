use thiserror::Error;

/// Errors raised by grid construction, interpolation, time stepping and studies.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GldError {
    #[error("quadratic interpolation needs an even division count, axis {axis} has {divisions}")]
    OddDivisionForQuadratic { axis: usize, divisions: usize },

    #[error("domain extent must be positive, axis {axis} has {extent}")]
    NonPositiveExtent { axis: usize, extent: f64 },

    #[error("axis {axis} needs at least 2 divisions, got {divisions}")]
    TooFewDivisions { axis: usize, divisions: usize },

    #[error("unsupported spatial dimension {0}, expected 1 or 2")]
    UnsupportedDimension(usize),

    #[error("interpolation order must be 1 or 2, got {0}")]
    InvalidOrder(u32),

    #[error("degenerate interval: alpha {alpha} must be below beta {beta}")]
    DegenerateInterval { alpha: f64, beta: f64 },

    #[error("point ({x}, {y}) lies outside the closed domain")]
    PointOutsideDomain { x: f64, y: f64 },

    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),

    #[error("grid incompatible with request: {0}")]
    IncompatibleGrid(String),

    #[error("upwind point left the domain at step {step} but no inflow data was supplied")]
    MissingInflowData { step: usize },

    #[error("an exact solution is required for this operation")]
    MissingExact,

    #[error("non-finite value produced at step {step}")]
    NonFinite { step: usize },

    #[error("slope inputs must be positive with dt_coarse > dt_fine")]
    NonPositiveInput,

    #[error("unknown example '{0}'")]
    UnknownExample(String),

    #[error("csv output failed: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, GldError>;
