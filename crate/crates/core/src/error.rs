use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least 4 interior points, got {0}")]
    GridTooSmall(usize),

    #[error("grid length must be positive and finite, got {0}")]
    InvalidLength(f64),

    #[error("window 1/{n} = {width} is not resolved by spacing h = {h} (needs width >= {factor}h and width < L)")]
    WindowUnresolved { n: u32, width: f64, h: f64, factor: f64 },

    #[error("states live on different grids")]
    GridMismatch,

    #[error("semigroup time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("evaluation interval [{lo}, {hi}] leaves the ambient window [{window_lo}, {window_hi}]")]
    BoundaryLeftWindow { lo: f64, hi: f64, window_lo: f64, window_hi: f64 },

    #[error("non-finite value produced at step {0}")]
    NonFinite(usize),

    #[error("profile value {0} at the interface is not zero")]
    InterfaceNotZero(f64),

    #[error("model assumption violated: {0}")]
    Assumption(String),

    #[error("coloring kernel has non-finite or unbounded L2 profile near x = {0}")]
    KernelUnbounded(f64),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { field: field.into(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
