use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 4")]
    InvalidGrid(usize),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("density {min:e} fell below the floor {floor:e}")]
    DensityFloor { min: f64, floor: f64 },

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    TimeStep { dt: f64, limit: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("coefficient trajectory has no sample at index {index}")]
    MissingSample { index: usize },

    #[error("iterate {iter} left the admissible ball: weighted norm {norm:e} > K = {bound:e}")]
    InductiveBound { iter: usize, norm: f64, bound: f64 },

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("at t = {t:.6e}: {source}")]
    Simulation { t: f64, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            e @ Error::Simulation { .. } => e,
            e => Error::Simulation {
                t,
                source: Box::new(e),
            },
        }
    }

    /// True for failures of the numerics (floor, instability, breach) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. }
            | Error::DensityFloor { .. }
            | Error::TimeStep { .. }
            | Error::InductiveBound { .. } => true,
            Error::Simulation { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
