use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates an invariant. `field` is a JSON-style
    /// path such as `bodies[1].box.size`.
    #[error("invalid configuration at `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("geometry cannot be resolved on the grid: {0}")]
    GeometryUnresolvable(String),

    #[error("time step {dt:e} s exceeds the stable limit {limit:e} s")]
    StabilityViolation { dt: f64, limit: f64 },

    #[error("series is not identifiable: {0}")]
    NonIdentifiable(String),

    #[error("optimizer did not converge after {iterations} iterations (sse = {sse:e})")]
    NoConvergence { iterations: usize, sse: f64 },

    #[error("deviation is still changing at the end of the trial (relative tail slope {relative_slope:.3e})")]
    NotStationary { relative_slope: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("traces do not overlap in time")]
    NoOverlap,

    #[error("unmatched ids: {}", .0.join(", "))]
    IdMismatch(Vec<String>),

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by user input rather than numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. }
                | Error::GeometryUnresolvable(_)
                | Error::IdMismatch(_)
                | Error::NoOverlap
                | Error::MalformedTrace(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::Io(_)
        )
    }
}
