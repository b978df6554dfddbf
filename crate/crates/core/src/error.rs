use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A point left the region where a function (or its conjugate) is finite.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "inner solver did not converge after {sweeps} sweeps \
         (stationarity {stationarity:.3e}, violation {max_violation:.3e}, complementarity {complementarity:.3e})"
    )]
    NonConvergence {
        sweeps: usize,
        stationarity: f64,
        max_violation: f64,
        complementarity: f64,
    },

    /// A fixture violates a standing assumption (e.g. an empty level set).
    #[error("fixture error: {0}")]
    Fixture(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("no grid point satisfies the membership predicate")]
    InfeasibleOnGrid,

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("malformed trace: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn check_dims(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
