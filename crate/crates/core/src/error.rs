use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("unbounded set: {0}")]
    Unbounded(String),

    #[error("invalid constraint set: {0}")]
    InvalidSet(String),

    #[error("matrix is not Schur (spectral radius {rho:.6})")]
    NotSchur { rho: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("singleton disturbance set: a nontrivial invariant set does not exist")]
    SingletonDisturbance,

    #[error("truncation limit {s_max} reached; best contraction factor {alpha:.6}")]
    TruncationLimit { s_max: usize, alpha: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid network: {0}")]
    Network(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected,
            got,
            context,
        })
    }
}
