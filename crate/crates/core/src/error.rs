use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("unbounded polytope")]
    UnboundedPolytope,

    #[error("polytope has empty interior")]
    EmptyInterior,

    #[error("point outside the finiteness domain of Λ: {0}")]
    OutsideDomain(String),

    #[error("quadrature truncation error {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureTruncation { estimate: f64, tolerance: f64 },

    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("matrix is numerically singular: {0}")]
    Singular(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("measure is not isotropic: {0}")]
    NotIsotropic(String),

    #[error("Newton iteration did not converge in {0} iterations")]
    NoConvergence(usize),

    #[error("Newton iterate diverged (|ξ| > {0:e}); target lies outside the body")]
    Divergence(f64),

    #[error("acceptance rate {0:e} is below 1e-4; bounding box too large")]
    LowAcceptance(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}
