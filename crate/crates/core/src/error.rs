use thiserror::Error;

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("point violates the embedding constraint (residual {residual:.3e})")]
    ConstraintViolation { residual: f64 },
    #[error("vector is not tangent at its base point (normal component {residual:.3e})")]
    NotTangent { residual: f64 },
    #[error("tangent vector of length {norm} exceeds the injectivity radius {limit}")]
    InjectivityRadius { norm: f64, limit: f64 },
    #[error("points are on each other's cut locus; the minimizing geodesic is not unique")]
    CutLocus,
    #[error("shape mismatch: expected length {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("dense solver limited to n <= {limit}, got {n}")]
    SizeLimit { n: usize, limit: usize },
    #[error("Lanczos did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NonConvergence { iterations: usize, best_residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least {needed} points in the ball, found {found}")]
    InsufficientPoints { found: usize, needed: usize },
    #[error("cluster {cluster} has {size} discrete eigenvalues but multiplicity {multiplicity} (values {values:?})")]
    AlignmentMismatch {
        cluster: usize,
        size: usize,
        multiplicity: usize,
        values: Vec<f64>,
    },
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("too few completed runs: {completed} of {trials}")]
    TooFewRuns { completed: usize, trials: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CloudError>;
