use thiserror::Error;

/// Errors produced by the library. Each variant maps to a CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("symmetry {op} is not compatible with this graph: {reason}")]
    IncompatibleSymmetry { op: String, reason: String },
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("step size fell below the minimum {ds_min:e} at lambda = {lambda}")]
    StepTooSmall { ds_min: f64, lambda: f64 },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("right-hand side is not orthogonal to the kernel (inner product {inner:.3e})")]
    NonOrthogonalRhs { inner: f64 },
    #[error("kernel has dimension {dim}, expected 1")]
    KernelDimension { dim: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for bad input or configuration, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidGraph(_)
            | Error::InvalidArgument(_)
            | Error::IncompatibleSymmetry { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
