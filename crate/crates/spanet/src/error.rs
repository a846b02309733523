use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The rejection-sampling loop in random coordinate generation exceeded
    /// its retry budget (d_max too close to the minimum separation).
    #[error("geometry generation failed: {0}")]
    GenerationFailed(String),

    /// Overlap matrix is numerically singular (atoms nearly coincident).
    #[error("near-linear-dependence in basis: condition number {0:.3e}")]
    LinearDependence(f64),

    /// Requested dense / statevector operation exceeds the supported size.
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    /// A numerical routine failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed dataset or checkpoint content.
    #[error("data error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Data { msg: String, line: Option<usize> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data { msg: msg.into(), line: None }
    }

    pub fn data_at(line: usize, msg: impl Into<String>) -> Self {
        Error::Data { msg: msg.into(), line: Some(line) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
