use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure taxonomy for the whole crate. Shape and argument errors signal
/// caller bugs; the I/O, format, and reference variants surface bad input
/// files; `Numeric` reports divergence or non-finite values at runtime.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    Shape {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: unknown node id {id:?}")]
    Reference {
        path: String,
        line: usize,
        id: String,
    },

    #[error("domain error at entry ({row}, {col}): {msg}")]
    Domain { row: usize, col: usize, msg: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("negative sampling failed: {0}")]
    Sampling(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Error::Shape {
            op,
            lhs: format!("{}x{}", lhs.0, lhs.1),
            rhs: format!("{}x{}", rhs.0, rhs.1),
        }
    }
}
