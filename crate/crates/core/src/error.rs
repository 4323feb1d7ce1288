use std::path::PathBuf;

use crate::dynamics::BlowUp;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: String, found: String },

    #[error("unsupported derivative order {0} (expected 1..=5)")]
    UnsupportedOrder(usize),

    #[error("grid too small: nx = {nx}, the widest stencil needs at least {required}")]
    GridTooSmall { nx: usize, required: usize },

    #[error("singular implicit factorization for mode {mode} at dt = {dt:e}; reduce the time step")]
    SingularFactorization { mode: usize, dt: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("series too sparse: {0}")]
    TooSparse(String),

    #[error("{0}")]
    BlowUp(Box<BlowUp>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
