use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polynomial order {order} (must be >= {min})")]
    InvalidOrder { order: usize, min: usize },

    #[error("{what} index {index} out of range {lo}..={hi}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },

    #[error("reference coordinate {value} outside [-1, 1]")]
    OutOfReferenceDomain { value: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("inverted element: J = {jacobian:e} at (xi, eta, tau) = ({xi:.6}, {eta:.6}, {tau:.6})")]
    InvertedElement {
        jacobian: f64,
        xi: f64,
        eta: f64,
        tau: f64,
    },

    #[error("equation of state evaluated at non-positive J = {0:e}")]
    NonPositiveJacobian(f64),

    #[error("invalid material parameter {name} = {value}")]
    InvalidMaterial { name: &'static str, value: f64 },

    #[error("singular slab system")]
    SingularSystem,

    #[error("Picard iteration did not reach tol {tol:e} in {iterations} iterations (last change {last:e})")]
    PicardNonConvergence {
        tol: f64,
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("slab {slab} (t = {t:.6} s, Picard iterate {iteration}): {source}")]
    Slab {
        slab: usize,
        t: f64,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Innermost error, looking through slab context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Slab { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit status used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config { .. } | Error::InvalidMaterial { .. } | Error::InvalidOrder { .. } => 2,
            Error::PicardNonConvergence { .. } | Error::SingularSystem => 3,
            Error::InvertedElement { .. } | Error::NonPositiveJacobian(_) => 4,
            Error::Io { .. } => 5,
            _ => 1,
        }
    }
}
