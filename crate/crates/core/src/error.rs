use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dressed basis undefined: g = 0 and qubit exactly on resonance")]
    DegenerateDressedBasis,

    #[error("dispersive approximation invalid: |detuning| = {detuning} GHz <= 3 g = {limit} GHz")]
    DispersiveInvalid { detuning: f64, limit: f64 },

    #[error("eigensolver did not converge after {iterations} sweeps (matrix dim {dim}, |diag|max {diag_max:.3e}, |offdiag|max {offdiag_max:.3e})")]
    EigenNoConvergence {
        iterations: usize,
        dim: usize,
        diag_max: f64,
        offdiag_max: f64,
    },

    #[error("E_J inversion failed for E_C = {ec} GHz, target nu_q = {target} GHz: {reason}")]
    InvertEj {
        ec: f64,
        target: f64,
        reason: String,
    },

    #[error("position {value} {unit} outside [{lo}, {hi}] along {axis}")]
    OutOfBounds {
        axis: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
        unit: &'static str,
    },

    #[error("coupling unavailable at cell (y = {y} um, z = {z} um): {source}")]
    CouplingCell {
        y: f64,
        z: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{what}, line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("invalid quantity `{input}`: {reason}")]
    Quantity { input: String, reason: String },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("no resonance dip found: {0}")]
    NoDip(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
