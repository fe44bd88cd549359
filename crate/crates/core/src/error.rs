use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("params: {0}")]
    InvalidParam(String),

    #[error("appendix_a: capacitance matrix is not positive definite (eigenvalues {0:e}, {1:e})")]
    NotPositiveDefinite(f64, f64),

    #[error("appendix_a: singular capacitance matrix (det = {0:e})")]
    SingularMatrix(f64),

    #[error("appendix_a: {0} is zero while the bias/noise currents are not; P1/P2 are undefined")]
    DegenerateDrive(&'static str),

    #[error("appendix_a: {0}")]
    InvalidMode(String),

    #[error("fockspace: {0}")]
    Fock(String),

    #[error("spectra: degenerate levels {from:?} and {to:?} (|dE| = {gap:e} J)")]
    DegenerateLevels {
        from: (usize, usize),
        to: (usize, usize),
        gap: f64,
    },

    #[error("spectra: eigensolver failed: {0}")]
    Eigen(String),

    #[error("spectra: state {state:?} outside the truncation-safe range for dim {dim}")]
    OutOfRange { state: (usize, usize), dim: usize },

    #[error("response: {0}")]
    Response(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
