use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric: max asymmetry {asymmetry:e} exceeds {tol:e}")]
    NotSymmetric { asymmetry: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index k = {k} outside 0..={max}")]
    OrderOutOfRange { k: usize, max: usize },

    #[error("matrix diagonalization failed to converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("t = {t} lies outside the profile interval ({lo}, {hi})")]
    OutsideInterval { t: f64, lo: f64, hi: f64 },

    #[error("warping function is not positive at t = {t} (rho = {rho})")]
    NonPositiveWarping { t: f64, rho: f64 },

    #[error("vectors are not orthonormal (defect {defect:e})")]
    NotOrthonormal { defect: f64 },

    #[error("unknown {registry} '{name}'; the {registry} registry has: {known}")]
    UnknownProfile { registry: &'static str, name: String, known: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
