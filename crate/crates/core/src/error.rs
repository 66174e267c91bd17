use thiserror::Error;

/// Failures shared by every numerical routine in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: &'static str, reason: String },
    #[error("tolerance not met in {context}: achieved {achieved:.3e}, requested {requested:.3e}")]
    ToleranceNotMet {
        context: &'static str,
        achieved: f64,
        requested: f64,
    },
    #[error("certification failure: {0}")]
    Certification(String),
    #[error("step size underflow at t = {t}, h = {h}")]
    StepUnderflow { t: f64, h: f64 },
    #[error("domain coverage: {0}")]
    Coverage(String),
    #[error("Picard iteration diverged at iteration {iteration} (residual {residual:.3e})")]
    Divergence { iteration: usize, residual: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("no blow-up before horizon {horizon}")]
    NoBlowUp { horizon: f64 },
    #[error("instability: linear energy grew by a factor {growth:.3e} by t = {time}")]
    Instability { time: f64, growth: f64 },
    #[error("no bound state: lowest eigenvalue {lowest:.6e} is at the continuum edge")]
    NoBoundState { lowest: f64 },
    #[error("mesh too coarse: eigenvalue moved from {coarse:.8e} to {fine:.8e} on refinement")]
    MeshTooCoarse { coarse: f64, fine: f64 },
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        key,
        reason: reason.into(),
    }
}
