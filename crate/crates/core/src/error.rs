use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("eigenvalue iteration did not converge ({0})")]
    NoConvergence(&'static str),

    #[error("rational function has a pole at the evaluation point s = {s}")]
    PoleAtPoint { s: Complex64 },

    #[error("line resonance at s = {s}: s^2 + 2 rho s + omega0^2 + rho^2 vanishes")]
    LineResonance { s: Complex64 },

    #[error("singular interior block during Kron reduction at node {node}")]
    ReductionSingular { node: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("certificate inapplicable for device {device}: {reason}")]
    CertificateInapplicable { device: usize, reason: String },

    #[error("damping ratio undefined for a pole at the origin")]
    UndefinedDamping,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
