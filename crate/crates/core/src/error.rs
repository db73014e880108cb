use alloc::string::String;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("synthesis error: {0}")]
    Synthesis(String),

    #[error("closed loop is unstable (spectral radius {spectral_radius:.6})")]
    Unstable { spectral_radius: f64 },

    #[error("no decay rate below one fits the responses (tail ratio {ratio:.6})")]
    NoDecay { ratio: f64 },

    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("numerical error: {message} (condition estimate {condition:e})")]
    Numerical { message: String, condition: f64 },

    #[error("state diverged at step {step} (norm {norm:e})")]
    Diverged { step: usize, norm: f64 },

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("linear program is unbounded: {0}")]
    Unbounded(String),

    #[error("reference leaves its class at step {step}: {reason}")]
    ReferenceOutOfClass { step: usize, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
