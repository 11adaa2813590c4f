use thiserror::Error;

/// Errors raised by the simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("terminal doublet is not spectrally isolated: guard gap {guard_gap:e} < doublet splitting {splitting:e}")]
    IsolationViolated { guard_gap: f64, splitting: f64 },

    #[error("gap minimum lies on the search boundary at dB = {at}; widen the search window")]
    MinimumOnBoundary { at: f64 },

    #[error("effective coupling {0:e} is too small to resolve")]
    VanishingCoupling(f64),

    #[error("target fidelity {0} must lie strictly inside (0, 1)")]
    InvalidTarget(f64),

    #[error("value {value} for `{name}` is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("eavesdropper site {site} is not an interior site of a chain with {n_sites} sites")]
    ScopeOutOfRange { site: usize, n_sites: usize },

    #[error("integrator step size {0:e} fell below the minimum allowed step")]
    StepUnderflow(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "{failed} of {total} realizations failed, above the 10% tolerance (first failure: {first})"
    )]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Configuration and precondition problems, as opposed to runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidChain(_)
                | Error::InvalidTarget(_)
                | Error::Domain { .. }
                | Error::ScopeOutOfRange { .. }
                | Error::Config(_)
        )
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
