use thiserror::Error;

/// Errors raised by state construction, grid evaluation and the tests.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The Fock truncation needed for the requested tail tolerance is larger
    /// than the configured cap.
    #[error("Fock cutoff exceeds the hard cap of {cap} (mean photon number {mean_photons:.3})")]
    Capacity { cap: usize, mean_photons: f64 },

    /// The grid is too small or too coarse for the state: the sampled
    /// probability misses unity by more than `limit`.
    #[error("grid does not cover the state: normalization defect {defect:.3e} exceeds {limit:.1e}")]
    GridCoverage { defect: f64, limit: f64 },

    #[error("entropy not converged at {points} points: {coarse} -> {fine} nats")]
    Convergence { points: usize, coarse: f64, fine: f64 },

    #[error("unsupported state: {0}")]
    UnsupportedState(String),

    #[error("numerical consistency failure: {0}")]
    NumericalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
