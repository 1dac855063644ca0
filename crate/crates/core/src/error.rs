use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A state vector, gradient, or combination thereof produced a NaN/inf entry.
    #[error("non-finite value at component {index} in {context}")]
    NonFinite { context: &'static str, index: usize },

    /// The leading coefficient of the normalized recurrence vanished.
    #[error("degenerate scheme: leading recurrence coefficient is zero at n = {n}")]
    DegenerateScheme { n: u64 },

    /// A dense-output query fell outside the integrated time range.
    #[error("time {t} outside dense-output range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    /// The reference integrator blew up before reaching the end time.
    #[error("ODE integration failed: non-finite state, last valid t = {last_t}")]
    IntegrationFailure { last_t: f64 },

    /// The supplied sequence does not satisfy the Gronwall hypothesis.
    #[error("Gronwall hypothesis violated at index {index}")]
    GronwallHypothesis { index: usize },

    #[error("SVD did not converge within {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },

    /// Backtracking exhausted its per-iteration reduction budget.
    #[error("backtracking stalled at iteration {iteration} after {max_halvings} reductions")]
    BacktrackStall { iteration: usize, max_halvings: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
