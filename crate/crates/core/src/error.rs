use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate domain: [{x_left}, {x_right}] with {intervals} intervals (need length > 0 and at least 2 intervals)")]
    DegenerateDomain {
        x_left: f64,
        x_right: f64,
        intervals: usize,
    },

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The linearized operator `b0 - q*phi'` (or its 2x2 block) is too close to singular.
    #[error("singular linearization at node {node}: {detail}")]
    SingularLinearization { node: usize, detail: String },

    #[error("relaxation did not converge after {iterations} sweeps (final max correction {max_correction:e}, tolerance {tolerance:e})")]
    NonConvergence {
        iterations: usize,
        max_correction: f64,
        tolerance: f64,
    },

    #[error("time step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}
