use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A tangent-estimation ball held fewer points than a rank-`m`
    /// fit requires.
    #[error("only {found} neighbors inside the ball, need at least {needed}")]
    InsufficientNeighbors { found: usize, needed: usize },

    /// The two smallest singular values of the weighted neighborhood
    /// coincide, so the normal direction is not identifiable.
    #[error("degenerate neighborhood: smallest two singular values agree within {gap:.3e}")]
    DegenerateNeighborhood { gap: f64 },

    /// No cloud point fell strictly between the two annulus radii.
    #[error("annulus ({inner}, {outer}) contains no points")]
    EmptyAnnulus { inner: f64, outer: f64 },

    /// An iterative fit stopped improving incorrectly or ran out of
    /// iterations.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    /// A likelihood maximization could not produce an interior optimum.
    #[error("optimization failure: {0}")]
    OptimizationFailure(String),

    /// Too many calibration trials failed to produce an angle sample.
    #[error("{skipped} of {trials} calibration trials failed, more than the 1% budget")]
    TrialFailures { skipped: usize, trials: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A point-cloud or report file did not parse.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
