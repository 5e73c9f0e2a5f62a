use thiserror::Error;

/// Errors raised by model construction, the solvers and the optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    /// The premium rate does not exceed the expected claim cost per unit time.
    /// `margin` is `c - λE[Y]`.
    #[error("net profit condition violated: c - λE[Y] = {margin} (must be positive)")]
    NetProfit { margin: f64 },

    #[error(
        "numerical instability at node {index} (x = {x}): survival value {value} left the admissible range; \
         try a smaller grid step"
    )]
    Instability { index: usize, x: f64, value: f64 },

    #[error("accuracy target not met: {0}")]
    Accuracy(String),

    #[error("no interior optimum: {0}")]
    NoInteriorOptimum(String),

    #[error("root bracketing failed: {0}")]
    RootBracketing(String),

    #[error("infeasible search region: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
