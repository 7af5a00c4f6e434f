use thiserror::Error;

use crate::point::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// Input data failed to parse or is structurally inconsistent.
    #[error("data error: {0}")]
    Data(String),

    #[error("exhaustive search refused: {required} evaluations exceed the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    /// An orbit search ran out of iterations before reaching its target ball.
    #[error("no recurrence for net point {net_index} at {target}: {what} not found within {cap} iterations")]
    NoRecurrence {
        net_index: usize,
        target: Point,
        what: &'static str,
        cap: u64,
    },

    #[error("coverage gap: point {point} is {distance} from every image of q (needs < {bound})")]
    CoverageGap { point: Point, distance: f64, bound: f64 },

    #[error("certification failed at {check} ({tag}): achieved {achieved} vs threshold {threshold}")]
    CertificationFailure {
        check: String,
        tag: String,
        achieved: f64,
        threshold: f64,
    },
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
