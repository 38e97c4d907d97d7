use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval ({lower}, {upper}): bounds must be finite, non-negative and upper > lower")]
    InvalidInterval { lower: f64, upper: f64 },

    #[error("mechanism `{mechanism}` yields a fixed delay of {delay} ms and has no analytic delay model")]
    DegenerateInterval { mechanism: String, delay: f64 },

    #[error("capacity exceeded: {what} = {requested}, limit {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("precision target missed: estimated relative error {estimate:e} exceeds {limit:e}")]
    Precision { estimate: f64, limit: f64 },

    #[error("probability {value} lies outside [0, 1] by more than {tolerance:e}")]
    OutOfRange { value: f64, tolerance: f64 },

    #[error("quadrature did not converge after {evaluations} evaluations (error estimate {error:e})")]
    NonConvergence { evaluations: usize, error: f64 },

    #[error("route-metric difference {difference} is infeasible for {hop_count} hops")]
    InfeasibleDifference { difference: f64, hop_count: usize },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
