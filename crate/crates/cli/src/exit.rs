use jitter_core::Error;

pub const FAILURE: u8 = 1;
pub const USAGE: u8 = 2;
pub const DEGENERATE: u8 = 3;
pub const CAPACITY: u8 = 4;

/// Bad command-line input that clap itself could not catch.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidInterval { .. }
                | Error::Validation(_)
                | Error::InfeasibleDifference { .. } => USAGE,
                Error::DegenerateInterval { .. } => DEGENERATE,
                Error::Capacity { .. } => CAPACITY,
                Error::Precision { .. } | Error::OutOfRange { .. } | Error::NonConvergence { .. } => {
                    FAILURE
                }
            };
        }
    }
    FAILURE
}
