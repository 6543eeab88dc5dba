use thiserror::Error;

/// Every failure the library reports. The CLI maps these onto exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KmtError {
    #[error("negation applied to action `{0}`")]
    NegatedAction(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("fuel exhausted after {0} rule applications; run validate-theory to check the theory's pushback contract")]
    FuelExhausted(u64),
    #[error("theory error: {0}")]
    Theory(String),
    #[error("budget too small: {0}")]
    Budget(String),
    #[error("state space overflow: {0}")]
    Overflow(String),
    #[error("duplicate theory name `{0}`")]
    DuplicateTheory(String),
    #[error("unknown theory `{0}`")]
    UnknownTheory(String),
    #[error("theory `{0}` has no state model")]
    NoStateModel(String),
    #[error("cannot split: {0}")]
    InvalidSplit(String),
    /// A star pushback re-entered itself; caught inside the normalizer.
    #[error("pushback of `{0}` through a star does not decrease")]
    PushbackCycle(String),
    /// The star rules exceeded their effort budget; caught inside the normalizer.
    #[error("star normalization exceeded its effort budget")]
    StarEffort,
}

impl KmtError {
    /// True for errors that stem from resource limits rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            KmtError::FuelExhausted(_) | KmtError::Overflow(_) | KmtError::Budget(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, KmtError>;
