use thiserror::Error;

use crate::ground::ItemId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown item id {0}")]
    UnknownItem(ItemId),

    /// An exhaustive routine would need more work than its configured cap.
    #[error("{what}: {needed} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    /// The independence oracle violated a matroid axiom.
    #[error("matroid oracle integrity violated: {0}")]
    OracleIntegrity(String),

    /// Online step/feedback calls were made out of order.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
