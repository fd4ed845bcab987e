use thiserror::Error;

use crate::id::ProcessId;

/// Errors from the per-process state machine. These are precondition
/// failures; protocol-level oddities are reported as trace annotations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("neighbors out of order: {left} < {id} < {right} does not hold")]
    Ordering {
        id: ProcessId,
        left: String,
        right: String,
    },
    #[error("sentinel id {0} cannot join or leave")]
    Sentinel(ProcessId),
    #[error("process {0} is not ready: it has no neighbors yet")]
    NotReady(ProcessId),
    #[error("process {0} has exited and accepts no events")]
    Exited(ProcessId),
    #[error("process {0} is already leaving")]
    AlreadyLeaving(ProcessId),
    #[error("message for level {level} delivered to process {id} without that level")]
    NoSuchLevel { id: ProcessId, level: u8 },
    #[error("message {0} needs a sender")]
    MissingSender(&'static str),
}

/// Errors raised by the simulator's injection API and configuration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("duplicate initial member {0}")]
    DuplicateMember(ProcessId),
    #[error("initial members must be strictly increasing ({0} out of order)")]
    UnsortedMembers(ProcessId),
    #[error("id {0} was already used and may not join again")]
    ReusedId(ProcessId),
    #[error("{0} is a sentinel")]
    Sentinel(ProcessId),
    #[error("{0} is not a member of the overlay")]
    NotMember(ProcessId),
    #[error("no joined process is available as an injection target")]
    NoTarget,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Parse failure in any of the text formats, with an optional 1-based line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ParseError {
    pub line: Option<usize>,
    pub message: String,
}

impl ParseError {
    pub fn new(message: impl Into<String>) -> Self {
        ParseError {
            line: None,
            message: message.into(),
        }
    }

    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn with_line(mut self, line: usize) -> Self {
        self.line.get_or_insert(line);
        self
    }
}

/// A checker declined to evaluate its input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("snapshot is not quiescent; linearization is only defined at quiescence")]
    NotQuiescent,
}
