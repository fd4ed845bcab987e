//! Churn handling for a sorted, doubly linked peer-to-peer overlay, with a
//! deterministic simulator, a trace checker and a skip-list extension.

pub mod checker;
pub mod engine;
pub mod error;
pub mod id;
pub mod message;
pub mod protocol;
pub mod skiplist;
pub mod workload;

pub use engine::{
    EndReason, Endpoint, Injection, Item, Mode, RunSummary, SchedulerKind, Sim, SimConfig,
    Snapshot, Stop, Target, TraceRecord,
};
pub use error::{CheckError, ParseError, ProtocolError, SimError};
pub use id::ProcessId;
pub use message::{Message, Payload};
pub use protocol::{ChurnKind, Event, Lifecycle, NodeState, StageLabel};
