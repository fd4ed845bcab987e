//! Trace records and their tab-separated text form.
//!
//! One record per line with seven fields:
//! `seq kind process peer message detail level`. Ids are decimal, sentinels
//! are `-inf`/`+inf`, absent fields are `-`.

use std::fmt;
use std::str::FromStr;

use crate::error::ParseError;
use crate::id::{fmt_opt, parse_opt, ProcessId};
use crate::message::Message;
use crate::protocol::{Event, Lifecycle, NodeState};

/// Sender side of a channel. The environment injects requests through its
/// own lanes like any other sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Env,
    Node(ProcessId),
}

impl Endpoint {
    pub fn node(self) -> Option<ProcessId> {
        match self {
            Endpoint::Env => None,
            Endpoint::Node(id) => Some(id),
        }
    }
}

impl From<ProcessId> for Endpoint {
    fn from(id: ProcessId) -> Self {
        Endpoint::Node(id)
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Env => f.write_str("env"),
            Endpoint::Node(id) => id.fmt(f),
        }
    }
}

impl FromStr for Endpoint {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "env" {
            Ok(Endpoint::Env)
        } else {
            s.parse().map(Endpoint::Node)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Inject,
    Deliver,
    Send,
    State,
    Exit,
    Annotation,
}

impl RecordKind {
    fn as_str(self) -> &'static str {
        match self {
            RecordKind::Inject => "inject",
            RecordKind::Deliver => "deliver",
            RecordKind::Send => "send",
            RecordKind::State => "state",
            RecordKind::Exit => "exit",
            RecordKind::Annotation => "annotation",
        }
    }
}

impl FromStr for RecordKind {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "inject" => RecordKind::Inject,
            "deliver" => RecordKind::Deliver,
            "send" => RecordKind::Send,
            "state" => RecordKind::State,
            "exit" => RecordKind::Exit,
            "annotation" => RecordKind::Annotation,
            _ => return Err(ParseError::new(format!("invalid record kind `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InjectKind {
    Join,
    LeaveIntent,
    Search,
    AdversarialExit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndReason {
    /// All channels empty, no guard enabled, no pending injections.
    Quiescent,
    /// Event budget exhausted with work remaining.
    Truncated,
    /// A scripted schedule ran out of picks.
    ScriptExhausted,
    /// A scripted pick named an item that was not enabled.
    ScriptInvalid,
}

impl EndReason {
    fn as_str(self) -> &'static str {
        match self {
            EndReason::Quiescent => "quiescent",
            EndReason::Truncated => "truncated",
            EndReason::ScriptExhausted => "script-exhausted",
            EndReason::ScriptInvalid => "script-invalid",
        }
    }
}

/// Pointer-level view of a [`NodeState`], as carried by `state` records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateView {
    pub left: Option<ProcessId>,
    pub right: Option<ProcessId>,
    pub busy: bool,
    pub leaving: bool,
    pub lifecycle: Lifecycle,
}

impl From<&NodeState> for StateView {
    fn from(s: &NodeState) -> Self {
        StateView {
            left: s.left,
            right: s.right,
            busy: s.busy,
            leaving: s.leaving,
            lifecycle: s.lifecycle,
        }
    }
}

impl fmt::Display for StateView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "left={},right={},busy={},leaving={},lc={}",
            fmt_opt(self.left),
            fmt_opt(self.right),
            u8::from(self.busy),
            u8::from(self.leaving),
            self.lifecycle.code()
        )
    }
}

impl FromStr for StateView {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseError::new(format!("invalid state summary `{s}`"));
        let mut fields = s.split(',').map(|kv| kv.split_once('=').ok_or_else(bad));
        let mut next = |key: &str| -> Result<&str, ParseError> {
            match fields.next() {
                Some(Ok((k, v))) if k == key => Ok(v),
                _ => Err(bad()),
            }
        };
        let flag = |v: &str| match v {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad()),
        };
        Ok(StateView {
            left: parse_opt(next("left")?)?,
            right: parse_opt(next("right")?)?,
            busy: flag(next("busy")?)?,
            leaving: flag(next("leaving")?)?,
            lifecycle: Lifecycle::from_code(next("lc")?)?,
        })
    }
}

/// The `detail` column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Detail {
    None,
    Inject(InjectKind),
    /// A climbing join travelling on a lower level's link.
    Bootstrap,
    /// A message lost because its receiver exited.
    Discard,
    Exit {
        adversarial: bool,
    },
    State(StateView),
    Event(Event),
    /// An explicit injection target was unusable; an automatic one was drawn.
    ViaUnavailable,
    End(EndReason),
    /// A channel still holding messages when a scripted schedule stopped.
    Starved,
    Error(String),
}

impl Detail {
    pub fn error(e: impl fmt::Display) -> Self {
        Detail::Error(e.to_string().replace(char::is_whitespace, "_"))
    }

    pub fn event(&self) -> Option<&Event> {
        match self {
            Detail::Event(e) => Some(e),
            _ => None,
        }
    }
}

impl fmt::Display for Detail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Detail::None => f.write_str("-"),
            Detail::Inject(k) => f.write_str(match k {
                InjectKind::Join => "join",
                InjectKind::LeaveIntent => "leave-intent",
                InjectKind::Search => "search",
                InjectKind::AdversarialExit => "adversarial-exit",
            }),
            Detail::Bootstrap => f.write_str("bootstrap"),
            Detail::Discard => f.write_str("discard"),
            Detail::Exit { adversarial } => f.write_str(if *adversarial {
                "adversarial"
            } else {
                "cooperative"
            }),
            Detail::State(v) => v.fmt(f),
            Detail::Event(e) => e.fmt(f),
            Detail::ViaUnavailable => f.write_str("via-unavailable"),
            Detail::End(r) => write!(f, "end:{}", r.as_str()),
            Detail::Starved => f.write_str("starved"),
            Detail::Error(s) => write!(f, "error:{s}"),
        }
    }
}

impl Detail {
    fn parse(kind: RecordKind, s: &str) -> Result<Self, ParseError> {
        if s == "-" {
            return Ok(Detail::None);
        }
        let bad = || ParseError::new(format!("invalid detail `{s}` for {}", kind.as_str()));
        Ok(match (kind, s) {
            (RecordKind::Inject, "join") => Detail::Inject(InjectKind::Join),
            (RecordKind::Inject, "leave-intent") => Detail::Inject(InjectKind::LeaveIntent),
            (RecordKind::Inject, "search") => Detail::Inject(InjectKind::Search),
            (RecordKind::Inject, "adversarial-exit") => Detail::Inject(InjectKind::AdversarialExit),
            (RecordKind::Send, "bootstrap") => Detail::Bootstrap,
            (RecordKind::Exit, "discard") => Detail::Discard,
            (RecordKind::Exit, "cooperative") => Detail::Exit { adversarial: false },
            (RecordKind::Exit, "adversarial") => Detail::Exit { adversarial: true },
            (RecordKind::State, _) => Detail::State(s.parse()?),
            (RecordKind::Annotation, "via-unavailable") => Detail::ViaUnavailable,
            (RecordKind::Annotation, "starved") => Detail::Starved,
            (RecordKind::Annotation, _) => {
                if let Some(r) = s.strip_prefix("end:") {
                    Detail::End(match r {
                        "quiescent" => EndReason::Quiescent,
                        "truncated" => EndReason::Truncated,
                        "script-exhausted" => EndReason::ScriptExhausted,
                        "script-invalid" => EndReason::ScriptInvalid,
                        _ => return Err(bad()),
                    })
                } else if let Some(e) = s.strip_prefix("error:") {
                    Detail::Error(e.to_string())
                } else {
                    Detail::Event(s.parse()?)
                }
            }
            _ => return Err(bad()),
        })
    }
}

/// One simulation event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub seq: u64,
    pub kind: RecordKind,
    pub process: Option<ProcessId>,
    pub peer: Option<Endpoint>,
    pub message: Option<Message>,
    pub detail: Detail,
    /// Level of the link or state the record concerns.
    pub level: u8,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.seq,
            self.kind.as_str(),
            fmt_opt(self.process),
            self.peer.map_or_else(|| "-".to_string(), |p| p.to_string()),
            self.message
                .map_or_else(|| "-".to_string(), |m| m.render(self.level)),
            self.detail,
            self.level
        )
    }
}

impl FromStr for TraceRecord {
    type Err = ParseError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let f: Vec<&str> = line.split('\t').collect();
        let [seq, kind, process, peer, message, detail, level] = f.as_slice() else {
            return Err(ParseError::new(format!(
                "expected 7 tab-separated fields, got {}",
                f.len()
            )));
        };
        let kind: RecordKind = kind.parse()?;
        let level: u8 = level
            .parse()
            .map_err(|_| ParseError::new(format!("invalid level `{level}`")))?;
        Ok(TraceRecord {
            seq: seq
                .parse()
                .map_err(|_| ParseError::new(format!("invalid seq `{seq}`")))?,
            kind,
            process: parse_opt(process)?,
            peer: if *peer == "-" {
                None
            } else {
                Some(peer.parse()?)
            },
            message: if *message == "-" {
                None
            } else {
                Some(Message::parse(message, level)?)
            },
            detail: Detail::parse(kind, detail)?,
            level,
        })
    }
}

/// Renders a whole trace, one record per line.
pub fn write_trace(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 48);
    for r in records {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, ParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.parse().map_err(|e: ParseError| e.with_line(i + 1)))
        .collect()
}
