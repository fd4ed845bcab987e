use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::trace::{Endpoint, StateView};
use super::Injection;
use crate::error::ParseError;
use crate::id::{fmt_opt, ProcessId};
use crate::message::Message;
use crate::protocol::{Lifecycle, NodeState};
use crate::skiplist::{MultiLevelNode, Phase};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelContents {
    pub from: Endpoint,
    pub to: ProcessId,
    /// Messages in FIFO order with the level of the link carrying each.
    pub messages: Vec<(Message, u8)>,
}

/// State of the whole system between two steps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Snapshot {
    pub nodes: BTreeMap<ProcessId, MultiLevelNode>,
    pub channels: Vec<ChannelContents>,
    pub pending: Vec<(u64, Injection)>,
    /// Processes whose leave emission is enabled.
    pub guards: Vec<ProcessId>,
}

impl Snapshot {
    pub fn node(&self, id: ProcessId) -> Option<&MultiLevelNode> {
        self.nodes.get(&id)
    }

    pub fn is_quiescent(&self) -> bool {
        self.channels.is_empty() && self.pending.is_empty() && self.guards.is_empty()
    }

    pub fn max_level(&self) -> u8 {
        self.nodes
            .values()
            .map(|n| (n.levels.len() - 1) as u8)
            .max()
            .unwrap_or(0)
    }

    /// Live states on one level, keyed by id.
    pub fn level(&self, k: u8) -> BTreeMap<ProcessId, &NodeState> {
        self.nodes
            .iter()
            .filter_map(|(&id, n)| n.level(k).map(|s| (id, s)))
            .filter(|(_, s)| s.lifecycle != Lifecycle::Exited)
            .collect()
    }

    /// Ids of processes that have completed their level-0 join.
    pub fn members(&self) -> Vec<ProcessId> {
        self.level(0)
            .into_iter()
            .filter(|(id, s)| id.is_ordinary() && s.is_joined())
            .map(|(id, _)| id)
            .collect()
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, node) in &self.nodes {
            for s in &node.levels {
                let _ = write!(
                    out,
                    "node {id} left={} right={} busy={} leaving={} lifecycle={}",
                    fmt_opt(s.left),
                    fmt_opt(s.right),
                    u8::from(s.busy),
                    u8::from(s.leaving),
                    s.lifecycle.code()
                );
                if s.level > 0 {
                    let _ = write!(out, " level={}", s.level);
                }
                out.push('\n');
            }
        }
        for ch in &self.channels {
            let _ = write!(out, "chan {} {} {}:", ch.from, ch.to, ch.messages.len());
            for (m, link) in &ch.messages {
                let _ = write!(out, " {}", m.render(0));
                if *link != m.level {
                    let _ = write!(out, "/{link}");
                }
            }
            out.push('\n');
        }
        for (at, inj) in &self.pending {
            let _ = writeln!(out, "pending at {at} {inj}");
        }
        for g in &self.guards {
            let _ = writeln!(out, "guard {g}");
        }
        out
    }

    /// Reads a dump back. Supplementary per-process bookkeeping that the dump
    /// does not carry (pending records, leave progress) is left at defaults.
    pub fn parse(text: &str) -> Result<Snapshot, ParseError> {
        let mut snap = Snapshot::default();
        let mut levels: BTreeMap<ProcessId, Vec<NodeState>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let words: Vec<&str> = line.split_whitespace().collect();
            let parsed: Result<(), ParseError> = (|| {
                match words.as_slice() {
                    [] => {}
                    ["node", id, fields @ ..] => {
                        let id: ProcessId = id.parse()?;
                        let mut kv = BTreeMap::new();
                        for f in fields {
                            let (k, v) = f
                                .split_once('=')
                                .ok_or_else(|| ParseError::new(format!("bad field `{f}`")))?;
                            kv.insert(k, v);
                        }
                        let get = |k: &str| {
                            kv.get(k)
                                .copied()
                                .ok_or_else(|| ParseError::new(format!("missing `{k}`")))
                        };
                        let view: StateView = format!(
                            "left={},right={},busy={},leaving={},lc={}",
                            get("left")?,
                            get("right")?,
                            get("busy")?,
                            get("leaving")?,
                            get("lifecycle")?
                        )
                        .parse()?;
                        let level: u8 = kv
                            .get("level")
                            .map(|v| v.parse())
                            .transpose()
                            .map_err(|_| ParseError::new("bad level"))?
                            .unwrap_or(0);
                        let states = levels.entry(id).or_default();
                        if usize::from(level) != states.len() {
                            return Err(ParseError::new("node levels out of order"));
                        }
                        states.push(NodeState::restored(id, level, view));
                    }
                    ["chan", from, to, count, msgs @ ..] => {
                        let count: usize = count
                            .strip_suffix(':')
                            .and_then(|c| c.parse().ok())
                            .ok_or_else(|| ParseError::new("bad channel count"))?;
                        if msgs.len() != count {
                            return Err(ParseError::new("channel count mismatch"));
                        }
                        let messages = msgs
                            .iter()
                            .map(|m| {
                                let (m, link) = match m.rsplit_once('/') {
                                    Some((m, l)) => (
                                        m,
                                        Some(
                                            l.parse::<u8>()
                                                .map_err(|_| ParseError::new("bad link level"))?,
                                        ),
                                    ),
                                    None => (*m, None),
                                };
                                let msg = Message::parse(m, 0)?;
                                Ok((msg, link.unwrap_or(msg.level)))
                            })
                            .collect::<Result<_, ParseError>>()?;
                        snap.channels.push(ChannelContents {
                            from: from.parse()?,
                            to: to.parse()?,
                            messages,
                        });
                    }
                    ["pending", "at", at, rest @ ..] => {
                        let at = at
                            .parse()
                            .map_err(|_| ParseError::new("bad pending step"))?;
                        snap.pending.push((at, rest.join(" ").parse()?));
                    }
                    ["guard", id] => snap.guards.push(id.parse()?),
                    _ => return Err(ParseError::new(format!("unknown line `{line}`"))),
                }
                Ok(())
            })();
            parsed.map_err(|e| e.with_line(lineno))?;
        }
        for (id, states) in levels {
            let phase = if states[0].lifecycle == Lifecycle::Exited {
                Phase::Exited
            } else if let Some(k) = states
                .iter()
                .position(|s| s.lifecycle == Lifecycle::Joining)
            {
                Phase::Climbing(k as u8)
            } else if let Some(k) = states
                .iter()
                .rposition(|s| s.leaving && s.lifecycle != Lifecycle::Exited)
            {
                Phase::Descending(k as u8)
            } else {
                Phase::Member
            };
            snap.nodes.insert(
                id,
                MultiLevelNode {
                    id,
                    top: (states.len() - 1) as u8,
                    levels: states,
                    phase,
                    leave_requested: false,
                },
            );
        }
        Ok(snap)
    }
}
