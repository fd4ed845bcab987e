//! Per-process churn protocol for a linearized overlay.
//!
//! Every process keeps its left and right neighbor. A request to join or
//! leave is routed along the line to the *handler*, the process with the
//! smaller identifier adjacent to the place of churn. The handler serves one
//! request at a time and drives it through five stages:
//!
//! | stage | join                                   | leave                            |
//! |-------|----------------------------------------|----------------------------------|
//! | 1     | `sua(right)` handler to joiner (1.1), `sua(-)` joiner to right (1.2) | `sua(-)` handler to right |
//! | 2     | `sub` right to joiner (2.1), joiner to handler (2.2) | `sub` right to handler |
//! | 3     | `tda` handler to old right             | `tda` handler to leaver (3.1), leaver to right (3.2) |
//! | 4     | `tdb` old right to handler             | `tdb` right to leaver (4.1), leaver to handler (4.2) |
//! | 5     | `ftd` handler to joiner                | `ftd` handler to leaver, which exits |
//!
//! All operations here are pure: they take the current [`NodeState`] by
//! reference and return the successor together with an [`Emission`].

use std::fmt;
use std::str::FromStr;

use crate::engine::StateView;
use crate::error::{ParseError, ProtocolError};
use crate::id::ProcessId;
use crate::message::{Message, Payload, SearchToken};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChurnKind {
    Join,
    Leave,
}

impl fmt::Display for ChurnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChurnKind::Join => "join",
            ChurnKind::Leave => "leave",
        })
    }
}

impl FromStr for ChurnKind {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "join" => Ok(ChurnKind::Join),
            "leave" => Ok(ChurnKind::Leave),
            _ => Err(ParseError::new(format!("invalid churn kind `{s}`"))),
        }
    }
}

/// The request a handler is currently coordinating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pending {
    pub kind: ChurnKind,
    pub churn: ProcessId,
    /// Last stage the handler itself observed (1, 2 or 4).
    pub stage: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lifecycle {
    Joining,
    Joined,
    Exited,
}

impl Lifecycle {
    pub fn code(self) -> char {
        match self {
            Lifecycle::Joining => 'j',
            Lifecycle::Joined => 'J',
            Lifecycle::Exited => 'X',
        }
    }

    pub fn from_code(c: &str) -> Result<Self, ParseError> {
        match c {
            "j" => Ok(Lifecycle::Joining),
            "J" => Ok(Lifecycle::Joined),
            "X" => Ok(Lifecycle::Exited),
            _ => Err(ParseError::new(format!("invalid lifecycle `{c}`"))),
        }
    }
}

/// Sub-stage labels of request handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StageLabel {
    J1_1,
    J1_2,
    J2_1,
    J2_2,
    J3,
    J4,
    J5,
    L1,
    L2,
    L3_1,
    L3_2,
    L4_1,
    L4_2,
    L5,
}

impl StageLabel {
    pub const ALL: [StageLabel; 14] = [
        StageLabel::J1_1,
        StageLabel::J1_2,
        StageLabel::J2_1,
        StageLabel::J2_2,
        StageLabel::J3,
        StageLabel::J4,
        StageLabel::J5,
        StageLabel::L1,
        StageLabel::L2,
        StageLabel::L3_1,
        StageLabel::L3_2,
        StageLabel::L4_1,
        StageLabel::L4_2,
        StageLabel::L5,
    ];

    pub fn stage(self) -> u8 {
        use StageLabel::*;
        match self {
            J1_1 | J1_2 | L1 => 1,
            J2_1 | J2_2 | L2 => 2,
            J3 | L3_1 | L3_2 => 3,
            J4 | L4_1 | L4_2 => 4,
            J5 | L5 => 5,
        }
    }

    pub fn kind(self) -> ChurnKind {
        if (self as u8) <= (StageLabel::J5 as u8) {
            ChurnKind::Join
        } else {
            ChurnKind::Leave
        }
    }

    pub fn as_str(self) -> &'static str {
        use StageLabel::*;
        match self {
            J1_1 => "J1.1",
            J1_2 => "J1.2",
            J2_1 => "J2.1",
            J2_2 => "J2.2",
            J3 => "J3",
            J4 => "J4",
            J5 => "J5",
            L1 => "L1",
            L2 => "L2",
            L3_1 => "L3.1",
            L3_2 => "L3.2",
            L4_1 => "L4.1",
            L4_2 => "L4.2",
            L5 => "L5",
        }
    }
}

impl fmt::Display for StageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageLabel {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| ParseError::new(format!("invalid stage label `{s}`")))
    }
}

/// Semantic annotation attached to an emission, for tracing only.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Event {
    /// Handler accepted a request. `partner` is the third participant: the
    /// handler's right neighbor for a join, the leaver's right for a leave.
    Accept {
        kind: ChurnKind,
        churn: ProcessId,
        partner: ProcessId,
    },
    Stage {
        label: StageLabel,
        churn: ProcessId,
    },
    /// The request reached its place but the handler could not take it.
    Bounce {
        kind: ChurnKind,
        churn: ProcessId,
    },
    /// A leave was forwarded where the literal left/right comparison would
    /// have picked the other direction.
    RouteAmended {
        churn: ProcessId,
    },
    LeaveEmit {
        q: ProcessId,
    },
    Resolve {
        token: SearchToken,
        found: bool,
    },
    DuplicateJoin {
        churn: ProcessId,
    },
    Corruption(String),
    Warning(String),
}

impl Event {
    fn corrupt(what: &str) -> Self {
        Event::Corruption(what.replace(char::is_whitespace, "-"))
    }

    fn warn(what: &str) -> Self {
        Event::Warning(what.replace(char::is_whitespace, "-"))
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Accept {
                kind,
                churn,
                partner,
            } => write!(f, "accept:{kind}:{churn}:{partner}"),
            Event::Stage { label, churn } => write!(f, "stage:{label}:{churn}"),
            Event::Bounce { kind, churn } => write!(f, "bounce:{kind}:{churn}"),
            Event::RouteAmended { churn } => write!(f, "route-amended:{churn}"),
            Event::LeaveEmit { q } => write!(f, "leave-emit:{q}"),
            Event::Resolve { token, found } => {
                write!(f, "{}:{token}", if *found { "found" } else { "absent" })
            }
            Event::DuplicateJoin { churn } => write!(f, "duplicate-join:{churn}"),
            Event::Corruption(s) => write!(f, "corrupt:{s}"),
            Event::Warning(s) => write!(f, "warn:{s}"),
        }
    }
}

impl FromStr for Event {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.splitn(4, ':').collect();
        let bad = || ParseError::new(format!("invalid annotation `{s}`"));
        let token = |t: &str| t.parse::<SearchToken>().map_err(|_| bad());
        Ok(match parts.as_slice() {
            ["accept", k, c, p] => Event::Accept {
                kind: k.parse()?,
                churn: c.parse()?,
                partner: p.parse()?,
            },
            ["stage", l, c] => Event::Stage {
                label: l.parse()?,
                churn: c.parse()?,
            },
            ["bounce", k, c] => Event::Bounce {
                kind: k.parse()?,
                churn: c.parse()?,
            },
            ["route-amended", c] => Event::RouteAmended { churn: c.parse()? },
            ["leave-emit", q] => Event::LeaveEmit { q: q.parse()? },
            ["found", t] => Event::Resolve {
                token: token(t)?,
                found: true,
            },
            ["absent", t] => Event::Resolve {
                token: token(t)?,
                found: false,
            },
            ["duplicate-join", c] => Event::DuplicateJoin { churn: c.parse()? },
            ["corrupt", rest @ ..] => Event::Corruption(rest.join(":")),
            ["warn", rest @ ..] => Event::Warning(rest.join(":")),
            _ => return Err(bad()),
        })
    }
}

/// Everything a single transition produces besides the successor state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Emission {
    pub sends: Vec<(ProcessId, Message)>,
    pub exit_now: bool,
    pub events: Vec<Event>,
}

impl Emission {
    pub fn is_empty(&self) -> bool {
        self.sends.is_empty() && !self.exit_now && self.events.is_empty()
    }
}

pub type Transition = (NodeState, Emission);

/// Protocol state of one process on one level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeState {
    pub id: ProcessId,
    pub level: u8,
    pub left: Option<ProcessId>,
    pub right: Option<ProcessId>,
    pub leaving: bool,
    pub busy: bool,
    pub leave_sent: bool,
    /// Set once a leaver has torn down its right link; from then on it only
    /// forwards to the left so the teardown message stays last on that link.
    pub right_retired: bool,
    pub pending: Option<Pending>,
    pub lifecycle: Lifecycle,
}

impl NodeState {
    /// A member of the initial, stable overlay.
    pub fn new_member(
        id: ProcessId,
        left: ProcessId,
        right: ProcessId,
    ) -> Result<Self, ProtocolError> {
        Self::new_member_at(id, left, right, 0)
    }

    pub fn new_member_at(
        id: ProcessId,
        left: ProcessId,
        right: ProcessId,
        level: u8,
    ) -> Result<Self, ProtocolError> {
        if id.is_sentinel() {
            return Err(ProtocolError::Sentinel(id));
        }
        if !(left < id && id < right) {
            return Err(ProtocolError::Ordering {
                id,
                left: left.to_string(),
                right: right.to_string(),
            });
        }
        Ok(NodeState {
            left: Some(left),
            right: Some(right),
            ..Self::blank(id, level, Lifecycle::Joined)
        })
    }

    /// One of the two immovable end processes. `neighbor` is its only link.
    pub fn sentinel(id: ProcessId, neighbor: ProcessId, level: u8) -> Self {
        assert!(id.is_sentinel(), "{id} is not a sentinel");
        let mut s = Self::blank(id, level, Lifecycle::Joined);
        if id == ProcessId::NEG_INF {
            s.right = Some(neighbor);
        } else {
            s.left = Some(neighbor);
        }
        s
    }

    /// A process about to join; it waits for its first `sua`.
    pub fn new_joiner(id: ProcessId) -> Result<Self, ProtocolError> {
        Self::new_joiner_at(id, 0)
    }

    pub fn new_joiner_at(id: ProcessId, level: u8) -> Result<Self, ProtocolError> {
        if id.is_sentinel() {
            return Err(ProtocolError::Sentinel(id));
        }
        Ok(NodeState {
            busy: true,
            ..Self::blank(id, level, Lifecycle::Joining)
        })
    }

    fn blank(id: ProcessId, level: u8, lifecycle: Lifecycle) -> Self {
        NodeState {
            id,
            level,
            left: None,
            right: None,
            leaving: false,
            busy: false,
            leave_sent: false,
            right_retired: false,
            pending: None,
            lifecycle,
        }
    }

    /// Both neighbors known (sentinels only need their inner one).
    pub fn is_linked(&self) -> bool {
        self.lifecycle != Lifecycle::Exited
            && (self.left.is_some() || self.id == ProcessId::NEG_INF)
            && (self.right.is_some() || self.id == ProcessId::POS_INF)
    }

    pub fn is_joined(&self) -> bool {
        self.lifecycle == Lifecycle::Joined
    }

    /// The environment asks this process to leave. Emission of the actual
    /// request waits for [`NodeState::maybe_emit_leave`].
    pub fn set_leaving(&self) -> Result<NodeState, ProtocolError> {
        if self.id.is_sentinel() {
            return Err(ProtocolError::Sentinel(self.id));
        }
        if self.lifecycle == Lifecycle::Exited {
            return Err(ProtocolError::Exited(self.id));
        }
        if self.leaving {
            return Err(ProtocolError::AlreadyLeaving(self.id));
        }
        Ok(NodeState {
            leaving: true,
            ..self.clone()
        })
    }

    fn ready(&self) -> Result<NodeState, ProtocolError> {
        if self.lifecycle == Lifecycle::Exited {
            return Err(ProtocolError::Exited(self.id));
        }
        if !self.is_linked() {
            return Err(ProtocolError::NotReady(self.id));
        }
        Ok(self.clone())
    }

    fn send(&self, em: &mut Emission, to: ProcessId, payload: Payload) {
        em.sends.push((to, Message::new(payload, self.level)));
    }

    fn forward(&self, em: &mut Emission, toward_right: bool, payload: Payload) {
        let target = if toward_right && !self.right_retired {
            self.right
        } else {
            self.left
        };
        match target {
            Some(t) => self.send(em, t, payload),
            None => em.events.push(Event::corrupt("no neighbor to forward to")),
        }
    }

    fn between_self_and_right(&self, x: ProcessId) -> bool {
        self.id < x && self.right.is_some_and(|r| x < r)
    }

    /// Dispatches a delivered message. `from` is `None` for environment
    /// injections, which only ever carry join, leave or search payloads.
    pub fn handle(
        &self,
        from: Option<ProcessId>,
        msg: &Message,
    ) -> Result<Transition, ProtocolError> {
        if msg.level != self.level {
            return Err(ProtocolError::NoSuchLevel {
                id: self.id,
                level: msg.level,
            });
        }
        let sender = |name| from.ok_or(ProtocolError::MissingSender(name));
        match msg.payload {
            Payload::Join { req } => self.on_join_request(req),
            Payload::Leave { req, q } => self.on_leave_request(req, q),
            Payload::Sua { req } => self.on_sua(sender("sua")?, req),
            Payload::Sub => self.on_sub(sender("sub")?),
            Payload::Tda => self.on_tda(sender("tda")?),
            Payload::Tdb => self.on_tdb(sender("tdb")?),
            Payload::Ftd => self.on_ftd(sender("ftd")?),
            Payload::Search { key, token } => self.on_search(key, token),
        }
    }

    pub fn on_join_request(&self, req: ProcessId) -> Result<Transition, ProtocolError> {
        let mut s = self.ready()?;
        let mut em = Emission::default();
        if req == s.id || Some(req) == s.left || Some(req) == s.right {
            em.events.push(Event::DuplicateJoin { churn: req });
            return Ok((s, em));
        }
        if s.between_self_and_right(req) {
            if !s.leaving && !s.busy {
                let right = s.right.expect("linked");
                s.send(&mut em, req, Payload::Sua { req: Some(right) });
                s.busy = true;
                s.pending = Some(Pending {
                    kind: ChurnKind::Join,
                    churn: req,
                    stage: 1,
                });
                em.events.push(Event::Accept {
                    kind: ChurnKind::Join,
                    churn: req,
                    partner: right,
                });
                return Ok((s, em));
            }
            em.events.push(Event::Bounce {
                kind: ChurnKind::Join,
                churn: req,
            });
        }
        s.forward(&mut em, req > s.id, Payload::Join { req });
        Ok((s, em))
    }

    pub fn on_leave_request(
        &self,
        req: ProcessId,
        q: ProcessId,
    ) -> Result<Transition, ProtocolError> {
        let mut s = self.ready()?;
        let mut em = Emission::default();
        if req.is_sentinel() || q <= req {
            em.events.push(Event::corrupt("malformed leave request"));
            return Ok((s, em));
        }
        if Some(req) == s.right {
            if !s.leaving && !s.busy {
                s.send(&mut em, q, Payload::Sua { req: None });
                s.busy = true;
                s.pending = Some(Pending {
                    kind: ChurnKind::Leave,
                    churn: req,
                    stage: 1,
                });
                em.events.push(Event::Accept {
                    kind: ChurnKind::Leave,
                    churn: req,
                    partner: q,
                });
                return Ok((s, em));
            }
            em.events.push(Event::Bounce {
                kind: ChurnKind::Leave,
                churn: req,
            });
        }
        // Toward the place of leave: the handler sits left of the leaver.
        if req != s.id {
            em.events.push(Event::RouteAmended { churn: req });
        }
        s.forward(&mut em, req > s.id, Payload::Leave { req, q });
        Ok((s, em))
    }

    pub fn on_sua(
        &self,
        from: ProcessId,
        req: Option<ProcessId>,
    ) -> Result<Transition, ProtocolError> {
        if self.lifecycle == Lifecycle::Exited {
            return Err(ProtocolError::Exited(self.id));
        }
        let mut s = self.clone();
        let mut em = Emission::default();
        match req {
            Some(right) => {
                // Join 1.1: only a fresh joiner learns its neighbors this way.
                if s.lifecycle != Lifecycle::Joining
                    || s.left.is_some()
                    || !(from < s.id && s.id < right)
                {
                    em.events
                        .push(Event::corrupt("unexpected sua with payload"));
                    return Ok((s, em));
                }
                s.right = Some(right);
                s.left = Some(from);
                s.send(&mut em, right, Payload::Sua { req: None });
                em.events.push(Event::Stage {
                    label: StageLabel::J1_1,
                    churn: s.id,
                });
            }
            None => {
                let Some(old_left) = s.left.filter(|_| s.is_linked()) else {
                    em.events.push(Event::corrupt("sua before linking"));
                    return Ok((s, em));
                };
                if from >= s.id {
                    em.events.push(Event::corrupt("sua from the right"));
                    return Ok((s, em));
                }
                // A joiner lands between the old left and us; a leave handler
                // sits left of the old left.
                let stage = if from > old_left {
                    Event::Stage {
                        label: StageLabel::J1_2,
                        churn: from,
                    }
                } else {
                    Event::Stage {
                        label: StageLabel::L1,
                        churn: old_left,
                    }
                };
                s.left = Some(from);
                s.send(&mut em, from, Payload::Sub);
                em.events.push(stage);
            }
        }
        Ok((s, em))
    }

    pub fn on_sub(&self, from: ProcessId) -> Result<Transition, ProtocolError> {
        let mut s = self.ready()?;
        let mut em = Emission::default();
        if Some(from) != s.right {
            // Join 2.2 or Leave 2: the handler swings its right pointer.
            let Some(pending) = s.pending.as_mut() else {
                em.events
                    .push(Event::corrupt("sub without pending request"));
                return Ok((s, em));
            };
            pending.stage = 2;
            let label = match pending.kind {
                ChurnKind::Join => StageLabel::J2_2,
                ChurnKind::Leave => StageLabel::L2,
            };
            let churn = pending.churn;
            let old_right = s.right.expect("linked");
            s.send(&mut em, old_right, Payload::Tda);
            s.right = Some(from);
            em.events.push(Event::Stage { label, churn });
        } else {
            // Join 2.1: the joiner hears back from its right neighbor.
            if s.lifecycle != Lifecycle::Joining {
                em.events
                    .push(Event::corrupt("sub from right outside a join"));
                return Ok((s, em));
            }
            let left = s.left.expect("linked");
            s.send(&mut em, left, Payload::Sub);
            em.events.push(Event::Stage {
                label: StageLabel::J2_1,
                churn: s.id,
            });
        }
        Ok((s, em))
    }

    pub fn on_tda(&self, from: ProcessId) -> Result<Transition, ProtocolError> {
        let mut s = self.ready()?;
        let mut em = Emission::default();
        let left = s.left;
        if Some(from) != left {
            // Join 3 comes from the handler, left of our new left (the
            // joiner); Leave 3.2 comes from the leaver, right of it.
            let stage = match left {
                Some(l) if from < l => Event::Stage {
                    label: StageLabel::J3,
                    churn: l,
                },
                _ => Event::Stage {
                    label: StageLabel::L3_2,
                    churn: from,
                },
            };
            s.send(&mut em, from, Payload::Tdb);
            em.events.push(stage);
        } else {
            // Leave 3.1
            if !s.leaving || !s.leave_sent {
                em.events
                    .push(Event::corrupt("tda from left at a non-leaver"));
                return Ok((s, em));
            }
            let right = s.right.expect("linked");
            s.send(&mut em, right, Payload::Tda);
            s.right_retired = true;
            em.events.push(Event::Stage {
                label: StageLabel::L3_1,
                churn: s.id,
            });
        }
        Ok((s, em))
    }

    pub fn on_tdb(&self, from: ProcessId) -> Result<Transition, ProtocolError> {
        let mut s = self.ready()?;
        let mut em = Emission::default();
        if Some(from) != s.right {
            // Join 4 or Leave 4.2: the handler is done; release the churner.
            let Some(pending) = s.pending.take() else {
                em.events
                    .push(Event::corrupt("tdb without pending request"));
                return Ok((s, em));
            };
            let label = match pending.kind {
                ChurnKind::Join => StageLabel::J4,
                ChurnKind::Leave => StageLabel::L4_2,
            };
            s.send(&mut em, pending.churn, Payload::Ftd);
            s.busy = false;
            em.events.push(Event::Stage {
                label,
                churn: pending.churn,
            });
        } else {
            // Leave 4.1
            if !s.right_retired {
                em.events
                    .push(Event::corrupt("tdb from right before teardown"));
                return Ok((s, em));
            }
            let left = s.left.expect("linked");
            s.send(&mut em, left, Payload::Tdb);
            em.events.push(Event::Stage {
                label: StageLabel::L4_1,
                churn: s.id,
            });
        }
        Ok((s, em))
    }

    pub fn on_ftd(&self, _from: ProcessId) -> Result<Transition, ProtocolError> {
        let mut s = self.ready()?;
        let mut em = Emission::default();
        if s.leaving && s.leave_sent {
            // Leave 5: the process may exit.
            s.left = None;
            s.right = None;
            s.busy = false;
            s.lifecycle = Lifecycle::Exited;
            em.exit_now = true;
            em.events.push(Event::Stage {
                label: StageLabel::L5,
                churn: s.id,
            });
        } else if s.lifecycle == Lifecycle::Joining {
            s.busy = false;
            s.lifecycle = Lifecycle::Joined;
            em.events.push(Event::Stage {
                label: StageLabel::J5,
                churn: s.id,
            });
        } else {
            if s.pending.is_none() {
                s.busy = false;
            }
            em.events.push(Event::warn("stray ftd"));
        }
        Ok((s, em))
    }

    /// Whether [`NodeState::maybe_emit_leave`] would fire.
    pub fn leave_enabled(&self) -> bool {
        self.leaving
            && !self.busy
            && !self.leave_sent
            && self.lifecycle == Lifecycle::Joined
            && self.id.is_ordinary()
            && self.is_linked()
    }

    /// Guarded action: send `leave(id, right)` to the left neighbor once the
    /// process wants to leave and is not coordinating anything.
    pub fn maybe_emit_leave(&self) -> Transition {
        let mut s = self.clone();
        let mut em = Emission::default();
        if !s.leave_enabled() {
            return (s, em);
        }
        let (left, right) = (s.left.expect("linked"), s.right.expect("linked"));
        s.send(
            &mut em,
            left,
            Payload::Leave {
                req: s.id,
                q: right,
            },
        );
        s.leave_sent = true;
        em.events.push(Event::LeaveEmit { q: right });
        (s, em)
    }

    pub fn on_search(
        &self,
        key: ProcessId,
        token: SearchToken,
    ) -> Result<Transition, ProtocolError> {
        let s = self.ready()?;
        let mut em = Emission::default();
        if key == s.id {
            em.events.push(Event::Resolve { token, found: true });
        } else if s.between_self_and_right(key) {
            em.events.push(Event::Resolve {
                token,
                found: false,
            });
        } else {
            s.forward(&mut em, key > s.id, Payload::Search { key, token });
        }
        Ok((s, em))
    }

    /// Rebuilds a state from its pointer-level view; supplementary
    /// bookkeeping starts at defaults.
    pub(crate) fn restored(id: ProcessId, level: u8, view: StateView) -> Self {
        NodeState {
            left: view.left,
            right: view.right,
            busy: view.busy,
            leaving: view.leaving,
            ..Self::blank(id, level, view.lifecycle)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(v: i64) -> ProcessId {
        ProcessId::new(v)
    }

    fn member(p: i64, l: i64, r: i64) -> NodeState {
        NodeState::new_member(id(p), id(l), id(r)).unwrap()
    }

    fn sends(em: &Emission) -> Vec<(i64, Payload)> {
        em.sends
            .iter()
            .map(|(to, m)| (to.value(), m.payload))
            .collect()
    }

    #[test]
    fn new_member_checks_order() {
        let s = NodeState::new_member(id(10), ProcessId::NEG_INF, ProcessId::POS_INF).unwrap();
        assert_eq!(s.left, Some(ProcessId::NEG_INF));
        assert_eq!(s.right, Some(ProcessId::POS_INF));
        assert!(!s.busy && !s.leaving && s.is_joined());
        assert!(matches!(
            NodeState::new_member(id(10), id(20), id(30)),
            Err(ProtocolError::Ordering { .. })
        ));
        assert!(NodeState::new_member(id(20), id(10), id(30)).is_ok());
    }

    #[test]
    fn new_joiner_is_busy_and_unlinked() {
        let j = NodeState::new_joiner(id(15)).unwrap();
        assert!(j.busy);
        assert_eq!((j.left, j.right), (None, None));
        assert_eq!(j.lifecycle, Lifecycle::Joining);
        assert_eq!(
            NodeState::new_joiner(ProcessId::POS_INF),
            Err(ProtocolError::Sentinel(ProcessId::POS_INF))
        );
        assert_eq!(
            j.on_join_request(id(17)).unwrap_err(),
            ProtocolError::NotReady(id(15))
        );
    }

    #[test]
    fn join_request_accept_and_forward() {
        let (s, em) = member(10, 5, 20).on_join_request(id(15)).unwrap();
        assert_eq!(sends(&em), vec![(15, Payload::Sua { req: Some(id(20)) })]);
        assert!(s.busy);
        assert_eq!(
            s.pending,
            Some(Pending {
                kind: ChurnKind::Join,
                churn: id(15),
                stage: 1
            })
        );

        let busy = NodeState {
            busy: true,
            ..member(10, 5, 20)
        };
        let (_, em) = busy.on_join_request(id(15)).unwrap();
        assert_eq!(sends(&em), vec![(20, Payload::Join { req: id(15) })]);
        assert!(em.events.contains(&Event::Bounce {
            kind: ChurnKind::Join,
            churn: id(15)
        }));

        let (_, em) = member(30, 20, 40).on_join_request(id(15)).unwrap();
        assert_eq!(sends(&em), vec![(20, Payload::Join { req: id(15) })]);
    }

    #[test]
    fn duplicate_join_is_dropped() {
        let (s, em) = member(10, 5, 15).on_join_request(id(15)).unwrap();
        assert!(em.sends.is_empty());
        assert_eq!(em.events, vec![Event::DuplicateJoin { churn: id(15) }]);
        assert!(!s.busy);
        let (_, em) = member(10, 5, 15).on_join_request(id(10)).unwrap();
        assert!(em.sends.is_empty());
    }

    #[test]
    fn leave_request_accept_and_route() {
        let (s, em) = member(10, 5, 15).on_leave_request(id(15), id(20)).unwrap();
        assert_eq!(sends(&em), vec![(20, Payload::Sua { req: None })]);
        assert!(s.busy);

        // the leaver itself sends it left
        let (_, em) = member(15, 10, 20).on_leave_request(id(15), id(20)).unwrap();
        assert_eq!(
            sends(&em),
            vec![(
                10,
                Payload::Leave {
                    req: id(15),
                    q: id(20)
                }
            )]
        );

        // busy handler bounces it to the leaver
        let busy = NodeState {
            busy: true,
            ..member(10, 5, 15)
        };
        let (_, em) = busy.on_leave_request(id(15), id(20)).unwrap();
        assert_eq!(sends(&em)[0].0, 15);

        // far left of the leaver: travel right toward the handler
        let (_, em) = member(3, 1, 5).on_leave_request(id(15), id(20)).unwrap();
        assert_eq!(sends(&em)[0].0, 5);
        assert!(em.events.contains(&Event::RouteAmended { churn: id(15) }));
    }

    #[test]
    fn sua_branches() {
        let j = NodeState::new_joiner(id(15)).unwrap();
        let (j, em) = j.on_sua(id(10), Some(id(20))).unwrap();
        assert_eq!((j.left, j.right), (Some(id(10)), Some(id(20))));
        assert_eq!(sends(&em), vec![(20, Payload::Sua { req: None })]);

        let (r, em) = member(20, 10, 30).on_sua(id(15), None).unwrap();
        assert_eq!(r.left, Some(id(15)));
        assert_eq!(sends(&em), vec![(15, Payload::Sub)]);
        assert!(em.events.contains(&Event::Stage {
            label: StageLabel::J1_2,
            churn: id(15)
        }));

        let (r, em) = member(20, 10, 30).on_sua(id(5), None).unwrap();
        assert_eq!(r.left, Some(id(5)));
        assert_eq!(sends(&em), vec![(5, Payload::Sub)]);
        assert!(em.events.contains(&Event::Stage {
            label: StageLabel::L1,
            churn: id(10)
        }));
    }

    #[test]
    fn sub_branches() {
        let h = NodeState {
            busy: true,
            pending: Some(Pending {
                kind: ChurnKind::Join,
                churn: id(15),
                stage: 1,
            }),
            ..member(10, 5, 20)
        };
        let (h, em) = h.on_sub(id(15)).unwrap();
        assert_eq!(sends(&em), vec![(20, Payload::Tda)]);
        assert_eq!(h.right, Some(id(15)));

        let j = NodeState {
            left: Some(id(10)),
            right: Some(id(20)),
            ..NodeState::new_joiner(id(15)).unwrap()
        };
        let (_, em) = j.on_sub(id(20)).unwrap();
        assert_eq!(sends(&em), vec![(10, Payload::Sub)]);
    }

    #[test]
    fn tda_and_tdb_branches() {
        let (_, em) = member(20, 15, 30).on_tda(id(10)).unwrap();
        assert_eq!(sends(&em), vec![(10, Payload::Tdb)]);

        let leaver = NodeState {
            leaving: true,
            leave_sent: true,
            ..member(10, 5, 20)
        };
        let (leaver, em) = leaver.on_tda(id(5)).unwrap();
        assert_eq!(sends(&em), vec![(20, Payload::Tda)]);
        assert!(leaver.right_retired);
        let (_, em) = leaver.on_tdb(id(20)).unwrap();
        assert_eq!(sends(&em), vec![(5, Payload::Tdb)]);

        let h = NodeState {
            busy: true,
            pending: Some(Pending {
                kind: ChurnKind::Join,
                churn: id(15),
                stage: 2,
            }),
            ..member(10, 5, 15)
        };
        let (h, em) = h.on_tdb(id(20)).unwrap();
        assert_eq!(sends(&em), vec![(15, Payload::Ftd)]);
        assert!(!h.busy && h.pending.is_none());
    }

    #[test]
    fn tdb_without_pending_is_flagged() {
        let (_, em) = member(10, 5, 15).on_tdb(id(20)).unwrap();
        assert!(em.sends.is_empty());
        assert!(matches!(em.events[0], Event::Corruption(_)));
    }

    #[test]
    fn ftd_branches() {
        let leaver = NodeState {
            leaving: true,
            leave_sent: true,
            ..member(10, 5, 20)
        };
        let (x, em) = leaver.on_ftd(id(5)).unwrap();
        assert!(em.exit_now);
        assert_eq!((x.left, x.right), (None, None));
        assert_eq!(x.lifecycle, Lifecycle::Exited);
        assert_eq!(x.on_ftd(id(5)).unwrap_err(), ProtocolError::Exited(id(10)));

        let j = NodeState {
            left: Some(id(10)),
            right: Some(id(20)),
            ..NodeState::new_joiner(id(15)).unwrap()
        };
        let (j, _) = j.on_ftd(id(10)).unwrap();
        assert!(!j.busy && j.is_joined());

        let (_, em) = member(10, 5, 20).on_ftd(id(5)).unwrap();
        assert!(matches!(em.events[0], Event::Warning(_)));
    }

    #[test]
    fn leave_guard() {
        let s = member(10, 5, 20).set_leaving().unwrap();
        let (s, em) = s.maybe_emit_leave();
        assert_eq!(
            sends(&em),
            vec![(
                5,
                Payload::Leave {
                    req: id(10),
                    q: id(20)
                }
            )]
        );
        assert!(s.leave_sent);
        assert!(s.maybe_emit_leave().1.is_empty());

        let busy = NodeState {
            busy: true,
            ..member(10, 5, 20).set_leaving().unwrap()
        };
        assert!(busy.maybe_emit_leave().1.is_empty());
        assert!(NodeState::sentinel(ProcessId::POS_INF, id(3), 0)
            .set_leaving()
            .is_err());
    }

    #[test]
    fn search_routing() {
        let s = member(10, 5, 20);
        assert_eq!(
            s.on_search(id(10), 1).unwrap().1.events,
            vec![Event::Resolve {
                token: 1,
                found: true
            }]
        );
        assert_eq!(
            s.on_search(id(15), 2).unwrap().1.events,
            vec![Event::Resolve {
                token: 2,
                found: false
            }]
        );
        assert_eq!(sends(&s.on_search(id(25), 3).unwrap().1)[0].0, 20);
        assert_eq!(sends(&s.on_search(id(1), 4).unwrap().1)[0].0, 5);
    }

    #[test]
    fn retired_leaver_forwards_left_only() {
        let leaver = NodeState {
            leaving: true,
            leave_sent: true,
            right_retired: true,
            ..member(10, 5, 20)
        };
        let (_, em) = leaver.on_join_request(id(25)).unwrap();
        assert_eq!(sends(&em), vec![(5, Payload::Join { req: id(25) })]);
    }

    #[test]
    fn level_tags_are_isolated() {
        let s = member(10, 5, 20);
        let msg = Message::new(Payload::Join { req: id(15) }, 1);
        assert!(matches!(
            s.handle(None, &msg),
            Err(ProtocolError::NoSuchLevel { level: 1, .. })
        ));
    }

    #[test]
    fn events_roundtrip_text() {
        let evs = [
            Event::Accept {
                kind: ChurnKind::Leave,
                churn: id(3),
                partner: ProcessId::POS_INF,
            },
            Event::Stage {
                label: StageLabel::L3_2,
                churn: id(-4),
            },
            Event::Bounce {
                kind: ChurnKind::Join,
                churn: id(8),
            },
            Event::RouteAmended { churn: id(8) },
            Event::LeaveEmit { q: id(9) },
            Event::Resolve {
                token: 4,
                found: false,
            },
            Event::DuplicateJoin { churn: id(2) },
            Event::Corruption("x:y".into()),
            Event::Warning("stray-ftd".into()),
        ];
        for e in evs {
            assert_eq!(e.to_string().parse::<Event>().unwrap(), e);
        }
    }
}
