//! Skip-list extension: one protocol instance per level.
//!
//! A joiner enters level 0 first and climbs one level at a time, each climb
//! starting only after the previous level's `ftd`. A leaver descends from
//! its top level and exits after leaving level 0. A level-`k` join is routed
//! leftward along level `k - 1` until it reaches a level-`k` member, which
//! then treats it as an ordinary join.

use crate::engine::Snapshot;
use crate::error::ProtocolError;
use crate::id::ProcessId;
use crate::message::{Message, Payload};
use crate::protocol::{Emission, Event, NodeState, StageLabel};

/// Default cap on the number of levels above level 0.
pub const DEFAULT_MAX_LEVEL: u8 = 8;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Top level of `id`: geometric with `P(level >= k) = 2^-k`, capped at
/// `cap`, and fully determined by `(id, seed)`.
pub fn assign_level(id: ProcessId, seed: u64, cap: u8) -> u8 {
    let h = splitmix64(id.value() as u64 ^ splitmix64(seed));
    (h.trailing_zeros().min(u32::from(cap))) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Joining the given level.
    Climbing(u8),
    Member,
    /// Leaving the given level.
    Descending(u8),
    Exited,
}

/// A message to put on the wire. `link_level` is the level whose links carry
/// it; it differs from the message's own tag only for climbing joins that
/// are still looking for a member of their target level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outgoing {
    pub to: ProcessId,
    pub msg: Message,
    pub link_level: u8,
}

impl Outgoing {
    pub fn is_bootstrap(&self) -> bool {
        self.link_level != self.msg.level
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeOutput {
    pub sends: Vec<Outgoing>,
    pub events: Vec<(u8, Event)>,
    pub exit: bool,
}

impl NodeOutput {
    fn absorb(&mut self, level: u8, em: Emission) {
        self.sends
            .extend(em.sends.into_iter().map(|(to, msg)| Outgoing {
                to,
                msg,
                link_level: level,
            }));
        self.events
            .extend(em.events.into_iter().map(|e| (level, e)));
    }
}

/// One process across all of its levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiLevelNode {
    pub id: ProcessId,
    /// Highest level this process belongs to once fully joined.
    pub top: u8,
    /// Protocol state per level, indexed by level. Levels not reached yet
    /// are absent; levels already left stay with an exited state.
    pub levels: Vec<NodeState>,
    pub phase: Phase,
    /// A leave arrived while still climbing.
    pub leave_requested: bool,
}

impl MultiLevelNode {
    /// A member of the initial overlay; `links[k]` are its level-`k`
    /// neighbors.
    pub fn member(id: ProcessId, links: &[(ProcessId, ProcessId)]) -> Result<Self, ProtocolError> {
        let levels = links
            .iter()
            .enumerate()
            .map(|(k, &(l, r))| {
                if id.is_sentinel() {
                    let neighbor = if id == ProcessId::NEG_INF { r } else { l };
                    Ok(NodeState::sentinel(id, neighbor, k as u8))
                } else {
                    NodeState::new_member_at(id, l, r, k as u8)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        assert!(!levels.is_empty(), "a member needs level 0");
        Ok(MultiLevelNode {
            id,
            top: (levels.len() - 1) as u8,
            levels,
            phase: Phase::Member,
            leave_requested: false,
        })
    }

    pub fn joiner(id: ProcessId, top: u8) -> Result<Self, ProtocolError> {
        Ok(MultiLevelNode {
            id,
            top,
            levels: vec![NodeState::new_joiner(id)?],
            phase: Phase::Climbing(0),
            leave_requested: false,
        })
    }

    pub fn level(&self, k: u8) -> Option<&NodeState> {
        self.levels.get(usize::from(k))
    }

    /// Fully joined and not on its way out.
    pub fn is_settled_member(&self) -> bool {
        self.phase == Phase::Member && !self.leave_requested
    }

    pub fn is_exited(&self) -> bool {
        self.phase == Phase::Exited
    }

    pub fn request_leave(&self) -> Result<MultiLevelNode, ProtocolError> {
        if self.id.is_sentinel() {
            return Err(ProtocolError::Sentinel(self.id));
        }
        let mut n = self.clone();
        match n.phase {
            Phase::Exited => Err(ProtocolError::Exited(n.id)),
            Phase::Descending(_) => Err(ProtocolError::AlreadyLeaving(n.id)),
            Phase::Climbing(_) if n.leave_requested => Err(ProtocolError::AlreadyLeaving(n.id)),
            Phase::Climbing(_) => {
                n.leave_requested = true;
                Ok(n)
            }
            Phase::Member => {
                n.start_descent(n.top)?;
                Ok(n)
            }
        }
    }

    fn start_descent(&mut self, k: u8) -> Result<(), ProtocolError> {
        let idx = usize::from(k);
        self.levels[idx] = self.levels[idx].set_leaving()?;
        self.phase = Phase::Descending(k);
        Ok(())
    }

    /// Whether the guarded leave emission is enabled on the current level.
    pub fn leave_enabled(&self) -> bool {
        match self.phase {
            Phase::Descending(k) => self.levels[usize::from(k)].leave_enabled(),
            _ => false,
        }
    }

    pub fn emit_leave(&self) -> (MultiLevelNode, NodeOutput) {
        let mut n = self.clone();
        let mut out = NodeOutput::default();
        if let Phase::Descending(k) = n.phase {
            let (s, em) = n.levels[usize::from(k)].maybe_emit_leave();
            n.levels[usize::from(k)] = s;
            out.absorb(k, em);
        }
        (n, out)
    }

    /// Delivers one message to the level named by its tag.
    pub fn handle(
        &self,
        from: Option<ProcessId>,
        msg: &Message,
    ) -> Result<(MultiLevelNode, NodeOutput), ProtocolError> {
        let k = msg.level;
        let mut n = self.clone();
        let mut out = NodeOutput::default();

        // A leaver that retired its right link on level k takes no more
        // level-k traffic, so it is not an entry point for climbing joins.
        let entry_at_k = n
            .level(k)
            .is_some_and(|s| s.is_linked() && !(k > 0 && s.right_retired));
        if let (Payload::Join { .. }, false) = (&msg.payload, entry_at_k) {
            // Not usable on the target level: keep heading left on the
            // highest lower level we are linked on.
            let via = (0..k)
                .rev()
                .find(|&j| n.level(j).is_some_and(NodeState::is_linked))
                .ok_or(ProtocolError::NotReady(n.id))?;
            let left = n.levels[usize::from(via)]
                .left
                .ok_or(ProtocolError::NotReady(n.id))?;
            out.sends.push(Outgoing {
                to: left,
                msg: *msg,
                link_level: via,
            });
            return Ok((n, out));
        }

        let state = n
            .level(k)
            .ok_or(ProtocolError::NoSuchLevel { id: n.id, level: k })?;
        let (s, mut em) = state.handle(from, msg)?;
        n.levels[usize::from(k)] = s;
        let exit_now = std::mem::take(&mut em.exit_now);
        let own_stage = em.events.iter().find_map(|e| match e {
            Event::Stage { label, churn } if *churn == n.id => Some(*label),
            _ => None,
        });
        out.absorb(k, em);

        match own_stage {
            Some(StageLabel::J5) => {
                if k < n.top {
                    let next = k + 1;
                    n.levels.push(NodeState::new_joiner_at(n.id, next)?);
                    n.phase = Phase::Climbing(next);
                    let left = n.levels[usize::from(k)]
                        .left
                        .ok_or(ProtocolError::NotReady(n.id))?;
                    out.sends.push(Outgoing {
                        to: left,
                        msg: Message::new(Payload::Join { req: n.id }, next),
                        link_level: k,
                    });
                } else {
                    n.phase = Phase::Member;
                    if n.leave_requested {
                        n.leave_requested = false;
                        n.start_descent(n.top)?;
                    }
                }
            }
            Some(StageLabel::L5) if exit_now => {
                if k == 0 {
                    n.phase = Phase::Exited;
                    out.exit = true;
                } else {
                    n.start_descent(k - 1)?;
                }
            }
            _ => {}
        }
        Ok((n, out))
    }
}

/// Outcome of a search walk over a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchWalk {
    pub found: bool,
    pub hops: usize,
}

/// Searches for `key` starting at `start`, moving along the highest level
/// that does not overshoot and descending when every level would. Only
/// meaningful on a quiescent snapshot.
pub fn skip_search(snap: &Snapshot, start: ProcessId, key: ProcessId) -> Option<SearchWalk> {
    let mut cur = start;
    let mut hops = 0;
    loop {
        if cur == key {
            return Some(SearchWalk { found: true, hops });
        }
        let node = snap.node(cur)?;
        let next = node
            .levels
            .iter()
            .filter(|s| s.is_linked())
            .rev()
            .find_map(|s| {
                if key > cur {
                    s.right.filter(|&r| r <= key)
                } else {
                    s.left.filter(|&l| l >= key)
                }
            });
        match next {
            Some(n) => {
                cur = n;
                hops += 1;
            }
            None => return Some(SearchWalk { found: false, hops }),
        }
        if hops > snap.nodes.len() {
            return None;
        }
    }
}

/// Reference walk using only the level-0 protocol search action.
pub fn level0_search(snap: &Snapshot, start: ProcessId, key: ProcessId) -> Option<SearchWalk> {
    let mut cur = start;
    let mut hops = 0;
    loop {
        let state = snap.node(cur)?.level(0)?;
        let (_, em) = state.on_search(key, 0).ok()?;
        if let Some(found) = em.events.iter().find_map(|e| match e {
            Event::Resolve { found, .. } => Some(*found),
            _ => None,
        }) {
            return Some(SearchWalk { found, hops });
        }
        cur = em.sends.first()?.0;
        hops += 1;
        if hops > snap.nodes.len() {
            return None;
        }
    }
}
