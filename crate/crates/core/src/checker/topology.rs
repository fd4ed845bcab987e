//! Pointer topology reconstructed from `state` and `exit` records.

use std::collections::BTreeMap;

use crate::engine::{Detail, RecordKind, StateView, TraceRecord};
use crate::id::ProcessId;
use crate::protocol::Lifecycle;

#[derive(Debug, Clone, Default)]
pub struct Topology {
    levels: Vec<BTreeMap<ProcessId, StateView>>,
}

impl Topology {
    pub fn apply(&mut self, r: &TraceRecord) {
        match (r.kind, &r.detail, r.process) {
            (RecordKind::State, Detail::State(v), Some(p)) => {
                let k = usize::from(r.level);
                if self.levels.len() <= k {
                    self.levels.resize_with(k + 1, BTreeMap::new);
                }
                if v.lifecycle == Lifecycle::Exited {
                    self.levels[k].remove(&p);
                } else {
                    self.levels[k].insert(p, *v);
                }
            }
            (RecordKind::Exit, Detail::Exit { .. }, Some(p)) => {
                for level in &mut self.levels {
                    level.remove(&p);
                }
            }
            _ => {}
        }
    }

    pub fn view(&self, level: u8, id: ProcessId) -> Option<&StateView> {
        self.levels.get(usize::from(level))?.get(&id)
    }

    fn is_joined(&self, level: u8, id: ProcessId) -> bool {
        self.view(level, id)
            .is_some_and(|v| v.lifecycle == Lifecycle::Joined)
    }

    /// The pair of joined processes bracketing `key` on `level`, ignoring
    /// `exclude`. A joined `key` (not excluded) is its own place.
    pub fn place(
        &self,
        level: u8,
        key: ProcessId,
        exclude: Option<ProcessId>,
    ) -> Option<(ProcessId, ProcessId)> {
        let map = self.levels.get(usize::from(level))?;
        let joined = |(&id, v): (&ProcessId, &StateView)| {
            (v.lifecycle == Lifecycle::Joined && Some(id) != exclude).then_some(id)
        };
        if Some(key) != exclude && self.is_joined(level, key) {
            return Some((key, key));
        }
        let y = map.range(..key).rev().find_map(joined)?;
        let z = map.range(key..).find_map(joined)?;
        Some((y, z))
    }

    /// Whether `a` and `b` point at each other in either direction.
    pub fn adjacent(&self, level: u8, a: ProcessId, b: ProcessId) -> bool {
        let points = |x: ProcessId, y: ProcessId| {
            self.view(level, x)
                .is_some_and(|v| v.left == Some(y) || v.right == Some(y))
        };
        points(a, b) || points(b, a)
    }

    /// Whether the link between `a` and `b` is stable: mutual pointers
    /// between two joined processes.
    pub fn stable_link(&self, level: u8, a: ProcessId, b: ProcessId) -> bool {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        match (self.view(level, lo), self.view(level, hi)) {
            (Some(l), Some(h)) => {
                l.lifecycle == Lifecycle::Joined
                    && h.lifecycle == Lifecycle::Joined
                    && l.right == Some(hi)
                    && h.left == Some(lo)
            }
            _ => false,
        }
    }

    /// Hops from `from` to the nearer end of `place`, walking along the
    /// pointers that head towards it. `None` if the walk overshoots or
    /// breaks.
    pub fn distance(
        &self,
        level: u8,
        from: ProcessId,
        place: (ProcessId, ProcessId),
    ) -> Option<usize> {
        let (y, z) = place;
        if y <= from && from <= z {
            return Some(0);
        }
        let map = self.levels.get(usize::from(level))?;
        let (target, rightward) = if from < y { (y, true) } else { (z, false) };
        let mut cur = from;
        let mut hops = 0;
        while cur != target {
            let v = map.get(&cur)?;
            let next = if rightward { v.right? } else { v.left? };
            let overshoot = if rightward {
                next > target
            } else {
                next < target
            };
            if overshoot || hops > map.len() {
                return None;
            }
            cur = next;
            hops += 1;
        }
        Some(hops)
    }
}
