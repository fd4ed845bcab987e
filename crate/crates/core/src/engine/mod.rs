//! Deterministic discrete-event executor.
//!
//! Channels are per ordered pair of endpoints, FIFO and unbounded. One step
//! picks one enabled item (the head of a non-empty channel, or an enabled
//! leave guard) and runs the corresponding protocol action atomically. The
//! only notion of time is the step count.

mod snapshot;
mod trace;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use snapshot::{ChannelContents, Snapshot};
pub use trace::{
    parse_trace, write_trace, Detail, EndReason, Endpoint, InjectKind, RecordKind, StateView,
    TraceRecord,
};

use crate::error::{ParseError, SimError};
use crate::id::ProcessId;
use crate::message::{Message, Payload, SearchToken};
use crate::skiplist::{assign_level, MultiLevelNode, NodeOutput, Outgoing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchedulerKind {
    /// Seeded uniform choice among enabled items.
    FairRandom,
    /// Deterministic rotation over enabled items.
    RoundRobin,
    /// Explicit pick list; may be unfair.
    Scripted,
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchedulerKind::FairRandom => "fair-random",
            SchedulerKind::RoundRobin => "round-robin",
            SchedulerKind::Scripted => "scripted",
        })
    }
}

impl FromStr for SchedulerKind {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fair-random" => Ok(SchedulerKind::FairRandom),
            "round-robin" => Ok(SchedulerKind::RoundRobin),
            "scripted" => Ok(SchedulerKind::Scripted),
            _ => Err(ParseError::new(format!("unknown scheduler `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Line,
    SkipList,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Line => "line",
            Mode::SkipList => "skiplist",
        })
    }
}

impl FromStr for Mode {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" => Ok(Mode::Line),
            "skiplist" => Ok(Mode::SkipList),
            _ => Err(ParseError::new(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    /// Strictly increasing ordinary ids; the sentinels are implicit.
    pub initial_members: Vec<ProcessId>,
    /// Hard cap on executed steps.
    pub max_events: u64,
    pub scheduler: SchedulerKind,
    pub mode: Mode,
    /// Level cap in skip-list mode; ignored in line mode.
    pub max_level: u8,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            initial_members: Vec::new(),
            max_events: 1_000_000,
            scheduler: SchedulerKind::FairRandom,
            mode: Mode::Line,
            max_level: crate::skiplist::DEFAULT_MAX_LEVEL,
        }
    }
}

/// Where an injected request first appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Seeded uniform choice over settled members.
    Auto,
    Via(ProcessId),
}

/// A request injected by the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Injection {
    Join {
        id: ProcessId,
        via: Option<ProcessId>,
    },
    Leave {
        id: ProcessId,
    },
    Search {
        key: ProcessId,
        via: Option<ProcessId>,
    },
    AdversarialExit {
        id: ProcessId,
    },
}

impl fmt::Display for Injection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let via = |v: &Option<ProcessId>| v.map(|v| format!(" via {v}")).unwrap_or_default();
        match self {
            Injection::Join { id, via: v } => write!(f, "join {id}{}", via(v)),
            Injection::Leave { id } => write!(f, "leave {id}"),
            Injection::Search { key, via: v } => write!(f, "search {key}{}", via(v)),
            Injection::AdversarialExit { id } => write!(f, "adversarial-exit {id}"),
        }
    }
}

impl FromStr for Injection {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = s.split_whitespace().collect();
        Ok(match words.as_slice() {
            ["join", id] => Injection::Join {
                id: id.parse()?,
                via: None,
            },
            ["join", id, "via", v] => Injection::Join {
                id: id.parse()?,
                via: Some(v.parse()?),
            },
            ["leave", id] => Injection::Leave { id: id.parse()? },
            ["search", key] => Injection::Search {
                key: key.parse()?,
                via: None,
            },
            ["search", key, "via", v] => Injection::Search {
                key: key.parse()?,
                via: Some(v.parse()?),
            },
            ["adversarial-exit", id] => Injection::AdversarialExit { id: id.parse()? },
            _ => return Err(ParseError::new(format!("unknown directive `{s}`"))),
        })
    }
}

/// Something the scheduler can execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Item {
    Deliver { from: Endpoint, to: ProcessId },
    Guard(ProcessId),
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Deliver { from, to } => write!(f, "{from} {to}"),
            Item::Guard(id) => write!(f, "guard {id}"),
        }
    }
}

impl FromStr for Item {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = s.split_whitespace().collect();
        match words.as_slice() {
            ["guard", id] => Ok(Item::Guard(id.parse()?)),
            [from, to] => Ok(Item::Deliver {
                from: from.parse()?,
                to: to.parse()?,
            }),
            _ => Err(ParseError::new(format!("invalid pick `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct InFlight {
    msg: Message,
    link_level: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepResult {
    /// One item ran; the payload is the seq of its first record.
    Executed(u64),
    /// Nothing could run.
    Idle(EndReason),
}

pub enum Stop<'a> {
    Quiescence,
    /// At most this many further steps.
    MaxEvents(u64),
    /// Pause (without ending the run) as soon as the predicate holds.
    Predicate(Box<dyn Fn(&Sim) -> bool + 'a>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    /// `None` when a predicate paused the run.
    pub end: Option<EndReason>,
    pub steps: u64,
}

/// The simulator. One instance must be driven from one thread; independent
/// instances share nothing.
pub struct Sim {
    config: SimConfig,
    level_cap: u8,
    nodes: BTreeMap<ProcessId, MultiLevelNode>,
    channels: BTreeMap<(Endpoint, ProcessId), VecDeque<InFlight>>,
    guards: BTreeSet<ProcessId>,
    used: BTreeSet<ProcessId>,
    rng: ChaCha8Rng,
    trace: Vec<TraceRecord>,
    steps: u64,
    pending: VecDeque<(u64, Injection)>,
    script: VecDeque<Item>,
    rr_cursor: Option<Item>,
    next_token: SearchToken,
    ended: Option<EndReason>,
}

impl Sim {
    /// Builds the initial stable overlay: sentinels plus the initial members
    /// linked in sorted order on every level they belong to.
    pub fn new(config: SimConfig) -> Result<Sim, SimError> {
        let mut seen = BTreeSet::new();
        for w in config.initial_members.iter() {
            if w.is_sentinel() {
                return Err(SimError::Sentinel(*w));
            }
            if !seen.insert(*w) {
                return Err(SimError::DuplicateMember(*w));
            }
        }
        for w in config.initial_members.windows(2) {
            if w[0] >= w[1] {
                return Err(SimError::UnsortedMembers(w[1]));
            }
        }
        let level_cap = match config.mode {
            Mode::Line => 0,
            Mode::SkipList => config.max_level,
        };
        let top = |id: ProcessId| {
            if id.is_sentinel() {
                level_cap
            } else {
                assign_level(id, config.seed, level_cap)
            }
        };
        let everyone: Vec<ProcessId> = std::iter::once(ProcessId::NEG_INF)
            .chain(config.initial_members.iter().copied())
            .chain(std::iter::once(ProcessId::POS_INF))
            .collect();
        let mut links: BTreeMap<ProcessId, Vec<(ProcessId, ProcessId)>> = BTreeMap::new();
        for k in 0..=level_cap {
            let line: Vec<ProcessId> = everyone
                .iter()
                .copied()
                .filter(|&id| top(id) >= k)
                .collect();
            for (i, &id) in line.iter().enumerate() {
                let l = if i == 0 { id } else { line[i - 1] };
                let r = if i + 1 == line.len() { id } else { line[i + 1] };
                links.entry(id).or_default().push((l, r));
            }
        }
        let mut sim = Sim {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            level_cap,
            nodes: BTreeMap::new(),
            channels: BTreeMap::new(),
            guards: BTreeSet::new(),
            used: seen,
            trace: Vec::new(),
            steps: 0,
            pending: VecDeque::new(),
            script: VecDeque::new(),
            rr_cursor: None,
            next_token: 0,
            ended: None,
            config,
        };
        for (id, l) in links {
            let node = MultiLevelNode::member(id, &l)?;
            for s in &node.levels {
                sim.record(
                    RecordKind::State,
                    Some(id),
                    None,
                    None,
                    Detail::State(s.into()),
                    s.level,
                );
            }
            sim.nodes.insert(id, node);
        }
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<TraceRecord> {
        self.trace
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn node(&self, id: ProcessId) -> Option<&MultiLevelNode> {
        self.nodes.get(&id)
    }

    pub fn level_cap(&self) -> u8 {
        self.level_cap
    }

    pub fn ended(&self) -> Option<EndReason> {
        self.ended
    }

    /// Queues an injection to happen once `at` steps have executed, or
    /// earlier if the system goes idle first.
    pub fn schedule(&mut self, at: u64, inj: Injection) {
        let pos = self.pending.partition_point(|(a, _)| *a <= at);
        self.pending.insert(pos, (at, inj));
    }

    pub fn set_script(&mut self, picks: impl IntoIterator<Item = Item>) {
        self.script = picks.into_iter().collect();
    }

    pub fn has_work(&self) -> bool {
        !self.channels.is_empty() || !self.guards.is_empty() || !self.pending.is_empty()
    }

    fn record(
        &mut self,
        kind: RecordKind,
        process: Option<ProcessId>,
        peer: Option<Endpoint>,
        message: Option<Message>,
        detail: Detail,
        level: u8,
    ) -> u64 {
        let seq = self.trace.len() as u64;
        self.trace.push(TraceRecord {
            seq,
            kind,
            process,
            peer,
            message,
            detail,
            level,
        });
        seq
    }

    fn settled(&self, id: ProcessId) -> bool {
        self.nodes
            .get(&id)
            .is_some_and(MultiLevelNode::is_settled_member)
    }

    fn pick_target(&mut self, target: Target) -> Result<ProcessId, SimError> {
        match target {
            Target::Via(v) if self.settled(v) => Ok(v),
            Target::Via(v) => Err(SimError::NotMember(v)),
            Target::Auto => {
                let candidates: Vec<ProcessId> = self
                    .nodes
                    .iter()
                    .filter(|(_, n)| n.is_settled_member())
                    .map(|(&id, _)| id)
                    .collect();
                if candidates.is_empty() {
                    return Err(SimError::NoTarget);
                }
                Ok(candidates[self.rng.gen_range(0..candidates.len())])
            }
        }
    }

    fn enqueue_from_env(&mut self, to: ProcessId, msg: Message, kind: InjectKind) {
        self.record(
            RecordKind::Inject,
            Some(to),
            Some(Endpoint::Env),
            Some(msg),
            Detail::Inject(kind),
            msg.level,
        );
        self.channels
            .entry((Endpoint::Env, to))
            .or_default()
            .push_back(InFlight {
                msg,
                link_level: msg.level,
            });
        self.refresh_guard(to);
    }

    /// Injects the join request of a fresh process `req`.
    pub fn inject_join(&mut self, req: ProcessId, target: Target) -> Result<ProcessId, SimError> {
        if req.is_sentinel() {
            return Err(SimError::Sentinel(req));
        }
        if self.used.contains(&req) {
            return Err(SimError::ReusedId(req));
        }
        let to = self.pick_target(target)?;
        let top = assign_level(req, self.config.seed, self.level_cap);
        let joiner = MultiLevelNode::joiner(req, top)?;
        self.used.insert(req);
        let view = StateView::from(&joiner.levels[0]);
        self.nodes.insert(req, joiner);
        self.enqueue_from_env(to, Message::new(Payload::Join { req }, 0), InjectKind::Join);
        self.record(
            RecordKind::State,
            Some(req),
            None,
            None,
            Detail::State(view),
            0,
        );
        Ok(to)
    }

    /// Marks `id` as wanting to leave. The request itself is emitted by the
    /// process's guarded action once it is idle.
    pub fn inject_leave_intent(&mut self, id: ProcessId) -> Result<(), SimError> {
        if id.is_sentinel() {
            return Err(SimError::Sentinel(id));
        }
        let node = self.nodes.get(&id).ok_or(SimError::NotMember(id))?;
        let updated = node.request_leave()?;
        self.record(
            RecordKind::Inject,
            Some(id),
            Some(Endpoint::Env),
            None,
            Detail::Inject(InjectKind::LeaveIntent),
            0,
        );
        self.commit(id, updated, NodeOutput::default());
        Ok(())
    }

    pub fn inject_search(
        &mut self,
        key: ProcessId,
        target: Target,
    ) -> Result<SearchToken, SimError> {
        let to = self.pick_target(target)?;
        let token = self.next_token;
        self.next_token += 1;
        self.enqueue_from_env(
            to,
            Message::new(Payload::Search { key, token }, 0),
            InjectKind::Search,
        );
        Ok(token)
    }

    /// Removes `id` at once, without running the departure protocol.
    pub fn adversarial_exit(&mut self, id: ProcessId) -> Result<(), SimError> {
        if id.is_sentinel() {
            return Err(SimError::Sentinel(id));
        }
        if !self.nodes.contains_key(&id) {
            return Err(SimError::NotMember(id));
        }
        self.record(
            RecordKind::Inject,
            Some(id),
            Some(Endpoint::Env),
            None,
            Detail::Inject(InjectKind::AdversarialExit),
            0,
        );
        self.remove_process(id, true);
        Ok(())
    }

    /// Applies an injection the way a scenario would: an unusable explicit
    /// target falls back to an automatic one, failures become annotations.
    pub fn apply_injection(&mut self, inj: Injection) {
        let (subject, result) = match inj {
            Injection::Join { id, via } => (
                id,
                self.with_fallback(via, |s, t| s.inject_join(id, t).map(drop)),
            ),
            Injection::Search { key, via } => (
                key,
                self.with_fallback(via, |s, t| s.inject_search(key, t).map(drop)),
            ),
            Injection::Leave { id } => (id, self.inject_leave_intent(id)),
            Injection::AdversarialExit { id } => (id, self.adversarial_exit(id)),
        };
        if let Err(e) = result {
            self.record(
                RecordKind::Annotation,
                Some(subject),
                Some(Endpoint::Env),
                None,
                Detail::error(e),
                0,
            );
        }
    }

    fn with_fallback(
        &mut self,
        via: Option<ProcessId>,
        mut f: impl FnMut(&mut Sim, Target) -> Result<(), SimError>,
    ) -> Result<(), SimError> {
        match via {
            None => f(self, Target::Auto),
            Some(v) => match f(self, Target::Via(v)) {
                Err(SimError::NotMember(_)) => {
                    self.record(
                        RecordKind::Annotation,
                        Some(v),
                        Some(Endpoint::Env),
                        None,
                        Detail::ViaUnavailable,
                        0,
                    );
                    f(self, Target::Auto)
                }
                r => r,
            },
        }
    }

    fn apply_due(&mut self) {
        while self
            .pending
            .front()
            .is_some_and(|(at, _)| *at <= self.steps)
        {
            let (_, inj) = self.pending.pop_front().expect("checked");
            self.apply_injection(inj);
        }
    }

    fn refresh_guard(&mut self, id: ProcessId) {
        let enabled = self
            .nodes
            .get(&id)
            .is_some_and(MultiLevelNode::leave_enabled)
            && !self.channels.contains_key(&(Endpoint::Env, id));
        if enabled {
            self.guards.insert(id);
        } else {
            self.guards.remove(&id);
        }
    }

    /// Enabled items in a fixed order: channel heads, then guards.
    pub fn enabled_items(&self) -> Vec<Item> {
        self.channels
            .keys()
            .map(|&(from, to)| Item::Deliver { from, to })
            .chain(self.guards.iter().map(|&g| Item::Guard(g)))
            .collect()
    }

    /// Runs one scheduler step.
    pub fn step(&mut self) -> StepResult {
        if let Some(end) = self.ended {
            return StepResult::Idle(end);
        }
        self.apply_due();
        let mut items = self.enabled_items();
        while items.is_empty() {
            match self.pending.pop_front() {
                Some((_, inj)) => {
                    self.apply_injection(inj);
                    items = self.enabled_items();
                }
                None => return StepResult::Idle(EndReason::Quiescent),
            }
        }
        let item = match self.config.scheduler {
            SchedulerKind::FairRandom => items[self.rng.gen_range(0..items.len())],
            SchedulerKind::RoundRobin => {
                let next = self
                    .rr_cursor
                    .and_then(|c| items.iter().copied().find(|&i| i > c))
                    .unwrap_or(items[0]);
                self.rr_cursor = Some(next);
                next
            }
            SchedulerKind::Scripted => match self.script.pop_front() {
                None => return StepResult::Idle(EndReason::ScriptExhausted),
                Some(p) if items.contains(&p) => p,
                Some(_) => return StepResult::Idle(EndReason::ScriptInvalid),
            },
        };
        let seq = self.trace.len() as u64;
        self.execute(item);
        StepResult::Executed(seq)
    }

    /// Executes `item` directly, bypassing the scheduler. Returns `false` if
    /// the item was not enabled.
    pub fn execute(&mut self, item: Item) -> bool {
        match item {
            Item::Deliver { from, to } => {
                let Some(queue) = self.channels.get_mut(&(from, to)) else {
                    return false;
                };
                let inflight = queue.pop_front().expect("channels are never empty");
                if queue.is_empty() {
                    self.channels.remove(&(from, to));
                }
                self.steps += 1;
                self.record(
                    RecordKind::Deliver,
                    Some(to),
                    Some(from),
                    Some(inflight.msg),
                    Detail::None,
                    inflight.link_level,
                );
                let node = self
                    .nodes
                    .get(&to)
                    .expect("channels to exited processes are dropped");
                match node.handle(from.node(), &inflight.msg) {
                    Ok((updated, out)) => self.commit(to, updated, out),
                    Err(e) => {
                        self.record(
                            RecordKind::Annotation,
                            Some(to),
                            Some(from),
                            None,
                            Detail::error(e),
                            inflight.msg.level,
                        );
                    }
                }
                if from == Endpoint::Env {
                    self.refresh_guard(to);
                }
                true
            }
            Item::Guard(id) => {
                if !self.guards.contains(&id) {
                    return false;
                }
                self.steps += 1;
                let (updated, out) = self.nodes[&id].emit_leave();
                self.commit(id, updated, out);
                true
            }
        }
    }

    fn commit(&mut self, id: ProcessId, updated: MultiLevelNode, out: NodeOutput) {
        let old = self
            .nodes
            .insert(id, updated)
            .expect("committing a known process");
        let changed: Vec<(u8, StateView)> = self.nodes[&id]
            .levels
            .iter()
            .enumerate()
            .filter(|(k, s)| {
                old.levels
                    .get(*k)
                    .is_none_or(|o| StateView::from(o) != StateView::from(*s))
            })
            .map(|(_, s)| (s.level, s.into()))
            .collect();
        for (level, view) in changed {
            self.record(
                RecordKind::State,
                Some(id),
                None,
                None,
                Detail::State(view),
                level,
            );
        }
        for (level, ev) in out.events {
            self.record(
                RecordKind::Annotation,
                Some(id),
                None,
                None,
                Detail::Event(ev),
                level,
            );
        }
        for send in out.sends {
            self.dispatch(id, send);
        }
        if out.exit {
            self.remove_process(id, false);
        } else {
            self.refresh_guard(id);
        }
    }

    fn dispatch(&mut self, from: ProcessId, out: Outgoing) {
        self.record(
            RecordKind::Send,
            Some(from),
            Some(Endpoint::Node(out.to)),
            Some(out.msg),
            if out.is_bootstrap() {
                Detail::Bootstrap
            } else {
                Detail::None
            },
            out.link_level,
        );
        if self.nodes.contains_key(&out.to) {
            self.channels
                .entry((Endpoint::Node(from), out.to))
                .or_default()
                .push_back(InFlight {
                    msg: out.msg,
                    link_level: out.link_level,
                });
        } else {
            self.record(
                RecordKind::Exit,
                Some(out.to),
                Some(Endpoint::Node(from)),
                Some(out.msg),
                Detail::Discard,
                out.link_level,
            );
        }
    }

    fn remove_process(&mut self, id: ProcessId, adversarial: bool) {
        self.nodes.remove(&id);
        self.guards.remove(&id);
        self.record(
            RecordKind::Exit,
            Some(id),
            None,
            None,
            Detail::Exit { adversarial },
            0,
        );
        let incoming: Vec<(Endpoint, ProcessId)> = self
            .channels
            .keys()
            .filter(|(_, to)| *to == id)
            .copied()
            .collect();
        for key in incoming {
            for lost in self.channels.remove(&key).unwrap_or_default() {
                self.record(
                    RecordKind::Exit,
                    Some(id),
                    Some(key.0),
                    Some(lost.msg),
                    Detail::Discard,
                    lost.link_level,
                );
            }
        }
    }

    fn finish(&mut self, end: EndReason) {
        if self.ended.is_some() {
            return;
        }
        if matches!(end, EndReason::ScriptExhausted | EndReason::ScriptInvalid) {
            let starved: Vec<(Endpoint, ProcessId)> = self.channels.keys().copied().collect();
            for (from, to) in starved {
                self.record(
                    RecordKind::Annotation,
                    Some(to),
                    Some(from),
                    None,
                    Detail::Starved,
                    0,
                );
            }
        }
        self.record(
            RecordKind::Annotation,
            None,
            None,
            None,
            Detail::End(end),
            0,
        );
        self.ended = Some(end);
    }

    /// Steps until the stop condition, quiescence, the end of a script, or
    /// the configured event cap.
    pub fn run_until(&mut self, stop: Stop<'_>) -> RunSummary {
        let start = self.steps;
        let limit = match stop {
            Stop::MaxEvents(n) => self.config.max_events.min(start.saturating_add(n)),
            _ => self.config.max_events,
        };
        let end = loop {
            if let Some(end) = self.ended {
                break end;
            }
            if let Stop::Predicate(p) = &stop {
                if p(self) {
                    return RunSummary {
                        end: None,
                        steps: self.steps - start,
                    };
                }
            }
            if self.steps >= limit {
                break if self.has_work() {
                    EndReason::Truncated
                } else {
                    EndReason::Quiescent
                };
            }
            if let StepResult::Idle(end) = self.step() {
                break end;
            }
        };
        self.finish(end);
        RunSummary {
            end: Some(end),
            steps: self.steps - start,
        }
    }

    pub fn run(&mut self) -> RunSummary {
        self.run_until(Stop::Quiescence)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            nodes: self.nodes.clone(),
            channels: self
                .channels
                .iter()
                .map(|(&(from, to), q)| ChannelContents {
                    from,
                    to,
                    messages: q.iter().map(|f| (f.msg, f.link_level)).collect(),
                })
                .collect(),
            pending: self.pending.iter().copied().collect(),
            guards: self.guards.iter().copied().collect(),
        }
    }
}
