//! One pass over a trace: message flows matched send to delivery, steps,
//! and request tickets.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::engine::{Detail, EndReason, Endpoint, InjectKind, RecordKind, TraceRecord};
use crate::id::ProcessId;
use crate::message::{Message, Payload, SearchToken};
use crate::protocol::{ChurnKind, Event, StageLabel};

/// Identifies one request: a join or leave of one process on one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TicketKey {
    pub kind: ChurnKind,
    pub churn: ProcessId,
    pub level: u8,
}

impl std::fmt::Display for TicketKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.kind, self.churn)?;
        if self.level > 0 {
            write!(f, "@{}", self.level)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    Delivered(u64),
    Discarded(u64),
    InFlight,
}

/// One message from its send (or injection) to its fate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub send_seq: u64,
    pub from: Endpoint,
    pub to: ProcessId,
    pub msg: Message,
    pub link_level: u8,
    pub fate: Fate,
    pub ticket: Option<TicketKey>,
}

impl Flow {
    /// Seq at which the message left its channel, if it did.
    pub fn end_seq(&self) -> Option<u64> {
        match self.fate {
            Fate::Delivered(s) | Fate::Discarded(s) => Some(s),
            Fate::InFlight => None,
        }
    }
}

/// One atomic action: a delivery, or a guarded leave emission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    /// Index of the first record of the step.
    pub record: usize,
    pub seq: u64,
    pub actor: ProcessId,
    pub delivered: Option<usize>,
    pub sends: Vec<usize>,
    pub events: Vec<(u64, u8, Event)>,
    pub ticket: Option<TicketKey>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestTicket {
    pub key: TicketKey,
    pub inject_seq: u64,
    pub handler: Option<ProcessId>,
    pub partner: Option<ProcessId>,
    /// First seq of each of the five stages.
    pub stage_seqs: [Option<u64>; 5],
    pub labels: Vec<(u64, StageLabel)>,
    pub satisfied_seq: Option<u64>,
    pub bounces: u32,
    /// Processes that executed an accept or stage action, with the seq.
    pub participants: Vec<(ProcessId, u64)>,
    /// Indices of the steps that executed those actions.
    pub action_steps: Vec<usize>,
    /// The churning process vanished without running the protocol.
    pub abandoned: bool,
    /// Latest routed request message of this ticket.
    pub request_flow: Option<usize>,
}

impl RequestTicket {
    fn new(key: TicketKey, inject_seq: u64) -> Self {
        RequestTicket {
            key,
            inject_seq,
            handler: None,
            partner: None,
            stage_seqs: [None; 5],
            labels: Vec::new(),
            satisfied_seq: None,
            bounces: 0,
            participants: Vec::new(),
            action_steps: Vec::new(),
            abandoned: false,
            request_flow: None,
        }
    }

    pub fn is_satisfied(&self) -> bool {
        self.satisfied_seq.is_some()
    }

    /// Seq of the handler's teardown completion, after which no link of
    /// this request is transitional any more.
    pub fn teardown_done(&self) -> Option<u64> {
        let done = match self.key.kind {
            ChurnKind::Join => StageLabel::J4,
            ChurnKind::Leave => StageLabel::L4_2,
        };
        self.labels
            .iter()
            .find(|(_, l)| *l == done)
            .map(|(s, _)| *s)
    }
}

/// Everything the trace checks need, computed once.
#[derive(Debug, Clone, Default)]
pub struct Analysis {
    pub flows: Vec<Flow>,
    pub steps: Vec<Step>,
    pub tickets: BTreeMap<TicketKey, RequestTicket>,
    pub end: Option<EndReason>,
    pub last_seq: u64,
    /// Deliveries or discards that did not match the head of their channel.
    pub mismatches: Vec<u64>,
    /// Error and corruption annotations.
    pub faults: Vec<(u64, String)>,
    pub searches: BTreeMap<SearchToken, SearchInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchInfo {
    pub inject_seq: u64,
    pub key: ProcessId,
    pub resolved: Option<(u64, bool)>,
}

fn routed_key(msg: &Message) -> Option<TicketKey> {
    match msg.payload {
        Payload::Join { req } => Some(TicketKey {
            kind: ChurnKind::Join,
            churn: req,
            level: msg.level,
        }),
        Payload::Leave { req, .. } => Some(TicketKey {
            kind: ChurnKind::Leave,
            churn: req,
            level: msg.level,
        }),
        _ => None,
    }
}

fn event_key(ev: &Event, level: u8) -> Option<TicketKey> {
    match *ev {
        Event::Accept { kind, churn, .. } | Event::Bounce { kind, churn } => {
            Some(TicketKey { kind, churn, level })
        }
        Event::Stage { label, churn } => Some(TicketKey {
            kind: label.kind(),
            churn,
            level,
        }),
        _ => None,
    }
}

impl Analysis {
    pub fn new(trace: &[TraceRecord]) -> Analysis {
        let mut a = Analysis::default();
        let mut queues: HashMap<(Endpoint, ProcessId), VecDeque<usize>> = HashMap::new();
        let mut current: Option<usize> = None;

        for (idx, r) in trace.iter().enumerate() {
            a.last_seq = r.seq;
            match (r.kind, &r.detail) {
                (RecordKind::Inject, detail) => {
                    current = None;
                    let Some(p) = r.process else { continue };
                    match detail {
                        Detail::Inject(InjectKind::Join) => {
                            if let Some(key) = r.message.as_ref().and_then(routed_key) {
                                a.tickets
                                    .entry(key)
                                    .or_insert_with(|| RequestTicket::new(key, r.seq));
                            }
                        }
                        Detail::Inject(InjectKind::LeaveIntent) => {
                            let key = TicketKey {
                                kind: ChurnKind::Leave,
                                churn: p,
                                level: 0,
                            };
                            a.tickets
                                .entry(key)
                                .or_insert_with(|| RequestTicket::new(key, r.seq));
                        }
                        Detail::Inject(InjectKind::Search) => {
                            if let Some(Payload::Search { key, token }) =
                                r.message.map(|m| m.payload)
                            {
                                a.searches.insert(
                                    token,
                                    SearchInfo {
                                        inject_seq: r.seq,
                                        key,
                                        resolved: None,
                                    },
                                );
                            }
                        }
                        _ => {}
                    }
                    if let Some(msg) = r.message {
                        let fi = a.push_flow(r, Endpoint::Env, p, msg);
                        queues.entry((Endpoint::Env, p)).or_default().push_back(fi);
                    }
                }
                (RecordKind::Deliver, _) => {
                    let (Some(to), Some(from), Some(msg)) = (r.process, r.peer, r.message) else {
                        a.mismatches.push(r.seq);
                        continue;
                    };
                    let fi = queues.get_mut(&(from, to)).and_then(VecDeque::pop_front);
                    match fi {
                        Some(fi) if a.flows[fi].msg == msg => {
                            a.flows[fi].fate = Fate::Delivered(r.seq);
                        }
                        _ => a.mismatches.push(r.seq),
                    }
                    let ticket = routed_key(&msg);
                    a.steps.push(Step {
                        record: idx,
                        seq: r.seq,
                        actor: to,
                        delivered: fi,
                        sends: Vec::new(),
                        events: Vec::new(),
                        ticket,
                    });
                    current = Some(a.steps.len() - 1);
                }
                (RecordKind::Annotation, Detail::Event(ev)) => {
                    let Some(p) = r.process else { continue };
                    if let Event::LeaveEmit { .. } = ev {
                        let key = TicketKey {
                            kind: ChurnKind::Leave,
                            churn: p,
                            level: r.level,
                        };
                        a.tickets
                            .entry(key)
                            .or_insert_with(|| RequestTicket::new(key, r.seq));
                        a.steps.push(Step {
                            record: idx,
                            seq: r.seq,
                            actor: p,
                            delivered: None,
                            sends: Vec::new(),
                            events: Vec::new(),
                            ticket: Some(key),
                        });
                        current = Some(a.steps.len() - 1);
                    }
                    if let Event::Corruption(what) = ev {
                        a.faults.push((r.seq, format!("corrupt:{what}")));
                    }
                    if let Event::Resolve { token, found } = *ev {
                        if let Some(s) = a.searches.get_mut(&token) {
                            s.resolved.get_or_insert((r.seq, found));
                        }
                    }
                    if let Some(si) = current {
                        a.record_event(si, r.seq, r.level, ev.clone());
                    }
                }
                (RecordKind::Annotation, Detail::Error(e)) => {
                    a.faults.push((r.seq, format!("error:{e}")));
                }
                (RecordKind::Annotation, Detail::End(reason)) => {
                    current = None;
                    a.end = Some(*reason);
                }
                (RecordKind::Send, _) => {
                    let (Some(from), Some(Endpoint::Node(to)), Some(msg)) =
                        (r.process, r.peer, r.message)
                    else {
                        a.mismatches.push(r.seq);
                        continue;
                    };
                    let fi = a.push_flow(r, Endpoint::Node(from), to, msg);
                    queues
                        .entry((Endpoint::Node(from), to))
                        .or_default()
                        .push_back(fi);
                    if let Some(key) = routed_key(&msg) {
                        if msg.level > 0 && key.kind == ChurnKind::Join && key.churn == from {
                            a.tickets
                                .entry(key)
                                .or_insert_with(|| RequestTicket::new(key, r.seq));
                        }
                    } else if !matches!(msg.payload, Payload::Search { .. }) {
                        a.flows[fi].ticket = current.and_then(|si| a.steps[si].ticket);
                    }
                    if let Some(si) = current {
                        a.steps[si].sends.push(fi);
                    }
                }
                (RecordKind::Exit, Detail::Discard) => {
                    let (Some(to), Some(from)) = (r.process, r.peer) else {
                        a.mismatches.push(r.seq);
                        continue;
                    };
                    match queues.get_mut(&(from, to)).and_then(VecDeque::pop_front) {
                        Some(fi) => a.flows[fi].fate = Fate::Discarded(r.seq),
                        None => a.mismatches.push(r.seq),
                    }
                }
                (RecordKind::Exit, Detail::Exit { adversarial: true }) => {
                    if let Some(p) = r.process {
                        for t in a.tickets.values_mut() {
                            if t.key.churn == p && !t.is_satisfied() {
                                t.abandoned = true;
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        for (i, f) in a.flows.iter().enumerate() {
            if let (Some(key), Payload::Join { .. } | Payload::Leave { .. }) =
                (f.ticket, f.msg.payload)
            {
                if let Some(t) = a.tickets.get_mut(&key) {
                    t.request_flow = Some(i);
                }
            }
        }
        a
    }

    fn push_flow(&mut self, r: &TraceRecord, from: Endpoint, to: ProcessId, msg: Message) -> usize {
        self.flows.push(Flow {
            send_seq: r.seq,
            from,
            to,
            msg,
            link_level: r.level,
            fate: Fate::InFlight,
            ticket: routed_key(&msg),
        });
        self.flows.len() - 1
    }

    fn record_event(&mut self, si: usize, seq: u64, level: u8, ev: Event) {
        let step = &mut self.steps[si];
        let actor = step.actor;
        step.events.push((seq, level, ev.clone()));
        let Some(key) = event_key(&ev, level) else {
            return;
        };
        if (step.ticket.is_none() || matches!(ev, Event::Accept { .. } | Event::Stage { .. }))
            && step
                .delivered
                .is_none_or(|fi| routed_key(&self.flows[fi].msg).is_none())
        {
            step.ticket = Some(key);
        }
        let t = self
            .tickets
            .entry(key)
            .or_insert_with(|| RequestTicket::new(key, seq));
        match ev {
            Event::Accept { partner, .. } => {
                t.handler = Some(actor);
                t.partner = Some(partner);
                t.participants.push((actor, seq));
                t.action_steps.push(si);
            }
            Event::Bounce { .. } => t.bounces += 1,
            Event::Stage { label, .. } => {
                let slot = &mut t.stage_seqs[usize::from(label.stage() - 1)];
                slot.get_or_insert(seq);
                t.labels.push((seq, label));
                t.participants.push((actor, seq));
                t.action_steps.push(si);
                if label.stage() == 5 {
                    t.satisfied_seq.get_or_insert(seq);
                }
            }
            _ => {}
        }
    }

    /// Tickets that liveness properties are about: those whose churning
    /// process did not vanish adversarially.
    pub fn live_tickets(&self) -> impl Iterator<Item = &RequestTicket> {
        self.tickets.values().filter(|t| !t.abandoned)
    }
}
