use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::analysis::{Analysis, Fate, RequestTicket, TicketKey};
use super::topology::Topology;
use super::{Property, Verdict};
use crate::engine::{EndReason, Endpoint, TraceRecord};
use crate::id::ProcessId;
use crate::message::Payload;
use crate::protocol::ChurnKind;

/// No churn or link message is lost to an exit. Lost searches are counted
/// in the note but are not violations.
pub fn check_message_safety(a: &Analysis) -> Verdict {
    let p = Property::MessageSafety;
    let mut lost_searches = 0;
    let mut lost = Vec::new();
    for f in &a.flows {
        if let Fate::Discarded(at) = f.fate {
            if matches!(f.msg.payload, Payload::Search { .. }) {
                lost_searches += 1;
            } else {
                lost.push((f.send_seq, at, f.msg));
            }
        }
    }
    let searches = format!("searches_discarded={lost_searches}");
    match lost.first() {
        None => Verdict::pass(p, searches),
        Some(&(sent, at, msg)) => Verdict::fail(
            p,
            Some((sent, at)),
            format!(
                "{} discarded, first {} ; {searches}",
                lost.len(),
                msg.payload
            ),
        ),
    }
}

/// Flows grouped by (sender, receiver, link level), in send order.
fn by_pair(a: &Analysis) -> HashMap<(Endpoint, ProcessId, u8), Vec<usize>> {
    let mut pairs: HashMap<_, Vec<usize>> = HashMap::new();
    for (i, f) in a.flows.iter().enumerate() {
        if f.from != Endpoint::Env {
            pairs
                .entry((f.from, f.to, f.link_level))
                .or_default()
                .push(i);
        }
    }
    pairs
}

/// A teardown message is the last message sent on its pair until it is
/// received, and every setup message opens its pair (nothing but a teardown
/// precedes it).
pub fn check_td_last(a: &Analysis) -> Verdict {
    let p = Property::TdLast;
    let mut violations: Vec<(u64, u64, &'static str)> = Vec::new();
    let mut teardowns = 0;
    for flows in by_pair(a).values() {
        for (n, &i) in flows.iter().enumerate() {
            let f = &a.flows[i];
            if f.msg.payload.is_teardown() {
                teardowns += 1;
                let until = f.end_seq().unwrap_or(u64::MAX);
                if let Some(&j) = flows.get(n + 1) {
                    if a.flows[j].send_seq < until {
                        violations.push((f.send_seq, a.flows[j].send_seq, "send after teardown"));
                    }
                }
            }
            if f.msg.payload.is_setup() && n > 0 {
                let prev = &a.flows[flows[n - 1]];
                if !prev.msg.payload.is_teardown() {
                    violations.push((prev.send_seq, f.send_seq, "setup not first"));
                }
            }
        }
    }
    violations.sort_unstable();
    match violations.first() {
        None => Verdict::pass(p, format!("teardowns={teardowns}")),
        Some(&(x, y, what)) => Verdict::fail(
            p,
            Some((x, y)),
            format!("{} violations, first: {what}", violations.len()),
        ),
    }
}

type LinkId = (ProcessId, ProcessId, u8);

/// Transitional intervals per link: from the first setup/teardown message
/// of a request on the link to the last one's receipt.
fn link_intervals(a: &Analysis) -> BTreeMap<LinkId, Vec<(u64, u64, TicketKey)>> {
    let mut spans: BTreeMap<(LinkId, TicketKey), (u64, u64)> = BTreeMap::new();
    for f in &a.flows {
        let (Some(key), Endpoint::Node(from)) = (f.ticket, f.from) else {
            continue;
        };
        if !f.msg.payload.is_setup() && !f.msg.payload.is_teardown() {
            continue;
        }
        let link = (from.min(f.to), from.max(f.to), f.link_level);
        let end = f.end_seq().unwrap_or(u64::MAX);
        let span = spans.entry((link, key)).or_insert((f.send_seq, end));
        span.0 = span.0.min(f.send_seq);
        span.1 = span.1.max(end);
    }
    let mut links: BTreeMap<LinkId, Vec<(u64, u64, TicketKey)>> = BTreeMap::new();
    for ((link, key), (s, e)) in spans {
        links.entry(link).or_default().push((s, e, key));
    }
    links
}

/// No link is transitional for two requests at once.
pub fn check_single_transition(a: &Analysis) -> Verdict {
    let p = Property::SingleTransition;
    let links = link_intervals(a);
    let mut first: Option<(u64, u64, String)> = None;
    let mut count = 0;
    for (link, mut spans) in links.clone() {
        spans.sort_unstable();
        for w in spans.windows(2) {
            let ((_, end0, k0), (start1, _, k1)) = (w[0], w[1]);
            if start1 < end0 {
                count += 1;
                if first.as_ref().is_none_or(|f| start1 < f.0) {
                    first = Some((
                        start1,
                        end0.min(a.last_seq),
                        format!(
                            "link {}-{} level {} shared by {k0} and {k1}",
                            link.0, link.1, link.2
                        ),
                    ));
                }
            }
        }
    }
    match first {
        None => Verdict::pass(p, format!("links={}", links.len())),
        Some((x, y, note)) => {
            Verdict::fail(p, Some((x, y)), format!("{count} overlaps, first: {note}"))
        }
    }
}

/// Every request that made a link transitional finishes its teardown.
pub fn check_terminating_transition(a: &Analysis) -> Verdict {
    let p = Property::TerminatingTransition;
    let in_flight: BTreeSet<TicketKey> = a
        .flows
        .iter()
        .filter(|f| f.fate == Fate::InFlight)
        .filter(|f| f.msg.payload.is_setup() || f.msg.payload.is_teardown())
        .filter_map(|f| f.ticket)
        .collect();
    let open: Vec<&RequestTicket> = a
        .tickets
        .values()
        .filter(|t| t.stage_seqs[0].is_some())
        .filter(|t| t.teardown_done().is_none() || in_flight.contains(&t.key))
        .collect();
    let Some(t) = open.first() else {
        return Verdict::pass(p, "");
    };
    let note = format!("{} open, first {}", open.len(), t.key);
    match a.end {
        Some(EndReason::Quiescent) => Verdict::fail(
            p,
            Some((t.stage_seqs[0].unwrap_or(t.inject_seq), a.last_seq)),
            note,
        ),
        _ => Verdict::nyv(p, note),
    }
}

/// Whenever a request is pending, some request is satisfied later.
///
/// Only a trailing window (pending requests after the last satisfaction)
/// can violate this. At quiescence that is a failure; on a truncated run it
/// is not yet violated; when a scripted schedule ended the run, the trailing
/// window is outside the executed computation and is not judged.
pub fn check_request_progress(a: &Analysis) -> Verdict {
    let p = Property::RequestProgress;
    let satisfied = a.live_tickets().filter(|t| t.is_satisfied()).count();
    let last_sat = a.live_tickets().filter_map(|t| t.satisfied_seq).max();
    let pending: Vec<&RequestTicket> = a.live_tickets().filter(|t| !t.is_satisfied()).collect();
    let Some(first) = pending.iter().min_by_key(|t| t.inject_seq) else {
        return Verdict::pass(p, format!("satisfied={satisfied}"));
    };
    let from = last_sat.map_or(first.inject_seq, |s| s.max(first.inject_seq));
    let note = format!("satisfied={satisfied} pending={}", pending.len());
    match a.end {
        Some(EndReason::Quiescent) => Verdict::fail(
            p,
            Some((from, a.last_seq)),
            format!("{note}; nothing satisfied after seq {from}"),
        ),
        Some(EndReason::ScriptExhausted | EndReason::ScriptInvalid) => Verdict::pass(
            p,
            format!("{note}; trailing window after seq {from} not judged, schedule ended"),
        ),
        _ => Verdict::nyv(p, note),
    }
}

/// Every request is eventually satisfied.
pub fn check_fair_request(a: &Analysis) -> Verdict {
    let p = Property::FairRequest;
    let pending: Vec<&RequestTicket> = a.live_tickets().filter(|t| !t.is_satisfied()).collect();
    if pending.is_empty() {
        return Verdict::pass(p, format!("tickets={}", a.live_tickets().count()));
    }
    let starved = |t: &RequestTicket| match t.request_flow {
        Some(fi) => a.flows[fi].fate == Fate::InFlight,
        None => t.key.kind == ChurnKind::Leave && t.stage_seqs[0].is_none(),
    };
    let failing: Vec<&&RequestTicket> = match a.end {
        Some(EndReason::Quiescent) => pending.iter().collect(),
        Some(EndReason::ScriptExhausted | EndReason::ScriptInvalid) => {
            pending.iter().filter(|t| starved(t)).collect()
        }
        _ => Vec::new(),
    };
    match failing.first() {
        Some(t) => {
            let names: Vec<String> = failing.iter().take(5).map(|t| t.key.to_string()).collect();
            Verdict::fail(
                p,
                Some((t.inject_seq, a.last_seq)),
                format!("unsatisfied {}: {}", failing.len(), names.join(",")),
            )
        }
        None => Verdict::nyv(p, format!("pending={}", pending.len())),
    }
}

/// Replays the topology alongside the steps, calling `f` at the start of
/// each step listed in `wanted`.
fn replay_steps(
    trace: &[TraceRecord],
    a: &Analysis,
    wanted: impl IntoIterator<Item = usize>,
    mut f: impl FnMut(usize, &Topology),
) {
    let mut topo = Topology::default();
    let mut r = 0;
    for si in wanted {
        let until = a.steps[si].record;
        while r < until {
            topo.apply(&trace[r]);
            r += 1;
        }
        f(si, &topo);
    }
}

/// Forwarding over a stable link moves a request closer to its place (or a
/// search closer to its key) whenever it is more than one hop away.
pub fn check_message_progress(trace: &[TraceRecord], a: &Analysis) -> Verdict {
    let p = Property::MessageProgress;
    let mut forwards: Vec<(usize, usize)> = Vec::new();
    for (si, step) in a.steps.iter().enumerate() {
        let Some(di) = step.delivered else { continue };
        let incoming = a.flows[di].msg;
        if !incoming.payload.is_routed() {
            continue;
        }
        for &fi in &step.sends {
            let out = &a.flows[fi];
            if out.msg == incoming && out.link_level == out.msg.level {
                forwards.push((si, fi));
            }
        }
    }
    let mut checked = 0;
    let mut skipped = 0;
    let mut violation: Option<(u64, u64, String)> = None;
    let mut idx = 0;
    let steps: Vec<usize> = forwards.iter().map(|&(si, _)| si).collect();
    replay_steps(trace, a, steps, |si, topo| {
        while idx < forwards.len() && forwards[idx].0 == si {
            let fi = forwards[idx].1;
            idx += 1;
            let out = &a.flows[fi];
            let holder = a.steps[si].actor;
            let level = out.msg.level;
            if !topo.stable_link(level, holder, out.to) {
                skipped += 1;
                continue;
            }
            let place = match out.msg.payload {
                Payload::Join { req } => topo.place(level, req, None),
                Payload::Leave { req, .. } => topo.place(level, req, Some(req)),
                Payload::Search { key, .. } => topo.place(level, key, None),
                _ => None,
            };
            let dists = place.and_then(|pl| {
                Some((
                    topo.distance(level, holder, pl)?,
                    topo.distance(level, out.to, pl)?,
                ))
            });
            let Some((d_holder, d_next)) = dists else {
                skipped += 1;
                continue;
            };
            checked += 1;
            if d_holder > 1 && d_next >= d_holder && violation.is_none() {
                violation = Some((
                    a.steps[si].seq,
                    out.send_seq,
                    format!(
                        "{} at {holder} d={d_holder} sent to {} d={d_next}",
                        out.msg.payload, out.to
                    ),
                ));
            }
        }
    });
    let counts = format!("checked={checked} skipped={skipped}");
    match violation {
        None => Verdict::pass(p, counts),
        Some((x, y, what)) => Verdict::fail(p, Some((x, y)), format!("{what}; {counts}")),
    }
}

/// Every satisfied request is carried out by at most its handler, its
/// churning process and the partner named at acceptance, and the handler
/// and partner are within one hop of the place of churn when they act.
pub fn check_locality(trace: &[TraceRecord], a: &Analysis) -> Verdict {
    let p = Property::Locality;
    let mut violation: Option<(u64, u64, String)> = None;
    let mut note_violation = |x: u64, y: u64, what: String| {
        if violation.as_ref().is_none_or(|v| x < v.0) {
            violation = Some((x, y, what));
        }
    };
    let mut max_set = 0;
    let mut actions: BTreeMap<usize, Vec<TicketKey>> = BTreeMap::new();
    for t in a.live_tickets().filter(|t| t.is_satisfied()) {
        let allowed: BTreeSet<ProcessId> = [Some(t.key.churn), t.handler, t.partner]
            .into_iter()
            .flatten()
            .collect();
        let set: BTreeSet<ProcessId> = t.participants.iter().map(|&(q, _)| q).collect();
        max_set = max_set.max(set.len());
        if let Some(&(q, seq)) = t.participants.iter().find(|(q, _)| !allowed.contains(q)) {
            note_violation(t.inject_seq, seq, format!("{q} acted for {}", t.key));
        }
        for &si in &t.action_steps {
            if a.steps[si].actor != t.key.churn {
                actions.entry(si).or_default().push(t.key);
            }
        }
    }
    let mut checked = 0;
    replay_steps(
        trace,
        a,
        actions.keys().copied().collect::<Vec<_>>(),
        |si, topo| {
            let actor = a.steps[si].actor;
            for key in &actions[&si] {
                checked += 1;
                let exclude = (key.kind == ChurnKind::Leave).then_some(key.churn);
                let near = topo
                    .place(key.level, key.churn, exclude)
                    .is_some_and(|(y, z)| {
                        actor == y
                            || actor == z
                            || topo.adjacent(key.level, actor, y)
                            || topo.adjacent(key.level, actor, z)
                    });
                if !near {
                    note_violation(
                        a.steps[si].seq,
                        a.steps[si].seq,
                        format!("{actor} acted for {key} more than one hop from its place"),
                    );
                }
            }
        },
    );
    let counts = format!("max_participants={max_set} actions_checked={checked}");
    match violation {
        None if max_set <= 3 => Verdict::pass(p, counts),
        None => Verdict::fail(p, None, counts),
        Some((x, y, what)) => Verdict::fail(p, Some((x, y)), format!("{what}; {counts}")),
    }
}

/// Every injected search resolves as found or absent.
pub fn check_search_resolution(a: &Analysis) -> Verdict {
    let p = Property::SearchResolution;
    let found = a
        .searches
        .values()
        .filter(|s| s.resolved.is_some_and(|(_, f)| f))
        .count();
    let unresolved: Vec<(&u64, &super::SearchInfo)> = a
        .searches
        .iter()
        .filter(|(_, s)| s.resolved.is_none())
        .collect();
    let note = format!(
        "searches={} found={found} absent={} unresolved={}",
        a.searches.len(),
        a.searches.len() - found - unresolved.len(),
        unresolved.len()
    );
    let Some((token, info)) = unresolved.first() else {
        return Verdict::pass(p, note);
    };
    let lost = |tok: u64| {
        a.flows.iter().any(|f| {
            matches!(f.msg.payload, Payload::Search { token, .. } if token == tok)
                && matches!(f.fate, Fate::Discarded(_))
        })
    };
    let hopeless = unresolved.iter().any(|(t, _)| lost(**t));
    if hopeless || a.end == Some(EndReason::Quiescent) {
        Verdict::fail(
            p,
            Some((info.inject_seq, a.last_seq)),
            format!("{note}; first unresolved token {token} key {}", info.key),
        )
    } else {
        Verdict::nyv(p, note)
    }
}

/// Trace well-formedness: every delivery matches the head of its channel
/// and no process flagged a corrupt state or rejected an event.
pub fn check_protocol_integrity(a: &Analysis) -> Verdict {
    let p = Property::ProtocolIntegrity;
    if let Some(&seq) = a.mismatches.first() {
        return Verdict::fail(
            p,
            Some((seq, seq)),
            format!("{} unmatched records", a.mismatches.len()),
        );
    }
    match a.faults.first() {
        None => Verdict::pass(p, ""),
        Some((seq, what)) => Verdict::fail(
            p,
            Some((*seq, *seq)),
            format!("{} faults, first {what}", a.faults.len()),
        ),
    }
}
