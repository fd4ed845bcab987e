use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{Property, Verdict};
use crate::engine::Snapshot;
use crate::error::CheckError;
use crate::id::ProcessId;
use crate::protocol::{Lifecycle, NodeState};

fn linearization_errors(level: u8, states: &BTreeMap<ProcessId, &NodeState>) -> Vec<String> {
    let mut errors = Vec::new();
    let mut visited = BTreeSet::new();
    let mut cur = ProcessId::NEG_INF;
    let mut prev: Option<ProcessId> = None;
    loop {
        let Some(s) = states.get(&cur) else {
            errors.push(format!("level {level}: {cur} reached but not present"));
            break;
        };
        visited.insert(cur);
        if s.lifecycle != Lifecycle::Joined {
            errors.push(format!("level {level}: {cur} on the line but not joined"));
        }
        if s.left != prev {
            errors.push(format!(
                "level {level}: {cur}.left={} but predecessor is {}",
                s.left.map_or("-".into(), |l| l.to_string()),
                prev.map_or("-".into(), |l| l.to_string())
            ));
        }
        if cur == ProcessId::POS_INF {
            break;
        }
        match s.right {
            Some(r) if r > cur => {
                prev = Some(cur);
                cur = r;
            }
            other => {
                errors.push(format!(
                    "level {level}: {cur}.right={} does not increase",
                    other.map_or("-".into(), |r| r.to_string())
                ));
                break;
            }
        }
    }
    for id in states.keys().filter(|id| !visited.contains(id)) {
        errors.push(format!("level {level}: {id} not on the line"));
    }
    errors
}

/// Right pointers from `-inf` visit every live process in increasing order,
/// end at `+inf`, and left pointers mirror them. Checked on every level.
pub fn check_linearization(snap: &Snapshot) -> Result<Verdict, CheckError> {
    if !snap.is_quiescent() {
        return Err(CheckError::NotQuiescent);
    }
    let mut errors = Vec::new();
    for k in 0..=snap.max_level() {
        errors.extend(linearization_errors(k, &snap.level(k)));
    }
    let p = Property::Linearization;
    Ok(match errors.first() {
        None => Verdict::pass(
            p,
            format!(
                "{} members over {} levels",
                snap.members().len(),
                snap.max_level() + 1
            ),
        ),
        Some(first) => Verdict::fail(p, None, format!("{} errors; {first}", errors.len())),
    })
}

/// Level-`k` membership is contained in level-`k - 1` membership.
pub fn check_sublist(snap: &Snapshot) -> Result<Verdict, CheckError> {
    if !snap.is_quiescent() {
        return Err(CheckError::NotQuiescent);
    }
    let p = Property::Sublist;
    let joined = |k: u8| -> BTreeSet<ProcessId> {
        snap.level(k)
            .into_iter()
            .filter(|(_, s)| s.is_joined())
            .map(|(id, _)| id)
            .collect()
    };
    let mut below = joined(0);
    for k in 1..=snap.max_level() {
        let here = joined(k);
        if let Some(stray) = here.difference(&below).next() {
            return Ok(Verdict::fail(
                p,
                None,
                format!("{stray} on level {k} but not on level {}", k - 1),
            ));
        }
        below = here;
    }
    Ok(Verdict::pass(p, ""))
}

/// Connectivity of the undirected graph of stored level-0 neighbor ids over
/// the live processes; every joined process and both sentinels must be in
/// one component.
pub fn detect_partition(snap: &Snapshot) -> Verdict {
    let level = snap.level(0);
    let mut adj: BTreeMap<ProcessId, Vec<ProcessId>> = BTreeMap::new();
    for (&id, s) in &level {
        for n in [s.left, s.right].into_iter().flatten() {
            if level.contains_key(&n) {
                adj.entry(id).or_default().push(n);
                adj.entry(n).or_default().push(id);
            }
        }
    }
    let mut seen = BTreeSet::from([ProcessId::NEG_INF]);
    let mut queue = VecDeque::from([ProcessId::NEG_INF]);
    while let Some(x) = queue.pop_front() {
        for &n in adj.get(&x).into_iter().flatten() {
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    let unreached: Vec<ProcessId> = level
        .iter()
        .filter(|(id, s)| (s.is_joined() || id.is_sentinel()) && !seen.contains(id))
        .map(|(&id, _)| id)
        .collect();
    let p = Property::Partition;
    if unreached.is_empty() {
        Verdict::pass(p, "connected")
    } else {
        let shown: Vec<String> = unreached.iter().take(5).map(ToString::to_string).collect();
        Verdict::fail(
            p,
            None,
            format!(
                "disconnected; {} unreachable from -inf: {}",
                unreached.len(),
                shown.join(",")
            ),
        )
    }
}
