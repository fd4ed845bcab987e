//! Bundled demonstration scenarios.

use super::run::{run_scenario, RunOptions, RunOutput};
use super::scenario::{Scenario, StopAt};
use crate::checker::{detect_partition, Verdict};
use crate::engine::{Injection, Item, SchedulerKind, Sim, SimConfig, Snapshot};
use crate::error::SimError;
use crate::id::ProcessId;
use crate::message::Payload;

/// An interior process vanishes without running the departure protocol.
pub const PARTITION_ADVERSARIAL: &str =
    "init 10 20 30\nat 0 adversarial-exit 20\nstop quiescence\n";
/// The same process leaves cooperatively.
pub const PARTITION_COOPERATIVE: &str = "init 10 20 30\nat 0 leave 20\nstop quiescence\n";

#[derive(Debug, Clone)]
pub struct PartitionDemo {
    pub adversarial: Verdict,
    pub cooperative: Verdict,
}

impl PartitionDemo {
    /// Adversarial departure disconnects, cooperative departure does not.
    pub fn as_expected(&self) -> bool {
        self.adversarial.failed() && self.cooperative.passed()
    }
}

pub fn partition_demo(opts: &RunOptions) -> Result<PartitionDemo, SimError> {
    let run = |text: &str| -> Result<RunOutput, SimError> {
        let sc = Scenario::parse(text).expect("bundled scenario parses");
        run_scenario(&sc, opts)
    };
    Ok(PartitionDemo {
        adversarial: detect_partition(&run(PARTITION_ADVERSARIAL)?.snapshot),
        cooperative: detect_partition(&run(PARTITION_COOPERATIVE)?.snapshot),
    })
}

#[derive(Debug, Clone)]
pub struct StarvationDemo {
    pub scenario: Scenario,
    /// The process whose leave is starved.
    pub victim: ProcessId,
    /// Hops from the leave request's holder to its place, measured once per
    /// round when that round's join has been satisfied.
    pub distances: Vec<usize>,
    /// The same distance measured before every hop of the request.
    pub hop_distances: Vec<usize>,
    pub satisfied_joins: usize,
}

/// Hops from `from` to `target` on level 0, walking towards it.
fn hops_to(snap: &Snapshot, from: ProcessId, target: ProcessId) -> Option<usize> {
    let mut cur = from;
    let mut hops = 0;
    while cur != target {
        let s = snap.node(cur)?.level(0)?;
        cur = if cur < target {
            s.right.filter(|&r| r > cur && r <= target)?
        } else {
            s.left.filter(|&l| l < cur && l >= target)?
        };
        hops += 1;
    }
    Some(hops)
}

/// Builds a scripted schedule under which a leave request is never
/// satisfied while joins in front of it keep completing.
///
/// Each round injects a join between the leaver and its left neighbor and
/// then always prefers any other enabled item over the channel holding the
/// leave request. The leave request moves one hop only when nothing else can
/// run, so it always reaches a handler that is busy with, or has just been
/// displaced by, the newest join. A round ends once the join is satisfied and
/// the request is back in the channel from the leaver to its new left
/// neighbor. Ids halve the remaining gap, so the number of rounds is bounded
/// by the id width.
pub fn starvation_demo(rounds: usize) -> Result<StarvationDemo, SimError> {
    let lower = ProcessId::new(1000);
    let victim = ProcessId::new(1 << 61);
    let mut sim = Sim::new(SimConfig {
        initial_members: vec![lower, victim],
        scheduler: SchedulerKind::Scripted,
        ..SimConfig::default()
    })?;
    let mut injections = Vec::new();
    let mut picks = Vec::new();
    let mut exec = |sim: &mut Sim, item: Item| {
        let ran = sim.execute(item);
        assert!(ran, "demo picked a disabled item {item}");
        picks.push(item);
    };

    let leave = Injection::Leave { id: victim };
    injections.push((sim.steps(), leave));
    sim.apply_injection(leave);
    exec(&mut sim, Item::Guard(victim));

    let left_of_victim = |snap: &Snapshot| {
        snap.node(victim)
            .and_then(|n| n.level(0))
            .and_then(|s| s.left)
    };
    let mut distances = Vec::new();
    let mut hop_distances = Vec::new();
    let mut satisfied_joins = 0;
    'rounds: for _ in 0..rounds {
        let Some(left) = left_of_victim(&sim.snapshot()) else {
            break;
        };
        let mid = ProcessId::new(left.value() + (victim.value() - left.value()) / 2);
        if mid == left {
            break;
        }
        let join = Injection::Join {
            id: mid,
            via: Some(left),
        };
        injections.push((sim.steps(), join));
        sim.apply_injection(join);

        loop {
            let snap = sim.snapshot();
            let Some(starved) = starved_item(&snap, victim) else {
                // The leave request was accepted: starvation failed.
                break 'rounds;
            };
            let settled = snap.members().contains(&mid);
            if settled
                && starved
                    == (Item::Deliver {
                        from: victim.into(),
                        to: mid,
                    })
            {
                satisfied_joins += 1;
                if let Some(d) = distance_to_place(&snap, victim, mid) {
                    distances.push(d);
                }
                break;
            }
            if let Some(item) = sim.enabled_items().into_iter().find(|&i| i != starved) {
                exec(&mut sim, item);
                continue;
            }
            let Item::Deliver { to: holder, .. } = starved else {
                unreachable!("starved item is a delivery")
            };
            if let Some(d) = distance_to_place(&snap, victim, holder) {
                hop_distances.push(d);
            }
            exec(&mut sim, starved);
        }
    }

    Ok(StarvationDemo {
        scenario: Scenario {
            init: vec![lower, victim],
            injections,
            scheduler: Some(SchedulerKind::Scripted),
            picks,
            stop: StopAt::Quiescence,
        },
        victim,
        distances,
        hop_distances,
        satisfied_joins,
    })
}

/// Hops from `holder` to the left end of the place of leave of `victim`.
fn distance_to_place(snap: &Snapshot, victim: ProcessId, holder: ProcessId) -> Option<usize> {
    let y = snap.members().into_iter().filter(|&m| m < victim).max()?;
    hops_to(snap, holder, y)
}

fn starved_item(snap: &Snapshot, victim: ProcessId) -> Option<Item> {
    snap.channels.iter().find_map(|ch| {
        ch.messages
            .iter()
            .any(|(m, _)| matches!(m.payload, Payload::Leave { req, .. } if req == victim))
            .then_some(Item::Deliver {
                from: ch.from,
                to: ch.to,
            })
    })
}
