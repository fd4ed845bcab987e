//! Random workloads.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::Scenario;
use crate::engine::Injection;
use crate::id::ProcessId;

/// Steps a request is assumed to stay outstanding when throttling to a
/// concurrency cap. Only a generation-time estimate: the engine decides the
/// real interleaving.
pub const NOMINAL_LATENCY: u64 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadParams {
    pub seed: u64,
    pub initial_size: usize,
    /// Number of requests to generate.
    pub requests: usize,
    /// Relative weights; all zero yields no requests.
    pub join_rate: f64,
    pub leave_rate: f64,
    pub search_rate: f64,
    /// Maximum number of churn requests assumed outstanding at once; `None`
    /// never throttles.
    pub concurrency_cap: Option<usize>,
    /// Steps between consecutive requests; 0 injects everything at once.
    pub spacing: u64,
    /// Ids are drawn from `1..=id_space`.
    pub id_space: i64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            seed: 0,
            initial_size: 50,
            requests: 200,
            join_rate: 1.0,
            leave_rate: 1.0,
            search_rate: 0.0,
            concurrency_cap: None,
            spacing: 1,
            id_space: 1_000_000_000,
        }
    }
}

pub fn generate_workload(params: &WorkloadParams) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut used: BTreeSet<ProcessId> = BTreeSet::new();
    let space = params.id_space.max(1);
    let fresh = |rng: &mut ChaCha8Rng, used: &mut BTreeSet<ProcessId>| loop {
        let id = ProcessId::new(rng.gen_range(1..=space));
        if used.insert(id) {
            break id;
        }
    };
    let mut init: Vec<ProcessId> = (0..params.initial_size)
        .map(|_| fresh(&mut rng, &mut used))
        .collect();
    init.sort_unstable();

    let mut members: BTreeSet<ProcessId> = init.iter().copied().collect();
    let weights = [params.join_rate, params.leave_rate, params.search_rate].map(|w| w.max(0.0));
    let total: f64 = weights.iter().sum();
    let mut injections = Vec::new();
    let mut outstanding: BinaryHeap<Reverse<u64>> = BinaryHeap::new();
    let mut at = 0;

    for i in 0..params.requests {
        if total <= 0.0 {
            break;
        }
        let mut x = rng.gen_range(0.0..total);
        let mut kind = 0;
        while kind < 2 && x >= weights[kind] {
            x -= weights[kind];
            kind += 1;
        }
        if kind == 1 && members.is_empty() {
            kind = 0;
        }
        let inj = match kind {
            0 => {
                let id = fresh(&mut rng, &mut used);
                members.insert(id);
                Injection::Join { id, via: None }
            }
            1 => {
                let id = *members.iter().choose(&mut rng).expect("non-empty");
                members.remove(&id);
                Injection::Leave { id }
            }
            _ => Injection::Search {
                key: if rng.gen_bool(0.5) && !members.is_empty() {
                    *members.iter().choose(&mut rng).expect("non-empty")
                } else {
                    ProcessId::new(rng.gen_range(1..=space))
                },
                via: None,
            },
        };
        if i > 0 {
            at += params.spacing;
        }
        if let (Some(cap), false) = (
            params.concurrency_cap,
            matches!(inj, Injection::Search { .. }),
        ) {
            while outstanding.peek().is_some_and(|Reverse(done)| *done <= at) {
                outstanding.pop();
            }
            if outstanding.len() >= cap.max(1) {
                if let Some(Reverse(done)) = outstanding.pop() {
                    at = at.max(done);
                }
            }
            outstanding.push(Reverse(at + NOMINAL_LATENCY));
        }
        injections.push((at, inj));
    }
    Scenario {
        init,
        injections,
        ..Scenario::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rates_give_an_empty_scenario() {
        let sc = generate_workload(&WorkloadParams {
            join_rate: 0.0,
            leave_rate: 0.0,
            search_rate: 0.0,
            ..WorkloadParams::default()
        });
        assert!(sc.injections.is_empty());
        assert_eq!(sc.init.len(), 50);
    }

    #[test]
    fn same_seed_same_scenario() {
        let p = WorkloadParams {
            seed: 9,
            search_rate: 0.5,
            ..WorkloadParams::default()
        };
        assert_eq!(generate_workload(&p), generate_workload(&p));
        let other = WorkloadParams {
            seed: 10,
            ..p.clone()
        };
        assert_ne!(generate_workload(&p), generate_workload(&other));
    }

    #[test]
    fn leaves_only_target_known_members() {
        let sc = generate_workload(&WorkloadParams {
            seed: 3,
            initial_size: 2,
            leave_rate: 3.0,
            ..WorkloadParams::default()
        });
        let mut members: BTreeSet<ProcessId> = sc.init.iter().copied().collect();
        for (_, inj) in &sc.injections {
            match *inj {
                Injection::Join { id, .. } => assert!(members.insert(id)),
                Injection::Leave { id } => assert!(members.remove(&id)),
                _ => {}
            }
        }
    }

    #[test]
    fn cap_throttles_injection_times() {
        let p = WorkloadParams {
            seed: 1,
            spacing: 0,
            concurrency_cap: Some(4),
            ..WorkloadParams::default()
        };
        let sc = generate_workload(&p);
        for w in sc.injections.windows(5) {
            assert!(w[4].0 >= w[0].0 + NOMINAL_LATENCY);
        }
        let unlimited = generate_workload(&WorkloadParams {
            concurrency_cap: None,
            ..p
        });
        assert!(unlimited.injections.iter().all(|(at, _)| *at == 0));
    }
}
