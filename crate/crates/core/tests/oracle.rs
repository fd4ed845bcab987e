mod common;

use churnline_core::checker::reference_membership;
use churnline_core::engine::{Detail, RecordKind};
use churnline_core::workload::{generate_workload, run_scenario, RunOptions, WorkloadParams};
use churnline_core::{Event, ProcessId};

use common::*;

#[test]
fn uncontended_join_matches_hand_simulation() {
    let trace = run_text(UNCONTENDED_JOIN);
    assert_eq!(deliveries(&trace).len(), 8);
    assert_eq!(stages(&trace), UNCONTENDED_JOIN_STAGES);
    compare_uncontended().unwrap();
}

#[test]
fn uncontended_leave_ends_in_cooperative_exit() {
    let trace = run_text(UNCONTENDED_LEAVE);
    let exits: Vec<_> = trace
        .iter()
        .filter(|r| r.kind == RecordKind::Exit)
        .map(|r| (r.process, r.detail.clone()))
        .collect();
    assert_eq!(
        exits,
        vec![(
            Some(ProcessId::new(20)),
            Detail::Exit { adversarial: false }
        )]
    );
}

#[test]
fn joiner_accepted_once() {
    let trace = run_text(UNCONTENDED_JOIN);
    let accepts = trace
        .iter()
        .filter(|r| matches!(r.detail, Detail::Event(Event::Accept { .. })))
        .count();
    assert_eq!(accepts, 1);
}

#[test]
fn reference_membership_is_order_replay() {
    let id = ProcessId::new;
    let injections = [
        churnline_core::Injection::Join {
            id: id(5),
            via: None,
        },
        churnline_core::Injection::Leave { id: id(10) },
        churnline_core::Injection::Search {
            key: id(3),
            via: None,
        },
        churnline_core::Injection::Join {
            id: id(40),
            via: None,
        },
    ];
    assert_eq!(
        reference_membership(&[id(10), id(20)], &injections),
        vec![id(5), id(20), id(40)]
    );
}

#[test]
fn quiescent_membership_matches_reference() {
    for seed in 0..10 {
        let sc = generate_workload(&WorkloadParams {
            seed,
            initial_size: 20,
            requests: 60,
            ..WorkloadParams::default()
        });
        let out = run_scenario(
            &sc,
            &RunOptions {
                seed,
                ..RunOptions::default()
            },
        )
        .unwrap();
        assert_eq!(
            out.snapshot.members(),
            sc.reference_membership(),
            "seed {seed}"
        );
    }
}
