use churnline_core::checker::{check_linearization, check_sublist};
use churnline_core::engine::{parse_trace, write_trace, Detail};
use churnline_core::workload::{
    generate_workload, run_scenario, RunOptions, Scenario, WorkloadParams,
};
use churnline_core::{Mode, Snapshot};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = WorkloadParams> {
    (
        any::<u64>(),
        1usize..12,
        0usize..40,
        0.0f64..2.0,
        0.0f64..2.0,
        0.0f64..1.0,
        0u64..3,
    )
        .prop_map(
            |(seed, initial_size, requests, join_rate, leave_rate, search_rate, spacing)| {
                WorkloadParams {
                    seed,
                    initial_size,
                    requests,
                    join_rate,
                    leave_rate,
                    search_rate,
                    spacing,
                    id_space: 10_000,
                    ..WorkloadParams::default()
                }
            },
        )
}

fn opts(seed: u64, skiplist: bool) -> RunOptions {
    RunOptions {
        seed,
        mode: if skiplist { Mode::SkipList } else { Mode::Line },
        max_level: 3,
        ..RunOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn same_seed_same_trace(p in params(), skiplist in any::<bool>()) {
        let sc = generate_workload(&p);
        let a = run_scenario(&sc, &opts(p.seed, skiplist)).unwrap();
        let b = run_scenario(&sc, &opts(p.seed, skiplist)).unwrap();
        prop_assert_eq!(write_trace(&a.trace), write_trace(&b.trace));
    }

    #[test]
    fn quiescent_runs_linearize(p in params(), skiplist in any::<bool>()) {
        let sc = generate_workload(&p);
        let out = run_scenario(&sc, &opts(p.seed, skiplist)).unwrap();
        let v = check_linearization(&out.snapshot).unwrap();
        prop_assert!(v.passed(), "{}", v);
        let v = check_sublist(&out.snapshot).unwrap();
        prop_assert!(v.passed(), "{}", v);
        prop_assert_eq!(out.snapshot.members(), sc.reference_membership());
    }

    #[test]
    fn linked_pointers_are_ordered(p in params(), skiplist in any::<bool>()) {
        let sc = generate_workload(&p);
        let out = run_scenario(&sc, &opts(p.seed, skiplist)).unwrap();
        for r in &out.trace {
            let (Detail::State(v), Some(id)) = (&r.detail, r.process) else { continue };
            if let Some(l) = v.left {
                prop_assert!(l < id, "{}", r);
            }
            if let Some(rt) = v.right {
                prop_assert!(rt > id, "{}", r);
            }
        }
    }

    #[test]
    fn trace_and_snapshot_text_round_trip(p in params(), skiplist in any::<bool>()) {
        let sc = generate_workload(&p);
        let out = run_scenario(&sc, &opts(p.seed, skiplist)).unwrap();
        let text = write_trace(&out.trace);
        prop_assert_eq!(&parse_trace(&text).unwrap(), &out.trace);
        let dump = out.snapshot.dump();
        prop_assert_eq!(Snapshot::parse(&dump).unwrap().dump(), dump);
    }

    #[test]
    fn scenario_text_round_trip(p in params()) {
        let sc = generate_workload(&p);
        prop_assert_eq!(Scenario::parse(&sc.to_text()).unwrap(), sc);
    }
}
