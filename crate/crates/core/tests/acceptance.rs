//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use churnline_core::checker::{
    check_fair_request, check_linearization, check_locality, check_message_safety,
    check_request_progress, check_search_resolution, check_single_transition, check_sublist,
    check_td_last, check_terminating_transition, Analysis, Verdict,
};
use churnline_core::engine::write_trace;
use churnline_core::skiplist::{level0_search, skip_search};
use churnline_core::workload::demo::{partition_demo, starvation_demo};
use churnline_core::workload::{
    generate_workload, run_scenario, RunOptions, RunOutput, Scenario, WorkloadParams,
};
use churnline_core::{Injection, Mode, ProcessId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Run {
    seed: u64,
    scenario: Scenario,
    out: RunOutput,
}

fn line_runs() -> Vec<Run> {
    (0..100)
        .map(|seed| {
            let scenario = generate_workload(&WorkloadParams {
                seed,
                initial_size: 50,
                requests: 200,
                ..WorkloadParams::default()
            });
            let out = run_scenario(
                &scenario,
                &RunOptions {
                    seed,
                    ..RunOptions::default()
                },
            )
            .expect("workload runs");
            Run {
                seed,
                scenario,
                out,
            }
        })
        .collect()
}

fn first_failure(runs: &[Run], check: impl Fn(&Run) -> Vec<Verdict>) -> Option<String> {
    runs.iter().find_map(|r| {
        check(r)
            .into_iter()
            .find(|v| !v.passed())
            .map(|v| format!("seed {}: {v}", r.seed))
    })
}

fn linearization(runs: &[Run], elapsed: f64) -> Outcome {
    for r in runs {
        let v =
            check_linearization(&r.out.snapshot).map_err(|e| format!("seed {}: {e}", r.seed))?;
        if !v.passed() {
            return Err(format!("seed {}: {v}", r.seed));
        }
        if r.out.snapshot.members() != r.scenario.reference_membership() {
            return Err(format!(
                "seed {}: membership differs from reference",
                r.seed
            ));
        }
    }
    if elapsed >= 60.0 {
        return Err(format!("took {elapsed:.1}s"));
    }
    Ok(format!("100 runs in {elapsed:.1}s"))
}

fn invariant_suite(runs: &[Run]) -> Outcome {
    let failure = first_failure(runs, |r| {
        let a = Analysis::new(&r.out.trace);
        vec![
            check_td_last(&a),
            check_single_transition(&a),
            check_terminating_transition(&a),
            check_message_safety(&a),
            check_request_progress(&a),
            check_locality(&r.out.trace, &a),
        ]
    });
    match failure {
        Some(f) => Err(f),
        None => Ok("6 checks x 100 runs, zero violations".into()),
    }
}

fn locality(runs: &[Run]) -> Outcome {
    let mut widest = 0;
    let mut tickets = 0;
    for r in runs {
        let a = Analysis::new(&r.out.trace);
        let v = check_locality(&r.out.trace, &a);
        if !v.passed() {
            return Err(format!("seed {}: {v}", r.seed));
        }
        for t in a.live_tickets().filter(|t| t.is_satisfied()) {
            tickets += 1;
            let distinct: BTreeSet<ProcessId> = t.participants.iter().map(|&(q, _)| q).collect();
            widest = widest.max(distinct.len());
        }
    }
    if widest > 3 {
        return Err(format!("{widest} participants"));
    }
    Ok(format!(
        "{tickets} satisfied tickets, at most {widest} participants"
    ))
}

fn mass_leave() -> Outcome {
    let ids: Vec<ProcessId> = (1..=100).map(|i| ProcessId::new(i * 10)).collect();
    let scenario = Scenario {
        init: ids.clone(),
        injections: ids.iter().map(|&id| (0, Injection::Leave { id })).collect(),
        ..Scenario::default()
    };
    let out = run_scenario(&scenario, &RunOptions::default()).map_err(|e| e.to_string())?;
    if !out.snapshot.is_quiescent() {
        return Err("not quiescent".into());
    }
    let left: Vec<ProcessId> = out.snapshot.level(0).into_keys().collect();
    if left != [ProcessId::NEG_INF, ProcessId::POS_INF] {
        return Err(format!("{} processes remain", left.len()));
    }
    let v = check_linearization(&out.snapshot).map_err(|e| e.to_string())?;
    if !v.passed() {
        return Err(v.to_string());
    }
    Ok(format!(
        "100 concurrent leaves, sentinels remain, {} steps",
        out.summary.steps
    ))
}

fn partition() -> Outcome {
    let demo = partition_demo(&RunOptions::default()).map_err(|e| e.to_string())?;
    let line = format!(
        "adversarial: {}, cooperative: {}",
        demo.adversarial.outcome.as_str(),
        demo.cooperative.outcome.as_str()
    );
    if demo.as_expected() {
        Ok(line)
    } else {
        Err(line)
    }
}

fn starvation() -> Outcome {
    let demo = starvation_demo(55).map_err(|e| e.to_string())?;
    if demo.satisfied_joins < 50 {
        return Err(format!("only {} joins satisfied", demo.satisfied_joins));
    }
    if demo.distances.len() < 50 || demo.distances.windows(2).any(|w| w[0] > w[1]) {
        return Err(format!("distances {:?}", demo.distances));
    }
    let out = run_scenario(&demo.scenario, &RunOptions::default()).map_err(|e| e.to_string())?;
    let a = Analysis::new(&out.trace);
    let progress = check_request_progress(&a);
    let fair = check_fair_request(&a);
    let ticket = format!("leave:{}", demo.victim);
    if !progress.passed() {
        return Err(progress.to_string());
    }
    if !fair.failed() || !fair.note.contains(&ticket) {
        return Err(format!("{fair} does not name {ticket}"));
    }
    Ok(format!(
        "{} joins, distance {}..{}, request_progress pass, fair_request fail naming {ticket}",
        demo.satisfied_joins,
        demo.distances[0],
        demo.distances[demo.distances.len() - 1]
    ))
}

fn determinism() -> Outcome {
    let mut compared = 0;
    for seed in 0..20 {
        for mode in [Mode::Line, Mode::SkipList] {
            let sc = generate_workload(&WorkloadParams {
                seed,
                initial_size: 30,
                requests: 100,
                search_rate: 0.5,
                concurrency_cap: Some(8),
                ..WorkloadParams::default()
            });
            let opts = RunOptions {
                seed,
                mode,
                ..RunOptions::default()
            };
            let a = write_trace(&run_scenario(&sc, &opts).map_err(|e| e.to_string())?.trace);
            let b = write_trace(&run_scenario(&sc, &opts).map_err(|e| e.to_string())?.trace);
            if a != b {
                return Err(format!("seed {seed} {mode}: traces differ"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} runs byte-identical on replay"))
}

fn uncontended() -> Outcome {
    common::compare_uncontended()?;
    Ok("join and leave match the hand-simulated event lists".into())
}

fn skiplist_runs() -> Vec<Run> {
    (0..50)
        .map(|seed| {
            let scenario = generate_workload(&WorkloadParams {
                seed,
                initial_size: 50,
                requests: 200,
                search_rate: 0.5,
                ..WorkloadParams::default()
            });
            let opts = RunOptions {
                seed,
                mode: Mode::SkipList,
                max_level: 4,
                ..RunOptions::default()
            };
            let out = run_scenario(&scenario, &opts).expect("workload runs");
            Run {
                seed,
                scenario,
                out,
            }
        })
        .collect()
}

fn skiplist(runs: &[Run]) -> Outcome {
    let mut tallest = 0;
    for r in runs {
        let snap = &r.out.snapshot;
        for v in [check_linearization(snap), check_sublist(snap)] {
            let v = v.map_err(|e| format!("seed {}: {e}", r.seed))?;
            if !v.passed() {
                return Err(format!("seed {}: {v}", r.seed));
            }
        }
        tallest = tallest.max(snap.max_level());
        let members = snap.members();
        let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
        for _ in 0..1000 {
            let start = *members.choose(&mut rng).ok_or("empty overlay")?;
            let key = if rng.gen_bool(0.5) {
                *members.choose(&mut rng).expect("non-empty")
            } else {
                ProcessId::new(rng.gen_range(1..=1_000_000_000))
            };
            let fast = skip_search(snap, start, key).map(|w| w.found);
            let slow = level0_search(snap, start, key).map(|w| w.found);
            if fast.is_none() || fast != slow {
                return Err(format!(
                    "seed {}: key {key} from {start}: {fast:?} vs {slow:?}",
                    r.seed
                ));
            }
        }
    }
    Ok(format!(
        "50 runs, levels up to {tallest}, 50000 searches agree"
    ))
}

fn search_resolution(skip: &[Run]) -> Outcome {
    let line: Vec<Run> = (0..100)
        .map(|seed| {
            let scenario = generate_workload(&WorkloadParams {
                seed,
                initial_size: 50,
                requests: 200,
                search_rate: 0.5,
                ..WorkloadParams::default()
            });
            let out = run_scenario(
                &scenario,
                &RunOptions {
                    seed,
                    ..RunOptions::default()
                },
            )
            .expect("workload runs");
            Run {
                seed,
                scenario,
                out,
            }
        })
        .collect();
    let mut searches = 0;
    for r in line.iter().chain(skip) {
        let a = Analysis::new(&r.out.trace);
        let v = check_search_resolution(&a);
        if !v.passed() {
            return Err(format!("seed {}: {v}", r.seed));
        }
        searches += a.searches.len();
    }
    Ok(format!("{searches} searches over 150 runs all resolved"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let runs = line_runs();
    let elapsed = start.elapsed().as_secs_f64();
    let skip = skiplist_runs();

    let criteria: Vec<Criterion> = vec![
        (
            "linearization soundness",
            Box::new(|| linearization(&runs, elapsed)),
        ),
        ("invariant suite", Box::new(|| invariant_suite(&runs))),
        ("locality constant", Box::new(|| locality(&runs))),
        ("unlimited churn stress", Box::new(mass_leave)),
        ("partition demo", Box::new(partition)),
        ("starvation demo", Box::new(starvation)),
        ("replay determinism", Box::new(determinism)),
        ("uncontended request cost", Box::new(uncontended)),
        ("skip list", Box::new(|| skiplist(&skip))),
        ("search resolution", Box::new(|| search_resolution(&skip))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
