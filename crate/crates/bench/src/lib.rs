//! Fixtures shared by the benchmarks.

use churnline_core::workload::{
    generate_workload, run_scenario, RunOptions, RunOutput, Scenario, WorkloadParams,
};
use churnline_core::Mode;

/// A mixed join/leave workload of `requests` requests on `size` members.
pub fn workload(seed: u64, size: usize, requests: usize) -> Scenario {
    generate_workload(&WorkloadParams {
        seed,
        initial_size: size,
        requests,
        search_rate: 0.25,
        ..WorkloadParams::default()
    })
}

pub fn options(seed: u64, mode: Mode) -> RunOptions {
    RunOptions {
        seed,
        mode,
        max_level: 4,
        ..RunOptions::default()
    }
}

/// A finished run to feed the checker benchmarks.
pub fn finished_run(seed: u64, mode: Mode) -> RunOutput {
    run_scenario(&workload(seed, 50, 200), &options(seed, mode)).expect("fixture runs")
}
