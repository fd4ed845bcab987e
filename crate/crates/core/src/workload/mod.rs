//! Scenarios, random workloads, run statistics and the bundled demos.

pub mod demo;
mod generate;
mod run;
mod scenario;
mod stats;

pub use generate::{generate_workload, WorkloadParams, NOMINAL_LATENCY};
pub use run::{prepare, run_scenario, RunOptions, RunOutput};
pub use scenario::{Scenario, StopAt};
pub use stats::Stats;
