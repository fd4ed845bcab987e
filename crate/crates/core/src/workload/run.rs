use super::scenario::{Scenario, StopAt};
use crate::engine::{Mode, RunSummary, SchedulerKind, Sim, SimConfig, Snapshot, Stop, TraceRecord};
use crate::error::SimError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub mode: Mode,
    pub max_level: u8,
    pub max_events: u64,
    /// Overrides the scenario's own `sched` directive.
    pub scheduler: Option<SchedulerKind>,
}

impl Default for RunOptions {
    fn default() -> Self {
        let base = SimConfig::default();
        RunOptions {
            seed: base.seed,
            mode: base.mode,
            max_level: base.max_level,
            max_events: base.max_events,
            scheduler: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub snapshot: Snapshot,
    pub summary: RunSummary,
}

/// Builds a simulator loaded with the scenario's injections and picks.
pub fn prepare(scenario: &Scenario, opts: &RunOptions) -> Result<Sim, SimError> {
    let mut sim = Sim::new(SimConfig {
        seed: opts.seed,
        initial_members: scenario.init.clone(),
        max_events: opts.max_events,
        scheduler: opts
            .scheduler
            .or(scenario.scheduler)
            .unwrap_or(SchedulerKind::FairRandom),
        mode: opts.mode,
        max_level: opts.max_level,
    })?;
    for &(at, inj) in &scenario.injections {
        sim.schedule(at, inj);
    }
    sim.set_script(scenario.picks.iter().copied());
    Ok(sim)
}

pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, SimError> {
    let mut sim = prepare(scenario, opts)?;
    let summary = sim.run_until(match scenario.stop {
        StopAt::Quiescence => Stop::Quiescence,
        StopAt::MaxEvents(n) => Stop::MaxEvents(n),
    });
    Ok(RunOutput {
        snapshot: sim.snapshot(),
        trace: sim.into_trace(),
        summary,
    })
}
