//! Hand-simulated expectations shared by the oracle and acceptance targets.

#![allow(dead_code)]

use churnline_core::engine::{Detail, RecordKind};
use churnline_core::workload::{run_scenario, RunOptions, Scenario};
use churnline_core::{Event, TraceRecord};

/// `join 15` at 10 in the line `10 20`, worked through the pseudocode by
/// hand: receiver, sender, message.
pub const UNCONTENDED_JOIN: &str = "init 10 20\nat 0 join 15 via 10\nstop quiescence\n";
pub const UNCONTENDED_JOIN_DELIVERIES: [(&str, &str, &str); 8] = [
    ("10", "env", "join(15)"),
    ("15", "10", "sua(20)"),
    ("20", "15", "sua(-)"),
    ("15", "20", "sub"),
    ("10", "15", "sub"),
    ("20", "10", "tda"),
    ("10", "20", "tdb"),
    ("15", "10", "ftd"),
];
pub const UNCONTENDED_JOIN_STAGES: [&str; 7] = ["J1.1", "J1.2", "J2.1", "J2.2", "J3", "J4", "J5"];

/// `leave 20` in the line `10 20 30`.
pub const UNCONTENDED_LEAVE: &str = "init 10 20 30\nat 0 leave 20\nstop quiescence\n";
pub const UNCONTENDED_LEAVE_DELIVERIES: [(&str, &str, &str); 8] = [
    ("10", "20", "leave(20,30)"),
    ("30", "10", "sua(-)"),
    ("10", "30", "sub"),
    ("20", "10", "tda"),
    ("30", "20", "tda"),
    ("20", "30", "tdb"),
    ("10", "20", "tdb"),
    ("20", "10", "ftd"),
];
pub const UNCONTENDED_LEAVE_STAGES: [&str; 7] = ["L1", "L2", "L3.1", "L3.2", "L4.1", "L4.2", "L5"];

pub fn run_text(text: &str) -> Vec<TraceRecord> {
    let sc = Scenario::parse(text).expect("scenario parses");
    run_scenario(&sc, &RunOptions::default())
        .expect("scenario runs")
        .trace
}

pub fn deliveries(trace: &[TraceRecord]) -> Vec<(String, String, String)> {
    trace
        .iter()
        .filter(|r| r.kind == RecordKind::Deliver)
        .map(|r| {
            (
                r.process.map(|p| p.to_string()).unwrap_or_default(),
                r.peer.map(|p| p.to_string()).unwrap_or_default(),
                r.message.map(|m| m.render(r.level)).unwrap_or_default(),
            )
        })
        .collect()
}

pub fn stages(trace: &[TraceRecord]) -> Vec<String> {
    trace
        .iter()
        .filter_map(|r| match &r.detail {
            Detail::Event(Event::Stage { label, .. }) => Some(label.to_string()),
            _ => None,
        })
        .collect()
}

type Case<'a> = (&'a str, &'a [(&'a str, &'a str, &'a str)], &'a [&'a str]);

fn owned(expected: &[(&str, &str, &str)]) -> Vec<(String, String, String)> {
    expected
        .iter()
        .map(|&(a, b, c)| (a.to_string(), b.to_string(), c.to_string()))
        .collect()
}

/// Empty on agreement, otherwise a description of the first difference.
pub fn compare_uncontended() -> Result<(), String> {
    let cases: [Case; 2] = [
        (
            UNCONTENDED_JOIN,
            &UNCONTENDED_JOIN_DELIVERIES,
            &UNCONTENDED_JOIN_STAGES,
        ),
        (
            UNCONTENDED_LEAVE,
            &UNCONTENDED_LEAVE_DELIVERIES,
            &UNCONTENDED_LEAVE_STAGES,
        ),
    ];
    for (text, want, want_stages) in cases {
        let trace = run_text(text);
        let got = deliveries(&trace);
        if got != owned(want) {
            return Err(format!("{:?}: deliveries {got:?}", text.lines().nth(1)));
        }
        let got = stages(&trace);
        if got != want_stages {
            return Err(format!("{:?}: stages {got:?}", text.lines().nth(1)));
        }
    }
    Ok(())
}
