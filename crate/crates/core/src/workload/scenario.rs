//! The scenario language.
//!
//! ```text
//! # comment
//! init 10 20 30
//! sched fair-random
//! at 0 join 15 via 10
//! at 4 leave 20
//! at 9 search 25
//! at 12 adversarial-exit 30
//! pick env 10
//! pick guard 20
//! stop quiescence
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::checker::reference_membership;
use crate::engine::{Injection, Item, SchedulerKind};
use crate::error::ParseError;
use crate::id::ProcessId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopAt {
    #[default]
    Quiescence,
    MaxEvents(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scenario {
    pub init: Vec<ProcessId>,
    /// Sorted by step.
    pub injections: Vec<(u64, Injection)>,
    pub scheduler: Option<SchedulerKind>,
    pub picks: Vec<Item>,
    pub stop: StopAt,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ParseError> {
        let mut sc = Scenario::default();
        let mut joined: BTreeSet<ProcessId> = BTreeSet::new();
        let mut last_at = 0;
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            let words: Vec<&str> = line.split_whitespace().collect();
            let err = |m: String| ParseError::at(n, m);
            match words.as_slice() {
                [] => {}
                ["init", ids @ ..] => {
                    for w in ids {
                        let id: ProcessId = w.parse().map_err(|e: ParseError| e.with_line(n))?;
                        if !joined.insert(id) {
                            return Err(err(format!("duplicate id {id}")));
                        }
                        sc.init.push(id);
                    }
                    sc.init.sort_unstable();
                }
                ["at", at, rest @ ..] => {
                    let at: u64 = at
                        .parse()
                        .map_err(|_| err(format!("invalid step `{at}`")))?;
                    if at < last_at {
                        return Err(err(format!(
                            "step {at} is before {last_at}; directives must be sorted"
                        )));
                    }
                    last_at = at;
                    let inj: Injection = rest
                        .join(" ")
                        .parse()
                        .map_err(|e: ParseError| e.with_line(n))?;
                    if let Injection::Join { id, .. } = inj {
                        if !joined.insert(id) {
                            return Err(err(format!("duplicate join of {id}")));
                        }
                    }
                    sc.injections.push((at, inj));
                }
                ["sched", kind] => {
                    sc.scheduler = Some(kind.parse().map_err(|e: ParseError| e.with_line(n))?);
                }
                ["pick", rest @ ..] => {
                    sc.picks.push(
                        rest.join(" ")
                            .parse()
                            .map_err(|e: ParseError| e.with_line(n))?,
                    );
                }
                ["stop", "quiescence"] => sc.stop = StopAt::Quiescence,
                ["stop", max] => {
                    let max = max
                        .parse()
                        .map_err(|_| err(format!("invalid stop `{max}`")))?;
                    sc.stop = StopAt::MaxEvents(max);
                }
                _ => return Err(err(format!("unknown directive `{line}`"))),
            }
        }
        Ok(sc)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let ids: Vec<String> = self.init.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "init {}", ids.join(" "));
        if let Some(s) = self.scheduler {
            let _ = writeln!(out, "sched {s}");
        }
        for (at, inj) in &self.injections {
            let _ = writeln!(out, "at {at} {inj}");
        }
        for p in &self.picks {
            let _ = writeln!(out, "pick {p}");
        }
        match self.stop {
            StopAt::Quiescence => out.push_str("stop quiescence\n"),
            StopAt::MaxEvents(n) => {
                let _ = writeln!(out, "stop {n}");
            }
        }
        out
    }

    /// Membership expected after applying every request sequentially.
    pub fn reference_membership(&self) -> Vec<ProcessId> {
        reference_membership(&self.init, self.injections.iter().map(|(_, i)| i))
    }
}
