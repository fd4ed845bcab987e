//! Trace and snapshot checks. Every check returns a [`Verdict`]; liveness
//! checks can only fail on a trace that ended at quiescence (or, for
//! fairness, on a scripted run that starved a request), and report
//! "not yet violated" on truncated runs.

mod analysis;
mod reference;
mod structure;
mod topology;
mod trace_checks;

use std::fmt;
use std::str::FromStr;

pub use analysis::{Analysis, Fate, Flow, RequestTicket, SearchInfo, Step, TicketKey};
pub use reference::reference_membership;
pub use structure::{check_linearization, check_sublist, detect_partition};
pub use topology::Topology;
pub use trace_checks::{
    check_fair_request, check_locality, check_message_progress, check_message_safety,
    check_protocol_integrity, check_request_progress, check_search_resolution,
    check_single_transition, check_td_last, check_terminating_transition,
};

use crate::engine::{Snapshot, TraceRecord};
use crate::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    Linearization,
    Sublist,
    Partition,
    MessageSafety,
    TdLast,
    SingleTransition,
    TerminatingTransition,
    RequestProgress,
    FairRequest,
    MessageProgress,
    Locality,
    SearchResolution,
    ProtocolIntegrity,
}

impl Property {
    pub const ALL: [Property; 13] = [
        Property::Linearization,
        Property::Sublist,
        Property::Partition,
        Property::MessageSafety,
        Property::TdLast,
        Property::SingleTransition,
        Property::TerminatingTransition,
        Property::RequestProgress,
        Property::FairRequest,
        Property::MessageProgress,
        Property::Locality,
        Property::SearchResolution,
        Property::ProtocolIntegrity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::Linearization => "linearization",
            Property::Sublist => "sublist",
            Property::Partition => "partition",
            Property::MessageSafety => "message_safety",
            Property::TdLast => "td_last",
            Property::SingleTransition => "single_transition",
            Property::TerminatingTransition => "terminating_transition",
            Property::RequestProgress => "request_progress",
            Property::FairRequest => "fair_request",
            Property::MessageProgress => "message_progress",
            Property::Locality => "locality",
            Property::SearchResolution => "search_resolution",
            Property::ProtocolIntegrity => "protocol_integrity",
        }
    }

    /// Parses a comma-separated list, or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Property>, ParseError> {
        if s.trim() == "all" {
            return Ok(Property::ALL.to_vec());
        }
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Property {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ParseError::new(format!("unknown property `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Pass,
    Fail,
    /// Truncated or otherwise unfinished: nothing contradicts the property
    /// yet.
    NotYetViolated,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::NotYetViolated => "nyv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub property: Property,
    pub outcome: Outcome,
    /// Seq range of the records that demonstrate a failure.
    pub witness: Option<(u64, u64)>,
    pub note: String,
}

impl Verdict {
    pub fn pass(property: Property, note: impl Into<String>) -> Self {
        Verdict {
            property,
            outcome: Outcome::Pass,
            witness: None,
            note: note.into(),
        }
    }

    pub fn fail(property: Property, witness: Option<(u64, u64)>, note: impl Into<String>) -> Self {
        Verdict {
            property,
            outcome: Outcome::Fail,
            witness,
            note: note.into(),
        }
    }

    pub fn nyv(property: Property, note: impl Into<String>) -> Self {
        Verdict {
            property,
            outcome: Outcome::NotYetViolated,
            witness: None,
            note: note.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Fail
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.property, self.outcome.as_str())?;
        if let Some((a, b)) = self.witness {
            write!(f, " [{a},{b}]")?;
        }
        if !self.note.is_empty() {
            write!(f, " {}", self.note)?;
        }
        Ok(())
    }
}

/// Runs the selected checks against one run.
pub fn run_checks(props: &[Property], trace: &[TraceRecord], snapshot: &Snapshot) -> Vec<Verdict> {
    let analysis = Analysis::new(trace);
    props
        .iter()
        .map(|&p| {
            let refused = |e: crate::error::CheckError| Verdict::nyv(p, e.to_string());
            match p {
                Property::Linearization => check_linearization(snapshot).unwrap_or_else(refused),
                Property::Sublist => check_sublist(snapshot).unwrap_or_else(refused),
                Property::Partition => detect_partition(snapshot),
                Property::MessageSafety => check_message_safety(&analysis),
                Property::TdLast => check_td_last(&analysis),
                Property::SingleTransition => check_single_transition(&analysis),
                Property::TerminatingTransition => check_terminating_transition(&analysis),
                Property::RequestProgress => check_request_progress(&analysis),
                Property::FairRequest => check_fair_request(&analysis),
                Property::MessageProgress => check_message_progress(trace, &analysis),
                Property::Locality => check_locality(trace, &analysis),
                Property::SearchResolution => check_search_resolution(&analysis),
                Property::ProtocolIntegrity => check_protocol_integrity(&analysis),
            }
        })
        .collect()
}

/// One line per verdict.
pub fn format_report(verdicts: &[Verdict]) -> String {
    verdicts.iter().map(|v| format!("{v}\n")).collect()
}
