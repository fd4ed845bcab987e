//! Run statistics. The only latency unit is the executed step.

use std::fmt::Write as _;

use crate::checker::Analysis;
use crate::engine::{EndReason, TraceRecord};
use crate::protocol::ChurnKind;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stats {
    pub steps: u64,
    pub satisfied_joins: usize,
    pub satisfied_leaves: usize,
    pub pending: usize,
    pub bounces: u64,
    /// Steps from a ticket's creation to its satisfaction.
    pub span_min: u64,
    pub span_mean: f64,
    pub span_max: u64,
    pub searches_resolved: usize,
    pub searches_unresolved: usize,
    pub max_concurrent_tickets: usize,
    pub end: Option<EndReason>,
}

impl Stats {
    pub fn from_trace(trace: &[TraceRecord]) -> Stats {
        Stats::from_analysis(&Analysis::new(trace))
    }

    pub fn from_analysis(a: &Analysis) -> Stats {
        let step_seqs: Vec<u64> = a.steps.iter().map(|s| s.seq).collect();
        let steps_until = |seq: u64| step_seqs.partition_point(|&s| s <= seq) as u64;
        let mut st = Stats {
            steps: step_seqs.len() as u64,
            end: a.end,
            ..Stats::default()
        };
        let mut spans = Vec::new();
        let mut edges: Vec<(u64, i64)> = Vec::new();
        for t in a.tickets.values() {
            st.bounces += u64::from(t.bounces);
            match (t.satisfied_seq, t.key.kind) {
                (Some(done), kind) => {
                    if kind == ChurnKind::Join {
                        st.satisfied_joins += 1;
                    } else {
                        st.satisfied_leaves += 1;
                    }
                    spans.push(steps_until(done) - steps_until(t.inject_seq));
                    edges.push((t.inject_seq, 1));
                    edges.push((done, -1));
                }
                (None, _) if !t.abandoned => {
                    st.pending += 1;
                    edges.push((t.inject_seq, 1));
                }
                _ => {}
            }
        }
        edges.sort_unstable();
        let mut live = 0i64;
        for (_, d) in edges {
            live += d;
            st.max_concurrent_tickets = st.max_concurrent_tickets.max(live as usize);
        }
        if !spans.is_empty() {
            st.span_min = *spans.iter().min().expect("non-empty");
            st.span_max = *spans.iter().max().expect("non-empty");
            st.span_mean = spans.iter().sum::<u64>() as f64 / spans.len() as f64;
        }
        st.searches_resolved = a.searches.values().filter(|s| s.resolved.is_some()).count();
        st.searches_unresolved = a.searches.len() - st.searches_resolved;
        st
    }

    /// `key<TAB>value` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let end = match self.end {
            Some(EndReason::Quiescent) => "quiescent",
            Some(EndReason::Truncated) => "truncated",
            Some(EndReason::ScriptExhausted) => "script-exhausted",
            Some(EndReason::ScriptInvalid) => "script-invalid",
            None => "-",
        };
        let rows: [(&str, String); 12] = [
            ("end", end.to_string()),
            ("steps", self.steps.to_string()),
            ("satisfied_joins", self.satisfied_joins.to_string()),
            ("satisfied_leaves", self.satisfied_leaves.to_string()),
            ("pending", self.pending.to_string()),
            ("bounces", self.bounces.to_string()),
            ("span_min", self.span_min.to_string()),
            ("span_mean", format!("{:.2}", self.span_mean)),
            ("span_max", self.span_max.to_string()),
            ("searches_resolved", self.searches_resolved.to_string()),
            ("searches_unresolved", self.searches_unresolved.to_string()),
            (
                "max_concurrent_tickets",
                self.max_concurrent_tickets.to_string(),
            ),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k}\t{v}");
        }
        out
    }
}
