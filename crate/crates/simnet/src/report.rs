//! Run reports: a canonical machine-readable document with a stable field
//! order, plus a human summary table.
//!
//! The canonical document deliberately excludes wall-clock time so that
//! identical scenarios serialize to identical bytes; the measured duration
//! is carried on the struct and shown only in the summary. Epoch-nonce
//! broadcast traffic is likewise excluded from the byte counts: the nonce
//! distribution is part of the trusted setup, not the upward data path.

use crate::scenario::Scenario;
use serde::{Deserialize, Serialize};
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionVerdict {
    /// Honest run: nothing to detect.
    NotApplicable,
    /// The attack surfaced as a failed verification or a protocol error.
    Detected,
    /// The attacked epoch passed verification.
    Missed,
}

/// Bytes that crossed one upward link during the reported epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkMetric {
    pub from: u16,
    pub to: u16,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    /// Epoch the verdict refers to (replay scenarios run a capture epoch
    /// first).
    pub epoch_id: u64,
    /// Decimal decrypted sum; absent when the epoch aborted with an error.
    pub sum: Option<String>,
    /// Decimal sum of the honest readings (the oracle value).
    pub expected_sum: String,
    pub verified: bool,
    pub detection: DetectionVerdict,
    /// The protocol or decode error that ended the epoch, if any.
    pub error: Option<String>,
    /// Whether the run ended the way the scenario's attack (or its
    /// absence) predicts; drives the process exit code.
    pub outcome_matches_expectation: bool,
    pub node_count: u32,
    pub leaf_count: u32,
    pub depth: u32,
    /// Ascending by child id; one message per link per epoch.
    pub links: Vec<LinkMetric>,
    pub total_upward_bytes: u64,
    pub root_packets_aggregated: u64,
    pub root_packets_unaggregated: u64,
    #[serde(skip)]
    pub duration: Duration,
}

impl RunReport {
    /// Byte-stable serialization: identical scenarios yield identical
    /// documents.
    pub fn to_canonical_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Human-readable outcome table.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let verdict = match self.detection {
            DetectionVerdict::NotApplicable => "n/a (honest run)",
            DetectionVerdict::Detected => "detected",
            DetectionVerdict::Missed => "missed",
        };
        out.push_str(&format!(
            "epoch {:>3}  nodes {:>5}  leaves {:>4}  depth {:>2}\n",
            self.epoch_id, self.node_count, self.leaf_count, self.depth
        ));
        out.push_str(&format!(
            "sum       {}  (expected {})\n",
            self.sum.as_deref().unwrap_or("-"),
            self.expected_sum
        ));
        out.push_str(&format!(
            "verified  {:<5}  detection {}\n",
            self.verified, verdict
        ));
        if let Some(err) = &self.error {
            out.push_str(&format!("error     {err}\n"));
        }
        out.push_str(&format!(
            "packets at root: {} aggregated vs {} without aggregation\n",
            self.root_packets_aggregated, self.root_packets_unaggregated
        ));
        out.push_str(&format!(
            "upward traffic: {} bytes over {} links\n",
            self.total_upward_bytes,
            self.links.len()
        ));
        out.push_str(&format!(
            "outcome as expected: {}   ({:.3}s)\n",
            self.outcome_matches_expectation,
            self.duration.as_secs_f64()
        ));
        out
    }
}
