//! Machine-readable run summary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::QaRecord;
use crate::gateway::TokenUsage;

/// Counts for one pipeline. `generated == validated + rejected` always.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineCounts {
    pub items: usize,
    pub generated: usize,
    pub validated: usize,
    pub rejected: usize,
    /// Each record counts once under every reason it carries.
    pub rejected_by_reason: BTreeMap<String, usize>,
    pub under_filled_items: usize,
    pub malformed_items: usize,
    pub duplicate_items: usize,
    /// `<item>: <error>` for items that produced no records.
    pub failures: Vec<String>,
}

impl PipelineCounts {
    pub fn add_records(&mut self, records: &[QaRecord]) {
        for r in records {
            self.generated += 1;
            if r.is_validated() {
                self.validated += 1;
            } else {
                self.rejected += 1;
                let reasons = r.provenance.rejection_reason.as_deref().unwrap_or("unspecified");
                for reason in reasons.split("; ") {
                    *self.rejected_by_reason.entry(reason_kind(reason).to_string()).or_default() += 1;
                }
            }
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.generated == self.validated + self.rejected
    }
}

/// Reason without its record-specific detail, so counts aggregate.
fn reason_kind(reason: &str) -> &str {
    let cut = [" (", ": ", " '"].iter().filter_map(|sep| reason.find(sep)).min();
    cut.map_or(reason, |i| &reason[..i])
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub pipelines: BTreeMap<String, PipelineCounts>,
    pub token_usage: TokenUsage,
    pub wall_time_ms: u64,
    /// Written files, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunReport {
    pub fn failed_items(&self) -> usize {
        self.pipelines.values().map(|p| p.failures.len()).sum()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Category, Provenance};

    fn rec(q: &str, reasons: Option<&[&str]>) -> QaRecord {
        let prov = Provenance { generator: "t".into(), rng_seed: 0, model: "m".into(), validated: true, rejection_reason: None };
        let mut r = QaRecord::single_turn("a.png", q, "x", Category::Doc, None, prov);
        if let Some(rs) = reasons {
            r.reject(&rs.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        }
        r
    }

    #[test]
    fn arithmetic_and_reason_buckets() {
        let mut c = PipelineCounts::default();
        c.add_records(&[
            rec("a", None),
            rec("b", Some(&["answer not grounded"])),
            rec("c", Some(&["wrong answer (expected 4)", "banned layout word '表格'"])),
            rec("d", Some(&["wrong answer (expected 9)"])),
        ]);
        assert_eq!((c.generated, c.validated, c.rejected), (4, 1, 3));
        assert!(c.is_consistent());
        assert_eq!(c.rejected_by_reason["wrong answer"], 2);
        assert_eq!(c.rejected_by_reason["answer not grounded"], 1);
        assert_eq!(c.rejected_by_reason["banned layout word"], 1);
    }
}
