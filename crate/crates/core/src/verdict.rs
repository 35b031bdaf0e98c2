use serde::{Deserialize, Serialize};

/// Outcome of checking a generated answer against ground-truth data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    /// The task type or phrasing admits no mechanical check.
    Unverifiable,
    Wrong { expected: Option<String> },
}

impl Verdict {
    pub fn wrong(expected: impl Into<String>) -> Self {
        Verdict::Wrong { expected: Some(expected.into()) }
    }

    /// Rejection reason for a wrong answer, `None` otherwise.
    pub fn rejection(&self) -> Option<String> {
        match self {
            Verdict::Wrong { expected: Some(e) } => Some(format!("wrong answer (expected {e})")),
            Verdict::Wrong { expected: None } => Some("wrong answer".to_string()),
            _ => None,
        }
    }
}
