//! OCR-conditioned question rewriting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PREFIX: &str = "Use the image and the OCR result as context and answer the following question: ";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AugmentError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("question already carries the OCR prefix")]
    AlreadyAugmented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentPolicy {
    /// OCR longer than this, in characters, is not inlined.
    pub max_ocr_chars: usize,
    pub min_mean_confidence: f64,
    /// Overrides; `never` wins over `always`.
    pub always: bool,
    pub never: bool,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        Self { max_ocr_chars: 2000, min_mean_confidence: 0.9, always: false, never: false }
    }
}

/// Whether to inline `ocr_text`. Empty OCR is never inlined. Raising the
/// confidence or shortening the text never turns a yes into a no.
pub fn should_augment(ocr_text: &str, mean_confidence: f64, policy: &AugmentPolicy) -> bool {
    if policy.never || ocr_text.trim().is_empty() {
        return false;
    }
    if policy.always {
        return true;
    }
    ocr_text.chars().count() <= policy.max_ocr_chars && mean_confidence >= policy.min_mean_confidence
}

/// Backtick fence longer than any backtick run in `text`, at least three.
fn fence_for(text: &str) -> String {
    let longest = text.split(|c| c != '`').map(str::len).max().unwrap_or(0);
    "`".repeat(longest.max(2) + 1)
}

/// `PREFIX`, the OCR text in a code fence, then the question.
pub fn augment_question(question: &str, ocr_text: &str) -> Result<String, AugmentError> {
    if question.trim().is_empty() {
        return Err(AugmentError::EmptyQuestion);
    }
    if question.starts_with(PREFIX) {
        return Err(AugmentError::AlreadyAugmented);
    }
    let fence = fence_for(ocr_text);
    Ok(format!("{PREFIX}\n{fence}\n{ocr_text}\n{fence}\n{question}"))
}
