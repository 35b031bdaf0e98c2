//! QA generation for text-rich document pages.
//!
//! The OCR layout is embedded in the document prompt, the model's fenced JSON
//! reply is split into pairs, and each pair is checked against the spliced OCR
//! text. Only some of the prompt's guidelines can be checked mechanically:
//!
//! * the answer must occur in the OCR text (after normalization),
//! * the instruction must not open with a filler phrase such as "请问",
//! * neither side may talk about the page layout,
//! * the labeled region kind must exist on the page.
//!
//! Image dependence and answer conciseness are left to the prompt.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Category, Provenance, QaRecord};
use crate::gateway::{extract_json_fence, ChatRequest, Gateway, GatewayError};
use crate::layout::{self, kinds_present, splice_text, LayoutDocument, LayoutError, RegionKind};
use crate::pairs::parse_pairs;
use crate::prompts::{self, PromptError};

pub const GENERATOR: &str = "docqa";
pub const REASON_NOT_GROUNDED: &str = "answer not grounded";

#[derive(Debug, Error)]
pub enum DocQaError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("invalid docqa config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnswerNormalization {
    pub nfkc: bool,
    pub strip_whitespace: bool,
    pub strip_punctuation: String,
}

impl Default for AnswerNormalization {
    fn default() -> Self {
        Self {
            nfkc: true,
            strip_whitespace: true,
            strip_punctuation: ",;:!?\"'()，。、；：？！“”‘’（）《》【】".into(),
        }
    }
}

impl AnswerNormalization {
    pub fn apply(&self, s: &str) -> String {
        let base: String = if self.nfkc { s.nfkc().collect() } else { s.to_string() };
        base.chars()
            .filter(|c| !(self.strip_whitespace && c.is_whitespace()))
            .filter(|c| !self.strip_punctuation.contains(*c))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DocQaConfig {
    pub min_pairs: usize,
    pub banned_instruction_prefixes: Vec<String>,
    pub banned_layout_words: Vec<String>,
    pub answer_normalization: AnswerNormalization,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub workers: usize,
}

impl Default for DocQaConfig {
    fn default() -> Self {
        Self {
            min_pairs: 5,
            banned_instruction_prefixes: ["请问", "请回答", "在文档中", "Please ask", "Please answer", "In the document"]
                .map(String::from)
                .to_vec(),
            banned_layout_words: [
                "表格", "版面", "布局", "区域", "左上角", "右上角", "左下角", "右下角", "layout",
                "bounding box", "bbox", "region",
            ]
            .map(String::from)
            .to_vec(),
            answer_normalization: AnswerNormalization::default(),
            temperature: crate::gateway::DEFAULT_TEMPERATURE,
            max_output_tokens: crate::gateway::DEFAULT_MAX_OUTPUT_TOKENS,
            workers: 4,
        }
    }
}

impl DocQaConfig {
    pub fn check(&self) -> Result<(), DocQaError> {
        if self.min_pairs < 1 {
            return Err(DocQaError::Config("min_pairs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sample output shown to the model.
pub fn default_output_template() -> Value {
    json!([
        {"human": "2023年公司实现营业收入多少？", "gpt": "12.5亿元", "region_type": "printed_text"},
        {"human": "2022年的毛利率是多少？", "gpt": "31.4%", "region_type": "table"}
    ])
}

fn is_empty_value(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::String(s) => s.trim().is_empty(),
        Value::Array(a) => a.is_empty(),
        Value::Object(o) => o.is_empty(),
        _ => false,
    }
}

/// Fills the document prompt. The layout is re-serialized canonically, so
/// whitespace differences in the input do not change the prompt bytes.
pub fn build_doc_prompt(layout_json: &str, template_example: &Value) -> Result<String, DocQaError> {
    let doc = layout::parse_layout(layout_json)?;
    build_doc_prompt_for(&doc, template_example, DocQaConfig::default().min_pairs)
}

pub fn build_doc_prompt_for(
    doc: &LayoutDocument,
    template_example: &Value,
    min_pairs: usize,
) -> Result<String, DocQaError> {
    if is_empty_value(template_example) {
        return Err(PromptError::Unfilled("template".into()).into());
    }
    let template = serde_json::to_string(template_example).expect("json serializes");
    let layout = layout::to_json(doc);
    Ok(prompts::fill(
        prompts::DOC_QA,
        &[
            ("json_string", &layout),
            ("min_pairs", &min_pairs.to_string()),
            ("template", &template),
        ],
    )?)
}

/// The gateway request for one page; the replay key depends on it.
pub fn doc_request(image_ref: &str, doc: &LayoutDocument, cfg: &DocQaConfig) -> Result<ChatRequest, DocQaError> {
    let prompt = build_doc_prompt_for(doc, &default_output_template(), cfg.min_pairs)?;
    let mut req = ChatRequest::new(format!("docqa:{image_ref}"), prompt);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    Ok(req)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DocVerdict {
    Validated,
    Rejected(Vec<String>),
}

fn starts_with_ci(s: &str, prefix: &str) -> bool {
    s.get(..prefix.len()).is_some_and(|head| head.eq_ignore_ascii_case(prefix))
}

fn contains_word(haystack: &str, word: &str) -> bool {
    if word.is_ascii() {
        let hay = haystack.to_ascii_lowercase();
        let w = word.to_ascii_lowercase();
        hay.match_indices(&w).any(|(i, _)| {
            let before = hay[..i].chars().next_back();
            let after = hay[i + w.len()..].chars().next();
            !before.is_some_and(|c| c.is_ascii_alphanumeric()) && !after.is_some_and(|c| c.is_ascii_alphanumeric())
        })
    } else {
        haystack.contains(word)
    }
}

/// Checks one document record against the page text. Every rule that fires is reported.
pub fn validate_doc_qa(
    record: &QaRecord,
    spliced_text: &str,
    kinds: &BTreeSet<RegionKind>,
    cfg: &DocQaConfig,
) -> DocVerdict {
    let mut reasons = Vec::new();
    let question = record.question().trim();
    let answer = record.answer();
    let norm = &cfg.answer_normalization;

    let answer_key = norm.apply(answer);
    if answer_key.is_empty() || !norm.apply(spliced_text).contains(&answer_key) {
        reasons.push(REASON_NOT_GROUNDED.to_string());
    }
    for prefix in &cfg.banned_instruction_prefixes {
        if starts_with_ci(question, prefix) {
            reasons.push(format!("banned instruction prefix '{prefix}'"));
        }
    }
    for word in &cfg.banned_layout_words {
        if contains_word(question, word) || contains_word(answer, word) {
            reasons.push(format!("banned layout word '{word}'"));
        }
    }
    if let Some(kind) = record.task_type.as_deref().and_then(|t| t.parse::<RegionKind>().ok()) {
        if !kinds.contains(&kind) {
            reasons.push(format!("region type not present: {kind}"));
        }
    }
    if reasons.is_empty() {
        DocVerdict::Validated
    } else {
        DocVerdict::Rejected(reasons)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocQaBatch {
    pub image_ref: String,
    /// Validated and rejected records, sorted by id.
    pub records: Vec<QaRecord>,
    pub under_filled: bool,
    pub malformed_items: usize,
    pub duplicate_items: usize,
}

impl DocQaBatch {
    pub fn validated(&self) -> usize {
        self.records.iter().filter(|r| r.is_validated()).count()
    }
}

/// Generates and validates QA for one page.
pub fn generate_doc_qa(
    image_ref: &str,
    doc: &LayoutDocument,
    cfg: &DocQaConfig,
    gateway: &Gateway,
) -> Result<DocQaBatch, DocQaError> {
    cfg.check()?;
    let req = doc_request(image_ref, doc, cfg)?;
    let completion = gateway.complete(&req)?;
    let value = extract_json_fence(&completion.text)?;
    let (pairs, malformed_items) = parse_pairs(&value);

    let spliced = splice_text(doc);
    let kinds = kinds_present(doc);
    let mut seen = HashSet::new();
    let mut duplicate_items = 0;
    let mut records = Vec::new();
    for pair in pairs {
        let provenance = Provenance {
            generator: GENERATOR.into(),
            rng_seed: 0,
            model: gateway.model().to_string(),
            validated: true,
            rejection_reason: None,
        };
        let mut record =
            QaRecord::single_turn(image_ref, pair.question, pair.answer, Category::Doc, pair.region, provenance);
        if !seen.insert(record.id.clone()) {
            duplicate_items += 1;
            continue;
        }
        if let DocVerdict::Rejected(reasons) = validate_doc_qa(&record, &spliced, &kinds, cfg) {
            record.reject(&reasons);
        }
        records.push(record);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let validated = records.iter().filter(|r| r.is_validated()).count();
    Ok(DocQaBatch {
        image_ref: image_ref.to_string(),
        records,
        under_filled: validated < cfg.min_pairs,
        malformed_items,
        duplicate_items,
    })
}

/// Runs [`generate_doc_qa`] over many pages on `cfg.workers` threads.
/// Batches come back in input order regardless of scheduling.
pub fn generate_doc_qa_many(
    pages: &[(String, LayoutDocument)],
    cfg: &DocQaConfig,
    gateway: &Gateway,
) -> Result<Vec<DocQaBatch>, DocQaError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| DocQaError::Config(e.to_string()))?;
    pool.install(|| {
        pages
            .par_iter()
            .map(|(image_ref, doc)| generate_doc_qa(image_ref, doc, cfg, gateway))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CoverageReport {
    pub counts: BTreeMap<RegionKind, usize>,
    pub gaps: Vec<RegionKind>,
}

/// Validated records per present region kind, using the kind each record was labeled with.
pub fn coverage_report(records: &[QaRecord], kinds: &BTreeSet<RegionKind>) -> CoverageReport {
    let mut counts: BTreeMap<RegionKind, usize> = kinds.iter().map(|k| (*k, 0)).collect();
    for r in records.iter().filter(|r| r.is_validated()) {
        if let Some(kind) = r.task_type.as_deref().and_then(|t| t.parse::<RegionKind>().ok()) {
            if let Some(n) = counts.get_mut(&kind) {
                *n += 1;
            }
        }
    }
    let gaps = counts.iter().filter(|(_, n)| **n == 0).map(|(k, _)| *k).collect();
    CoverageReport { counts, gaps }
}
