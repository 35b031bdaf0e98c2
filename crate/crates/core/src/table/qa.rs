use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{parse_html_table, verify_table_answer, TableError, TableTaskType};
use crate::corpus::{Category, Provenance, QaRecord};
use crate::gateway::{extract_json_fence, ChatRequest, Gateway, DEFAULT_MAX_OUTPUT_TOKENS, DEFAULT_TEMPERATURE};
use crate::pairs::parse_pairs;
use crate::prompts::{fill, TABLE_QA};

pub const GENERATOR: &str = "table";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableQaConfig {
    pub min_pairs: usize,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for TableQaConfig {
    fn default() -> Self {
        Self { min_pairs: 3, temperature: DEFAULT_TEMPERATURE, max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS }
    }
}

pub fn default_table_output_template() -> Value {
    json!([
        {"human": "2023年的营业收入是多少？", "gpt": "12.5亿元", "task_type": "Factoid"},
        {"human": "各季度销量的总和是多少？", "gpt": "360", "task_type": "Computation"}
    ])
}

pub fn build_table_prompt(html: &str, template: &Value) -> Result<String, TableError> {
    if html.trim().is_empty() {
        return Err(TableError::EmptyHtml);
    }
    let template = serde_json::to_string(template).expect("json value serializes");
    Ok(fill(TABLE_QA, &[("html_code", html.trim()), ("template", &template)])?)
}

pub fn table_request(image_ref: &str, html: &str, cfg: &TableQaConfig) -> Result<ChatRequest, TableError> {
    let prompt = build_table_prompt(html, &default_table_output_template())?;
    let mut req = ChatRequest::new(format!("table-qa:{image_ref}"), prompt);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    Ok(req)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableQaBatch {
    pub image_ref: String,
    /// Validated and rejected records, sorted by id.
    pub records: Vec<QaRecord>,
    pub under_filled: bool,
    pub malformed_items: usize,
    pub duplicate_items: usize,
}

/// Generates QA for one HTML table and checks every answer against its grid.
pub fn gen_table_qa(
    image_ref: &str,
    html: &str,
    gateway: &Gateway,
    cfg: &TableQaConfig,
) -> Result<TableQaBatch, TableError> {
    let grid = parse_html_table(html)?;
    let completion = gateway.complete(&table_request(image_ref, html, cfg)?)?;
    let (pairs, malformed_items) = parse_pairs(&extract_json_fence(&completion.text)?);
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
            QaRecord::single_turn(image_ref, pair.question, pair.answer, Category::Table, pair.task_type, provenance);
        if !seen.insert(record.id.clone()) {
            duplicate_items += 1;
            continue;
        }
        let parsed = record.task_type.as_deref().map(str::parse::<TableTaskType>);
        let reason = match parsed {
            None => Some("missing task type".to_string()),
            Some(Err(_)) => Some("unknown task type".to_string()),
            Some(Ok(t)) => {
                record.task_type = Some(t.as_str().to_string());
                verify_table_answer(&record, &grid).rejection()
            }
        };
        if let Some(r) = reason {
            record.reject(&[r]);
        }
        records.push(record);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let validated = records.iter().filter(|r| r.is_validated()).count();
    Ok(TableQaBatch {
        image_ref: image_ref.to_string(),
        records,
        under_filled: validated < cfg.min_pairs,
        malformed_items,
        duplicate_items,
    })
}
