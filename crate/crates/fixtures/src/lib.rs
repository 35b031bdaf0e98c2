//! Deterministic fixture corpus: OCR pages, chart seeds, HTML tables and a
//! replay store of scripted model responses keyed by the real request
//! builders.
//!
//! `write_fixtures` regenerates the committed `fixtures/` tree. Responses
//! mix correct answers with planted wrong ones so every validator has
//! something to reject.

mod charts;
mod docs;
mod tables;

use std::fs;
use std::path::Path;

use docsynth::chart::{chart_qa_request, preset_questions, ChartTaskType, PresetQa};
use docsynth::config::PipelineConfig;
use docsynth::docqa::doc_request;
use docsynth::gateway::{wrap_in_fence, Gateway, GatewayConfig, GatewayMode, ReplayStore, TokenUsage};
use docsynth::layout::to_json;
use docsynth::normalize::{extract_number, format_number};
use docsynth::pipeline::{build_charts, load_pages, load_tables, PipelineError};
use docsynth::table::table_request;
use serde_json::{json, Value};

pub use charts::chart_seeds;
pub use docs::{doc_fixtures, DocFixture, FixturePair};
pub use tables::{table_fixtures, TableFixture, TablePair};

/// Seed the committed replay store was recorded for.
pub const RUN_SEED: u64 = 0;

pub const CONFIG_TOML: &str = "\
# Replay-mode configuration for the committed fixture corpus.
[inputs]
docs = \"docs\"
chart_seeds = \"charts\"
tables = \"tables\"

[gateway]
mode = \"replay\"
replay_store = \"replay\"

[chart]
variants_per_seed = 2
";

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io(parent))?;
    }
    fs::write(path, text).map_err(io(path))
}

fn response(items: Vec<Value>) -> String {
    format!("以下是生成的问答对：\n\n{}\n", wrap_in_fence(&Value::Array(items)))
}

/// A preset answer changed so that it no longer holds, or `None` when the
/// preset has no numeric answer to perturb.
fn planted_wrong(p: &PresetQa) -> Option<Value> {
    let v = extract_number(&p.answer)?;
    let wrong = format_number(((v * 1.5 + 7.0) * 100.0).round() / 100.0);
    Some(json!({"human": format!("{}（核对）", p.question), "gpt": wrong, "task_type": p.task_type.as_str()}))
}

/// Scripted chart QA: every preset question, one perturbed numeric answer
/// and one item with a task type outside the chart's list.
pub fn chart_response(presets: &[PresetQa], allowed: &[ChartTaskType]) -> String {
    let mut items: Vec<Value> = presets
        .iter()
        .map(|p| json!({"human": p.question, "gpt": p.answer, "task_type": p.task_type.as_str()}))
        .collect();
    if let Some(w) = presets.iter().find_map(planted_wrong) {
        items.push(w);
    }
    if let Some(t) = ChartTaskType::ALL.iter().find(|t| !allowed.contains(t)) {
        items.push(json!({"human": "这张图想表达什么？", "gpt": "整体呈上升趋势", "task_type": t.as_str()}));
    }
    response(items)
}

/// Writes the fixture tree under `root`: `config.toml`, `docs/`, `charts/`,
/// `tables/` and `replay/`.
pub fn write_fixtures(root: &Path) -> Result<usize, PipelineError> {
    write(&root.join("config.toml"), CONFIG_TOML)?;
    for page in doc_fixtures() {
        write(&root.join("docs").join(format!("{}.json", page.name)), &(to_json(&page.doc) + "\n"))?;
    }
    for seed in chart_seeds() {
        let dir = root.join("charts").join(&seed.id);
        write(&dir.join("script.txt"), &seed.script_text)?;
        write(&dir.join("table.csv"), &seed.data_table)?;
        write(&dir.join("meta.json"), &(serde_json::to_string_pretty(&seed.meta).expect("json") + "\n"))?;
    }
    for t in table_fixtures() {
        write(&root.join("tables").join(format!("{}.html", t.name)), t.html)?;
    }

    let cfg = PipelineConfig::load(&root.join("config.toml"))?;
    let replay_dir = &cfg.gateway.replay_store;
    if replay_dir.exists() {
        fs::remove_dir_all(replay_dir).map_err(io(replay_dir))?;
    }
    let store = ReplayStore::create(replay_dir)?;
    let model = cfg.gateway.model.clone();
    let mut entries = 0;
    let mut put = |req: &docsynth::gateway::ChatRequest, text: String| -> Result<(), PipelineError> {
        store.put(req, &model, &text, TokenUsage::estimate(&req.user_text, &text))?;
        entries += 1;
        Ok(())
    };

    let fixtures = doc_fixtures();
    for (image_ref, doc) in load_pages(&cfg.inputs.docs)? {
        let stem = image_ref.trim_start_matches("docs/").trim_end_matches(".png");
        let page = fixtures.iter().find(|p| p.name == stem).expect("page has a fixture");
        let items = page
            .pairs
            .iter()
            .map(|p| json!({"human": p.question, "gpt": p.answer, "region_type": p.label}))
            .collect();
        put(&doc_request(&image_ref, &doc, &cfg.docqa)?, response(items))?;
    }

    let offline = Gateway::new(GatewayConfig { mode: GatewayMode::Live, ..cfg.gateway.clone() })?;
    let seeds = docsynth::chart::load_seeds(&cfg.inputs.chart_seeds)?;
    for (_, item) in build_charts(&seeds, &cfg.chart, RUN_SEED, &offline) {
        let item = item?;
        let (spec, table) = (&item.mutation.spec, &item.mutation.table);
        let allowed = cfg.chart.tasks.allowed(spec.chart_type)?;
        let text = chart_response(&preset_questions(spec, table, &cfg.chart.tasks), allowed);
        put(&chart_qa_request(&item.image_ref, spec, table, &cfg.chart.tasks, &cfg.chart.qa)?, text)?;
    }

    for (image_ref, html) in load_tables(&cfg.inputs.tables)? {
        let stem = image_ref.trim_start_matches("tables/").trim_end_matches(".png");
        let t = table_fixtures().iter().find(|t| t.name == stem).expect("table has a fixture");
        let items = t.pairs.iter().map(|(q, a, task, _)| json!({"human": q, "gpt": a, "task_type": task})).collect();
        put(&table_request(&image_ref, &html, &cfg.table)?, response(items))?;
    }
    Ok(entries)
}
