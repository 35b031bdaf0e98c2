//! End-to-end orchestration over input directories.
//!
//! Work items fan out over a bounded pool. Every output is sorted before it
//! is written, so file bytes depend only on inputs, config and seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::chart::{
    gen_chart_qa, load_seeds, mutate_spec, preset_records, render, ChartError, ChartSeed, DictionaryTranslator, Mutation,
    MutationRoute, TopicPool,
};
use crate::config::{ChartQaSource, ChartRouteKind, ChartSection, ConfigError, PipelineConfig};
use crate::corpus::{compute_manifest, merge_records, read_jsonl, write_dataset, CorpusError, ManifestStats, QaRecord};
use crate::docqa::{generate_doc_qa, DocQaConfig, DocQaError};
use crate::gateway::{Gateway, GatewayError};
use crate::layout::{parse_layout, LayoutDocument, LayoutError};
use crate::report::{PipelineCounts, RunReport};
use crate::table::{gen_table_qa, TableError, TableQaConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    DocQa(#[from] DocQaError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("{path}: {source}")]
    Layout { path: PathBuf, source: LayoutError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Files in `dir` with extension `ext`, sorted by name.
fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Layout pages as `(image_ref, document)`, with image refs `docs/<stem>.png`.
pub fn load_pages(dir: &Path) -> Result<Vec<(String, LayoutDocument)>, PipelineError> {
    files_with_ext(dir, "json")?
        .into_iter()
        .map(|path| {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let doc = parse_layout(&text).map_err(|source| PipelineError::Layout { path: path.clone(), source })?;
            Ok((format!("docs/{}.png", stem(&path)), doc))
        })
        .collect()
}

/// HTML tables as `(image_ref, html)`, with image refs `tables/<stem>.png`.
pub fn load_tables(dir: &Path) -> Result<Vec<(String, String)>, PipelineError> {
    files_with_ext(dir, "html")?
        .into_iter()
        .map(|path| {
            let html = fs::read_to_string(&path).map_err(io_err(&path))?;
            Ok((format!("tables/{}.png", stem(&path)), html))
        })
        .collect()
}

/// Records and counts from one pipeline.
#[derive(Debug, Clone, Default)]
pub struct Stage {
    pub records: Vec<QaRecord>,
    pub counts: PipelineCounts,
}

struct ItemResult {
    records: Vec<QaRecord>,
    under_filled: bool,
    malformed: usize,
    duplicates: usize,
}

fn collect_stage(results: Vec<(String, Result<ItemResult, String>)>) -> Stage {
    let mut stage = Stage::default();
    for (item, result) in results {
        stage.counts.items += 1;
        match result {
            Ok(r) => {
                stage.counts.add_records(&r.records);
                stage.counts.under_filled_items += usize::from(r.under_filled);
                stage.counts.malformed_items += r.malformed;
                stage.counts.duplicate_items += r.duplicates;
                stage.records.extend(r.records);
            }
            Err(e) => stage.counts.failures.push(format!("{item}: {e}")),
        }
    }
    stage.records.sort_by(|a, b| a.id.cmp(&b.id));
    stage
}

pub fn run_docs(pages: &[(String, LayoutDocument)], cfg: &DocQaConfig, gateway: &Gateway) -> Stage {
    let results = pages
        .par_iter()
        .map(|(image_ref, doc)| {
            let r = generate_doc_qa(image_ref, doc, cfg, gateway)
                .map(|b| ItemResult {
                    under_filled: b.under_filled,
                    malformed: b.malformed_items,
                    duplicates: b.duplicate_items,
                    records: b.records,
                })
                .map_err(|e| e.to_string());
            (image_ref.clone(), r)
        })
        .collect();
    collect_stage(results)
}

pub fn run_tables(tables: &[(String, String)], cfg: &TableQaConfig, gateway: &Gateway) -> Stage {
    let results = tables
        .par_iter()
        .map(|(image_ref, html)| {
            let r = gen_table_qa(image_ref, html, gateway, cfg)
                .map(|b| ItemResult {
                    under_filled: b.under_filled,
                    malformed: b.malformed_items,
                    duplicates: b.duplicate_items,
                    records: b.records,
                })
                .map_err(|e| e.to_string());
            (image_ref.clone(), r)
        })
        .collect();
    collect_stage(results)
}

/// One mutated and rendered chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartItem {
    /// `charts/<seed id>-<variant>.svg`.
    pub image_ref: String,
    pub rng_seed: u64,
    pub mutation: Mutation,
    pub svg: String,
}

fn chart_item(
    seed: &ChartSeed,
    variant: u32,
    section: &ChartSection,
    topics: &TopicPool,
    run_seed: u64,
    gateway: &Gateway,
) -> Result<ChartItem, ChartError> {
    let rng_seed = run_seed.wrapping_add(u64::from(variant));
    let translator = DictionaryTranslator::builtin();
    let route = match section.route {
        ChartRouteKind::Rule => MutationRoute::RuleBased { translator: &translator, locale: section.locale },
        ChartRouteKind::Llm => MutationRoute::Llm { gateway },
    };
    let mutation = mutate_spec(seed, topics, rng_seed, &route)?;
    let svg = render(&mutation.spec, rng_seed)?;
    Ok(ChartItem { image_ref: format!("charts/{}-{variant}.svg", seed.id), rng_seed, mutation, svg })
}

/// Mutates and renders `variants_per_seed` charts per seed, in seed order.
pub fn build_charts(
    seeds: &[ChartSeed],
    section: &ChartSection,
    run_seed: u64,
    gateway: &Gateway,
) -> Vec<(String, Result<ChartItem, ChartError>)> {
    let topics = TopicPool::with_extra(section.extra_topics.iter().cloned());
    let jobs: Vec<(&ChartSeed, u32)> =
        seeds.iter().flat_map(|s| (0..section.variants_per_seed).map(move |v| (s, v))).collect();
    jobs.par_iter()
        .map(|(seed, v)| (format!("{}-{v}", seed.id), chart_item(seed, *v, section, &topics, run_seed, gateway)))
        .collect()
}

pub fn run_charts(items: &[ChartItem], section: &ChartSection, gateway: &Gateway) -> Stage {
    let results = items
        .par_iter()
        .map(|item| {
            let Mutation { spec, table } = &item.mutation;
            let r = match section.qa_source {
                ChartQaSource::Llm => gen_chart_qa(&item.image_ref, spec, table, &section.tasks, gateway, &section.qa, item.rng_seed)
                    .map(|b| ItemResult {
                        under_filled: b.under_filled,
                        malformed: b.malformed_items,
                        duplicates: b.duplicate_items,
                        records: b.records,
                    })
                    .map_err(|e| e.to_string()),
                ChartQaSource::Preset => {
                    let records = preset_records(&item.image_ref, spec, table, &section.tasks, item.rng_seed);
                    let validated = records.iter().filter(|r| r.is_validated()).count();
                    Ok(ItemResult { under_filled: validated < section.qa.min_pairs, malformed: 0, duplicates: 0, records })
                }
            };
            (item.image_ref.clone(), r)
        })
        .collect();
    collect_stage(results)
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(io_err(path))
}

/// Merges JSONL inputs into `out` plus its rejects sibling, and writes the
/// manifest of accepted records to `manifest_path`.
pub fn assemble(inputs: &[PathBuf], out: &Path, manifest_path: &Path) -> Result<ManifestStats, PipelineError> {
    let mut all = Vec::new();
    for path in inputs {
        all.extend(read_jsonl(path)?);
    }
    let merged = merge_records(all)?;
    for path in [out, manifest_path] {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
    }
    write_dataset(&merged, out)?;
    let manifest = compute_manifest(merged.iter().filter(|r| r.is_validated()));
    write_text(manifest_path, &(manifest.to_json_pretty() + "\n"))?;
    Ok(manifest)
}

/// Runs all three generators over the configured inputs and writes every
/// artifact under `out_dir`.
pub fn run_all(cfg: &PipelineConfig, out_dir: &Path, seed: u64) -> Result<RunReport, PipelineError> {
    let started = Instant::now();
    cfg.check()?;
    fs::create_dir_all(out_dir.join("charts")).map_err(io_err(out_dir))?;
    let gateway = Gateway::new(cfg.gateway.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.docqa.workers.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;

    let pages = load_pages(&cfg.inputs.docs)?;
    let seeds = load_seeds(&cfg.inputs.chart_seeds)?;
    let tables = load_tables(&cfg.inputs.tables)?;

    let (doc, (charts, table)) = pool.install(|| {
        let doc = run_docs(&pages, &cfg.docqa, &gateway);
        let built = build_charts(&seeds, &cfg.chart, seed, &gateway);
        let mut chart_failures = Vec::new();
        let mut items = Vec::new();
        for (name, r) in built {
            match r {
                Ok(item) => items.push(item),
                Err(e) => chart_failures.push(format!("{name}: {e}")),
            }
        }
        let mut chart = run_charts(&items, &cfg.chart, &gateway);
        chart.counts.items += chart_failures.len();
        chart.counts.failures.extend(chart_failures);
        let table = run_tables(&tables, &cfg.table, &gateway);
        (doc, ((chart, items), table))
    });
    let (chart, chart_items) = charts;

    let mut report = RunReport { command: "run".into(), seed, config_hash: cfg.hash(), ..Default::default() };
    let mut outputs = Vec::new();
    for item in &chart_items {
        write_text(&out_dir.join(&item.image_ref), &item.svg)?;
        outputs.push(item.image_ref.clone());
    }
    let mut all = Vec::new();
    for (name, stage) in [("doc", doc), ("chart", chart), ("table", table)] {
        let path = out_dir.join(format!("{name}.jsonl"));
        write_dataset(&stage.records, &path)?;
        outputs.extend([format!("{name}.jsonl"), format!("{name}.rejects.jsonl")]);
        report.pipelines.insert(name.to_string(), stage.counts);
        all.extend(stage.records);
    }
    let merged = merge_records(all)?;
    write_dataset(&merged, &out_dir.join("dataset.jsonl"))?;
    let manifest = compute_manifest(merged.iter().filter(|r| r.is_validated()));
    write_text(&out_dir.join("manifest.json"), &(manifest.to_json_pretty() + "\n"))?;
    outputs.extend(["dataset.jsonl".into(), "dataset.rejects.jsonl".into(), "manifest.json".into(), "report.json".into()]);

    report.outputs = outputs;
    report.token_usage = gateway.usage();
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    write_text(&out_dir.join("report.json"), &(report.to_json_pretty() + "\n"))?;
    Ok(report)
}
