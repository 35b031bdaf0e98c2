//! `docsynth`: one binary for every pipeline stage.
//!
//! Exit codes: 0 success, 1 pipeline error, 2 configuration or usage error.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use docsynth::augment::{augment_question, should_augment, AugmentPolicy};
use docsynth::chart::load_seeds;
use docsynth::config::{ChartRouteKind, PipelineConfig};
use docsynth::corpus::{read_jsonl, validate_record, write_dataset};
use docsynth::gateway::Gateway;
use docsynth::mix::{
    empirical_fractions, empirical_synthetic_fraction, expected_synthetic_fraction, sample_epoch, solve_weights,
    write_stream_jsonl, MixRequest,
};
use docsynth::pipeline::{assemble, build_charts, load_pages, load_tables, run_all, run_charts, run_docs, run_tables, Stage};
use docsynth::preprocess::{classify_resolution, smart_resize, token_count, ResizeMode};
use docsynth::report::RunReport;
use serde_json::json;

#[derive(Parser)]
#[command(name = "docsynth", version, about = "Document QA training-data synthesis")]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Via {
    Rule,
    Llm,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Train,
    Infer,
}

#[derive(Subcommand)]
enum Command {
    /// Generate QA for OCR layout pages.
    GenDoc {
        /// Directory of layout JSON files; overrides `inputs.docs`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output JSONL; rejects go to the `.rejects.jsonl` sibling.
        #[arg(long)]
        out: PathBuf,
    },
    /// Mutate chart seeds, render them and generate QA.
    GenChart {
        #[arg(long)]
        seeds: Option<PathBuf>,
        /// Extra comma-separated topics for the topic pool.
        #[arg(long, value_delimiter = ',')]
        topics: Vec<String>,
        /// Variants per seed.
        #[arg(long)]
        count: Option<u32>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        via: Option<Via>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate QA for HTML tables.
    GenTable {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check every record in JSONL files against the record invariants.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Merge JSONL files into one id-sorted dataset with a manifest.
    Assemble {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Manifest path; defaults to `manifest.json` beside `--out`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Solve mix weights and write one shuffled epoch as JSONL.
    Sample {
        /// JSON file with `target_synthetic_fraction` and `sources`; the
        /// `[mix]` config section is used when omitted.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print patch-aligned target sizes as JSON lines.
    Preprocess {
        /// `WxH` sizes, e.g. `1680x1204`.
        #[arg(required = true)]
        sizes: Vec<String>,
        #[arg(long, value_enum, default_value = "infer")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Prefix a question with its OCR text when the policy allows.
    Augment {
        #[arg(long)]
        question: String,
        #[arg(long)]
        ocr_file: PathBuf,
        /// Mean OCR confidence in [0, 1].
        #[arg(long, default_value_t = 1.0)]
        confidence: f64,
        /// Augment regardless of length and confidence.
        #[arg(long)]
        force: bool,
    },
    /// Run all generators and write the dataset, manifest and report.
    Run {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Config(String),
    Pipeline(String),
}

impl Failure {
    fn pipeline(e: impl std::fmt::Display) -> Self {
        Failure::Pipeline(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    cfg.apply_env(|k| std::env::var(k).ok()).map_err(|e| Failure::Config(e.to_string()))?;
    cfg.check().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn write_report(path: &Path, report: &RunReport) -> Outcome {
    fs::write(path, report.to_json_pretty() + "\n").map_err(|e| Failure::pipeline(format!("{}: {e}", path.display())))
}

/// Writes `stage` to `out` and a report beside it; fails when any item failed.
fn finish_stage(command: &str, name: &str, stage: Stage, out: &Path, cfg: &PipelineConfig, gateway: &Gateway, started: Instant) -> Outcome {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(Failure::pipeline)?;
    }
    write_dataset(&stage.records, out).map_err(Failure::pipeline)?;
    let failures = stage.counts.failures.clone();
    let mut report = RunReport { command: command.into(), config_hash: cfg.hash(), ..Default::default() };
    report.pipelines.insert(name.into(), stage.counts);
    report.token_usage = gateway.usage();
    report.outputs = vec![out.display().to_string()];
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    write_report(&out.with_extension("report.json"), &report)?;
    println!("{}", serde_json::to_string(&report.pipelines[name]).expect("counts serialize"));
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Pipeline(failures.join("\n")))
    }
}

fn gateway(cfg: &PipelineConfig) -> Result<Gateway, Failure> {
    Gateway::new(cfg.gateway.clone()).map_err(Failure::pipeline)
}

fn parse_size(s: &str) -> Result<(u32, u32), Failure> {
    let bad = || Failure::Config(format!("size {s:?} is not WxH"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
}

fn execute(cli: Cli) -> Outcome {
    let started = Instant::now();
    let cfg_path = cli.config.as_deref();
    match cli.command {
        Command::GenDoc { input, out } => {
            let cfg = load_config(cfg_path)?;
            let pages = load_pages(input.as_deref().unwrap_or(&cfg.inputs.docs)).map_err(Failure::pipeline)?;
            let gw = gateway(&cfg)?;
            let stage = run_docs(&pages, &cfg.docqa, &gw);
            finish_stage("gen-doc", "doc", stage, &out, &cfg, &gw, started)
        }
        Command::GenTable { input, out } => {
            let cfg = load_config(cfg_path)?;
            let tables = load_tables(input.as_deref().unwrap_or(&cfg.inputs.tables)).map_err(Failure::pipeline)?;
            let gw = gateway(&cfg)?;
            let stage = run_tables(&tables, &cfg.table, &gw);
            finish_stage("gen-table", "table", stage, &out, &cfg, &gw, started)
        }
        Command::GenChart { seeds, topics, count, out, via, seed } => {
            let mut cfg = load_config(cfg_path)?;
            cfg.chart.extra_topics.extend(topics);
            if let Some(n) = count {
                cfg.chart.variants_per_seed = n.max(1);
            }
            if let Some(v) = via {
                cfg.chart.route = match v {
                    Via::Rule => ChartRouteKind::Rule,
                    Via::Llm => ChartRouteKind::Llm,
                };
            }
            let seeds = load_seeds(seeds.as_deref().unwrap_or(&cfg.inputs.chart_seeds)).map_err(Failure::pipeline)?;
            let gw = gateway(&cfg)?;
            let charts_dir = out.join("charts");
            fs::create_dir_all(&charts_dir).map_err(Failure::pipeline)?;
            let mut items = Vec::new();
            let mut failures = Vec::new();
            for (name, r) in build_charts(&seeds, &cfg.chart, seed, &gw) {
                match r {
                    Ok(item) => items.push(item),
                    Err(e) => failures.push(format!("{name}: {e}")),
                }
            }
            for item in &items {
                let base = out.join(&item.image_ref);
                fs::write(&base, &item.svg).map_err(Failure::pipeline)?;
                fs::write(base.with_extension("spec.json"), item.mutation.spec.to_json() + "\n").map_err(Failure::pipeline)?;
                fs::write(base.with_extension("csv"), item.mutation.table.to_csv()).map_err(Failure::pipeline)?;
            }
            let mut stage = run_charts(&items, &cfg.chart, &gw);
            stage.counts.items += failures.len();
            stage.counts.failures.extend(failures);
            finish_stage("gen-chart", "chart", stage, &out.join("chart.jsonl"), &cfg, &gw, started)
        }
        Command::Validate { files } => {
            let mut bad = 0usize;
            let mut total = 0usize;
            for f in &files {
                for r in read_jsonl(f).map_err(Failure::pipeline)? {
                    total += 1;
                    let v = validate_record(&r);
                    if !v.is_empty() {
                        bad += 1;
                        let list: Vec<String> = v.iter().map(ToString::to_string).collect();
                        eprintln!("{}: {}: {}", f.display(), r.id, list.join(", "));
                    }
                }
            }
            println!("{}", json!({"records": total, "invalid": bad}));
            if bad == 0 {
                Ok(())
            } else {
                Err(Failure::Pipeline(format!("{bad} invalid records")))
            }
        }
        Command::Assemble { inputs, out, manifest } => {
            let manifest = manifest.unwrap_or_else(|| out.with_file_name("manifest.json"));
            let stats = assemble(&inputs, &out, &manifest).map_err(Failure::pipeline)?;
            println!("{}", serde_json::to_string(&stats).expect("manifest serializes"));
            Ok(())
        }
        Command::Sample { plan, seed, out } => {
            let request = match plan {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
                    let de = &mut serde_json::Deserializer::from_str(&text);
                    serde_path_to_error::deserialize::<_, MixRequest>(de)
                        .map_err(|e| Failure::Config(format!("{}: {}: {}", p.display(), e.path(), e.inner())))?
                }
                None => {
                    let cfg = load_config(cfg_path)?;
                    MixRequest { target_synthetic_fraction: cfg.mix.target_synthetic_fraction, sources: cfg.mix.sources }
                }
            };
            let mix = solve_weights(&request.sources, request.target_synthetic_fraction)
                .map_err(|e| Failure::Config(e.to_string()))?;
            let stream = sample_epoch(&mix, seed);
            let file = fs::File::create(&out).map_err(|e| Failure::pipeline(format!("{}: {e}", out.display())))?;
            let mut w = BufWriter::new(file);
            write_stream_jsonl(&mix, &stream, &mut w).map_err(Failure::pipeline)?;
            w.flush().map_err(Failure::pipeline)?;
            let summary = json!({
                "plan": mix,
                "expected_synthetic_fraction": expected_synthetic_fraction(&mix),
                "empirical_synthetic_fraction": empirical_synthetic_fraction(&mix, &stream),
                "empirical_fractions": empirical_fractions(&mix, &stream),
                "records": stream.len(),
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(())
        }
        Command::Preprocess { sizes, mode, seed } => {
            let cfg = load_config(cfg_path)?;
            let mode = match mode {
                ModeArg::Train => ResizeMode::Train,
                ModeArg::Infer => ResizeMode::Infer,
            };
            for s in &sizes {
                let (w, h) = parse_size(s)?;
                let (ow, oh) = smart_resize(w, h, &cfg.preprocess, mode, seed).map_err(Failure::pipeline)?;
                let tokens = token_count(ow, oh, &cfg.preprocess).map_err(Failure::pipeline)?;
                println!(
                    "{}",
                    json!({"width": w, "height": h, "resolution": classify_resolution(w, h, &cfg.preprocess),
                           "target_width": ow, "target_height": oh, "tokens": tokens})
                );
            }
            Ok(())
        }
        Command::Augment { question, ocr_file, confidence, force } => {
            let cfg = load_config(cfg_path)?;
            let ocr = fs::read_to_string(&ocr_file).map_err(|e| Failure::pipeline(format!("{}: {e}", ocr_file.display())))?;
            let ocr = ocr.trim_end_matches(['\n', '\r']);
            let policy = AugmentPolicy { always: cfg.augment.always || force, ..cfg.augment };
            if should_augment(ocr, confidence, &policy) {
                println!("{}", augment_question(&question, ocr).map_err(Failure::pipeline)?);
            } else {
                println!("{question}");
            }
            Ok(())
        }
        Command::Run { out, seed } => {
            let cfg = load_config(cfg_path)?;
            let report = run_all(&cfg, &out, seed).map_err(Failure::pipeline)?;
            for (name, counts) in &report.pipelines {
                println!(
                    "{name}: {} generated, {} validated, {} rejected, {} failed items",
                    counts.generated,
                    counts.validated,
                    counts.rejected,
                    counts.failures.len()
                );
            }
            match report.failed_items() {
                0 => Ok(()),
                n => Err(Failure::Pipeline(format!("{n} items failed; see {}", out.join("report.json").display()))),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Pipeline(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
