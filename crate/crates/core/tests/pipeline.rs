use std::fs;
use std::path::{Path, PathBuf};

use docsynth::config::PipelineConfig;
use docsynth::corpus::{read_jsonl, Category, CorpusError};
use docsynth::docqa::{doc_request, REASON_NOT_GROUNDED};
use docsynth::gateway::{wrap_in_fence, ReplayStore, TokenUsage};
use docsynth::layout::parse_layout;
use docsynth::pipeline::{assemble, load_pages, load_tables, run_all, PipelineError};
use docsynth::table::table_request;
use serde_json::{json, Value};

const PAGE: &str = r#"{"schema_version":1,"page_width":1000.0,"page_height":1400.0,"regions":[
{"kind":"printed_text","bbox":[50.0,50.0,950.0,200.0],"lines":[
{"text":"本次会议于三月五日在二号楼召开。","bbox":[60.0,60.0,600.0,90.0]},
{"text":"共有四十二名代表出席。","bbox":[60.0,100.0,500.0,130.0]}]},
{"kind":"table","bbox":[50.0,250.0,950.0,400.0],"lines":[
{"text":"议题 时长","bbox":[60.0,260.0,300.0,290.0]},
{"text":"预算审议 40分钟","bbox":[60.0,300.0,400.0,330.0]}]}]}"#;

const TABLE: &str = "<table><tr><th>部门</th><th>人数</th></tr><tr><td>研发</td><td>30</td></tr>\
<tr><td>销售</td><td>12</td></tr></table>";

const CONFIG: &str = "\
[inputs]
docs = \"docs\"
chart_seeds = \"charts\"
tables = \"tables\"

[gateway]
mode = \"replay\"
replay_store = \"replay\"
";

fn reply(items: Value) -> String {
    format!("好的。\n{}\n", wrap_in_fence(&items))
}

/// A one-page, one-table corpus with recorded model replies.
fn corpus(root: &Path) -> PipelineConfig {
    fs::create_dir_all(root.join("docs")).unwrap();
    fs::create_dir_all(root.join("charts")).unwrap();
    fs::create_dir_all(root.join("tables")).unwrap();
    fs::write(root.join("docs/meeting.json"), PAGE).unwrap();
    fs::write(root.join("tables/staff.html"), TABLE).unwrap();
    fs::write(root.join("config.toml"), CONFIG).unwrap();
    let cfg = PipelineConfig::load(&root.join("config.toml")).unwrap();
    let store = ReplayStore::create(&cfg.gateway.replay_store).unwrap();

    let (image_ref, doc) = load_pages(&cfg.inputs.docs).unwrap().remove(0);
    let text = reply(json!([
        {"human": "会议在哪一天召开？", "gpt": "三月五日", "region_type": "printed_text"},
        {"human": "会议在哪里召开？", "gpt": "二号楼", "region_type": "printed_text"},
        {"human": "有多少名代表出席？", "gpt": "四十二名", "region_type": "printed_text"},
        {"human": "预算审议用了多长时间？", "gpt": "40分钟", "region_type": "table"},
        {"human": "会议由谁主持？", "gpt": "王主任", "region_type": "printed_text"},
    ]));
    let req = doc_request(&image_ref, &doc, &cfg.docqa).unwrap();
    store.put(&req, &cfg.gateway.model, &text, TokenUsage::estimate(&req.user_text, &text)).unwrap();

    let (image_ref, html) = load_tables(&cfg.inputs.tables).unwrap().remove(0);
    let text = reply(json!([
        {"human": "研发部有多少人？", "gpt": "30", "task_type": "Factoid"},
        {"human": "两个部门共有多少人？", "gpt": "42", "task_type": "Computation"},
        {"human": "两个部门人数相差多少？", "gpt": "20", "task_type": "Computation"},
    ]));
    let req = table_request(&image_ref, &html, &cfg.table).unwrap();
    store.put(&req, &cfg.gateway.model, &text, TokenUsage::estimate(&req.user_text, &text)).unwrap();
    cfg
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn layout_fixture_parses() {
    assert_eq!(parse_layout(PAGE).unwrap().regions.len(), 2);
}

#[test]
fn run_all_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = corpus(tmp.path());
    let out = tmp.path().join("out");
    let report = run_all(&cfg, &out, 3).unwrap();
    assert_eq!(report.failed_items(), 0, "{:?}", report.pipelines);
    assert!(report.pipelines.values().all(|p| p.is_consistent()));

    let doc = &report.pipelines["doc"];
    assert_eq!((doc.generated, doc.validated, doc.rejected), (5, 4, 1));
    assert_eq!(doc.rejected_by_reason.get(REASON_NOT_GROUNDED), Some(&1));
    let table = &report.pipelines["table"];
    assert_eq!((table.generated, table.validated, table.rejected), (3, 2, 1));
    assert_eq!(report.pipelines["chart"].items, 0);

    for name in ["doc.jsonl", "doc.rejects.jsonl", "table.jsonl", "dataset.jsonl", "manifest.json", "report.json"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let dataset = read_jsonl(&out.join("dataset.jsonl")).unwrap();
    assert_eq!(dataset.len(), 6);
    assert!(dataset.windows(2).all(|w| w[0].id < w[1].id));
    let manifest: Value = serde_json::from_slice(&read(&out, "manifest.json")).unwrap();
    assert_eq!(manifest["total"], 6);
    assert!((manifest["category_fractions"]["doc"].as_f64().unwrap() - 4.0 / 6.0).abs() < 1e-12);
}

#[test]
fn run_all_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = corpus(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_all(&cfg, &a, 9).unwrap();
    run_all(&cfg, &b, 9).unwrap();
    for name in ["dataset.jsonl", "dataset.rejects.jsonl", "manifest.json"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
}

#[test]
fn replay_miss_is_an_item_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = corpus(tmp.path());
    fs::write(tmp.path().join("tables/extra.html"), "<table><tr><td>a</td></tr></table>").unwrap();
    let report = run_all(&cfg, &tmp.path().join("out"), 0).unwrap();
    let table = &report.pipelines["table"];
    assert_eq!(table.items, 2);
    assert_eq!(table.failures.len(), 1, "{table:?}");
    assert!(table.failures[0].contains("extra"), "{:?}", table.failures);
    assert_eq!(report.failed_items(), 1);
}

#[test]
fn assemble_dedups_and_rejects_conflicts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = corpus(tmp.path());
    let out = tmp.path().join("out");
    run_all(&cfg, &out, 0).unwrap();

    let doc: PathBuf = out.join("doc.jsonl");
    let merged = tmp.path().join("merged/all.jsonl");
    let manifest = tmp.path().join("merged/manifest.json");
    let stats = assemble(&[doc.clone(), doc.clone(), out.join("table.jsonl")], &merged, &manifest).unwrap();
    assert_eq!(stats.total, 6);
    assert_eq!(stats.categories[&Category::Doc], 4);
    assert_eq!(read(merged.parent().unwrap(), "manifest.json"), read(&out, "manifest.json"));

    let mut changed = read_jsonl(&doc).unwrap();
    changed[0].conversations[1].text.push('!');
    let edited = tmp.path().join("edited.jsonl");
    docsynth::corpus::write_jsonl(&changed, &edited).unwrap();
    let err = assemble(&[doc, edited], &merged, &manifest).unwrap_err();
    assert!(matches!(err, PipelineError::Corpus(CorpusError::ConflictingId(_))), "{err}");
}

#[test]
fn config_paths_rebase_onto_config_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = corpus(tmp.path());
    assert_eq!(cfg.inputs.docs, tmp.path().join("docs"));
    assert_eq!(cfg.gateway.replay_store, tmp.path().join("replay"));
}
