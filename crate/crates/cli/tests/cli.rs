use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn docsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docsynth"))
        .args(args)
        .env_remove("DOCSYNTH_MODE")
        .env_remove("DOCSYNTH_ENDPOINT")
        .env_remove("DOCSYNTH_MODEL")
        .env_remove("DOCSYNTH_REPLAY_STORE")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_config_key_exits_2_with_its_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[preprocess]\npatch = 14\n").unwrap();
    let out = docsynth(&["--config", path(&cfg), "run", "--out", path(&tmp.path().join("out"))]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("preprocess.patch"), "{}", stderr(&out));
}

#[test]
fn missing_config_exits_2() {
    let out = docsynth(&["--config", "/nonexistent/docsynth.toml", "run", "--out", "/tmp/unused"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_size_exits_2() {
    let out = docsynth(&["preprocess", "12x"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn preprocess_reports_aligned_targets() {
    let out = docsynth(&["preprocess", "1680x1204", "300x200", "--mode", "infer", "--seed", "1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lines: Vec<Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        let (w, h) = (l["target_width"].as_u64().unwrap(), l["target_height"].as_u64().unwrap());
        assert_eq!((w % 28, h % 28), (0, 0));
        assert_eq!(l["tokens"].as_u64().unwrap(), (w / 28) * (h / 28));
    }
    assert_eq!(lines[1]["resolution"], "low");
}

#[test]
fn augment_prints_prefixed_question() {
    let tmp = tempfile::tempdir().unwrap();
    let ocr = tmp.path().join("ocr.txt");
    fs::write(&ocr, "总计 120\n").unwrap();
    let out = docsynth(&["augment", "--question", "总计是多少？", "--ocr-file", path(&ocr)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("Use the image and the OCR result as context and answer the following question: \n```\n总计 120\n```\n"));
    assert!(text.trim_end().ends_with("总计是多少？"));
}

#[test]
fn stage_then_validate_then_assemble() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("config.toml");
    let tables = tmp.path().join("table.jsonl");
    let out = docsynth(&["--config", path(&cfg), "gen-table", "--out", path(&tables)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(tmp.path().join("table.report.json").is_file());

    let out = docsynth(&["validate", path(&tables)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let merged = tmp.path().join("merged.jsonl");
    let out = docsynth(&["assemble", path(&tables), path(&tables), "--out", path(&merged)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest: Value = serde_json::from_slice(&fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["category_fractions"]["table"], 1.0);
    assert_eq!(fs::read(&merged).unwrap(), fs::read(&tables).unwrap());
}

#[test]
fn invalid_record_file_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\":\"x\"}\n").unwrap();
    let out = docsynth(&["validate", path(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("bad.jsonl:1"), "{}", stderr(&out));
}

#[test]
fn sample_writes_requested_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.json");
    fs::write(
        &plan,
        r#"{"target_synthetic_fraction": 0.5, "sources": [
            {"name": "public", "size": 300, "is_synthetic": false},
            {"name": "synthetic", "size": 100, "is_synthetic": true}]}"#,
    )
    .unwrap();
    let stream = tmp.path().join("stream.jsonl");
    let out = docsynth(&["sample", "--plan", path(&plan), "--seed", "4", "--out", path(&stream)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&stream).unwrap();
    let synthetic = text.lines().filter(|l| l.contains("\"synthetic\"")).count();
    let total = text.lines().count();
    assert!((synthetic as f64 / total as f64 - 0.5).abs() < 0.05, "{synthetic}/{total}");
}
