use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use docsynth::config::PipelineConfig;
use docsynth::corpus::read_jsonl;
use docsynth::docqa::REASON_NOT_GROUNDED;
use docsynth::pipeline::run_all;
use docsynth_fixtures::{doc_fixtures, table_fixtures, write_fixtures, RUN_SEED};

fn committed() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn committed_tree_matches_generator() {
    let tmp = tempfile::tempdir().unwrap();
    write_fixtures(tmp.path()).unwrap();
    let fresh = tree(tmp.path());
    let old = tree(&committed());
    assert_eq!(fresh.keys().collect::<Vec<_>>(), old.keys().collect::<Vec<_>>());
    for (path, bytes) in &fresh {
        assert!(old[path] == *bytes, "{} drifted; rerun gen-fixtures", path.display());
    }
}

#[test]
fn planted_answers_are_rejected() {
    let out = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::load(&committed().join("config.toml")).unwrap();
    let report = run_all(&cfg, out.path(), RUN_SEED).unwrap();
    assert_eq!(report.failed_items(), 0, "{:?}", report.pipelines);
    assert!(report.pipelines.values().all(|p| p.is_consistent()));

    let doc: Vec<_> = read_jsonl(&out.path().join("doc.jsonl"))
        .unwrap()
        .into_iter()
        .chain(read_jsonl(&out.path().join("doc.rejects.jsonl")).unwrap())
        .collect();
    assert_eq!(doc.len(), 50);
    let pages = doc_fixtures();
    let planted = pages.iter().flat_map(|p| &p.pairs).filter(|p| !p.grounded).count();
    assert!(planted >= 10);
    for page in &pages {
        for pair in &page.pairs {
            let r = doc.iter().find(|r| r.question() == pair.question).expect("record exists");
            let reason = r.provenance.rejection_reason.as_deref().unwrap_or("");
            assert_eq!(r.is_validated(), pair.grounded, "{}: {reason}", pair.question);
            if !pair.grounded {
                assert_eq!(reason, REASON_NOT_GROUNDED, "{}", pair.question);
            }
        }
    }

    let table: Vec<_> = read_jsonl(&out.path().join("table.jsonl"))
        .unwrap()
        .into_iter()
        .chain(read_jsonl(&out.path().join("table.rejects.jsonl")).unwrap())
        .collect();
    for t in table_fixtures() {
        for (q, _, _, ok) in t.pairs {
            let r = table.iter().find(|r| r.question() == *q).expect("record exists");
            assert_eq!(r.is_validated(), *ok, "{}: {:?}", q, r.provenance.rejection_reason);
        }
    }

    let chart = &report.pipelines["chart"];
    assert_eq!(chart.items, 18);
    assert!(chart.rejected_by_reason.get("wrong answer").copied().unwrap_or(0) >= 9, "{chart:?}");
    assert!(chart.rejected_by_reason.keys().any(|k| k.starts_with("task type not allowed")), "{chart:?}");
    assert!(chart.validated > chart.rejected);
}
