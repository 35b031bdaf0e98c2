//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails or runs over its time budget.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use docsynth::augment::{augment_question, AugmentError, PREFIX};
use docsynth::chart::{
    lint_layout, mutate_spec, preset_questions, render, verify_chart_answer, ChartSpec, DictionaryTranslator, Locale,
    MutationRoute, PresetIntent, TaskMatrix, TopicPool,
};
use docsynth::config::PipelineConfig;
use docsynth::corpus::{compute_manifest, manifest_from_counts, Category, Language, Provenance, QaRecord};
use docsynth::docqa::REASON_NOT_GROUNDED;
use docsynth::gateway::Gateway;
use docsynth::layout::splice_text;
use docsynth::mix::{empirical_synthetic_fraction, sample_epoch, solve_weights, SourceSpec};
use docsynth::pipeline::{load_pages, run_docs};
use docsynth::preprocess::{draw_threshold, smart_resize, token_count, ResizeMode, ResizePolicy};
use docsynth::table::{parse_html_table, verify_table_answer, TableGrid};
use docsynth::verdict::Verdict;
use docsynth_fixtures::{chart_seeds, doc_fixtures};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Golden OCR context prefix, kept separate from the library constant.
const GOLDEN_PREFIX: &str = "Use the image and the OCR result as context and answer the following question: ";

/// Relative tolerance of the oracles' numeric comparisons.
const TOL: f64 = 1e-6;

type Check = Result<String, String>;

type Criterion = (&'static str, u64, fn() -> Check);

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn prov() -> Provenance {
    Provenance { generator: "acceptance".into(), rng_seed: 0, model: String::new(), validated: true, rejection_reason: None }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(b.abs()) || (a - b).abs() <= 1e-12
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn manifest_math() -> Check {
    let counts = [(Category::Doc, 288usize), (Category::Chart, 163), (Category::Table, 26)];
    let total = 477.0;
    let records: Vec<QaRecord> = counts
        .iter()
        .flat_map(|(cat, n)| {
            (0..*n).map(move |i| {
                QaRecord::single_turn(format!("{cat}/{i}.png"), format!("问题{i}"), "答案", *cat, None, prov())
            })
        })
        .collect();
    let m = compute_manifest(&records);
    let direct = manifest_from_counts(counts.iter().copied().collect(), [(Language::Zh, 477), (Language::En, 0)].into());
    ensure(m == direct, || "record and count manifests differ".into())?;
    let shown = [(Category::Doc, 0.604), (Category::Chart, 0.342), (Category::Table, 0.055)];
    let mut parts = Vec::new();
    for ((cat, n), (_, rounded)) in counts.iter().zip(shown) {
        let f = m.fraction(*cat);
        let exact = *n as f64 / total;
        ensure((f - exact).abs() <= 1e-9, || format!("{cat}: {f} vs exact {exact}"))?;
        ensure((f - rounded).abs() < 5e-4, || format!("{cat}: {f} does not round to {rounded}"))?;
        parts.push(format!("{cat} {:.4}", f));
    }
    Ok(parts.join(", "))
}

fn doc_grounding() -> Check {
    let cfg = PipelineConfig::load(&fixtures_dir().join("config.toml")).map_err(|e| e.to_string())?;
    let pages = load_pages(&cfg.inputs.docs).map_err(|e| e.to_string())?;
    let gateway = Gateway::new(cfg.gateway.clone()).map_err(|e| e.to_string())?;
    let stage = run_docs(&pages, &cfg.docqa, &gateway);
    ensure(stage.counts.failures.is_empty(), || format!("item failures: {:?}", stage.counts.failures))?;
    ensure(stage.records.len() == 50, || format!("{} records, expected 50", stage.records.len()))?;

    let norm = &cfg.docqa.answer_normalization;
    let spliced: BTreeMap<&str, String> = pages.iter().map(|(r, d)| (r.as_str(), norm.apply(&splice_text(d)))).collect();
    let mut validated = 0;
    for r in stage.records.iter().filter(|r| r.is_validated()) {
        let key = norm.apply(r.answer());
        ensure(!key.is_empty() && spliced[r.image_ref.as_str()].contains(&key), || {
            format!("validated answer {:?} is not in the page text", r.answer())
        })?;
        validated += 1;
    }

    let planted: Vec<&str> =
        doc_fixtures().iter().flat_map(|p| p.pairs.iter()).filter(|p| !p.grounded).map(|p| p.question).collect();
    ensure(planted.len() >= 10, || format!("only {} planted answers", planted.len()))?;
    for q in &planted {
        let r = stage.records.iter().find(|r| r.question() == *q).ok_or_else(|| format!("no record for {q:?}"))?;
        let reason = r.provenance.rejection_reason.as_deref();
        ensure(!r.is_validated() && reason == Some(REASON_NOT_GROUNDED), || format!("{q:?}: {reason:?}"))?;
    }
    Ok(format!("{validated} validated grounded, {} planted rejected", planted.len()))
}

enum Truth {
    Number(f64),
    Label(String),
}

/// Brute-force answer to a preset intent, recomputed from the spec's series.
fn chart_truth(spec: &ChartSpec, intent: PresetIntent) -> Truth {
    let ys = |s: usize| spec.series[s].points.iter().map(|p| p.y).collect::<Vec<f64>>();
    match intent {
        PresetIntent::Lookup { series, category } => Truth::Number(spec.series[series].points[category].y),
        PresetIntent::ExtremeValue { series, max } => {
            let v = ys(series);
            let mut best = v[0];
            for y in &v[1..] {
                if (max && *y > best) || (!max && *y < best) {
                    best = *y;
                }
            }
            Truth::Number(best)
        }
        PresetIntent::ExtremeCategory { series, max } => {
            let pts = &spec.series[series].points;
            let mut best = 0;
            for i in 1..pts.len() {
                if (max && pts[i].y > pts[best].y) || (!max && pts[i].y < pts[best].y) {
                    best = i;
                }
            }
            Truth::Label(pts[best].x.clone())
        }
        PresetIntent::Sum { series } => Truth::Number(ys(series).iter().sum()),
        PresetIntent::Average { series } => {
            let v = ys(series);
            Truth::Number(v.iter().sum::<f64>() / v.len() as f64)
        }
        PresetIntent::CountCategories => Truth::Number(spec.categories().len() as f64),
        PresetIntent::CountSeries => Truth::Number(spec.series.len() as f64),
        PresetIntent::Compare { series, a, b, higher } => {
            let pts = &spec.series[series].points;
            let a_wins = if higher { pts[a].y > pts[b].y } else { pts[a].y < pts[b].y };
            Truth::Label(pts[if a_wins { a } else { b }].x.clone())
        }
    }
}

/// The true answer in two phrasings plus perturbed wrong ones.
fn chart_candidates(spec: &ChartSpec, truth: &Truth) -> Vec<String> {
    match truth {
        Truth::Number(v) => {
            let mut out = vec![format!("{v}"), format!("约为{v}")];
            out.extend([v + v.abs().max(1.0) * 0.1, v * 1.5 + 7.0, v - 1.0].map(|w| format!("{w}")));
            out
        }
        Truth::Label(l) => {
            let mut out = vec![l.clone()];
            out.extend(spec.categories().into_iter().find(|c| c != l).map(str::to_string));
            out
        }
    }
}

fn oracle_accepts(answer: &str, truth: &Truth) -> bool {
    match truth {
        Truth::Number(v) => {
            let digits: String = answer.chars().filter(|c| c.is_ascii_digit() || *c == '.' || *c == '-' || *c == 'e').collect();
            digits.parse::<f64>().is_ok_and(|a| close(a, *v))
        }
        Truth::Label(l) => answer == l,
    }
}

fn chart_oracle() -> Check {
    let seeds = chart_seeds();
    let translator = DictionaryTranslator::builtin();
    let topics = TopicPool::default();
    let matrix = TaskMatrix::default();
    let mut types = BTreeSet::new();
    let (mut checked, mut disagreements) = (0usize, Vec::new());
    for i in 0..200u64 {
        let seed = &seeds[i as usize % seeds.len()];
        let round = i / seeds.len() as u64;
        let locale = if round.is_multiple_of(2) { Locale::Zh } else { Locale::En };
        let route = MutationRoute::RuleBased { translator: &translator, locale };
        let rng_seed = round * 7919 + 11;
        let m = mutate_spec(seed, &topics, rng_seed, &route).map_err(|e| format!("{}: {e}", seed.id))?;
        types.insert(m.spec.chart_type);

        let svg = render(&m.spec, rng_seed).map_err(|e| format!("{}: {e}", seed.id))?;
        let again = render(&m.spec, rng_seed).map_err(|e| e.to_string())?;
        ensure(svg == again, || format!("{} seed {rng_seed}: render is not deterministic", seed.id))?;
        let diags = lint_layout(&m.spec, &svg);
        ensure(diags.is_empty(), || format!("{} seed {rng_seed}: {}", seed.id, diags[0]))?;

        for p in preset_questions(&m.spec, &m.table, &matrix) {
            let truth = chart_truth(&m.spec, p.intent);
            for answer in chart_candidates(&m.spec, &truth) {
                let rec = QaRecord::single_turn(
                    "c.svg",
                    p.question.clone(),
                    answer.clone(),
                    Category::Chart,
                    Some(p.task_type.as_str().to_string()),
                    prov(),
                );
                let verdict = verify_chart_answer(&rec, &m.table);
                let expect = oracle_accepts(&answer, &truth);
                checked += 1;
                let agree = match verdict {
                    Verdict::Verified => expect,
                    Verdict::Wrong { .. } => !expect,
                    Verdict::Unverifiable => false,
                };
                if !agree {
                    disagreements.push(format!("{} {:?} {answer:?}: {verdict:?}", seed.id, p.question));
                }
            }
        }
    }
    ensure(types.len() == 9, || format!("only {} chart types covered", types.len()))?;
    ensure(checked >= 1000, || format!("only {checked} answers checked"))?;
    ensure(disagreements.is_empty(), || format!("{} disagreements, first: {}", disagreements.len(), disagreements[0]))?;
    Ok(format!("200 specs, 9 types, {checked} answers, 0 disagreements"))
}

/// A table built from a dense grid, with the HTML that should expand back to it.
struct BuiltTable {
    html: String,
    texts: Vec<Vec<String>>,
    member: Vec<Vec<bool>>,
}

fn number_text(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.7) {
        rng.gen_range(0..500).to_string()
    } else {
        format!("{:.1}", rng.gen_range(0.0..100.0))
    }
}

fn build_table(rng: &mut ChaCha8Rng) -> BuiltTable {
    let rows = rng.gen_range(3..8);
    let cols = rng.gen_range(2..7);
    let mut texts = vec![vec![String::new(); cols]; rows];
    // Origin of the block covering each position and that block's size.
    let mut owner: Vec<Vec<Option<(usize, usize)>>> = vec![vec![None; cols]; rows];
    let mut size = BTreeMap::new();
    let mut place = |r: usize, c: usize, h: usize, w: usize, text: String, owner: &mut Vec<Vec<Option<(usize, usize)>>>| {
        if r + h > rows || c + w > cols || (r..r + h).any(|i| (c..c + w).any(|j| owner[i][j].is_some())) {
            return false;
        }
        for i in r..r + h {
            for j in c..c + w {
                owner[i][j] = Some((r, c));
                texts[i][j] = text.clone();
            }
        }
        size.insert((r, c), (h, w));
        true
    };
    if cols > 2 && rng.gen_bool(0.4) {
        let c = rng.gen_range(1..cols - 1);
        place(0, c, 1, 2, format!("分组{c}"), &mut owner);
    }
    for _ in 0..rng.gen_range(0..4) {
        let (r, c) = (rng.gen_range(1..rows), rng.gen_range(0..cols));
        let (h, w) = (rng.gen_range(1..4), rng.gen_range(1..3));
        let text = number_text(rng);
        place(r, c, h, w, text, &mut owner);
    }
    for r in 0..rows {
        for c in 0..cols {
            if owner[r][c].is_none() {
                let text = match (r, c) {
                    (0, _) => format!("列{}", char::from(b'A' + c as u8)),
                    (_, 0) => format!("项目{}", char::from(b'A' + r as u8)),
                    _ => number_text(rng),
                };
                place(r, c, 1, 1, text, &mut owner);
            }
        }
    }

    let mut html = String::from("<table>\n");
    for r in 0..rows {
        html.push_str("<tr>");
        let tag = if r == 0 { "th" } else { "td" };
        for c in 0..cols {
            if owner[r][c] != Some((r, c)) {
                continue;
            }
            let (h, w) = size[&(r, c)];
            html.push('<');
            html.push_str(tag);
            if h > 1 {
                html.push_str(&format!(" rowspan=\"{h}\""));
            }
            if w > 1 {
                html.push_str(&format!(" colspan=\"{w}\""));
            }
            html.push_str(&format!(">{}</{tag}>", texts[r][c]));
        }
        html.push_str("</tr>\n");
    }
    html.push_str("</table>\n");
    let member = (0..rows).map(|r| (0..cols).map(|c| owner[r][c] != Some((r, c))).collect()).collect();
    BuiltTable { html, texts, member }
}

/// Every sum, mean, min, max and pairwise gap over one row or column of
/// body numbers.
fn exhaustive_aggregates(texts: &[Vec<String>]) -> Vec<f64> {
    let num = |r: usize, c: usize| if r == 0 { None } else { texts[r][c].parse::<f64>().ok() };
    let (rows, cols) = (texts.len(), texts[0].len());
    let mut lines: Vec<Vec<f64>> = (0..rows).map(|r| (0..cols).filter_map(|c| num(r, c)).collect()).collect();
    lines.extend((0..cols).map(|c| (0..rows).filter_map(|r| num(r, c)).collect::<Vec<f64>>()));
    let mut out = Vec::new();
    for v in lines.iter().filter(|v| !v.is_empty()) {
        let sum: f64 = v.iter().sum();
        out.push(sum);
        out.push(sum / v.len() as f64);
        out.push(v.iter().copied().fold(f64::INFINITY, f64::min));
        out.push(v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                out.push((v[i] - v[j]).abs());
            }
        }
    }
    out
}

fn expansion_matches(grid: &TableGrid, t: &BuiltTable) -> Result<(), String> {
    let (rows, cols) = (t.texts.len(), t.texts[0].len());
    ensure(grid.n_rows == rows && grid.n_cols == cols, || {
        format!("{}x{} grid, expected {rows}x{cols}", grid.n_rows, grid.n_cols)
    })?;
    for r in 0..rows {
        for c in 0..cols {
            let cell = grid.cell(r, c);
            ensure(cell.text == t.texts[r][c] && cell.span_member == t.member[r][c] && cell.is_header == (r == 0), || {
                format!("cell ({r},{c}) is {cell:?}, expected {:?}", t.texts[r][c])
            })?;
        }
    }
    Ok(())
}

fn table_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut spans, mut checked, mut false_verified, mut missed) = (0usize, 0usize, Vec::new(), 0usize);
    for i in 0..100 {
        let t = build_table(&mut rng);
        spans += t.html.matches("span=").count();
        let grid = parse_html_table(&t.html).map_err(|e| format!("table {i}: {e}\n{}", t.html))?;
        expansion_matches(&grid, &t).map_err(|e| format!("table {i}: {e}\n{}", t.html))?;

        let aggs = exhaustive_aggregates(&t.texts);
        let cells: Vec<f64> = t.texts.iter().flatten().filter_map(|s| s.parse::<f64>().ok()).collect();
        let mut answers: Vec<f64> = aggs.iter().take(12).copied().collect();
        answers.extend(aggs.iter().take(6).map(|a| a + 0.37));
        answers.extend((0..20).map(|_| rng.gen_range(0..3000) as f64));
        answers.extend((0..10).map(|_| (rng.gen_range(0.0..1500.0f64) * 100.0).round() / 100.0));
        for v in answers {
            for task in ["Computation", "Factoid"] {
                let rec = QaRecord::single_turn("t.png", "问题", format!("{v}"), Category::Table, Some(task.into()), prov());
                let verdict = verify_table_answer(&rec, &grid);
                let in_aggs = aggs.iter().any(|a| close(*a, v));
                let truth = in_aggs || (task == "Factoid" && cells.iter().any(|c| close(*c, v)));
                checked += 1;
                if verdict == Verdict::Verified && !truth {
                    false_verified.push(format!("table {i} {task} {v}"));
                }
                if truth && verdict != Verdict::Verified {
                    missed += 1;
                }
            }
        }
    }
    ensure(spans >= 50, || format!("only {spans} span attributes generated"))?;
    ensure(false_verified.is_empty(), || format!("{} false verified, first: {}", false_verified.len(), false_verified[0]))?;
    ensure(missed == 0, || format!("{missed} true aggregates not verified"))?;
    Ok(format!("100 tables, {spans} spans, {checked} answers, 0 false verified"))
}

fn resize_math() -> Check {
    let policy = ResizePolicy::default();
    ensure(token_count(1680, 1204, &policy) == Ok(2580), || "token_count(1680, 1204) != 2580".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let (w, h, seed) = (rng.gen_range(1..=8000u32), rng.gen_range(1..=8000u32), rng.gen::<u64>());
        for mode in [ResizeMode::Train, ResizeMode::Infer] {
            let (w2, h2) = smart_resize(w, h, &policy, mode, seed).map_err(|e| e.to_string())?;
            ensure(w2 % 28 == 0 && h2 % 28 == 0 && w2 > 0 && h2 > 0, || {
                format!("{w}x{h} seed {seed} {mode:?} gave {w2}x{h2}")
            })?;
            if mode == ResizeMode::Train {
                let t = draw_threshold(&policy, seed);
                ensure(w2.max(h2) <= t, || format!("{w}x{h} seed {seed}: {w2}x{h2} exceeds threshold {t}"))?;
            }
        }
    }
    Ok("10000 triples aligned, train output within threshold, 1680x1204 is 2580 tokens".into())
}

fn mix_sampler() -> Check {
    let (public, synthetic) = (33_000u64, 4_770u64);
    let sources = vec![
        SourceSpec { name: "public".into(), size: public, is_synthetic: false, weight: None },
        SourceSpec { name: "synthetic".into(), size: synthetic, is_synthetic: true, weight: None },
    ];
    let plan = solve_weights(&sources, 0.2).map_err(|e| e.to_string())?;
    let r = plan.sources[1].weight;
    let closed = 0.2 * public as f64 / (0.8 * synthetic as f64);
    ensure((r - closed).abs() <= 1e-9, || format!("r = {r}, closed form {closed}"))?;
    ensure((r - 1.7296).abs() < 5e-5, || format!("r = {r}"))?;
    let mean = (0..10).map(|s| empirical_synthetic_fraction(&plan, &sample_epoch(&plan, s))).sum::<f64>() / 10.0;
    ensure((mean - 0.2).abs() <= 0.005, || format!("10-seed mean {mean}"))?;
    let natural = synthetic as f64 / (public + synthetic) as f64;
    let unit = solve_weights(&sources, natural).map_err(|e| e.to_string())?.sources[1].weight;
    ensure(unit == 1.0, || format!("natural fraction gave r = {unit}"))?;
    Ok(format!("r = {r:.6}, 10-seed mean {mean:.5}, natural fraction {natural:.4} gives r = 1"))
}

fn ocr_augment() -> Check {
    ensure(PREFIX.as_bytes() == GOLDEN_PREFIX.as_bytes(), || format!("prefix is {PREFIX:?}"))?;
    let once = augment_question("图中2023年的收入是多少？", "2023年 收入 120万元").map_err(|e| e.to_string())?;
    ensure(once.starts_with(GOLDEN_PREFIX), || "augmented text lacks the prefix".into())?;
    ensure(once.ends_with("图中2023年的收入是多少？"), || "question is not last".into())?;
    let twice = augment_question(&once, "2023年 收入 120万元");
    ensure(matches!(twice, Err(AugmentError::AlreadyAugmented)), || format!("double augmentation gave {twice:?}"))?;
    Ok("prefix byte-identical, double augmentation refused".into())
}

fn run_once(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_docsynth"))
        .arg("--config")
        .arg(fixtures_dir().join("config.toml"))
        .args(["run", "--seed", "0", "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("run exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr))
    })
}

fn replay_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_once(&a)?;
    run_once(&b)?;
    let files = ["dataset.jsonl", "dataset.rejects.jsonl", "manifest.json"];
    let mut bytes = 0;
    for f in files {
        let (x, y) = (fs::read(a.join(f)).map_err(|e| format!("{f}: {e}"))?, fs::read(b.join(f)).map_err(|e| e.to_string())?);
        ensure(!x.is_empty() && x == y, || format!("{f} differs between runs"))?;
        bytes += x.len();
    }
    Ok(format!("{} files, {bytes} bytes identical", files.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("manifest-math", 1, manifest_math),
        ("doc-grounding", 5, doc_grounding),
        ("chart-oracle", 30, chart_oracle),
        ("table-oracle", 10, table_oracle),
        ("resize-math", 5, resize_math),
        ("mix-sampler", 20, mix_sampler),
        ("ocr-augment", 1, ocr_augment),
        ("replay-determinism", 60, replay_determinism),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let over = took > Duration::from_secs(budget);
        let (tag, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over the {budget} s budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} {name} ({:.3} s, budget {budget} s): {detail}", took.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
