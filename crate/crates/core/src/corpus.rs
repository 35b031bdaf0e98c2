//! Conversation records, JSONL persistence and dataset manifests.
//!
//! A dataset file holds one [`QaRecord`] per line. Records that failed a
//! generator's validation are written to a sibling `*.rejects.jsonl` file with
//! the same schema so generator quality can be audited later.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Human,
    Gpt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

impl Turn {
    pub fn human(text: impl Into<String>) -> Self {
        Self { role: Role::Human, text: text.into() }
    }

    pub fn gpt(text: impl Into<String>) -> Self {
        Self { role: Role::Gpt, text: text.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Doc,
    Chart,
    Table,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Doc, Category::Chart, Category::Table];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Doc => "doc",
            Category::Chart => "chart",
            Category::Table => "table",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Zh,
    En,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::Zh, Language::En];

    /// Any CJK ideograph in the text makes it Chinese.
    pub fn detect(text: &str) -> Language {
        if text.chars().any(is_cjk) {
            Language::Zh
        } else {
            Language::En
        }
    }
}

pub(crate) fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF | 0x3400..=0x4DBF | 0x20000..=0x2A6DF | 0xF900..=0xFAFF)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub rng_seed: u64,
    pub model: String,
    pub validated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRecord {
    pub id: String,
    pub image_ref: String,
    pub conversations: Vec<Turn>,
    pub category: Category,
    pub language: Language,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_type: Option<String>,
    pub provenance: Provenance,
}

impl QaRecord {
    /// Builds a single-turn record whose id is derived from its content.
    pub fn single_turn(
        image_ref: impl Into<String>,
        question: impl Into<String>,
        answer: impl Into<String>,
        category: Category,
        task_type: Option<String>,
        provenance: Provenance,
    ) -> Self {
        let image_ref = image_ref.into();
        let question = question.into();
        let answer = answer.into();
        let language = Language::detect(&format!("{question}{answer}"));
        Self {
            id: record_id(&image_ref, &question),
            image_ref,
            conversations: vec![Turn::human(question), Turn::gpt(answer)],
            category,
            language,
            task_type,
            provenance,
        }
    }

    pub fn question(&self) -> &str {
        self.conversations
            .iter()
            .find(|t| t.role == Role::Human)
            .map(|t| t.text.as_str())
            .unwrap_or("")
    }

    /// Text of the final gpt turn.
    pub fn answer(&self) -> &str {
        self.conversations
            .iter()
            .rev()
            .find(|t| t.role == Role::Gpt)
            .map(|t| t.text.as_str())
            .unwrap_or("")
    }

    pub fn is_validated(&self) -> bool {
        self.provenance.validated
    }

    pub fn reject(&mut self, reasons: &[String]) {
        self.provenance.validated = false;
        self.provenance.rejection_reason = Some(reasons.join("; "));
    }
}

/// Content hash of `(image_ref, first human turn)`.
pub fn record_id(image_ref: &str, first_question: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(image_ref.as_bytes());
    hasher.update([0u8]);
    hasher.update(first_question.as_bytes());
    hex::encode(&hasher.finalize()[..16])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyId,
    EmptyConversation,
    FirstRoleNotHuman,
    LastRoleNotGpt,
    NonAlternatingRoles,
    MissingRejectionReason,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Violation::EmptyId => "empty id",
            Violation::EmptyConversation => "empty conversation",
            Violation::FirstRoleNotHuman => "first role is not human",
            Violation::LastRoleNotGpt => "last role is not gpt",
            Violation::NonAlternatingRoles => "non-alternating roles",
            Violation::MissingRejectionReason => "rejected record without rejection_reason",
        })
    }
}

/// Returns every invariant the record violates. An empty list means the record is well formed.
pub fn validate_record(record: &QaRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if record.id.trim().is_empty() {
        out.push(Violation::EmptyId);
    }
    let turns = &record.conversations;
    if turns.is_empty() {
        out.push(Violation::EmptyConversation);
    } else {
        if turns[0].role != Role::Human {
            out.push(Violation::FirstRoleNotHuman);
        }
        if turns[turns.len() - 1].role != Role::Gpt {
            out.push(Violation::LastRoleNotGpt);
        }
        if turns.windows(2).any(|w| w[0].role == w[1].role) {
            out.push(Violation::NonAlternatingRoles);
        }
    }
    if !record.provenance.validated
        && record
            .provenance
            .rejection_reason
            .as_deref()
            .is_none_or(|r| r.trim().is_empty())
    {
        out.push(Violation::MissingRejectionReason);
    }
    out
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("record {id} is invalid: {violations}")]
    InvalidRecord { id: String, violations: String },
    #[error("duplicate record id {0}")]
    DuplicateId(String),
    #[error("id {0} appears with differing content")]
    ConflictingId(String),
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

fn check_records<'a>(records: impl IntoIterator<Item = &'a QaRecord>) -> Result<(), CorpusError> {
    let mut seen = HashSet::new();
    for r in records {
        let violations = validate_record(r);
        if !violations.is_empty() {
            let violations = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
            return Err(CorpusError::InvalidRecord { id: r.id.clone(), violations });
        }
        if !seen.insert(r.id.as_str()) {
            return Err(CorpusError::DuplicateId(r.id.clone()));
        }
    }
    Ok(())
}

/// Writes one record per line. Every record is checked before the file is touched.
pub fn write_jsonl(records: &[QaRecord], path: &Path) -> Result<usize, CorpusError> {
    check_records(records)?;
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("QaRecord serializes");
        w.write_all(line.as_bytes()).map_err(io_err(path))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(records.len())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<QaRecord>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| CorpusError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

/// `out/doc.jsonl` -> `out/doc.rejects.jsonl`.
pub fn rejects_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    path.with_file_name(format!("{stem}.rejects.jsonl"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitCounts {
    pub accepted: usize,
    pub rejected: usize,
}

/// Writes validated records to `path` and rejected ones to the sibling rejects file,
/// both sorted by id.
pub fn write_dataset(records: &[QaRecord], path: &Path) -> Result<SplitCounts, CorpusError> {
    let (mut accepted, mut rejected): (Vec<_>, Vec<_>) =
        records.iter().cloned().partition(QaRecord::is_validated);
    accepted.sort_by(|a, b| a.id.cmp(&b.id));
    rejected.sort_by(|a, b| a.id.cmp(&b.id));
    let accepted_n = write_jsonl(&accepted, path)?;
    let rejected_n = write_jsonl(&rejected, &rejects_path(path))?;
    Ok(SplitCounts { accepted: accepted_n, rejected: rejected_n })
}

/// Concatenates record sets, drops exact duplicates and sorts by id.
/// The same id carrying different content is an error.
pub fn merge_records(
    inputs: impl IntoIterator<Item = QaRecord>,
) -> Result<Vec<QaRecord>, CorpusError> {
    let mut by_id: BTreeMap<String, QaRecord> = BTreeMap::new();
    for r in inputs {
        match by_id.get(&r.id) {
            Some(existing) if existing == &r => {}
            Some(_) => return Err(CorpusError::ConflictingId(r.id)),
            None => {
                by_id.insert(r.id.clone(), r);
            }
        }
    }
    Ok(by_id.into_values().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestStats {
    pub total: usize,
    pub categories: BTreeMap<Category, usize>,
    pub languages: BTreeMap<Language, usize>,
    pub category_fractions: BTreeMap<Category, f64>,
    pub language_fractions: BTreeMap<Language, f64>,
}

impl ManifestStats {
    pub fn fraction(&self, category: Category) -> f64 {
        self.category_fractions.get(&category).copied().unwrap_or(0.0)
    }

    pub fn language_fraction(&self, language: Language) -> f64 {
        self.language_fractions.get(&language).copied().unwrap_or(0.0)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

pub fn compute_manifest<'a>(records: impl IntoIterator<Item = &'a QaRecord>) -> ManifestStats {
    let mut categories: BTreeMap<Category, usize> = Category::ALL.iter().map(|c| (*c, 0)).collect();
    let mut languages: BTreeMap<Language, usize> = Language::ALL.iter().map(|l| (*l, 0)).collect();
    for r in records {
        *categories.entry(r.category).or_default() += 1;
        *languages.entry(r.language).or_default() += 1;
    }
    manifest_from_counts(categories, languages)
}

/// Builds a manifest directly from counts.
pub fn manifest_from_counts(
    categories: BTreeMap<Category, usize>,
    languages: BTreeMap<Language, usize>,
) -> ManifestStats {
    let total: usize = categories.values().sum();
    let frac = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    ManifestStats {
        total,
        category_fractions: categories.iter().map(|(k, v)| (*k, frac(*v))).collect(),
        language_fractions: languages.iter().map(|(k, v)| (*k, frac(*v))).collect(),
        categories,
        languages,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            generator: "test".into(),
            rng_seed: 0,
            model: "none".into(),
            validated: true,
            rejection_reason: None,
        }
    }

    fn rec(i: usize, category: Category) -> QaRecord {
        QaRecord::single_turn(
            format!("img/{i}.png"),
            format!("问题 {i}"),
            format!("answer {i}"),
            category,
            None,
            prov(),
        )
    }

    #[test]
    fn empty_write_produces_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.jsonl");
        assert_eq!(write_jsonl(&[], &p).unwrap(), 0);
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "");
    }

    #[test]
    fn five_records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.jsonl");
        let records: Vec<_> = (0..5).map(|i| rec(i, Category::Doc)).collect();
        assert_eq!(write_jsonl(&records, &p).unwrap(), 5);
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(read_jsonl(&p).unwrap(), records);
    }

    #[test]
    fn gpt_first_record_names_its_id() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rec(0, Category::Doc);
        r.conversations.reverse();
        let err = write_jsonl(&[r.clone()], &dir.path().join("a.jsonl")).unwrap_err();
        assert!(err.to_string().contains(&r.id), "{err}");
    }

    #[test]
    fn violations_are_listed() {
        assert!(validate_record(&rec(0, Category::Doc)).is_empty());

        let mut r = rec(0, Category::Doc);
        r.conversations.clear();
        assert_eq!(validate_record(&r), vec![Violation::EmptyConversation]);
        assert_eq!(Violation::EmptyConversation.to_string(), "empty conversation");

        let mut r = rec(0, Category::Doc);
        r.conversations = vec![Turn::human("a"), Turn::human("b")];
        let v = validate_record(&r);
        assert!(v.contains(&Violation::NonAlternatingRoles));
        assert_eq!(Violation::NonAlternatingRoles.to_string(), "non-alternating roles");

        let mut r = rec(0, Category::Doc);
        r.provenance.validated = false;
        assert_eq!(validate_record(&r), vec![Violation::MissingRejectionReason]);
    }

    #[test]
    fn duplicate_ids_rejected_on_write() {
        let dir = tempfile::tempdir().unwrap();
        let r = rec(1, Category::Doc);
        let err = write_jsonl(&[r.clone(), r], &dir.path().join("a.jsonl")).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(_)));
    }

    #[test]
    fn manifest_reproduces_published_distribution() {
        let cats = BTreeMap::from([
            (Category::Doc, 288_000),
            (Category::Table, 26_000),
            (Category::Chart, 163_000),
        ]);
        let langs = BTreeMap::from([(Language::Zh, 314_000), (Language::En, 163_000)]);
        let m = manifest_from_counts(cats, langs);
        assert_eq!(m.total, 477_000);
        assert!((m.fraction(Category::Doc) - 0.6038).abs() < 1e-4);
        assert!((m.language_fraction(Language::Zh) - 0.6583).abs() < 1e-4);
    }

    #[test]
    fn single_chart_record_is_all_chart() {
        let m = compute_manifest(&[rec(0, Category::Chart)]);
        assert_eq!(m.fraction(Category::Chart), 1.0);
        assert_eq!(m.fraction(Category::Doc), 0.0);
    }

    #[test]
    fn merge_dedupes_and_rejects_conflicts() {
        let a = rec(1, Category::Doc);
        let b = rec(2, Category::Doc);
        let merged = merge_records(vec![b.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!(merged.len(), 2);
        assert!(merged[0].id < merged[1].id);

        let mut changed = a.clone();
        changed.conversations[1].text = "other".into();
        assert!(matches!(
            merge_records(vec![a, changed]),
            Err(CorpusError::ConflictingId(_))
        ));
    }

    #[test]
    fn language_detection() {
        assert_eq!(Language::detect("营业收入"), Language::Zh);
        assert_eq!(Language::detect("revenue 12%"), Language::En);
    }

    #[test]
    fn rejects_file_is_sibling() {
        assert_eq!(
            rejects_path(Path::new("out/doc.jsonl")),
            PathBuf::from("out/doc.rejects.jsonl")
        );
    }
}
