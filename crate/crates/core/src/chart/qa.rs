use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{verify_chart_answer, ChartData, ChartError, ChartSpec, ChartType, DataTable, Locale, TableLayout};
use crate::corpus::{Category, Provenance, QaRecord};
use crate::gateway::{extract_json_fence, ChatRequest, Gateway, DEFAULT_MAX_OUTPUT_TOKENS, DEFAULT_TEMPERATURE};
use crate::normalize::{find_mentions, format_number};
use crate::pairs::parse_pairs;
use crate::prompts::{fill, CHART_QA};

pub const GENERATOR: &str = "chart";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartTaskType {
    ValueLookup,
    ExtremumMax,
    ExtremumMin,
    Sum,
    Average,
    Count,
    Comparison,
    Trend,
    Proportion,
    Distribution,
    Correlation,
    Explanation,
}

impl ChartTaskType {
    pub const ALL: [ChartTaskType; 12] = [
        ChartTaskType::ValueLookup,
        ChartTaskType::ExtremumMax,
        ChartTaskType::ExtremumMin,
        ChartTaskType::Sum,
        ChartTaskType::Average,
        ChartTaskType::Count,
        ChartTaskType::Comparison,
        ChartTaskType::Trend,
        ChartTaskType::Proportion,
        ChartTaskType::Distribution,
        ChartTaskType::Correlation,
        ChartTaskType::Explanation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChartTaskType::ValueLookup => "value_lookup",
            ChartTaskType::ExtremumMax => "extremum_max",
            ChartTaskType::ExtremumMin => "extremum_min",
            ChartTaskType::Sum => "sum",
            ChartTaskType::Average => "average",
            ChartTaskType::Count => "count",
            ChartTaskType::Comparison => "comparison",
            ChartTaskType::Trend => "trend",
            ChartTaskType::Proportion => "proportion",
            ChartTaskType::Distribution => "distribution",
            ChartTaskType::Correlation => "correlation",
            ChartTaskType::Explanation => "explanation",
        }
    }

    /// Whether a ground-truth answer can be recomputed from the data table.
    pub fn verifiable(self) -> bool {
        matches!(
            self,
            ChartTaskType::ValueLookup
                | ChartTaskType::ExtremumMax
                | ChartTaskType::ExtremumMin
                | ChartTaskType::Sum
                | ChartTaskType::Average
                | ChartTaskType::Count
                | ChartTaskType::Comparison
        )
    }
}

impl fmt::Display for ChartTaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChartTaskType {
    type Err = ChartError;

    fn from_str(s: &str) -> Result<Self, ChartError> {
        let key: String =
            s.trim().to_lowercase().chars().filter(|c| !matches!(c, ' ' | '_' | '-' | '/')).collect();
        let t = match key.as_str() {
            "valuelookup" | "lookup" | "value" | "retrieval" | "数值查询" | "数值检索" => ChartTaskType::ValueLookup,
            "extremummax" | "max" | "maximum" | "最大值" => ChartTaskType::ExtremumMax,
            "extremummin" | "min" | "minimum" | "最小值" => ChartTaskType::ExtremumMin,
            "sum" | "total" | "求和" | "总和" => ChartTaskType::Sum,
            "average" | "mean" | "avg" | "平均值" => ChartTaskType::Average,
            "count" | "counting" | "计数" => ChartTaskType::Count,
            "comparison" | "compare" | "比较" | "对比" => ChartTaskType::Comparison,
            "trend" | "趋势" => ChartTaskType::Trend,
            "proportion" | "percentage" | "share" | "占比" => ChartTaskType::Proportion,
            "distribution" | "分布" => ChartTaskType::Distribution,
            "correlation" | "相关性" => ChartTaskType::Correlation,
            "explanation" | "explain" | "reasoning" | "description" | "解释" => ChartTaskType::Explanation,
            _ => return Err(ChartError::InvalidSpec(format!("unknown chart task type {s:?}"))),
        };
        Ok(t)
    }
}

/// Allowed task types per chart type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskMatrix(pub BTreeMap<ChartType, Vec<ChartTaskType>>);

impl Default for TaskMatrix {
    fn default() -> Self {
        use ChartTaskType::*;
        let rows: [(ChartType, &[ChartTaskType]); 9] = [
            (ChartType::Bar, &[ValueLookup, ExtremumMax, ExtremumMin, Sum, Average, Count, Comparison, Explanation]),
            (ChartType::StackedBar, &[ValueLookup, ExtremumMax, ExtremumMin, Sum, Comparison, Proportion, Explanation]),
            (ChartType::Line, &[ValueLookup, ExtremumMax, ExtremumMin, Average, Comparison, Trend, Explanation]),
            (ChartType::Area, &[ValueLookup, ExtremumMax, ExtremumMin, Sum, Average, Trend]),
            (ChartType::Pie, &[ValueLookup, ExtremumMax, ExtremumMin, Count, Comparison, Proportion]),
            (ChartType::Scatter, &[ExtremumMax, ExtremumMin, Count, Correlation, Distribution]),
            (ChartType::Histogram, &[ValueLookup, ExtremumMax, ExtremumMin, Sum, Count, Distribution]),
            (ChartType::Box, &[ExtremumMax, ExtremumMin, Comparison, Distribution, Explanation]),
            (ChartType::Heatmap, &[ValueLookup, ExtremumMax, ExtremumMin, Average, Comparison, Explanation]),
        ];
        TaskMatrix(rows.into_iter().map(|(t, tasks)| (t, tasks.to_vec())).collect())
    }
}

impl TaskMatrix {
    pub fn check(&self) -> Result<(), ChartError> {
        for t in ChartType::ALL {
            if self.0.get(&t).is_none_or(|v| v.is_empty()) {
                return Err(ChartError::EmptyTaskList(t));
            }
        }
        Ok(())
    }

    pub fn allowed(&self, t: ChartType) -> Result<&[ChartTaskType], ChartError> {
        match self.0.get(&t) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(ChartError::EmptyTaskList(t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartQaConfig {
    pub min_pairs: usize,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for ChartQaConfig {
    fn default() -> Self {
        Self { min_pairs: 3, temperature: DEFAULT_TEMPERATURE, max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS }
    }
}

pub fn default_chart_output_template() -> Value {
    json!([
        {"human": "哪个月份的销售额最高？", "gpt": "三月", "task_type": "extremum_max"},
        {"human": "二月的销售额是多少？", "gpt": "120万元", "task_type": "value_lookup"}
    ])
}

pub fn chart_qa_prompt(spec: &ChartSpec, table: &DataTable, tasks: &[ChartTaskType]) -> Result<String, ChartError> {
    if tasks.is_empty() {
        return Err(ChartError::EmptyTaskList(spec.chart_type));
    }
    let names: Vec<&str> = tasks.iter().map(|t| t.as_str()).collect();
    let template = serde_json::to_string(&default_chart_output_template()).expect("static json");
    Ok(fill(
        CHART_QA,
        &[
            ("chart_type", spec.chart_type.prose_name()),
            ("code", &spec.to_json()),
            ("table_data", &table.to_csv()),
            ("task_types", &names.join(", ")),
            ("template", &template),
        ],
    )?)
}

pub fn chart_qa_request(
    image_ref: &str,
    spec: &ChartSpec,
    table: &DataTable,
    matrix: &TaskMatrix,
    cfg: &ChartQaConfig,
) -> Result<ChatRequest, ChartError> {
    let prompt = chart_qa_prompt(spec, table, matrix.allowed(spec.chart_type)?)?;
    let mut req = ChatRequest::new(format!("chart-qa:{image_ref}"), prompt);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    Ok(req)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartQaBatch {
    pub image_ref: String,
    /// Validated and rejected records, sorted by id.
    pub records: Vec<QaRecord>,
    pub under_filled: bool,
    pub malformed_items: usize,
    pub duplicate_items: usize,
}

/// Checks one record's task type against the matrix and its answer against the table.
fn judge(record: &mut QaRecord, chart_type: ChartType, allowed: &[ChartTaskType], table: &DataTable) {
    let reason = match record.task_type.as_deref().map(|t| (t, t.parse::<ChartTaskType>())) {
        None => Some("missing task type".to_string()),
        Some((_, Err(_))) => Some("unknown task type".to_string()),
        Some((_, Ok(t))) if !allowed.contains(&t) => Some(format!("task type not allowed for {chart_type}: {t}")),
        Some((_, Ok(t))) => {
            record.task_type = Some(t.as_str().to_string());
            verify_chart_answer(record, table).rejection()
        }
    };
    if let Some(r) = reason {
        record.reject(&[r]);
    }
}

/// Generates chart QA through the gateway and checks every pair.
pub fn gen_chart_qa(
    image_ref: &str,
    spec: &ChartSpec,
    table: &DataTable,
    matrix: &TaskMatrix,
    gateway: &Gateway,
    cfg: &ChartQaConfig,
    rng_seed: u64,
) -> Result<ChartQaBatch, ChartError> {
    let allowed = matrix.allowed(spec.chart_type)?;
    let req = chart_qa_request(image_ref, spec, table, matrix, cfg)?;
    let completion = gateway.complete(&req)?;
    let (pairs, malformed_items) = parse_pairs(&extract_json_fence(&completion.text)?);
    let mut seen = HashSet::new();
    let mut duplicate_items = 0;
    let mut records = Vec::new();
    for pair in pairs {
        let provenance = Provenance {
            generator: GENERATOR.into(),
            rng_seed,
            model: gateway.model().to_string(),
            validated: true,
            rejection_reason: None,
        };
        let mut record =
            QaRecord::single_turn(image_ref, pair.question, pair.answer, Category::Chart, pair.task_type, provenance);
        if !seen.insert(record.id.clone()) {
            duplicate_items += 1;
            continue;
        }
        judge(&mut record, spec.chart_type, allowed, table);
        records.push(record);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let validated = records.iter().filter(|r| r.is_validated()).count();
    Ok(ChartQaBatch {
        image_ref: image_ref.to_string(),
        records,
        under_filled: validated < cfg.min_pairs,
        malformed_items,
        duplicate_items,
    })
}

/// What a preset question asks, in terms of spec indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PresetIntent {
    Lookup { series: usize, category: usize },
    /// Category with the extreme value of one series.
    ExtremeCategory { series: usize, max: bool },
    ExtremeValue { series: usize, max: bool },
    Sum { series: usize },
    Average { series: usize },
    CountCategories,
    CountSeries,
    Compare { series: usize, a: usize, b: usize, higher: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetQa {
    pub question: String,
    pub answer: String,
    pub task_type: ChartTaskType,
    pub intent: PresetIntent,
}

struct Phrases {
    lookup: fn(&str, &str) -> String,
    extreme_cat: fn(&str, &str, bool) -> String,
    extreme_val: fn(&str, bool) -> String,
    sum: fn(&str) -> String,
    average: fn(&str) -> String,
    count_cats: fn(&str) -> String,
    count_series: &'static str,
    compare: fn(&str, &str, &str, bool) -> String,
    default_axis: &'static str,
}

const ZH: Phrases = Phrases {
    lookup: |c, s| format!("{c}的{s}是多少？"),
    extreme_cat: |x, s, max| format!("哪个{x}的{s}{}？", if max { "最高" } else { "最低" }),
    extreme_val: |s, max| format!("{s}的{}是多少？", if max { "最大值" } else { "最小值" }),
    sum: |s| format!("{s}的总和是多少？"),
    average: |s| format!("{s}的平均值是多少？"),
    count_cats: |x| format!("图中共有多少个{x}？"),
    count_series: "图中共有多少个数据系列？",
    compare: |a, b, s, hi| format!("{a}和{b}相比，哪个的{s}{}？", if hi { "更高" } else { "更低" }),
    default_axis: "类别",
};

const EN: Phrases = Phrases {
    lookup: |c, s| format!("What is the {s} of {c}?"),
    extreme_cat: |x, s, max| format!("Which {x} has the {} {s}?", if max { "highest" } else { "lowest" }),
    extreme_val: |s, max| format!("What is the {} {s}?", if max { "maximum" } else { "minimum" }),
    sum: |s| format!("What is the total {s}?"),
    average: |s| format!("What is the average {s}?"),
    count_cats: |x| format!("How many {x} categories are shown?"),
    count_series: "How many data series are shown?",
    compare: |a, b, s, hi| format!("Between {a} and {b}, which has the {} {s}?", if hi { "higher" } else { "lower" }),
    default_axis: "category",
};

/// Template questions with known answers for the verifiable task types the
/// matrix allows for `spec`. Questions whose wording would name labels other
/// than the intended ones are skipped.
pub fn preset_questions(spec: &ChartSpec, table: &DataTable, matrix: &TaskMatrix) -> Vec<PresetQa> {
    let Ok(allowed) = matrix.allowed(spec.chart_type) else {
        return Vec::new();
    };
    let Ok(data) = ChartData::from_table(table) else {
        return Vec::new();
    };
    let ph = match spec.locale {
        Locale::Zh => &ZH,
        Locale::En => &EN,
    };
    let axis = if spec.x_label.trim().is_empty() { ph.default_axis } else { spec.x_label.as_str() };
    let wide = table.layout() == TableLayout::Wide;
    let series = &data.series;
    let labels: Vec<&str> =
        series.iter().map(|s| s.label.as_str()).chain(data.categories.iter().map(String::as_str)).collect();
    let ns = series.len();
    let mut out = Vec::new();
    let mut push = |question: String, answer: String, task: ChartTaskType, intent: PresetIntent, expect: Vec<usize>| {
        if find_mentions(&question, &labels) == expect {
            out.push(PresetQa { question, answer, task_type: task, intent });
        }
    };

    for &task in allowed {
        let s = 0;
        let sl = series[s].label.as_str();
        let vals: Vec<f64> = series[s].points.iter().map(|p| p.y).collect();
        match task {
            ChartTaskType::ValueLookup if wide => {
                let c = vals.len() / 2;
                let q = (ph.lookup)(&series[s].points[c].x, sl);
                let mut expect = vec![s, ns + c];
                expect.sort_unstable();
                push(q, format_number(vals[c]), task, PresetIntent::Lookup { series: s, category: c }, expect);
            }
            ChartTaskType::ExtremumMax | ChartTaskType::ExtremumMin => {
                let max = task == ChartTaskType::ExtremumMax;
                let ext = vals.iter().copied().fold(if max { f64::MIN } else { f64::MAX }, |a, v| {
                    if max { a.max(v) } else { a.min(v) }
                });
                push((ph.extreme_val)(sl, max), format_number(ext), task, PresetIntent::ExtremeValue { series: s, max }, vec![s]);
                let at: Vec<usize> = (0..vals.len()).filter(|i| vals[*i] == ext).collect();
                if wide && at.len() == 1 {
                    let answer = series[s].points[at[0]].x.clone();
                    push((ph.extreme_cat)(axis, sl, max), answer, task, PresetIntent::ExtremeCategory { series: s, max }, vec![s]);
                }
            }
            ChartTaskType::Sum => {
                let total: f64 = vals.iter().sum();
                push((ph.sum)(sl), format_number(total), task, PresetIntent::Sum { series: s }, vec![s]);
            }
            ChartTaskType::Average => {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                push((ph.average)(sl), format_number(mean), task, PresetIntent::Average { series: s }, vec![s]);
            }
            ChartTaskType::Count if wide => {
                push((ph.count_cats)(axis), data.categories.len().to_string(), task, PresetIntent::CountCategories, vec![]);
                push(ph.count_series.to_string(), ns.to_string(), task, PresetIntent::CountSeries, vec![]);
            }
            ChartTaskType::Comparison if wide && vals.len() >= 2 => {
                let (a, b) = (0, vals.len() - 1);
                if vals[a] != vals[b] {
                    let higher = vals[a] > vals[b];
                    let winner = if higher { a } else { b };
                    let q = (ph.compare)(&series[s].points[a].x, &series[s].points[b].x, sl, true);
                    let answer = series[s].points[winner].x.clone();
                    let mut expect = vec![s, ns + a, ns + b];
                    expect.sort_unstable();
                    push(q, answer, task, PresetIntent::Compare { series: s, a, b, higher: true }, expect);
                }
            }
            _ => {}
        }
    }
    out
}

/// Records for preset questions, checked like model output.
pub fn preset_records(
    image_ref: &str,
    spec: &ChartSpec,
    table: &DataTable,
    matrix: &TaskMatrix,
    rng_seed: u64,
) -> Vec<QaRecord> {
    let allowed = matrix.allowed(spec.chart_type).unwrap_or(&[]);
    let mut records: Vec<QaRecord> = preset_questions(spec, table, matrix)
        .into_iter()
        .map(|p| {
            let provenance = Provenance {
                generator: "chart-preset".into(),
                rng_seed,
                model: String::new(),
                validated: true,
                rejection_reason: None,
            };
            let mut r = QaRecord::single_turn(
                image_ref,
                p.question,
                p.answer,
                Category::Chart,
                Some(p.task_type.as_str().to_string()),
                provenance,
            );
            judge(&mut r, spec.chart_type, allowed, table);
            r
        })
        .collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    records.dedup_by(|a, b| a.id == b.id);
    records
}
