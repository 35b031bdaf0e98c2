use std::collections::BTreeSet;

use super::{series_from_table, ChartError, ChartTaskType, DataTable, Series, TableLayout};
use crate::corpus::QaRecord;
use crate::normalize::{extract_number, find_mentions, format_number, numbers_match, parse_number};
use crate::verdict::Verdict;

const HIGH_WORDS: &[&str] = &[
    "最高", "最大", "最多", "更高", "更大", "更多", "较高", "较大", "较多", "高于", "大于", "多于", "highest",
    "largest", "most", "higher", "larger", "greater", "more",
];
const LOW_WORDS: &[&str] = &[
    "最低", "最小", "最少", "更低", "更小", "更少", "较低", "较小", "较少", "低于", "小于", "少于", "lowest",
    "smallest", "least", "lower", "smaller", "fewer", "less",
];
const SERIES_WORDS: &[&str] = &["系列", "图例", "series", "legend"];

/// Ground-truth values of a chart table.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartData {
    pub series: Vec<Series>,
    /// Category labels usable as question targets, in first-seen order.
    pub categories: Vec<String>,
}

impl ChartData {
    pub fn from_table(table: &DataTable) -> Result<Self, ChartError> {
        let series = series_from_table(table)?;
        let mut categories: Vec<String> = Vec::new();
        for p in series.iter().flat_map(|s| &s.points) {
            let skip = table.layout() == TableLayout::Long && parse_number(&p.x).is_some();
            if !skip && !categories.contains(&p.x) {
                categories.push(p.x.clone());
            }
        }
        Ok(Self { series, categories })
    }

    fn value(&self, s: usize, c: usize) -> Option<f64> {
        let label = &self.categories[c];
        self.series[s].points.iter().find(|p| &p.x == label).map(|p| p.y)
    }
}

fn contains_any(text: &str, words: &[&str]) -> bool {
    let lower = text.to_lowercase();
    words.iter().any(|w| {
        if w.is_ascii() {
            lower
                .match_indices(w)
                .any(|(i, _)| {
                    !lower[..i].chars().next_back().is_some_and(|c| c.is_ascii_alphabetic())
                        && !lower[i + w.len()..].chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                })
        } else {
            lower.contains(w)
        }
    })
}

/// `Some(true)` for "higher", `Some(false)` for "lower", `None` when absent or both.
fn direction(question: &str) -> Option<bool> {
    match (contains_any(question, HIGH_WORDS), contains_any(question, LOW_WORDS)) {
        (true, false) => Some(true),
        (false, true) => Some(false),
        _ => None,
    }
}

/// Labels mentioned in a text, split into series and category indices.
struct Mentions {
    series: Vec<usize>,
    categories: Vec<usize>,
}

fn mentions(text: &str, data: &ChartData) -> Mentions {
    let ns = data.series.len();
    let labels: Vec<&str> =
        data.series.iter().map(|s| s.label.as_str()).chain(data.categories.iter().map(String::as_str)).collect();
    let hits = find_mentions(text, &labels);
    Mentions {
        series: hits.iter().copied().filter(|i| *i < ns).collect(),
        categories: hits.iter().filter(|i| **i >= ns).map(|i| i - ns).collect(),
    }
}

fn pick_extreme(values: impl Iterator<Item = f64>, high: bool) -> Option<f64> {
    values.fold(None, |acc, v| match acc {
        None => Some(v),
        Some(a) => Some(if (high && v > a) || (!high && v < a) { v } else { a }),
    })
}

/// Judges a text answer naming labels: verified iff it names at least one
/// label of the target kind and every such label is a target.
fn judge_labels(named: &[usize], targets: &BTreeSet<usize>, label: impl Fn(usize) -> String) -> Verdict {
    if named.is_empty() {
        return Verdict::Unverifiable;
    }
    if named.iter().all(|i| targets.contains(i)) {
        Verdict::Verified
    } else {
        match targets.iter().next() {
            Some(t) => Verdict::wrong(label(*t)),
            None => Verdict::Wrong { expected: None },
        }
    }
}

fn judge_number(answer: Option<f64>, expected: f64) -> Verdict {
    match answer {
        None => Verdict::Unverifiable,
        Some(a) if numbers_match(a, expected) => Verdict::Verified,
        Some(_) => Verdict::wrong(format_number(expected)),
    }
}

/// Recomputes the answer to a chart question from the table and compares.
///
/// Series and categories named in the question narrow the scope; with none
/// named, the whole table is in scope. Numeric answers are compared with a
/// relative tolerance after unit and separator normalization.
pub fn verify_chart_answer(record: &QaRecord, table: &DataTable) -> Verdict {
    let Some(task) = record.task_type.as_deref().and_then(|t| t.parse::<ChartTaskType>().ok()) else {
        return Verdict::Unverifiable;
    };
    if !task.verifiable() {
        return Verdict::Unverifiable;
    }
    let Ok(data) = ChartData::from_table(table) else {
        return Verdict::Unverifiable;
    };
    let question = record.question();
    let answer = record.answer();
    let q = mentions(question, &data);
    let a = mentions(answer, &data);
    let scope_series: Vec<usize> = if q.series.is_empty() { (0..data.series.len()).collect() } else { q.series.clone() };
    let scope_cats: Vec<usize> =
        if q.categories.is_empty() { (0..data.categories.len()).collect() } else { q.categories.clone() };
    let data_ref = &data;
    let in_scope: Vec<(usize, Option<usize>, f64)> = if data.categories.is_empty() {
        scope_series.iter().flat_map(|s| data.series[*s].points.iter().map(move |p| (*s, None, p.y))).collect()
    } else {
        scope_series
            .iter()
            .flat_map(|s| scope_cats.iter().filter_map(move |c| data_ref.value(*s, *c).map(|v| (*s, Some(*c), v))))
            .collect()
    };
    if in_scope.is_empty() {
        return Verdict::Unverifiable;
    }
    let number = extract_number(answer);
    let series_label = |i: usize| data.series[i].label.clone();
    let cat_label = |i: usize| data.categories[i].clone();

    match task {
        ChartTaskType::ValueLookup => match in_scope.as_slice() {
            [(_, _, v)] => judge_number(number, *v),
            _ => Verdict::Unverifiable,
        },
        ChartTaskType::ExtremumMax | ChartTaskType::ExtremumMin => {
            let high = task == ChartTaskType::ExtremumMax;
            let ext = pick_extreme(in_scope.iter().map(|p| p.2), high).expect("scope is non-empty");
            let hits = in_scope.iter().filter(|p| p.2 == ext);
            if a.series.is_empty() && a.categories.is_empty() {
                return judge_number(number, ext);
            }
            let by_series = scope_series.len() > 1 && (q.categories.len() == 1 || a.categories.is_empty());
            if by_series {
                let targets: BTreeSet<usize> = hits.map(|p| p.0).collect();
                judge_labels(&a.series, &targets, series_label)
            } else {
                let targets: BTreeSet<usize> = hits.filter_map(|p| p.1).collect();
                judge_labels(&a.categories, &targets, cat_label)
            }
        }
        ChartTaskType::Sum | ChartTaskType::Average => {
            let total: f64 = in_scope.iter().map(|p| p.2).sum();
            let expected = if task == ChartTaskType::Sum { total } else { total / in_scope.len() as f64 };
            judge_number(number, expected)
        }
        ChartTaskType::Count => {
            let expected = if contains_any(question, SERIES_WORDS) {
                scope_series.len()
            } else if data.categories.is_empty() {
                in_scope.len()
            } else {
                scope_cats.len()
            };
            judge_number(number, expected as f64)
        }
        ChartTaskType::Comparison => {
            // (label index, value, names a series)
            let items: Vec<(usize, f64, bool)> = if q.categories.len() >= 2 && scope_series.len() == 1 {
                q.categories.iter().filter_map(|c| data.value(scope_series[0], *c).map(|v| (*c, v, false))).collect()
            } else if q.series.len() >= 2 && q.categories.len() == 1 {
                q.series.iter().filter_map(|s| data.value(*s, q.categories[0]).map(|v| (*s, v, true))).collect()
            } else {
                Vec::new()
            };
            if items.len() < 2 {
                return Verdict::Unverifiable;
            }
            let named_kind = if items[0].2 { &a.series } else { &a.categories };
            if !named_kind.is_empty() {
                let Some(high) = direction(question) else {
                    return Verdict::Unverifiable;
                };
                let ext = pick_extreme(items.iter().map(|i| i.1), high).expect("two items");
                let targets: BTreeSet<usize> = items.iter().filter(|i| i.1 == ext).map(|i| i.0).collect();
                let named: Vec<usize> = named_kind.iter().copied().filter(|n| items.iter().any(|i| i.0 == *n)).collect();
                // Only labels outside the compared set: the answer picked neither.
                let named = if named.is_empty() { named_kind.clone() } else { named };
                return if items[0].2 {
                    judge_labels(&named, &targets, series_label)
                } else {
                    judge_labels(&named, &targets, cat_label)
                };
            }
            match items.as_slice() {
                [x, y] => judge_number(number, (x.1 - y.1).abs()),
                _ => Verdict::Unverifiable,
            }
        }
        _ => Verdict::Unverifiable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Category, Provenance};

    fn record(q: &str, a: &str, task: &str) -> QaRecord {
        let prov = Provenance {
            generator: "chart".into(),
            rng_seed: 0,
            model: "m".into(),
            validated: true,
            rejection_reason: None,
        };
        QaRecord::single_turn("c.svg", q, a, Category::Chart, Some(task.into()), prov)
    }

    fn table(csv: &str) -> DataTable {
        DataTable::parse(csv).unwrap()
    }

    #[test]
    fn extremum_max_numeric() {
        let t = table("月份,销售额\n一月,3\n二月,7\n三月,5\n");
        assert_eq!(verify_chart_answer(&record("销售额的最大值是多少？", "7", "extremum_max"), &t), Verdict::Verified);
        assert_eq!(
            verify_chart_answer(&record("销售额的最大值是多少？", "5", "extremum_max"), &t),
            Verdict::wrong("7")
        );
    }

    #[test]
    fn extremum_by_label() {
        let t = table("月份,销售额\n一月,3\n二月,7\n三月,5\n");
        let q = "哪个月份的销售额最高？";
        assert_eq!(verify_chart_answer(&record(q, "二月", "extremum_max"), &t), Verdict::Verified);
        assert_eq!(verify_chart_answer(&record(q, "三月", "extremum_max"), &t), Verdict::wrong("二月"));
        assert_eq!(verify_chart_answer(&record(q, "一月", "extremum_min"), &t), Verdict::Verified);
    }

    #[test]
    fn explanation_is_unverifiable() {
        let t = table("m,v\na,1\n");
        assert_eq!(verify_chart_answer(&record("为什么？", "因为", "explanation"), &t), Verdict::Unverifiable);
        assert_eq!(verify_chart_answer(&record("q", "1", "not-a-type"), &t), Verdict::Unverifiable);
    }

    #[test]
    fn lookup_sum_average_count() {
        let t = table("Month,Online,Offline\nJan,10,20\nFeb,15,5\n");
        let v = |q: &str, a: &str, k: &str| verify_chart_answer(&record(q, a, k), &t);
        assert_eq!(v("What is the Offline value in Jan?", "20", "value_lookup"), Verdict::Verified);
        assert_eq!(v("What is the Offline value in Jan?", "20.00%", "value_lookup"), Verdict::Verified);
        assert_eq!(v("What is the value in Jan?", "20", "value_lookup"), Verdict::Unverifiable);
        assert_eq!(v("What is the total Online?", "25", "sum"), Verdict::Verified);
        assert_eq!(v("What is the average Offline?", "12.5", "average"), Verdict::Verified);
        assert_eq!(v("How many months are shown?", "2", "count"), Verdict::Verified);
        assert_eq!(v("How many data series are shown?", "2", "count"), Verdict::Verified);
        assert_eq!(v("How many months are shown?", "3", "count"), Verdict::wrong("2"));
    }

    #[test]
    fn comparison_directions() {
        let t = table("Month,Sales\nJan,10\nFeb,15\nMar,15\n");
        let v = |q: &str, a: &str| verify_chart_answer(&record(q, a, "comparison"), &t);
        assert_eq!(v("Between Jan and Feb, which has higher Sales?", "Feb"), Verdict::Verified);
        assert_eq!(v("Between Jan and Feb, which has higher Sales?", "Jan"), Verdict::wrong("Feb"));
        assert_eq!(v("Between Jan and Feb, which has lower Sales?", "Jan"), Verdict::Verified);
        assert_eq!(v("How much do Jan and Feb differ?", "5"), Verdict::Verified);
        assert_eq!(v("Compare Jan and Feb", "Feb"), Verdict::Unverifiable);
        assert_eq!(v("Between Feb and Mar, which has higher Sales?", "Mar"), Verdict::Verified);
        assert_eq!(v("Between Jan and Feb, which has higher Sales?", "Mar"), Verdict::wrong("Feb"));
    }
}
