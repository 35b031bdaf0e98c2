use std::sync::LazyLock;

use regex::Regex;

use super::features::line_aggregates;
use super::{TableGrid, TableTaskType};
use crate::corpus::QaRecord;
use crate::normalize::{extract_number, label_key, numbers_match, parse_number};
use crate::verdict::Verdict;

const YES_NO: &[&str] = &[
    "yes", "no", "y", "n", "true", "false", "是", "否", "是的", "不是", "对", "不对", "有", "没有", "不", "正确", "错误",
];

static SEPARATORS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[,，、;；\n|]+").unwrap());
/// "A.", "(B)", "C)", "D:" or "A、" ahead of a multiple-choice option.
static OPTION_LETTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:[(（]\s*[A-Ha-h]\s*[)）]|[A-Ha-h]\s*[.．:：)）、])\s*").unwrap());
static LEAD_PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[\s\p{P}]+|[\s\p{P}]+$").unwrap());

fn cell_matches(token: &str, grid: &TableGrid) -> bool {
    let key = label_key(token);
    let number = parse_number(token);
    grid.iter().any(|c| {
        label_key(&c.text) == key || number.zip(parse_number(&c.text)).is_some_and(|(a, b)| numbers_match(a, b))
    })
}

fn tokens(answer: &str) -> Vec<String> {
    SEPARATORS
        .split(answer)
        .map(|t| OPTION_LETTER.replace(t.trim(), "").to_string())
        .map(|t| LEAD_PUNCT.replace_all(&t, "").to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

fn is_yes_no(answer: &str) -> bool {
    let t = LEAD_PUNCT.replace_all(answer.trim(), "").to_lowercase();
    let head: String = t
        .split(|c: char| c.is_whitespace() || c.is_ascii_punctuation() || "，。！；：".contains(c))
        .next()
        .unwrap_or("")
        .to_string();
    YES_NO.contains(&t.as_str()) || YES_NO.contains(&head.as_str())
}

/// Checks a table answer against the grid.
///
/// Factoid answers must equal a cell, or name a number equal to a cell or a
/// line aggregate. Computation answers must equal a line aggregate.
/// Comparison, List and Multiple Choice answers must consist of cell texts.
pub fn verify_table_answer(record: &QaRecord, grid: &TableGrid) -> Verdict {
    let Some(task) = record.task_type.as_deref().and_then(|t| t.parse::<TableTaskType>().ok()) else {
        return Verdict::Unverifiable;
    };
    let answer = record.answer().trim();
    match task {
        TableTaskType::Factoid => {
            if cell_matches(answer, grid) {
                return Verdict::Verified;
            }
            match extract_number(answer) {
                Some(v)
                    if grid.iter().filter_map(|c| parse_number(&c.text)).any(|x| numbers_match(x, v))
                        || line_aggregates(grid).into_iter().any(|x| numbers_match(x, v)) =>
                {
                    Verdict::Verified
                }
                _ => Verdict::Wrong { expected: None },
            }
        }
        TableTaskType::Computation => match extract_number(answer) {
            None => Verdict::Unverifiable,
            Some(v) if line_aggregates(grid).into_iter().any(|x| numbers_match(x, v)) => Verdict::Verified,
            Some(_) => Verdict::Wrong { expected: None },
        },
        TableTaskType::YesNo => {
            if is_yes_no(answer) {
                Verdict::Verified
            } else {
                Verdict::wrong("yes or no")
            }
        }
        TableTaskType::Comparison | TableTaskType::List | TableTaskType::MultipleChoice => {
            let toks = tokens(answer);
            if toks.is_empty() {
                Verdict::Unverifiable
            } else if toks.iter().all(|t| cell_matches(t, grid)) {
                Verdict::Verified
            } else {
                Verdict::Wrong { expected: None }
            }
        }
        _ => Verdict::Unverifiable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Category, Provenance};
    use crate::table::parse_html_table;

    fn rec(a: &str, task: &str) -> QaRecord {
        let prov = Provenance { generator: "t".into(), rng_seed: 0, model: "m".into(), validated: true, rejection_reason: None };
        QaRecord::single_turn("t.html", "q", a, Category::Table, Some(task.into()), prov)
    }

    fn grid() -> TableGrid {
        parse_html_table(
            "<table><tr><th>水果</th><th>销量</th></tr><tr><td>苹果</td><td>2</td></tr>\
             <tr><td>香蕉</td><td>4</td></tr><tr><td>橙子</td><td>6</td></tr><tr><td>梨</td><td>42</td></tr></table>",
        )
        .unwrap()
    }

    #[test]
    fn factoid() {
        let g = grid();
        assert_eq!(verify_table_answer(&rec("42", "Factoid"), &g), Verdict::Verified);
        assert_eq!(verify_table_answer(&rec("苹果", "Factoid"), &g), Verdict::Verified);
        assert_eq!(verify_table_answer(&rec("99", "Factoid"), &g), Verdict::Wrong { expected: None });
    }

    #[test]
    fn computation_over_aggregates() {
        let g = parse_html_table(
            "<table><tr><th>k</th><th>v</th></tr><tr><td>a</td><td>2</td></tr><tr><td>b</td><td>4</td></tr><tr><td>c</td><td>6</td></tr></table>",
        )
        .unwrap();
        assert_eq!(verify_table_answer(&rec("4", "Computation"), &g), Verdict::Verified);
        assert_eq!(verify_table_answer(&rec("平均值为4.0", "Computation"), &g), Verdict::Verified);
        assert_eq!(verify_table_answer(&rec("12", "Computation"), &g), Verdict::Verified);
        assert_eq!(verify_table_answer(&rec("13", "Computation"), &g), Verdict::Wrong { expected: None });
        assert_eq!(verify_table_answer(&rec("很多", "Computation"), &g), Verdict::Unverifiable);
    }

    #[test]
    fn yes_no_forms() {
        let g = grid();
        for a in ["是", "否", "Yes.", "no", "是的，苹果更少"] {
            assert_eq!(verify_table_answer(&rec(a, "Yes/No"), &g), Verdict::Verified, "{a}");
        }
        assert!(matches!(verify_table_answer(&rec("maybe", "Yes/No"), &g), Verdict::Wrong { .. }));
    }

    #[test]
    fn token_subset_tasks() {
        let g = grid();
        assert_eq!(verify_table_answer(&rec("苹果、香蕉", "List"), &g), Verdict::Verified);
        assert_eq!(verify_table_answer(&rec("B. 香蕉", "Multiple Choice"), &g), Verdict::Verified);
        assert_eq!(verify_table_answer(&rec("苹果, 西瓜", "List"), &g), Verdict::Wrong { expected: None });
        assert_eq!(verify_table_answer(&rec("梨", "Comparison"), &g), Verdict::Verified);
        assert_eq!(verify_table_answer(&rec("原因很多", "Causal"), &g), Verdict::Unverifiable);
    }
}
