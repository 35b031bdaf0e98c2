//! Text and number normalization shared by every answer checker.

use std::sync::LazyLock;
use regex::Regex;
use unicode_normalization::UnicodeNormalization;

/// Relative tolerance for numeric answer comparison.
pub const REL_TOL: f64 = 1e-6;

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[-+]?(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][-+]?\d+)?").unwrap());
static THOUSANDS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\d),(\d{3})").unwrap());
static STRICT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^[$¥€£+]?\s*([-+]?(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][-+]?\d+)?)\s*[^\d\s.+-]{0,4}$").unwrap()
});

pub fn nfkc(s: &str) -> String {
    s.nfkc().collect()
}

/// NFKC, then drop all whitespace and every char in `strip`.
pub fn normalize_text(s: &str, strip: &str) -> String {
    s.nfkc()
        .filter(|c| !c.is_whitespace() && !strip.contains(*c))
        .collect()
}

/// Comparison key for labels and cell texts: NFKC, no whitespace, lowercase.
pub fn label_key(s: &str) -> String {
    s.nfkc()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

fn numeric_prep(s: &str) -> String {
    let mut t = nfkc(s).replace(['\u{2212}', '\u{2013}'], "-");
    // repeated so that 1,234,567 collapses fully
    loop {
        let next = THOUSANDS.replace_all(&t, "$1$2").into_owned();
        if next == t {
            break;
        }
        t = next;
    }
    t.trim().to_string()
}

/// Parses a cell that is a number with at most a currency prefix and a short
/// unit suffix (`"12.5%"`, `"¥1,200"`, `"3.2亿元"`).
pub fn parse_number(s: &str) -> Option<f64> {
    let t = numeric_prep(s);
    let caps = STRICT.captures(&t)?;
    caps[1].parse().ok()
}

/// Extracts the single number mentioned in free text. Text with zero or
/// several numbers yields `None`.
pub fn extract_number(s: &str) -> Option<f64> {
    let t = numeric_prep(s);
    let mut it = NUMBER.find_iter(&t);
    let first = it.next()?;
    if it.next().is_some() {
        return None;
    }
    first.as_str().parse().ok()
}

pub fn numbers_match(a: f64, b: f64) -> bool {
    let diff = (a - b).abs();
    diff <= REL_TOL * a.abs().max(b.abs()) || diff <= 1e-12
}

/// Shortest decimal form that parses back to the same value.
pub fn format_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn mention_key(s: &str) -> Vec<char> {
    let lowered: String = s.nfkc().flat_map(char::to_lowercase).collect();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ").chars().collect()
}

/// Indices of `labels` mentioned in `text`, compared after NFKC, lowercasing
/// and whitespace collapsing.
/// Longer labels claim their span first, so "11月" hides "1月" inside it.
/// A label that begins or ends with an ASCII letter or digit must not touch
/// another ASCII letter or digit at that end.
pub fn find_mentions(text: &str, labels: &[&str]) -> Vec<usize> {
    let hay = mention_key(text);
    let mut keyed: Vec<(usize, Vec<char>)> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (i, mention_key(l)))
        .filter(|(_, k)| !k.is_empty())
        .collect();
    keyed.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
    let mut taken = vec![false; hay.len()];
    let mut found = Vec::new();
    for (idx, key) in keyed {
        let n = key.len();
        if n > hay.len() {
            continue;
        }
        let mut hit = false;
        for start in 0..=hay.len() - n {
            if hay[start..start + n] != key[..] || taken[start..start + n].iter().any(|t| *t) {
                continue;
            }
            let alnum = |c: char| c.is_ascii_alphanumeric();
            let left_ok = !alnum(key[0]) || start == 0 || !alnum(hay[start - 1]);
            let right_ok = !alnum(key[n - 1]) || start + n == hay.len() || !alnum(hay[start + n]);
            if left_ok && right_ok {
                taken[start..start + n].iter_mut().for_each(|t| *t = true);
                hit = true;
            }
        }
        if hit {
            found.push(idx);
        }
    }
    found.sort_unstable();
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_parse_accepts_units() {
        assert_eq!(parse_number("10%"), Some(10.0));
        assert_eq!(parse_number(" 1,234.5 "), Some(1234.5));
        assert_eq!(parse_number("¥1,200"), Some(1200.0));
        assert_eq!(parse_number("3.2亿元"), Some(3.2));
        assert_eq!(parse_number("−4"), Some(-4.0));
        assert_eq!(parse_number("abc"), None);
        assert_eq!(parse_number("2019年第3季度"), None);
    }

    #[test]
    fn lenient_extract_requires_single_number() {
        assert_eq!(extract_number("最大值是7"), Some(7.0));
        assert_eq!(extract_number("about 1,500 units"), Some(1500.0));
        assert_eq!(extract_number("3 and 4"), None);
        assert_eq!(extract_number("none"), None);
    }

    #[test]
    fn normalization_strips_space_and_punct() {
        assert_eq!(normalize_text("12.5 %", ""), "12.5%");
        assert_eq!(normalize_text("ＡＢＣ，", "，,"), "ABC");
        assert_eq!(label_key(" Art & Design "), "art&design");
    }

    #[test]
    fn mentions_prefer_longer_labels() {
        let labels = ["1月", "11月", "Jan", "销售额"];
        assert_eq!(find_mentions("11月的销售额是多少", &labels), vec![1, 3]);
        assert_eq!(find_mentions("January", &labels), Vec::<usize>::new());
        assert_eq!(find_mentions("jan and 1月", &labels), vec![0, 2]);
        assert_eq!(find_mentions("2019年", &["19", "2019年"]), vec![1]);
        assert_eq!(find_mentions("x2019", &["2019"]), Vec::<usize>::new());
    }

    #[test]
    fn tolerance() {
        assert!(numbers_match(7.0, 7.000_000_1));
        assert!(!numbers_match(7.0, 7.01));
        assert!(numbers_match(0.0, 0.0));
    }

    #[test]
    fn format_round_trips() {
        for v in [0.0, 1.0, -3.0, 12.34, 1e-7, 123456.789] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_number(7.0), "7");
    }
}
