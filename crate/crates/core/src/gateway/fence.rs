//! Triple-backtick block scanning.

use serde_json::Value;

use super::GatewayError;

const FENCE: &str = "```";

/// Format words that may sit on a fence's opening line ahead of the content.
const FORMAT_WORDS: &[&str] = &[
    "json", "csv", "tsv", "plaintext", "text", "txt", "table", "markdown", "md", "python", "py",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FencedBlock {
    pub label: Option<String>,
    pub body: String,
}

fn split_label(inner: &str) -> (Option<String>, &str) {
    let token_len = inner
        .char_indices()
        .find(|(i, c)| {
            let ok = if *i == 0 { c.is_ascii_alphabetic() } else { c.is_ascii_alphanumeric() || "_+-".contains(*c) };
            !ok
        })
        .map(|(i, _)| i)
        .unwrap_or(inner.len());
    if token_len == 0 {
        return (None, inner);
    }
    let token = &inner[..token_len];
    let rest = &inner[token_len..];
    let known = FORMAT_WORDS.iter().any(|w| w.eq_ignore_ascii_case(token));
    let whole_line = rest.starts_with('\n') || rest.starts_with("\r\n");
    let then_space = rest.starts_with(|c: char| c.is_whitespace());
    if whole_line || (known && then_space) || (known && rest.is_empty()) {
        (Some(token.to_ascii_lowercase()), rest)
    } else {
        (None, inner)
    }
}

/// Every closed ``` block in order of appearance. An unterminated trailing fence is ignored.
pub fn fenced_blocks(text: &str) -> Vec<FencedBlock> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(open) = text[pos..].find(FENCE) {
        let start = pos + open + FENCE.len();
        let Some(close) = text[start..].find(FENCE) else { break };
        let inner = &text[start..start + close];
        let (label, body) = split_label(inner);
        out.push(FencedBlock { label, body: body.trim().to_string() });
        pos = start + close + FENCE.len();
    }
    out
}

fn snippet(s: &str) -> String {
    const MAX: usize = 200;
    if s.chars().count() <= MAX {
        s.to_string()
    } else {
        let cut: String = s.chars().take(MAX).collect();
        format!("{cut}...")
    }
}

/// Returns the first ```json (or bare ```) block whose body parses as JSON.
pub fn extract_json_fence(text: &str) -> Result<Value, GatewayError> {
    let mut first_bad: Option<(String, String)> = None;
    for block in fenced_blocks(text) {
        if !matches!(block.label.as_deref(), None | Some("json")) {
            continue;
        }
        match serde_json::from_str::<Value>(&block.body) {
            Ok(v) => return Ok(v),
            Err(e) => {
                first_bad.get_or_insert_with(|| (snippet(&block.body), e.to_string()));
            }
        }
    }
    match first_bad {
        Some((snippet, error)) => Err(GatewayError::FenceNotJson { snippet, error }),
        None => Err(GatewayError::NoFence { snippet: snippet(text) }),
    }
}

/// Inverse of [`extract_json_fence`]. Backticks inside strings are escaped as `\u0060`.
pub fn wrap_in_fence(value: &Value) -> String {
    let body = serde_json::to_string_pretty(value)
        .expect("json value serializes")
        .replace('`', "\\u0060");
    format!("```json\n{body}\n```")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn inline_json_fence() {
        assert_eq!(extract_json_fence("x ```json {\"a\":1}``` y").unwrap(), json!({"a": 1}));
    }

    #[test]
    fn skips_malformed_draft() {
        let text = "draft:\n```json\n{\"a\": 1,,}\n```\nfinal:\n```json\n{\"a\": 2}\n```";
        assert_eq!(extract_json_fence(text).unwrap(), json!({"a": 2}));
    }

    #[test]
    fn bare_fence_accepted_other_labels_skipped() {
        assert_eq!(extract_json_fence("```\n[1,2]\n```").unwrap(), json!([1, 2]));
        assert!(matches!(
            extract_json_fence("```python\n[1]\n```"),
            Err(GatewayError::NoFence { .. })
        ));
    }

    #[test]
    fn missing_and_invalid() {
        assert!(matches!(extract_json_fence("no fences here"), Err(GatewayError::NoFence { .. })));
        match extract_json_fence("```json\nnot json\n```") {
            Err(GatewayError::FenceNotJson { snippet, .. }) => assert_eq!(snippet, "not json"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn labels() {
        let b = fenced_blocks("```csv\na,b\n1,2\n```");
        assert_eq!(b[0].label.as_deref(), Some("csv"));
        assert_eq!(b[0].body, "a,b\n1,2");
        let b = fenced_blocks("```a,b\n1,2```");
        assert_eq!(b[0].label, None);
        assert_eq!(b[0].body, "a,b\n1,2");
        let b = fenced_blocks("```Year Value\n1 2```");
        assert_eq!(b[0].label, None);
    }

    fn arb_json() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            Just(Value::Null),
            any::<bool>().prop_map(Value::Bool),
            any::<i64>().prop_map(|n| json!(n)),
            (-1e9f64..1e9).prop_map(|f| json!(f)),
            any::<String>().prop_map(Value::String),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
                prop::collection::btree_map(any::<String>(), inner, 0..4)
                    .prop_map(|m| Value::Object(m.into_iter().collect())),
            ]
        })
    }

    proptest! {
        #[test]
        fn wrap_then_extract_is_identity(v in arb_json()) {
            prop_assert_eq!(extract_json_fence(&wrap_in_fence(&v)).unwrap(), v);
        }
    }
}
