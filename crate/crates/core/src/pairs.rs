//! Lenient reading of the QA lists that generators return inside a ```json fence.

use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPair {
    pub question: String,
    pub answer: String,
    /// Region kind a document pair was written about, when given.
    pub region: Option<String>,
    pub task_type: Option<String>,
}

const QUESTION_KEYS: &[&str] = &["human", "question", "instruction", "q"];
const ANSWER_KEYS: &[&str] = &["gpt", "answer", "a"];
const REGION_KEYS: &[&str] = &["region_type", "region", "kind"];
const TASK_KEYS: &[&str] = &["task_type", "task", "type"];

fn text_field(obj: &Map<String, Value>, keys: &[&str]) -> Option<String> {
    keys.iter().find_map(|k| match obj.get(*k)? {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    })
}

fn from_conversations(turns: &[Value]) -> Option<(String, String)> {
    let mut q = None;
    let mut a = None;
    for t in turns {
        let from = t.get("from").or_else(|| t.get("role"))?.as_str()?;
        let value = t.get("value").or_else(|| t.get("text")).or_else(|| t.get("content"))?.as_str()?;
        match from {
            "human" | "user" if q.is_none() => q = Some(value.trim().to_string()),
            "gpt" | "assistant" if q.is_some() && a.is_none() => a = Some(value.trim().to_string()),
            _ => {}
        }
    }
    Some((q?, a?))
}

fn item_list(v: &Value) -> Vec<&Value> {
    match v {
        Value::Array(items) => items.iter().collect(),
        Value::Object(obj) => {
            if obj.contains_key("conversations") || QUESTION_KEYS.iter().any(|k| obj.contains_key(*k)) {
                vec![v]
            } else {
                obj.values().find_map(|x| x.as_array()).map(|a| a.iter().collect()).unwrap_or_default()
            }
        }
        _ => Vec::new(),
    }
}

/// Extracts every well-formed pair; also returns how many items were malformed.
pub fn parse_pairs(v: &Value) -> (Vec<RawPair>, usize) {
    let mut pairs = Vec::new();
    let mut malformed = 0;
    for item in item_list(v) {
        let Some(obj) = item.as_object() else {
            malformed += 1;
            continue;
        };
        let qa = match obj.get("conversations").and_then(Value::as_array) {
            Some(turns) => from_conversations(turns),
            None => text_field(obj, QUESTION_KEYS).zip(text_field(obj, ANSWER_KEYS)),
        };
        match qa {
            Some((question, answer)) if !question.is_empty() => pairs.push(RawPair {
                question,
                answer,
                region: text_field(obj, REGION_KEYS),
                task_type: text_field(obj, TASK_KEYS),
            }),
            _ => malformed += 1,
        }
    }
    (pairs, malformed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flat_items() {
        let v = json!([{"human": "q1", "gpt": "a1", "region_type": "table"}, {"question": "q2", "answer": 5}]);
        let (p, bad) = parse_pairs(&v);
        assert_eq!(bad, 0);
        assert_eq!(p[0].region.as_deref(), Some("table"));
        assert_eq!(p[1].answer, "5");
    }

    #[test]
    fn wrapped_and_conversation_items() {
        let v = json!({"qa": [
            {"conversations": [{"from": "human", "value": "q"}, {"from": "gpt", "value": "a"}], "task_type": "Factoid"},
            {"human": "missing answer"},
            7
        ]});
        let (p, bad) = parse_pairs(&v);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].task_type.as_deref(), Some("Factoid"));
        assert_eq!(bad, 2);
    }

    #[test]
    fn empty_list() {
        assert_eq!(parse_pairs(&json!([])), (vec![], 0));
    }
}
