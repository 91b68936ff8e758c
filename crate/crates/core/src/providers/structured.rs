use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructuredError {
    #[error("no JSON object found in model output")]
    NoJsonFound,
    #[error("model output is missing keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),
}

/// Pulls the first JSON object out of free-form model text (code fences and
/// surrounding prose are tolerated) and checks `required_keys`.
pub fn parse_structured_output(text: &str, required_keys: &[&str]) -> Result<Map<String, Value>, StructuredError> {
    let object = first_object(text).ok_or(StructuredError::NoJsonFound)?;
    let missing: Vec<String> = required_keys
        .iter()
        .filter(|key| !object.contains_key(**key))
        .map(|key| key.to_string())
        .collect();
    if missing.is_empty() {
        Ok(object)
    } else {
        Err(StructuredError::MissingKeys(missing))
    }
}

fn first_object(text: &str) -> Option<Map<String, Value>> {
    for (start, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn strips_fences() {
        let doc = parse_structured_output("```json\n{\"situation_type\":\"NONE\"}\n```", &["situation_type"]).unwrap();
        assert_eq!(doc["situation_type"], json!("NONE"));
    }

    #[test]
    fn ignores_trailing_prose() {
        let doc = parse_structured_output("{\"a\":1} trailing prose", &["a"]).unwrap();
        assert_eq!(doc["a"], json!(1));
        let doc = parse_structured_output("Sure! {oops} then {\"a\":{\"b\":2}}.", &["a"]).unwrap();
        assert_eq!(doc["a"]["b"], json!(2));
    }

    #[test]
    fn failures() {
        assert_eq!(
            parse_structured_output("no json here", &[]),
            Err(StructuredError::NoJsonFound)
        );
        assert_eq!(
            parse_structured_output("{\"a\":1}", &["a", "b", "c"]),
            Err(StructuredError::MissingKeys(vec!["b".into(), "c".into()]))
        );
    }

    fn scalar() -> impl Strategy<Value = Value> {
        prop_oneof![
            any::<i64>().prop_map(Value::from),
            any::<bool>().prop_map(Value::from),
            "[ -~]{0,16}".prop_map(Value::from),
            Just(Value::Null),
        ]
    }

    proptest! {
        #[test]
        fn flat_documents_round_trip(doc in prop::collection::btree_map("[a-z_]{1,8}", scalar(), 0..8),
                                     prefix in "[a-zA-Z .:\n]{0,20}",
                                     fenced in any::<bool>()) {
            let map: Map<String, Value> = doc.into_iter().collect();
            let body = serde_json::to_string(&Value::Object(map.clone())).unwrap();
            let text = if fenced { format!("{prefix}```json\n{body}\n```") } else { format!("{prefix}{body}") };
            let keys: Vec<&str> = map.keys().map(String::as_str).collect();
            prop_assert_eq!(parse_structured_output(&text, &keys).unwrap(), map);
        }
    }
}
