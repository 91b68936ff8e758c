use serde_json::{Map, Value};

use super::{AgentError, DetectionResult, ModelCall, NormBox, Prompts, SituationType, UnparseableReason};
use crate::providers::{parse_structured_output, ImageRef, ModelProvider, ModelRequest, Stage, StructuredError};

pub(super) enum Issue {
    Structured(StructuredError),
    Unparseable(UnparseableReason),
    /// Not worth a repair attempt.
    Fatal(AgentError),
}

impl Issue {
    fn describe(&self) -> String {
        match self {
            Issue::Structured(e) => e.to_string(),
            Issue::Unparseable(r) => r.to_string(),
            Issue::Fatal(e) => e.to_string(),
        }
    }

    fn into_error(self, stage: Stage) -> AgentError {
        match self {
            Issue::Structured(StructuredError::NoJsonFound) => AgentError::UnparseableOutput {
                stage,
                reason: UnparseableReason::NoJson,
            },
            Issue::Structured(StructuredError::MissingKeys(missing)) => AgentError::SchemaMismatch { stage, missing },
            Issue::Unparseable(reason) => AgentError::UnparseableOutput { stage, reason },
            Issue::Fatal(e) => e,
        }
    }
}

/// Sends `prompt`, interprets the answer, and re-prompts once with the
/// parse error appended if the answer is unusable.
pub(super) fn request_with_repair<T>(
    provider: &dyn ModelProvider,
    image: &ImageRef,
    stage: Stage,
    prompt: &str,
    prompts: &Prompts,
    calls: &mut Vec<ModelCall>,
    interpret: impl Fn(&str) -> Result<T, Issue>,
) -> Result<T, AgentError> {
    let mut current = prompt.to_string();
    let mut attempt = 0;
    loop {
        let response = provider
            .complete(&ModelRequest {
                image,
                stage,
                prompt: &current,
                attempt,
            })
            .map_err(|source| AgentError::Provider { stage, source })?;
        let text = response.text.clone();
        calls.push(ModelCall { stage, response });
        match interpret(&text) {
            Ok(value) => return Ok(value),
            Err(Issue::Fatal(e)) => return Err(e),
            Err(issue) if attempt == 0 => {
                log::debug!(
                    "{}: {} output unusable, re-prompting: {}",
                    image.image_id,
                    stage.as_str(),
                    issue.describe()
                );
                current = prompts.render_repair(prompt, &issue.describe());
                attempt += 1;
            }
            Err(issue) => return Err(issue.into_error(stage)),
        }
    }
}

/// Runs the detection prompt against the frame.
pub fn detect_situation(
    image: &ImageRef,
    provider: &dyn ModelProvider,
    prompts: &Prompts,
    calls: &mut Vec<ModelCall>,
) -> Result<DetectionResult, AgentError> {
    request_with_repair(
        provider,
        image,
        Stage::Detect,
        &prompts.detect,
        prompts,
        calls,
        interpret_detection,
    )
}

fn interpret_detection(text: &str) -> Result<DetectionResult, Issue> {
    let doc = parse_structured_output(text, &["situation_type", "description"]).map_err(Issue::Structured)?;
    let situation_type = match doc["situation_type"].as_str().map(str::to_ascii_uppercase).as_deref() {
        Some("DENM") => SituationType::Denm,
        Some("NONE") => SituationType::None,
        _ => {
            return Err(bad_value("situation_type", "expected \"DENM\" or \"NONE\""));
        }
    };
    let description = doc["description"]
        .as_str()
        .ok_or_else(|| bad_value("description", "expected a string"))?
        .to_string();
    let confidence_note = doc.get("confidence_note").and_then(Value::as_str).map(str::to_string);

    let bbox_norm = match situation_type {
        SituationType::None => None,
        SituationType::Denm => Some(parse_bbox(&doc)?),
    };
    Ok(DetectionResult {
        situation_type,
        description,
        bbox_norm,
        confidence_note,
    })
}

fn parse_bbox(doc: &Map<String, Value>) -> Result<NormBox, Issue> {
    let raw = match doc.get("bbox") {
        None | Some(Value::Null) => return Err(Issue::Structured(StructuredError::MissingKeys(vec!["bbox".into()]))),
        Some(v) => v,
    };
    let coords: Vec<f64> = raw
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    if coords.len() != 4 {
        return Err(bad_value("bbox", "expected four numbers [ymin, xmin, ymax, xmax]"));
    }
    if coords.iter().any(|c| !(0.0..=NormBox::SCALE as f64).contains(c)) {
        return Err(Issue::Unparseable(UnparseableReason::ConsistencyError(format!(
            "bbox coordinates {coords:?} outside 0..=1000"
        ))));
    }
    let r = |v: f64| v.round() as u32;
    let bbox = NormBox {
        ymin: r(coords[0]),
        xmin: r(coords[1]),
        ymax: r(coords[2]),
        xmax: r(coords[3]),
    };
    if !bbox.is_valid() {
        return Err(Issue::Unparseable(UnparseableReason::ConsistencyError(format!(
            "bbox {coords:?} is empty or inverted"
        ))));
    }
    Ok(bbox)
}

pub(super) fn bad_value(key: &str, detail: &str) -> Issue {
    Issue::Unparseable(UnparseableReason::BadValue {
        key: key.to_string(),
        detail: detail.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{ModelResponse, ProviderError};
    use std::sync::Mutex;

    /// Answers each call with the next scripted text.
    struct Scripted(Mutex<Vec<&'static str>>);

    impl ModelProvider for Scripted {
        fn complete(&self, _: &ModelRequest<'_>) -> Result<ModelResponse, ProviderError> {
            let mut queue = self.0.lock().unwrap();
            let text = if queue.len() > 1 { queue.remove(0) } else { queue[0] };
            Ok(ModelResponse {
                text: text.into(),
                prompt_tokens: 10,
                completion_tokens: 5,
                latency_ms: 3,
                model_id: "scripted".into(),
            })
        }
    }

    fn image() -> ImageRef {
        ImageRef {
            image_id: "img".into(),
            path: "img.jpg".into(),
            camera_id: "cam".into(),
            width: Some(100),
            height: Some(100),
        }
    }

    fn run(script: Vec<&'static str>) -> (Result<DetectionResult, AgentError>, usize) {
        let provider = Scripted(Mutex::new(script));
        let mut calls = Vec::new();
        let result = detect_situation(&image(), &provider, &Prompts::default(), &mut calls);
        (result, calls.len())
    }

    #[test]
    fn parses_positive_detection() {
        let (result, calls) = run(vec![
            "```json\n{\"situation_type\":\"DENM\",\"description\":\"crash\",\"bbox\":[412,200,655,388]}\n```",
        ]);
        let detection = result.unwrap();
        assert_eq!(calls, 1);
        assert_eq!(detection.situation_type, SituationType::Denm);
        assert_eq!(
            detection.bbox_norm,
            Some(NormBox {
                ymin: 412,
                xmin: 200,
                ymax: 655,
                xmax: 388
            })
        );
    }

    #[test]
    fn negative_drops_bbox() {
        let (result, _) = run(vec![
            "{\"situation_type\":\"NONE\",\"description\":\"clear road\",\"bbox\":[1,2,3,4]}",
        ]);
        let detection = result.unwrap();
        assert_eq!(detection.situation_type, SituationType::None);
        assert!(detection.bbox_norm.is_none());
    }

    #[test]
    fn prose_fails_after_one_repair() {
        let (result, calls) = run(vec!["I think the road looks fine."]);
        assert_eq!(calls, 2);
        assert!(matches!(
            result,
            Err(AgentError::UnparseableOutput {
                reason: UnparseableReason::NoJson,
                ..
            })
        ));
    }

    #[test]
    fn missing_keys_is_schema_mismatch() {
        let (result, calls) = run(vec!["{\"situation_type\":\"DENM\",\"description\":\"x\"}"]);
        assert_eq!(calls, 2);
        match result {
            Err(AgentError::SchemaMismatch { missing, .. }) => assert_eq!(missing, vec!["bbox"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn repair_can_succeed() {
        let (result, calls) = run(vec![
            "no idea",
            "{\"situation_type\":\"NONE\",\"description\":\"clear\"}",
        ]);
        assert_eq!(calls, 2);
        assert_eq!(result.unwrap().situation_type, SituationType::None);
    }

    #[test]
    fn inverted_box_is_inconsistent() {
        let (result, _) = run(vec![
            "{\"situation_type\":\"DENM\",\"description\":\"x\",\"bbox\":[500,500,400,600]}",
        ]);
        assert!(matches!(
            result,
            Err(AgentError::UnparseableOutput {
                reason: UnparseableReason::ConsistencyError(_),
                ..
            })
        ));
    }
}
