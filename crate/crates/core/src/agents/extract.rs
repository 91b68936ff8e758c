use serde_json::Value;

use super::detect::{bad_value, request_with_repair, Issue};
use super::{AgentError, ModelCall, Prompts, RoadParams, UnparseableReason};
use crate::denm::{parse_lane_status, ranges, CauseRegistry, GeoPosition, TrafficFlowRule};
use crate::providers::{parse_structured_output, ImageRef, ModelProvider, Stage};

const REQUIRED: [&str; 4] = ["number_of_lanes", "driving_lane_status", "cause_code", "sub_cause_code"];

/// Runs the extraction prompt and turns the answer into [`RoadParams`].
///
/// Out-of-range numbers are clamped unless `strict` is set, in which case
/// they fail with [`AgentError::FieldOutOfRange`]. The camera position comes
/// from configuration, never from the model.
#[allow(clippy::too_many_arguments)]
pub fn generate_message_params(
    image: &ImageRef,
    distance_m: f64,
    camera: GeoPosition,
    provider: &dyn ModelProvider,
    prompts: &Prompts,
    registry: &CauseRegistry,
    strict: bool,
    calls: &mut Vec<ModelCall>,
) -> Result<RoadParams, AgentError> {
    let prompt = prompts.render_extract(distance_m, registry);
    request_with_repair(provider, image, Stage::Extract, &prompt, prompts, calls, |text| {
        interpret_params(text, distance_m, camera, strict)
    })
}

fn integer(value: &Value, key: &str) -> Result<i64, Issue> {
    match value {
        Value::Number(n) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64))
            .ok_or_else(|| bad_value(key, "expected an integer")),
        Value::String(s) => s.trim().parse().map_err(|_| bad_value(key, "expected an integer")),
        _ => Err(bad_value(key, "expected an integer")),
    }
}

fn ranged(value: i64, field: &'static str, (lb, ub): (i64, i64), strict: bool) -> Result<i64, Issue> {
    if (lb..=ub).contains(&value) {
        Ok(value)
    } else if strict {
        Err(Issue::Fatal(AgentError::FieldOutOfRange {
            field,
            value: value.to_string(),
        }))
    } else {
        Ok(value.clamp(lb, ub))
    }
}

fn interpret_params(text: &str, distance_m: f64, camera: GeoPosition, strict: bool) -> Result<RoadParams, Issue> {
    let doc = parse_structured_output(text, &REQUIRED).map_err(Issue::Structured)?;

    let number_of_lanes = ranged(
        integer(&doc["number_of_lanes"], "number_of_lanes")?,
        "number_of_lanes",
        ranges::NUMBER_OF_LANES,
        strict,
    )?;
    let status_text = match &doc["driving_lane_status"] {
        Value::String(s) => s.trim().to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::Bool(b) => Some(if *b { '1' } else { '0' }),
                Value::Number(n) => match n.as_i64() {
                    Some(0) => Some('0'),
                    Some(1) => Some('1'),
                    _ => None,
                },
                _ => None,
            })
            .collect::<Option<String>>()
            .ok_or_else(|| bad_value("driving_lane_status", "expected 0/1 entries"))?,
        Value::Number(n) => n.to_string(),
        _ => return Err(bad_value("driving_lane_status", "expected a 0/1 string")),
    };
    let driving_lane_status =
        parse_lane_status(&status_text).map_err(|e| bad_value("driving_lane_status", &e.to_string()))?;
    if driving_lane_status.len() as i64 != number_of_lanes {
        return Err(Issue::Unparseable(UnparseableReason::ConsistencyError(format!(
            "driving_lane_status {status_text:?} has {} entries for {number_of_lanes} lanes",
            driving_lane_status.len()
        ))));
    }
    let cause_code = ranged(
        integer(&doc["cause_code"], "cause_code")?,
        "cause_code",
        ranges::CAUSE_CODE,
        strict,
    )?;
    let sub_cause_code = ranged(
        integer(&doc["sub_cause_code"], "sub_cause_code")?,
        "sub_cause_code",
        ranges::SUB_CAUSE_CODE,
        strict,
    )?;
    let speed_limit_kmh = match doc.get("speed_limit_kmh") {
        None | Some(Value::Null) => None,
        Some(v) => Some(ranged(
            integer(v, "speed_limit_kmh")?,
            "speed_limit_kmh",
            ranges::SPEED_LIMIT_KMH,
            strict,
        )?),
    };
    let traffic_flow_rule = match doc.get("traffic_flow_rule") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(
            TrafficFlowRule::parse(&s.trim().to_ascii_lowercase().replace([' ', '-'], "_"))
                .ok_or_else(|| bad_value("traffic_flow_rule", "unknown rule name"))?,
        ),
        Some(v) => {
            let index = integer(v, "traffic_flow_rule")?;
            Some(
                TrafficFlowRule::from_index(index)
                    .ok_or_else(|| bad_value("traffic_flow_rule", "index outside 0..=3"))?,
            )
        }
    };

    Ok(RoadParams {
        camera_position: camera,
        distance_to_event_m: distance_m,
        number_of_lanes,
        driving_lane_status,
        cause_code,
        sub_cause_code,
        speed_limit_kmh,
        traffic_flow_rule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{ModelRequest, ModelResponse, ProviderError};

    struct Fixed(&'static str);

    impl ModelProvider for Fixed {
        fn complete(&self, request: &ModelRequest<'_>) -> Result<ModelResponse, ProviderError> {
            assert_eq!(request.stage, Stage::Extract);
            Ok(ModelResponse {
                text: self.0.into(),
                prompt_tokens: -1,
                completion_tokens: -1,
                latency_ms: 1,
                model_id: "fixed".into(),
            })
        }
    }

    fn camera() -> GeoPosition {
        GeoPosition {
            latitude: 482_000_000,
            longitude: 154_000_000,
            altitude_cm: 35_000,
        }
    }

    fn run(text: &'static str, strict: bool) -> (Result<RoadParams, AgentError>, usize) {
        let image = ImageRef {
            image_id: "img".into(),
            path: "img.jpg".into(),
            camera_id: "cam".into(),
            width: None,
            height: None,
        };
        let mut calls = Vec::new();
        let result = generate_message_params(
            &image,
            84.2,
            camera(),
            &Fixed(text),
            &Prompts::default(),
            &CauseRegistry::bundled(),
            strict,
            &mut calls,
        );
        (result, calls.len())
    }

    #[test]
    fn parses_full_answer() {
        let (result, calls) = run(
            r#"{"number_of_lanes":3,"driving_lane_status":"110","cause_code":90,"sub_cause_code":0,"speed_limit_kmh":120,"traffic_flow_rule":"pass_to_left"}"#,
            true,
        );
        let params = result.unwrap();
        assert_eq!(calls, 1);
        assert_eq!(params.number_of_lanes, 3);
        assert_eq!(params.driving_lane_status.render(), "110");
        assert_eq!(params.cause_code, 90);
        assert_eq!(params.speed_limit_kmh, Some(120));
        assert_eq!(params.traffic_flow_rule, Some(TrafficFlowRule::PassToLeft));
        assert_eq!(params.distance_to_event_m, 84.2);
        assert_eq!(params.camera_position, camera());
    }

    #[test]
    fn strict_rejects_zero_lanes() {
        let (result, calls) = run(
            r#"{"number_of_lanes":0,"driving_lane_status":"1","cause_code":2,"sub_cause_code":0}"#,
            true,
        );
        assert_eq!(calls, 1);
        assert!(matches!(
            result,
            Err(AgentError::FieldOutOfRange {
                field: "number_of_lanes",
                ..
            })
        ));
    }

    #[test]
    fn lenient_clamps() {
        let (result, _) = run(
            r#"{"number_of_lanes":0,"driving_lane_status":"1","cause_code":2,"sub_cause_code":0,"speed_limit_kmh":400}"#,
            false,
        );
        let params = result.unwrap();
        assert_eq!(params.number_of_lanes, 1);
        assert_eq!(params.speed_limit_kmh, Some(255));
    }

    #[test]
    fn lane_count_mismatch_after_repair() {
        let (result, calls) = run(
            r#"{"number_of_lanes":3,"driving_lane_status":"11","cause_code":2,"sub_cause_code":0}"#,
            false,
        );
        assert_eq!(calls, 2);
        assert!(matches!(
            result,
            Err(AgentError::UnparseableOutput {
                reason: UnparseableReason::ConsistencyError(_),
                ..
            })
        ));
    }

    #[test]
    fn accepts_array_status_and_null_optionals() {
        let (result, _) = run(
            r#"{"number_of_lanes":2,"driving_lane_status":[1,0],"cause_code":"3","sub_cause_code":1,"speed_limit_kmh":null,"traffic_flow_rule":null}"#,
            true,
        );
        let params = result.unwrap();
        assert_eq!(params.driving_lane_status.render(), "10");
        assert_eq!(params.cause_code, 3);
        assert_eq!(params.speed_limit_kmh, None);
    }
}
