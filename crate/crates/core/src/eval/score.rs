use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalError, GroundTruthRow};
use crate::agents::SituationType;
use crate::denm::{validate_denm, CauseRegistry, Denm, LaneStatus};
use crate::uper::{decode_denm, hex_to_payload};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Undefined (`None`) when its denominator is zero.
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl DetectionMetrics {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        DetectionMetrics {
            tp,
            fp,
            tn,
            fn_,
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision,
            recall,
            f1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Compares the detection verdict of every ground-truth frame. Predictions
/// for frames outside the ground truth are ignored.
pub fn score_detection(
    predictions: &HashMap<String, SituationType>,
    gt: &[GroundTruthRow],
) -> Result<DetectionMetrics, EvalError> {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for row in gt {
        let predicted = predictions
            .get(&row.image_id)
            .ok_or_else(|| EvalError::MissingPrediction(row.image_id.clone()))?;
        match (*predicted == SituationType::Denm, row.situation_present) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(DetectionMetrics::from_counts(tp, fp, tn, fn_))
}

/// Field values taken from a generated message. Lane status uses
/// 1 = open, 0 = closed, whatever the wire polarity was.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldPrediction {
    pub number_of_lanes: Option<i64>,
    pub driving_lane_status: Option<LaneStatus>,
    pub cause_code: Option<i64>,
}

fn hit<T: PartialEq>(predicted: &Option<T>, truth: &Option<T>) -> bool {
    predicted.is_some() && predicted == truth
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMetrics {
    /// Ground-truth positive frames.
    pub denominator: u64,
    pub lanes_correct: u64,
    pub lane_status_correct: u64,
    pub cause_correct: u64,
    pub lanes_accuracy: Option<f64>,
    pub lane_status_accuracy: Option<f64>,
    pub cause_accuracy: Option<f64>,
}

/// Exact-match accuracy of lanes, lane status and cause code over the
/// ground-truth positive frames. `outputs` maps image ids of frames the
/// detector flagged to the values it produced; an absent entry is a miss on
/// every field.
pub fn score_fields(outputs: &HashMap<String, FieldPrediction>, gt: &[GroundTruthRow]) -> FieldMetrics {
    let (mut denominator, mut lanes, mut status, mut cause) = (0, 0, 0, 0);
    for row in gt.iter().filter(|r| r.situation_present) {
        denominator += 1;
        let Some(pred) = outputs.get(&row.image_id) else {
            continue;
        };
        lanes += u64::from(hit(&pred.number_of_lanes, &row.number_of_lanes));
        status += u64::from(hit(&pred.driving_lane_status, &row.driving_lane_status));
        cause += u64::from(hit(&pred.cause_code, &row.cause_code));
    }
    FieldMetrics {
        denominator,
        lanes_correct: lanes,
        lane_status_correct: status,
        cause_correct: cause,
        lanes_accuracy: ratio(lanes, denominator),
        lane_status_accuracy: ratio(status, denominator),
        cause_accuracy: ratio(cause, denominator),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemaMetrics {
    pub valid_count: u64,
    pub total_generated: u64,
    /// `None` for an empty directory.
    pub accuracy: Option<f64>,
    /// Image id to reason, for every message counted invalid.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub invalid: BTreeMap<String, String>,
}

fn check_pair(dir: &Path, id: &str, registry: &CauseRegistry) -> Result<(), String> {
    let json_path = dir.join(format!("{id}.denm.json"));
    let uper_path = dir.join(format!("{id}.uper"));
    let json = std::fs::read_to_string(&json_path).map_err(|e| format!("{}: {e}", json_path.display()))?;
    let denm = Denm::from_json_str(&json).map_err(|e| format!("{}: {e}", json_path.display()))?;
    let report = validate_denm(&denm, true, registry);
    if !report.valid {
        let fields: Vec<&str> = report.violations.iter().map(|v| v.field.as_str()).collect();
        return Err(format!("schema violations at {}", fields.join(", ")));
    }
    let hex = std::fs::read_to_string(&uper_path).map_err(|e| format!("{}: {e}", uper_path.display()))?;
    let payload = hex_to_payload(&hex).map_err(|e| format!("{}: {e}", uper_path.display()))?;
    let decoded = decode_denm(&payload.octets).map_err(|e| format!("{}: {e}", uper_path.display()))?;
    if decoded != denm {
        return Err("decoded payload differs from the JSON message".into());
    }
    Ok(())
}

/// A message counts as valid when its JSON passes strict validation and its
/// `.uper` payload decodes to the same message. Every `*.denm.json` and
/// `*.uper` stem in `dir` counts as one generated message.
pub fn score_schema(dir: impl AsRef<Path>, registry: &CauseRegistry) -> Result<SchemaMetrics, EvalError> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|e| EvalError::Read {
        path: dir.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut ids = std::collections::BTreeSet::new();
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix(".denm.json").or_else(|| name.strip_suffix(".uper")) {
            ids.insert(id.to_string());
        }
    }

    let mut invalid = BTreeMap::new();
    for id in &ids {
        if let Err(reason) = check_pair(dir, id, registry) {
            log::warn!("{id}: invalid message: {reason}");
            invalid.insert(id.clone(), reason);
        }
    }
    let total = ids.len() as u64;
    let valid = total - invalid.len() as u64;
    Ok(SchemaMetrics {
        valid_count: valid,
        total_generated: total,
        accuracy: ratio(valid, total),
        invalid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denm::parse_lane_status;

    fn gt(id: &str, present: bool) -> GroundTruthRow {
        GroundTruthRow {
            image_id: id.into(),
            situation_present: present,
            number_of_lanes: present.then_some(2),
            driving_lane_status: present.then(|| parse_lane_status("10").unwrap()),
            cause_code: present.then_some(90),
        }
    }

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 5e-5)
    }

    #[test]
    fn reconstructed_confusion_matrices() {
        let m = DetectionMetrics::from_counts(53, 4, 46, 0);
        assert!(close(m.accuracy, 0.9612) && close(m.precision, 0.9298));
        assert!(close(m.recall, 1.0) && close(m.f1, 0.9636));
        let m = DetectionMetrics::from_counts(53, 10, 40, 0);
        assert!(close(m.accuracy, 0.9029) && close(m.precision, 0.8413) && close(m.f1, 0.9138));
    }

    #[test]
    fn perfect_toy_set() {
        let rows = [gt("a", true), gt("b", true), gt("c", false), gt("d", false)];
        let preds: HashMap<_, _> = [
            ("a", SituationType::Denm),
            ("b", SituationType::Denm),
            ("c", SituationType::None),
            ("d", SituationType::None),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let m = score_detection(&preds, &rows).unwrap();
        for v in [m.accuracy, m.precision, m.recall, m.f1] {
            assert_eq!(v, Some(1.0));
        }
    }

    #[test]
    fn undefined_metrics_and_missing_predictions() {
        let m = DetectionMetrics::from_counts(0, 0, 5, 0);
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.accuracy, Some(1.0));

        let rows = [gt("a", true)];
        assert!(matches!(
            score_detection(&HashMap::new(), &rows),
            Err(EvalError::MissingPrediction(id)) if id == "a"
        ));
    }

    #[test]
    fn field_scoring_rules() {
        let rows = [
            gt("a", true),
            gt("b", true),
            gt("c", true),
            gt("d", true),
            gt("e", false),
        ];
        let right = FieldPrediction {
            number_of_lanes: Some(2),
            driving_lane_status: Some(parse_lane_status("10").unwrap()),
            cause_code: Some(90),
        };
        let wrong_lanes = FieldPrediction {
            number_of_lanes: Some(3),
            ..right.clone()
        };
        let mut outputs: HashMap<String, FieldPrediction> = HashMap::new();
        outputs.insert("a".into(), right.clone());
        outputs.insert("b".into(), right.clone());
        outputs.insert("c".into(), right.clone());
        outputs.insert("d".into(), wrong_lanes);
        outputs.insert("e".into(), right.clone());
        let m = score_fields(&outputs, &rows);
        assert_eq!(m.denominator, 4);
        assert_eq!(m.lanes_accuracy, Some(0.75));
        assert_eq!(m.cause_accuracy, Some(1.0));

        // an undetected positive misses every field
        outputs.remove("a");
        let m = score_fields(&outputs, &rows);
        assert_eq!((m.lanes_correct, m.lane_status_correct, m.cause_correct), (2, 3, 3));
    }
}
