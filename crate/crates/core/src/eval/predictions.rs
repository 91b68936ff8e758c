use std::collections::HashMap;
use std::path::Path;

use super::{EvalError, FieldPrediction};
use crate::agents::{DetectSidecar, SituationType};
use crate::denm::{Denm, LanePolarity};

/// Detector verdicts and generated field values recovered from a `run`
/// output directory.
#[derive(Clone, Debug, Default)]
pub struct Predictions {
    pub situations: HashMap<String, SituationType>,
    /// Frames flagged as situations; values are absent when no message was
    /// generated for the frame.
    pub fields: HashMap<String, FieldPrediction>,
}

fn read_error(path: &Path, detail: impl ToString) -> EvalError {
    EvalError::Read {
        path: path.display().to_string(),
        detail: detail.to_string(),
    }
}

/// Reads every `<id>.detect.json` in `dir` and, for flagged frames, the
/// matching `<id>.denm.json`. `wire_polarity` is the lane-status convention
/// the messages were written with.
pub fn load_predictions(dir: impl AsRef<Path>, wire_polarity: LanePolarity) -> Result<Predictions, EvalError> {
    let dir = dir.as_ref();
    let mut predictions = Predictions::default();
    let entries = std::fs::read_dir(dir).map_err(|e| read_error(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| read_error(dir, e))?.path();
        let is_sidecar = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(".detect.json"));
        if !is_sidecar {
            continue;
        }
        let sidecar = DetectSidecar::load(&path).map_err(|e| read_error(&path, e))?;
        let id = sidecar.image_id.clone();
        predictions
            .situations
            .insert(id.clone(), sidecar.detection.situation_type);
        if sidecar.detection.situation_type != SituationType::Denm {
            continue;
        }

        let denm_path = dir.join(format!("{id}.denm.json"));
        let fields = match std::fs::read_to_string(&denm_path) {
            Ok(text) => {
                let denm = Denm::from_json_str(&text).map_err(|e| read_error(&denm_path, e))?;
                FieldPrediction {
                    number_of_lanes: denm.alacarte.as_ref().map(|a| a.number_of_lanes),
                    driving_lane_status: denm
                        .alacarte
                        .as_ref()
                        .map(|a| a.driving_lane_status.convert(wire_polarity, LanePolarity::OneIsOpen)),
                    cause_code: denm.situation.map(|s| s.cause_code),
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => FieldPrediction::default(),
            Err(e) => return Err(read_error(&denm_path, e)),
        };
        predictions.fields.insert(id, fields);
    }
    Ok(predictions)
}
