use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::denm::{parse_lane_status, ranges, LaneStatus};

pub const GT_HEADER: &str = "image_id,situation_present,number_of_lanes,driving_lane_status,cause_code";

/// One labelled frame. Field labels exist only for positive frames; lane
/// status uses 1 = open, 0 = closed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRow {
    pub image_id: String,
    pub situation_present: bool,
    pub number_of_lanes: Option<i64>,
    pub driving_lane_status: Option<LaneStatus>,
    pub cause_code: Option<i64>,
}

#[derive(Deserialize)]
struct RawRow {
    image_id: String,
    situation_present: String,
    number_of_lanes: Option<String>,
    driving_lane_status: Option<String>,
    cause_code: Option<String>,
}

fn non_empty(value: Option<String>) -> Option<String> {
    value.map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
}

fn parse_bool(text: &str) -> Option<bool> {
    match text.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

impl RawRow {
    fn check(self) -> Result<GroundTruthRow, EvalError> {
        let id = self.image_id.trim().to_string();
        let invariant = |detail: String| EvalError::RowInvariant {
            image_id: id.clone(),
            detail,
        };
        if id.is_empty() {
            return Err(invariant("empty image_id".into()));
        }
        let situation_present = parse_bool(&self.situation_present).ok_or_else(|| {
            invariant(format!(
                "situation_present {:?} is not a boolean",
                self.situation_present
            ))
        })?;

        let number_of_lanes = non_empty(self.number_of_lanes)
            .map(|v| {
                let n: i64 = v
                    .parse()
                    .map_err(|_| invariant(format!("number_of_lanes {v:?} is not an integer")))?;
                let (lb, ub) = ranges::NUMBER_OF_LANES;
                if (lb..=ub).contains(&n) {
                    Ok(n)
                } else {
                    Err(invariant(format!("number_of_lanes {n} outside {lb}..{ub}")))
                }
            })
            .transpose()?;
        let driving_lane_status = non_empty(self.driving_lane_status)
            .map(|v| parse_lane_status(&v).map_err(|e| invariant(format!("driving_lane_status: {e}"))))
            .transpose()?;
        let cause_code = non_empty(self.cause_code)
            .map(|v| {
                let c: i64 = v
                    .parse()
                    .map_err(|_| invariant(format!("cause_code {v:?} is not an integer")))?;
                let (lb, ub) = ranges::CAUSE_CODE;
                if (lb..=ub).contains(&c) {
                    Ok(c)
                } else {
                    Err(invariant(format!("cause_code {c} outside {lb}..{ub}")))
                }
            })
            .transpose()?;

        if situation_present {
            for (name, present) in [
                ("number_of_lanes", number_of_lanes.is_some()),
                ("driving_lane_status", driving_lane_status.is_some()),
                ("cause_code", cause_code.is_some()),
            ] {
                if !present {
                    return Err(invariant(format!("positive row lacks {name}")));
                }
            }
            let lanes = number_of_lanes.unwrap_or_default();
            let status_len = driving_lane_status.as_ref().map_or(0, LaneStatus::len) as i64;
            if status_len != lanes {
                return Err(invariant(format!(
                    "driving_lane_status has {status_len} entries for {lanes} lanes"
                )));
            }
        } else if number_of_lanes.is_some() || driving_lane_status.is_some() || cause_code.is_some() {
            return Err(invariant("negative row carries field labels".into()));
        }

        Ok(GroundTruthRow {
            image_id: id,
            situation_present,
            number_of_lanes,
            driving_lane_status,
            cause_code,
        })
    }
}

/// Parses ground-truth CSV text. The header must match [`GT_HEADER`].
pub fn parse_ground_truth(text: &str) -> Result<Vec<GroundTruthRow>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| EvalError::BadHeader {
            expected: GT_HEADER,
            found: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != GT_HEADER {
        return Err(EvalError::BadHeader {
            expected: GT_HEADER,
            found: header,
        });
    }

    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (index, record) in reader.deserialize::<RawRow>().enumerate() {
        let raw = record.map_err(|e| EvalError::RowInvariant {
            image_id: format!("<row {}>", index + 1),
            detail: e.to_string(),
        })?;
        let row = raw.check()?;
        if !seen.insert(row.image_id.clone()) {
            return Err(EvalError::DuplicateImageId(row.image_id));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruthRow>, EvalError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Read {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    parse_ground_truth(&text)
}
