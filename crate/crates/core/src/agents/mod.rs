//! Situation detection, distance estimation and message generation agents,
//! plus the orchestrator that runs them per frame and over a manifest.

mod batch;
mod context;
mod detect;
mod distance;
mod extract;
mod pipeline;

pub use batch::{load_manifest, run_batch, BatchSummary, ErrorRecord};
pub use context::{its_now_ms, CameraConfig, CameraInfo, Clock, Prompts, ITS_EPOCH_UNIX_MS};
pub use detect::detect_situation;
pub use distance::{estimate_distance, image_dimensions, median_depth_in_box, transform_bbox};
pub use extract::generate_message_params;
pub use pipeline::{
    run_pipeline, DetectSidecar, PipelineConfig, PipelineError, PipelineFailure, PipelineStage, Providers,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::denm::{GeoPosition, LaneStatus, TrafficFlowRule};
use crate::providers::{DepthError, ModelResponse, ProviderError, Stage};
use crate::telemetry::RequestRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SituationType {
    #[serde(rename = "DENM")]
    Denm,
    #[serde(rename = "NONE")]
    None,
}

impl SituationType {
    pub fn as_str(self) -> &'static str {
        match self {
            SituationType::Denm => "DENM",
            SituationType::None => "NONE",
        }
    }
}

/// Box in 0..=1000 normalised image coordinates, origin top-left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormBox {
    pub ymin: u32,
    pub xmin: u32,
    pub ymax: u32,
    pub xmax: u32,
}

impl NormBox {
    pub const SCALE: u32 = 1000;

    pub fn is_valid(&self) -> bool {
        self.ymin < self.ymax && self.xmin < self.xmax && self.ymax <= Self::SCALE && self.xmax <= Self::SCALE
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub situation_type: SituationType,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox_norm: Option<NormBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence_note: Option<String>,
}

/// Pixel box, half-open: `x0 <= x < x1`, `y0 <= y < y1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelBox {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }
}

/// Parameters extracted by the message generation agent. Lane status is in
/// the 1 = open convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadParams {
    pub camera_position: GeoPosition,
    pub distance_to_event_m: f64,
    pub number_of_lanes: i64,
    pub driving_lane_status: LaneStatus,
    pub cause_code: i64,
    pub sub_cause_code: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_limit_kmh: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic_flow_rule: Option<TrafficFlowRule>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutput {
    pub image_id: String,
    pub detection: DetectionResult,
    pub pixel_box: Option<PixelBox>,
    pub distance_m: Option<f64>,
    pub params: Option<RoadParams>,
    pub denm: Option<crate::denm::Denm>,
    pub payload_hex: Option<String>,
    pub request_records: Vec<RequestRecord>,
}

/// A completed model call, before it is stamped into a [`RequestRecord`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCall {
    pub stage: Stage,
    pub response: ModelResponse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnparseableReason {
    NoJson,
    BadValue { key: String, detail: String },
    ConsistencyError(String),
}

impl std::fmt::Display for UnparseableReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnparseableReason::NoJson => f.write_str("no JSON object found"),
            UnparseableReason::BadValue { key, detail } => write!(f, "bad value for {key}: {detail}"),
            UnparseableReason::ConsistencyError(detail) => write!(f, "inconsistent output: {detail}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("{stage:?} provider failed: {source}")]
    Provider {
        stage: Stage,
        #[source]
        source: ProviderError,
    },
    #[error("{stage:?} output unusable after repair: {reason}")]
    UnparseableOutput { stage: Stage, reason: UnparseableReason },
    #[error("{stage:?} output is missing keys: {}", .missing.join(", "))]
    SchemaMismatch { stage: Stage, missing: Vec<String> },
    #[error("model value for {field} out of range: {value}")]
    FieldOutOfRange { field: &'static str, value: String },
    #[error("depth provider failed: {0}")]
    DepthProvider(#[from] DepthError),
    #[error("no finite depth values inside the box")]
    EmptyDepth,
    #[error("cannot determine image size of {path}: {detail}")]
    ImageSize { path: String, detail: String },
}
