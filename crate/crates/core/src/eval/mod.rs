//! Scoring of pipeline outputs against a ground-truth table: detection
//! confusion matrix, per-field accuracies, and message-schema validity.

mod ground_truth;
mod predictions;
mod report;
mod score;

pub use ground_truth::{load_ground_truth, parse_ground_truth, GroundTruthRow, GT_HEADER};
pub use predictions::{load_predictions, Predictions};
pub use report::{format_percent, render_report, EvalReport, ReportFormat};
pub use score::{
    score_detection, score_fields, score_schema, DetectionMetrics, FieldMetrics, FieldPrediction, SchemaMetrics,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground truth header must be `{expected}`, found `{found}`")]
    BadHeader { expected: &'static str, found: String },
    #[error("image id {0} appears more than once in the ground truth")]
    DuplicateImageId(String),
    #[error("ground truth row {image_id}: {detail}")]
    RowInvariant { image_id: String, detail: String },
    #[error("no prediction for image {0}")]
    MissingPrediction(String),
    #[error("reading {path}: {detail}")]
    Read { path: String, detail: String },
}
