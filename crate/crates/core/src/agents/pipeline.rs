use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    detect_situation, estimate_distance, generate_message_params, image_dimensions, transform_bbox, AgentError,
    CameraConfig, Clock, DetectionResult, ModelCall, PipelineOutput, PixelBox, Prompts, SituationType,
};
use crate::denm::{build_denm, BuildError, BuildOptions};
use crate::providers::{DepthProvider, ImageRef, ModelProvider};
use crate::telemetry::RequestRecord;
use crate::uper::{encode_denm, payload_to_hex, write_uper_file, UperError};

pub struct PipelineConfig {
    pub prompts: Prompts,
    pub cameras: CameraConfig,
    pub build: BuildOptions,
    /// Reject out-of-range model values instead of clamping them.
    pub strict_params: bool,
    pub output_dir: PathBuf,
    pub clock: Clock,
}

#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub model: &'a dyn ModelProvider,
    pub depth: &'a dyn DepthProvider,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStage {
    Config,
    Detect,
    Transform,
    Distance,
    Extract,
    Build,
    Encode,
    Persist,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("camera {0} is not configured")]
    UnknownCamera(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Codec(#[from] UperError),
    #[error("writing artifacts: {0}")]
    Io(#[from] std::io::Error),
}

/// A failed image: the stage it stopped at and the requests it had made.
#[derive(Debug, Error)]
#[error("{image_id}: {stage:?} stage failed: {error}")]
pub struct PipelineFailure {
    pub image_id: String,
    pub stage: PipelineStage,
    pub error: PipelineError,
    pub request_records: Vec<RequestRecord>,
}

/// Contents of `<image_id>.detect.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectSidecar {
    pub image_id: String,
    pub detection: DetectionResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_height: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixel_box: Option<PixelBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
}

impl DetectSidecar {
    pub fn path_in(dir: &Path, image_id: &str) -> PathBuf {
        dir.join(format!("{image_id}.detect.json"))
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(Self::path_in(dir, &self.image_id), text)
    }
}

struct Run<'a> {
    image: &'a ImageRef,
    config: &'a PipelineConfig,
    calls: Vec<ModelCall>,
    sidecar: Option<DetectSidecar>,
}

impl Run<'_> {
    fn records(&self) -> Vec<RequestRecord> {
        let timestamp_ms = self.config.clock.now_unix_ms();
        self.calls
            .iter()
            .map(|call| RequestRecord::from_response(&self.image.image_id, call.stage, &call.response, timestamp_ms))
            .collect()
    }

    fn fail(self, stage: PipelineStage, error: impl Into<PipelineError>) -> PipelineFailure {
        if let Some(sidecar) = &self.sidecar {
            if let Err(e) = sidecar.write(&self.config.output_dir) {
                log::warn!("{}: cannot write detection sidecar: {e}", self.image.image_id);
            }
        }
        PipelineFailure {
            image_id: self.image.image_id.clone(),
            stage,
            error: error.into(),
            request_records: self.records(),
        }
    }
}

/// Runs one frame through detect, locate, measure, extract, build and encode,
/// writing `<id>.detect.json` always and `<id>.denm.json` / `<id>.uper` for
/// detected situations. `seq` becomes the DENM sequence number.
pub fn run_pipeline(
    image: &ImageRef,
    seq: u16,
    config: &PipelineConfig,
    providers: Providers<'_>,
) -> Result<PipelineOutput, PipelineFailure> {
    let mut run = Run {
        image,
        config,
        calls: Vec::new(),
        sidecar: None,
    };
    let Some(camera) = config.cameras.get(&image.camera_id).cloned() else {
        let camera_id = image.camera_id.clone();
        return Err(run.fail(PipelineStage::Config, PipelineError::UnknownCamera(camera_id)));
    };

    let detection = match detect_situation(image, providers.model, &config.prompts, &mut run.calls) {
        Ok(d) => d,
        Err(e) => return Err(run.fail(PipelineStage::Detect, e)),
    };
    run.sidecar = Some(DetectSidecar {
        image_id: image.image_id.clone(),
        detection: detection.clone(),
        image_width: image.width,
        image_height: image.height,
        pixel_box: None,
        distance_m: None,
    });

    let bbox = match (detection.situation_type, detection.bbox_norm) {
        (SituationType::Denm, Some(bbox)) => bbox,
        _ => {
            let sidecar = run.sidecar.take().expect("set above");
            if let Err(e) = sidecar.write(&config.output_dir) {
                return Err(run.fail(PipelineStage::Persist, e));
            }
            return Ok(PipelineOutput {
                image_id: image.image_id.clone(),
                detection,
                pixel_box: None,
                distance_m: None,
                params: None,
                denm: None,
                payload_hex: None,
                request_records: run.records(),
            });
        }
    };

    let (width, height) = match image_dimensions(image) {
        Ok(dims) => dims,
        Err(e) => return Err(run.fail(PipelineStage::Transform, e)),
    };
    let pixel_box = transform_bbox(bbox, width, height);
    if let Some(sidecar) = run.sidecar.as_mut() {
        sidecar.image_width = Some(width);
        sidecar.image_height = Some(height);
        sidecar.pixel_box = Some(pixel_box);
    }

    let distance_m = match estimate_distance(image, (width, height), pixel_box, providers.depth) {
        Ok(d) => d,
        Err(e) => return Err(run.fail(PipelineStage::Distance, e)),
    };
    if let Some(sidecar) = run.sidecar.as_mut() {
        sidecar.distance_m = Some(distance_m);
    }

    let params = match generate_message_params(
        image,
        distance_m,
        camera.position(),
        providers.model,
        &config.prompts,
        &config.build.registry,
        config.strict_params,
        &mut run.calls,
    ) {
        Ok(p) => p,
        Err(e) => return Err(run.fail(PipelineStage::Extract, e)),
    };

    let denm = match build_denm(
        &detection,
        &params,
        camera.position(),
        camera.station_id,
        i64::from(seq),
        config.clock.now_its_ms(),
        &config.build,
    ) {
        Ok(d) => d,
        Err(e) => return Err(run.fail(PipelineStage::Build, e)),
    };
    let payload = match encode_denm(&denm) {
        Ok(p) => p,
        Err(e) => return Err(run.fail(PipelineStage::Encode, e)),
    };
    let payload_hex = payload_to_hex(&payload);

    let dir = &config.output_dir;
    let persisted = std::fs::write(dir.join(format!("{}.denm.json", image.image_id)), denm.to_json_string())
        .and_then(|_| write_uper_file(dir.join(format!("{}.uper", image.image_id)), &payload))
        .and_then(|_| run.sidecar.as_ref().expect("set above").write(dir));
    if let Err(e) = persisted {
        return Err(run.fail(PipelineStage::Persist, e));
    }

    Ok(PipelineOutput {
        image_id: image.image_id.clone(),
        detection,
        pixel_box: Some(pixel_box),
        distance_m: Some(distance_m),
        params: Some(params),
        denm: Some(denm),
        payload_hex: Some(payload_hex),
        request_records: run.records(),
    })
}
