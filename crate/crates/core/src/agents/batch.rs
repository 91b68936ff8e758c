use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::pipeline::{run_pipeline, PipelineConfig, PipelineFailure, PipelineStage, Providers};
use super::PipelineOutput;
use crate::providers::ImageRef;
use crate::telemetry::{TelemetryError, TelemetryLog};

/// One line of `errors.jsonl`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub image_id: String,
    pub stage: PipelineStage,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct BatchSummary {
    /// Successful images, in manifest order.
    pub outputs: Vec<PipelineOutput>,
    pub failures: Vec<ErrorRecord>,
}

impl BatchSummary {
    pub fn total(&self) -> usize {
        self.outputs.len() + self.failures.len()
    }

    pub fn all_failed(&self) -> bool {
        self.outputs.is_empty() && !self.failures.is_empty()
    }
}

/// Reads a JSON-lines manifest of `{image_id, path, camera_id}` objects.
/// Relative image paths are resolved against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> std::io::Result<Vec<ImageRef>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let text = std::fs::read_to_string(path)?;
    let mut images = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut image: ImageRef = serde_json::from_str(line).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}:{}: {e}", path.display(), line_no + 1),
            )
        })?;
        if image.path.is_relative() {
            image.path = base.join(&image.path);
        }
        images.push(image);
    }
    Ok(images)
}

/// Results are committed strictly in manifest order so that logs are
/// reproducible regardless of how the workers interleave.
struct Committer<'a> {
    next: usize,
    pending: BTreeMap<usize, Result<PipelineOutput, PipelineFailure>>,
    telemetry: &'a TelemetryLog,
    errors: File,
    summary: BatchSummary,
    io_error: Option<TelemetryError>,
}

impl Committer<'_> {
    fn submit(&mut self, index: usize, result: Result<PipelineOutput, PipelineFailure>) {
        self.pending.insert(index, result);
        while let Some(result) = self.pending.remove(&self.next) {
            self.next += 1;
            let records = match &result {
                Ok(output) => &output.request_records,
                Err(failure) => &failure.request_records,
            };
            for record in records {
                if let Err(e) = self.telemetry.record_request(record) {
                    self.io_error.get_or_insert(e);
                }
            }
            match result {
                Ok(output) => self.summary.outputs.push(output),
                Err(failure) => {
                    log::warn!("{failure}");
                    let record = ErrorRecord {
                        image_id: failure.image_id.clone(),
                        stage: failure.stage,
                        message: failure.error.to_string(),
                    };
                    let line = serde_json::to_string(&record).expect("error record serializes") + "\n";
                    if let Err(e) = self.errors.write_all(line.as_bytes()) {
                        self.io_error.get_or_insert(TelemetryError::Io(e));
                    }
                    self.summary.failures.push(record);
                }
            }
        }
    }
}

/// Processes every manifest entry with at most `max_in_flight` images in
/// progress. Per-image failures go to `errors_path` and never stop the batch.
pub fn run_batch(
    manifest: &[ImageRef],
    config: &PipelineConfig,
    providers: Providers<'_>,
    max_in_flight: usize,
    telemetry: &TelemetryLog,
    errors_path: &Path,
) -> Result<BatchSummary, TelemetryError> {
    let errors = OpenOptions::new().create(true).append(true).open(errors_path)?;
    let committer = Mutex::new(Committer {
        next: 0,
        pending: BTreeMap::new(),
        telemetry,
        errors,
        summary: BatchSummary::default(),
        io_error: None,
    });
    let cursor = AtomicUsize::new(0);
    let workers = max_in_flight.clamp(1, manifest.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::Relaxed);
                let Some(image) = manifest.get(index) else {
                    break;
                };
                let seq = (index % 65_536) as u16;
                let result = run_pipeline(image, seq, config, providers);
                committer.lock().expect("committer lock").submit(index, result);
            });
        }
    });

    let committer = committer.into_inner().expect("committer lock");
    match committer.io_error {
        Some(e) => Err(e),
        None => Ok(committer.summary),
    }
}
