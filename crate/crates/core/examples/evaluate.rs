//! Replays the 103-frame benchmark with one model profile and scores it
//! against the ground truth.
//!
//!     cargo run --example evaluate [gemini-2.0-flash|gemini-2.5-flash]

use std::path::Path;

use roadside_denm::agents::{load_manifest, run_batch, CameraConfig, Clock, PipelineConfig, Prompts, Providers};
use roadside_denm::denm::{BuildOptions, CauseRegistry, LanePolarity};
use roadside_denm::eval::{
    load_ground_truth, load_predictions, render_report, score_detection, score_fields, score_schema, EvalReport,
    ReportFormat,
};
use roadside_denm::providers::{DepthDirProvider, ReplayBundle};
use roadside_denm::telemetry::TelemetryLog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = std::env::args().nth(1).unwrap_or_else(|| "gemini-2.0-flash".into());
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/replay103");
    let out = std::env::temp_dir().join(format!("denm-eval-{profile}"));
    let _ = std::fs::remove_dir_all(&out);
    std::fs::create_dir_all(&out)?;

    let config = PipelineConfig {
        prompts: Prompts::default(),
        cameras: CameraConfig::load(data.join("cameras.json"))?,
        build: BuildOptions::default(),
        strict_params: false,
        output_dir: out.clone(),
        clock: Clock::Fixed(675_820_805_000),
    };
    let model = ReplayBundle::load(data.join("replay").join(&profile))?;
    let depth = DepthDirProvider::new(data.join("depth"));
    let telemetry = TelemetryLog::open(out.join("telemetry.jsonl"))?;
    let manifest = load_manifest(data.join("manifest.jsonl"))?;
    let providers = Providers {
        model: &model,
        depth: &depth,
    };
    run_batch(&manifest, &config, providers, 4, &telemetry, &out.join("errors.jsonl"))?;

    let gt = load_ground_truth(data.join("gt.csv"))?;
    let predictions = load_predictions(&out, LanePolarity::OneIsOpen)?;
    let report = EvalReport {
        label: profile,
        detection: score_detection(&predictions.situations, &gt)?,
        fields: score_fields(&predictions.fields, &gt),
        schema: score_schema(&out, &CauseRegistry::bundled())?,
    };
    print!("{}", render_report(&report, ReportFormat::Text));
    Ok(())
}
