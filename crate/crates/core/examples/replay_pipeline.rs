//! Runs the full detect, measure, extract, build and encode pipeline over
//! the sample frames with recorded model responses.
//!
//!     cargo run --example replay_pipeline [OUT_DIR]

use std::path::{Path, PathBuf};

use roadside_denm::agents::{load_manifest, run_batch, CameraConfig, Clock, PipelineConfig, Prompts, Providers};
use roadside_denm::denm::BuildOptions;
use roadside_denm::providers::{DepthDirProvider, ReplayBundle};
use roadside_denm::telemetry::TelemetryLog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sample = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sample");
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("denm-replay-example"));
    std::fs::create_dir_all(&out)?;
    std::fs::File::create(out.join("telemetry.jsonl"))?;

    let manifest = load_manifest(sample.join("manifest.jsonl"))?;
    let config = PipelineConfig {
        prompts: Prompts::default(),
        cameras: CameraConfig::load(sample.join("cameras.json"))?,
        build: BuildOptions::default(),
        strict_params: false,
        output_dir: out.clone(),
        clock: Clock::Fixed(675_820_805_000),
    };
    let model = ReplayBundle::load(sample.join("replay"))?;
    let depth = DepthDirProvider::new(sample.join("depth"));
    let providers = Providers {
        model: &model,
        depth: &depth,
    };
    let telemetry = TelemetryLog::open(out.join("telemetry.jsonl"))?;
    let summary = run_batch(&manifest, &config, providers, 2, &telemetry, &out.join("errors.jsonl"))?;

    for output in &summary.outputs {
        match &output.payload_hex {
            Some(hex) => println!(
                "{}: {} at {:.1} m -> {hex}",
                output.image_id,
                output.detection.description,
                output.distance_m.unwrap_or_default()
            ),
            None => println!("{}: no situation", output.image_id),
        }
    }
    println!("{} failures; artifacts in {}", summary.failures.len(), out.display());
    Ok(())
}
