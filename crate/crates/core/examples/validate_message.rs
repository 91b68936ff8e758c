//! Validates a golden message, then a copy with out-of-range and
//! inconsistent fields, and prints every violation.
//!
//!     cargo run --example validate_message

use roadside_denm::denm::{parse_lane_status, validate_denm, CauseRegistry, Denm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden/golden_denm_1.json");
    let denm = Denm::from_json_str(&std::fs::read_to_string(path)?)?;
    let registry = CauseRegistry::bundled();

    let report = validate_denm(&denm, true, &registry);
    println!("golden_denm_1: valid = {}", report.valid);

    let mut broken = denm.clone();
    broken.management.station_type = 300;
    if let Some(situation) = broken.situation.as_mut() {
        situation.cause_code = 250;
    }
    if let Some(alacarte) = broken.alacarte.as_mut() {
        alacarte.driving_lane_status = parse_lane_status("1")?;
    }
    let report = validate_denm(&broken, true, &registry);
    println!("tampered copy: valid = {}", report.valid);
    for v in &report.violations {
        println!("  {} [{}] {}", v.field, v.rule, v.message);
    }
    Ok(())
}
