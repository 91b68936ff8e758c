//! Aggregates per-request telemetry into per-model token and latency
//! averages and checks the request-count law.
//!
//!     cargo run --example telemetry_stats

use std::path::Path;

use roadside_denm::telemetry::{aggregate_all, read_log, render_stats_table, request_count_violations};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/telemetry");
    let mut records = Vec::new();
    for profile in ["gemini-2.0-flash", "gemini-2.5-flash"] {
        let log = read_log(dir.join(format!("{profile}.jsonl")))?;
        // image ids repeat across runs, so the law is checked per log
        let violations = request_count_violations(&log);
        println!(
            "{profile}: {} images break the one-detect, at-most-one-extract rule",
            violations.len()
        );
        records.extend(log);
    }
    print!("{}", render_stats_table(&aggregate_all(&records)));
    Ok(())
}
