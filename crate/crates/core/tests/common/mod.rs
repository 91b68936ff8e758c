#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;
use roadside_denm::denm::{
    ranges, ActionId, AlacarteContainer, Denm, GeoPosition, LaneStatus, ManagementContainer, SituationContainer,
    TrafficFlowRule,
};
use sha2::{Digest, Sha256};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn denm_bin() -> &'static str {
    env!("CARGO_BIN_EXE_denm")
}

fn in_range(rng: &mut impl Rng, (lb, ub): (i64, i64)) -> i64 {
    rng.gen_range(lb..=ub)
}

/// A structurally valid message: every value in range, timestamps ordered,
/// lane status length equal to the lane count, no situation without alacarte.
pub fn random_denm(rng: &mut impl Rng) -> Denm {
    let detection = in_range(rng, ranges::TIMESTAMP_ITS_MS);
    let reference = rng.gen_range(detection..=ranges::TIMESTAMP_ITS_MS.1);
    let management = ManagementContainer {
        action_id: ActionId {
            originating_station_id: in_range(rng, ranges::STATION_ID),
            sequence_number: in_range(rng, ranges::SEQUENCE_NUMBER),
        },
        detection_time_its_ms: detection,
        reference_time_its_ms: reference,
        event_position: GeoPosition {
            latitude: in_range(rng, ranges::LATITUDE),
            longitude: in_range(rng, ranges::LONGITUDE),
            altitude_cm: in_range(rng, ranges::ALTITUDE_CM),
        },
        validity_duration_s: rng.gen_bool(0.5).then(|| in_range(rng, ranges::VALIDITY_DURATION_S)),
        station_type: in_range(rng, ranges::STATION_TYPE),
    };
    let alacarte = rng.gen_bool(0.8).then(|| {
        let lanes = in_range(rng, ranges::NUMBER_OF_LANES);
        AlacarteContainer {
            number_of_lanes: lanes,
            driving_lane_status: LaneStatus::from_bits((0..lanes).map(|_| rng.gen()).collect()),
            distance_to_event_dm: rng.gen_bool(0.5).then(|| in_range(rng, ranges::DISTANCE_DM)),
            speed_limit_kmh: rng.gen_bool(0.5).then(|| in_range(rng, ranges::SPEED_LIMIT_KMH)),
            traffic_flow_rule: rng.gen_bool(0.5).then(|| TrafficFlowRule::ALL[rng.gen_range(0..4)]),
        }
    });
    let situation = (alacarte.is_some() && rng.gen_bool(0.7)).then(|| SituationContainer {
        information_quality: in_range(rng, ranges::INFORMATION_QUALITY),
        cause_code: in_range(rng, ranges::CAUSE_CODE),
        sub_cause_code: in_range(rng, ranges::SUB_CAUSE_CODE),
    });
    Denm {
        management,
        situation,
        alacarte,
    }
}

/// SHA-256 over every file under `root`, keyed by relative path in sorted
/// order.
pub fn tree_hash(root: &Path) -> String {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(&path, out);
            } else {
                out.push(path);
            }
        }
    }
    let mut files = Vec::new();
    walk(root, &mut files);
    let mut hasher = Sha256::new();
    for file in files {
        let rel = file.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
        hasher.update(rel.as_bytes());
        hasher.update([0]);
        hasher.update(std::fs::read(&file).unwrap());
        hasher.update([0]);
    }
    hex::encode(hasher.finalize())
}
