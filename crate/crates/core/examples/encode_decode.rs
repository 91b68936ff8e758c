//! Builds a DENM from detector and extractor output, encodes it to UPER and
//! decodes it back.
//!
//!     cargo run --example encode_decode

use roadside_denm::agents::{DetectionResult, RoadParams, SituationType};
use roadside_denm::denm::{build_denm, parse_lane_status, BuildOptions, GeoPosition, TrafficFlowRule};
use roadside_denm::uper::{decode_denm, encode_denm, payload_to_hex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let detection = DetectionResult {
        situation_type: SituationType::Denm,
        description: "two cars stopped across the right lane".into(),
        bbox_norm: None,
        confidence_note: None,
    };
    let camera = GeoPosition {
        latitude: 480_912_345,
        longitude: 162_834_567,
        altitude_cm: 21_500,
    };
    let params = RoadParams {
        camera_position: camera,
        distance_to_event_m: 42.5,
        number_of_lanes: 3,
        // lane 1 is the rightmost lane; 1 = open
        driving_lane_status: parse_lane_status("011")?,
        cause_code: 2,
        sub_cause_code: 0,
        speed_limit_kmh: Some(60),
        traffic_flow_rule: Some(TrafficFlowRule::PassToLeft),
    };
    let denm = build_denm(
        &detection,
        &params,
        camera,
        4017,
        1,
        675_820_805_000,
        &BuildOptions::default(),
    )?;
    println!("{}", denm.to_json_string());

    let payload = encode_denm(&denm)?;
    println!("{} bits: {}", payload.bit_length, payload_to_hex(&payload));

    let back = decode_denm(&payload.octets)?;
    assert_eq!(back, denm);
    println!("decoded message matches");
    Ok(())
}
