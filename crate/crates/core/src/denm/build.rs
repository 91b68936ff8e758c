use thiserror::Error;

use super::{
    ranges, validate_denm, ActionId, AlacarteContainer, CauseRegistry, Denm, GeoPosition, LanePolarity,
    ManagementContainer, SituationContainer, ValidationReport,
};
use crate::agents::{DetectionResult, RoadParams, SituationType};

pub const STATION_TYPE_ROADSIDE_UNIT: i64 = 15;

/// Constants stamped into every DENM built by the pipeline.
#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub validity_duration_s: Option<i64>,
    pub station_type: i64,
    pub information_quality: i64,
    /// Polarity used on the wire. Extracted parameters are always in
    /// [`LanePolarity::OneIsOpen`].
    pub lane_polarity: LanePolarity,
    pub registry: CauseRegistry,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            validity_duration_s: Some(600),
            station_type: STATION_TYPE_ROADSIDE_UNIT,
            information_quality: 3,
            lane_polarity: LanePolarity::OneIsOpen,
            registry: CauseRegistry::bundled(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("build_denm called for a detection without a situation")]
    NotASituation,
    #[error("incomplete road parameters: {field}")]
    IncompleteParams { field: &'static str },
    #[error("composed DENM fails strict validation ({} violations)", .0.violations.len())]
    Invalid(ValidationReport),
}

/// Composes management, situation and alacarte containers. The result is
/// guaranteed to pass strict validation against `options.registry`.
pub fn build_denm(
    detection: &DetectionResult,
    params: &RoadParams,
    camera: GeoPosition,
    station_id: i64,
    seq: i64,
    now_its_ms: i64,
    options: &BuildOptions,
) -> Result<Denm, BuildError> {
    if detection.situation_type != SituationType::Denm {
        return Err(BuildError::NotASituation);
    }
    if !params.distance_to_event_m.is_finite() || params.distance_to_event_m < 0.0 {
        return Err(BuildError::IncompleteParams {
            field: "distance_to_event_m",
        });
    }
    if params.driving_lane_status.is_empty() {
        return Err(BuildError::IncompleteParams {
            field: "driving_lane_status",
        });
    }

    let distance_dm = (params.distance_to_event_m * 10.0)
        .round()
        .min(ranges::DISTANCE_DM.1 as f64) as i64;
    let denm = Denm {
        management: ManagementContainer {
            action_id: ActionId {
                originating_station_id: station_id,
                sequence_number: seq,
            },
            detection_time_its_ms: now_its_ms,
            reference_time_its_ms: now_its_ms,
            event_position: camera,
            validity_duration_s: options.validity_duration_s,
            station_type: options.station_type,
        },
        situation: Some(SituationContainer {
            information_quality: options.information_quality,
            cause_code: params.cause_code,
            sub_cause_code: params.sub_cause_code,
        }),
        alacarte: Some(AlacarteContainer {
            number_of_lanes: params.number_of_lanes,
            driving_lane_status: params
                .driving_lane_status
                .convert(LanePolarity::OneIsOpen, options.lane_polarity),
            distance_to_event_dm: Some(distance_dm),
            speed_limit_kmh: params.speed_limit_kmh,
            traffic_flow_rule: params.traffic_flow_rule,
        }),
    };

    let report = validate_denm(&denm, true, &options.registry);
    if report.valid {
        Ok(denm)
    } else {
        Err(BuildError::Invalid(report))
    }
}
