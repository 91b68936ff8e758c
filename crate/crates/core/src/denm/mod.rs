//! DENM subset: management, situation and alacarte containers.
//!
//! Integer fields are held as `i64` so that structures deserialized from
//! untrusted JSON can carry out-of-range values; [`validate_denm`] reports
//! them instead of the deserializer rejecting the whole document.

mod build;
mod lane;
mod registry;
mod validate;

pub use build::{build_denm, BuildError, BuildOptions, STATION_TYPE_ROADSIDE_UNIT};
pub use lane::{parse_lane_status, LanePolarity, LaneStatus, LaneStatusError, MAX_LANES};
pub use registry::{CauseEntry, CauseRegistry, RegistryError};
pub use validate::{validate_denm, ValidationReport, Violation};

use serde::{Deserialize, Serialize};

/// Inclusive field ranges shared by the validator and the UPER codec.
pub mod ranges {
    pub const STATION_ID: (i64, i64) = (0, 4_294_967_295);
    pub const SEQUENCE_NUMBER: (i64, i64) = (0, 65_535);
    pub const TIMESTAMP_ITS_MS: (i64, i64) = (0, 4_398_046_511_103);
    pub const LATITUDE: (i64, i64) = (-900_000_000, 900_000_001);
    pub const LONGITUDE: (i64, i64) = (-1_800_000_000, 1_800_000_001);
    pub const ALTITUDE_CM: (i64, i64) = (-100_000, 800_001);
    pub const VALIDITY_DURATION_S: (i64, i64) = (0, 86_400);
    pub const STATION_TYPE: (i64, i64) = (0, 255);
    pub const INFORMATION_QUALITY: (i64, i64) = (0, 7);
    pub const CAUSE_CODE: (i64, i64) = (0, 255);
    pub const SUB_CAUSE_CODE: (i64, i64) = (0, 255);
    pub const NUMBER_OF_LANES: (i64, i64) = (1, 13);
    pub const LANE_STATUS_LEN: (usize, usize) = (1, 13);
    pub const DISTANCE_DM: (i64, i64) = (0, 65_535);
    pub const SPEED_LIMIT_KMH: (i64, i64) = (1, 255);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionId {
    pub originating_station_id: i64,
    pub sequence_number: i64,
}

/// WGS84 position in 1e-7 degree units; altitude in centimetres.
///
/// The maximum of each range is the "unavailable" sentinel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoPosition {
    pub latitude: i64,
    pub longitude: i64,
    pub altitude_cm: i64,
}

impl GeoPosition {
    pub const LATITUDE_UNAVAILABLE: i64 = ranges::LATITUDE.1;
    pub const LONGITUDE_UNAVAILABLE: i64 = ranges::LONGITUDE.1;
    pub const ALTITUDE_UNAVAILABLE: i64 = ranges::ALTITUDE_CM.1;

    pub fn unavailable() -> Self {
        GeoPosition {
            latitude: Self::LATITUDE_UNAVAILABLE,
            longitude: Self::LONGITUDE_UNAVAILABLE,
            altitude_cm: Self::ALTITUDE_UNAVAILABLE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManagementContainer {
    pub action_id: ActionId,
    /// Milliseconds since 2004-01-01T00:00:00Z.
    pub detection_time_its_ms: i64,
    pub reference_time_its_ms: i64,
    pub event_position: GeoPosition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity_duration_s: Option<i64>,
    pub station_type: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SituationContainer {
    pub information_quality: i64,
    pub cause_code: i64,
    pub sub_cause_code: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficFlowRule {
    NoPassing = 0,
    NoPassingForTrucks = 1,
    PassToLeft = 2,
    PassToRight = 3,
}

impl TrafficFlowRule {
    pub const ALL: [TrafficFlowRule; 4] = [
        TrafficFlowRule::NoPassing,
        TrafficFlowRule::NoPassingForTrucks,
        TrafficFlowRule::PassToLeft,
        TrafficFlowRule::PassToRight,
    ];

    pub fn index(self) -> i64 {
        self as i64
    }

    pub fn from_index(index: i64) -> Option<Self> {
        Self::ALL.get(usize::try_from(index).ok()?).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrafficFlowRule::NoPassing => "no_passing",
            TrafficFlowRule::NoPassingForTrucks => "no_passing_for_trucks",
            TrafficFlowRule::PassToLeft => "pass_to_left",
            TrafficFlowRule::PassToRight => "pass_to_right",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == text)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlacarteContainer {
    pub number_of_lanes: i64,
    pub driving_lane_status: LaneStatus,
    /// Decimetres.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_to_event_dm: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_limit_kmh: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic_flow_rule: Option<TrafficFlowRule>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Denm {
    pub management: ManagementContainer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub situation: Option<SituationContainer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alacarte: Option<AlacarteContainer>,
}

impl Denm {
    /// Pretty JSON followed by a newline; the on-disk `.denm.json` form.
    pub fn to_json_string(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("Denm serializes");
        text.push('\n');
        text
    }

    pub fn from_json_str(text: &str) -> serde_json::Result<Denm> {
        serde_json::from_str(text)
    }
}
