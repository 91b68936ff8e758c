use serde::{Deserialize, Serialize};

use super::ranges;
use super::{AlacarteContainer, CauseRegistry, Denm, GeoPosition, ManagementContainer, SituationContainer};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            valid: violations.is_empty(),
            violations,
        }
    }

    /// Single-violation report for input that never became a [`Denm`].
    pub fn malformed(message: impl Into<String>) -> Self {
        Self::from_violations(vec![Violation {
            field: "$".into(),
            rule: "shape".into(),
            message: message.into(),
        }])
    }

    pub fn has_violation_at(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, field: &str, rule: &str, message: String) {
        self.0.push(Violation {
            field: field.to_string(),
            rule: rule.to_string(),
            message,
        });
    }

    fn range(&mut self, field: &str, value: i64, (lb, ub): (i64, i64)) {
        if value < lb || value > ub {
            self.push(field, "range", format!("{value} outside {lb}..={ub}"));
        }
    }
}

/// Checks every field range and cross-field invariant, collecting all
/// violations. `strict` additionally requires the situation and alacarte
/// containers and a cause code known to `registry`.
pub fn validate_denm(denm: &Denm, strict: bool, registry: &CauseRegistry) -> ValidationReport {
    let mut c = Collector(Vec::new());
    check_management(&mut c, &denm.management);
    if let Some(situation) = &denm.situation {
        check_situation(&mut c, situation, strict.then_some(registry));
        if denm.alacarte.is_none() {
            c.push(
                "alacarte",
                "dependency",
                "alacarte container required when situation is present".into(),
            );
        }
    } else if strict {
        c.push("situation", "required", "situation container required".into());
    }
    if let Some(alacarte) = &denm.alacarte {
        check_alacarte(&mut c, alacarte);
    } else if strict && denm.situation.is_none() {
        c.push("alacarte", "required", "alacarte container required".into());
    }
    ValidationReport::from_violations(c.0)
}

fn check_management(c: &mut Collector, m: &ManagementContainer) {
    c.range(
        "management.action_id.originating_station_id",
        m.action_id.originating_station_id,
        ranges::STATION_ID,
    );
    c.range(
        "management.action_id.sequence_number",
        m.action_id.sequence_number,
        ranges::SEQUENCE_NUMBER,
    );
    c.range(
        "management.detection_time_its_ms",
        m.detection_time_its_ms,
        ranges::TIMESTAMP_ITS_MS,
    );
    c.range(
        "management.reference_time_its_ms",
        m.reference_time_its_ms,
        ranges::TIMESTAMP_ITS_MS,
    );
    if m.reference_time_its_ms < m.detection_time_its_ms {
        c.push(
            "management.reference_time_its_ms",
            "order",
            format!(
                "reference time {} precedes detection time {}",
                m.reference_time_its_ms, m.detection_time_its_ms
            ),
        );
    }
    check_position(c, "management.event_position", &m.event_position);
    if let Some(validity) = m.validity_duration_s {
        c.range("management.validity_duration_s", validity, ranges::VALIDITY_DURATION_S);
    }
    c.range("management.station_type", m.station_type, ranges::STATION_TYPE);
}

fn check_position(c: &mut Collector, prefix: &str, p: &GeoPosition) {
    c.range(&format!("{prefix}.latitude"), p.latitude, ranges::LATITUDE);
    c.range(&format!("{prefix}.longitude"), p.longitude, ranges::LONGITUDE);
    c.range(&format!("{prefix}.altitude_cm"), p.altitude_cm, ranges::ALTITUDE_CM);
}

fn check_situation(c: &mut Collector, s: &SituationContainer, registry: Option<&CauseRegistry>) {
    c.range(
        "situation.information_quality",
        s.information_quality,
        ranges::INFORMATION_QUALITY,
    );
    c.range("situation.cause_code", s.cause_code, ranges::CAUSE_CODE);
    c.range("situation.sub_cause_code", s.sub_cause_code, ranges::SUB_CAUSE_CODE);
    if let Some(registry) = registry {
        if !registry.contains(s.cause_code) {
            c.push(
                "situation.cause_code",
                "registry",
                format!("cause code {} is not registered", s.cause_code),
            );
        }
    }
}

fn check_alacarte(c: &mut Collector, a: &AlacarteContainer) {
    c.range("alacarte.number_of_lanes", a.number_of_lanes, ranges::NUMBER_OF_LANES);
    let len = a.driving_lane_status.len();
    let (min_len, max_len) = ranges::LANE_STATUS_LEN;
    if len < min_len || len > max_len {
        c.push(
            "alacarte.driving_lane_status",
            "range",
            format!("length {len} outside {min_len}..={max_len}"),
        );
    }
    if i64::try_from(len).ok() != Some(a.number_of_lanes) {
        c.push(
            "alacarte.driving_lane_status",
            "length",
            format!("length must equal number_of_lanes ({len} != {})", a.number_of_lanes),
        );
    }
    if let Some(d) = a.distance_to_event_dm {
        c.range("alacarte.distance_to_event_dm", d, ranges::DISTANCE_DM);
    }
    if let Some(s) = a.speed_limit_kmh {
        c.range("alacarte.speed_limit_kmh", s, ranges::SPEED_LIMIT_KMH);
    }
}
