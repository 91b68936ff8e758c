use super::bits::{
    read_constrained_int, read_sized_bitstring, write_constrained_int, write_sized_bitstring, BitSink, BitSource,
};
use super::{UperError, UperPayload};
use crate::denm::{
    ranges, validate_denm, ActionId, AlacarteContainer, CauseRegistry, Denm, GeoPosition, LaneStatus,
    ManagementContainer, SituationContainer, TrafficFlowRule,
};

/// A type with a fixed unaligned-PER layout.
pub trait PerCodec: Sized {
    fn encode_to(&self, sink: &mut BitSink) -> Result<(), UperError>;
    fn decode_from(src: &mut BitSource<'_>) -> Result<Self, UperError>;
}

fn put(sink: &mut BitSink, value: i64, (lb, ub): (i64, i64)) -> Result<(), UperError> {
    write_constrained_int(sink, value, lb, ub)
}

fn get(src: &mut BitSource<'_>, path: &str, (lb, ub): (i64, i64)) -> Result<i64, UperError> {
    read_constrained_int(src, lb, ub).map_err(|e| e.at(path))
}

fn flag(src: &mut BitSource<'_>, path: &str) -> Result<bool, UperError> {
    src.read_bit().map_err(|e| e.at(path))
}

impl PerCodec for GeoPosition {
    fn encode_to(&self, sink: &mut BitSink) -> Result<(), UperError> {
        put(sink, self.latitude, ranges::LATITUDE)?;
        put(sink, self.longitude, ranges::LONGITUDE)?;
        put(sink, self.altitude_cm, ranges::ALTITUDE_CM)
    }

    fn decode_from(src: &mut BitSource<'_>) -> Result<Self, UperError> {
        Ok(GeoPosition {
            latitude: get(src, "management.event_position.latitude", ranges::LATITUDE)?,
            longitude: get(src, "management.event_position.longitude", ranges::LONGITUDE)?,
            altitude_cm: get(src, "management.event_position.altitude_cm", ranges::ALTITUDE_CM)?,
        })
    }
}

impl PerCodec for ManagementContainer {
    fn encode_to(&self, sink: &mut BitSink) -> Result<(), UperError> {
        sink.write_bit(self.validity_duration_s.is_some());
        put(sink, self.action_id.originating_station_id, ranges::STATION_ID)?;
        put(sink, self.action_id.sequence_number, ranges::SEQUENCE_NUMBER)?;
        put(sink, self.detection_time_its_ms, ranges::TIMESTAMP_ITS_MS)?;
        put(sink, self.reference_time_its_ms, ranges::TIMESTAMP_ITS_MS)?;
        self.event_position.encode_to(sink)?;
        if let Some(validity) = self.validity_duration_s {
            put(sink, validity, ranges::VALIDITY_DURATION_S)?;
        }
        put(sink, self.station_type, ranges::STATION_TYPE)
    }

    fn decode_from(src: &mut BitSource<'_>) -> Result<Self, UperError> {
        let has_validity = flag(src, "management.validity_duration_s.present")?;
        let action_id = ActionId {
            originating_station_id: get(src, "management.action_id.originating_station_id", ranges::STATION_ID)?,
            sequence_number: get(src, "management.action_id.sequence_number", ranges::SEQUENCE_NUMBER)?,
        };
        let detection_time_its_ms = get(src, "management.detection_time_its_ms", ranges::TIMESTAMP_ITS_MS)?;
        let reference_time_its_ms = get(src, "management.reference_time_its_ms", ranges::TIMESTAMP_ITS_MS)?;
        let event_position = GeoPosition::decode_from(src)?;
        let validity_duration_s = if has_validity {
            Some(get(src, "management.validity_duration_s", ranges::VALIDITY_DURATION_S)?)
        } else {
            None
        };
        let station_type = get(src, "management.station_type", ranges::STATION_TYPE)?;
        Ok(ManagementContainer {
            action_id,
            detection_time_its_ms,
            reference_time_its_ms,
            event_position,
            validity_duration_s,
            station_type,
        })
    }
}

impl PerCodec for SituationContainer {
    fn encode_to(&self, sink: &mut BitSink) -> Result<(), UperError> {
        put(sink, self.information_quality, ranges::INFORMATION_QUALITY)?;
        put(sink, self.cause_code, ranges::CAUSE_CODE)?;
        put(sink, self.sub_cause_code, ranges::SUB_CAUSE_CODE)
    }

    fn decode_from(src: &mut BitSource<'_>) -> Result<Self, UperError> {
        Ok(SituationContainer {
            information_quality: get(src, "situation.information_quality", ranges::INFORMATION_QUALITY)?,
            cause_code: get(src, "situation.cause_code", ranges::CAUSE_CODE)?,
            sub_cause_code: get(src, "situation.sub_cause_code", ranges::SUB_CAUSE_CODE)?,
        })
    }
}

impl PerCodec for AlacarteContainer {
    fn encode_to(&self, sink: &mut BitSink) -> Result<(), UperError> {
        sink.write_bit(self.distance_to_event_dm.is_some());
        sink.write_bit(self.speed_limit_kmh.is_some());
        sink.write_bit(self.traffic_flow_rule.is_some());
        put(sink, self.number_of_lanes, ranges::NUMBER_OF_LANES)?;
        let (min_len, max_len) = ranges::LANE_STATUS_LEN;
        write_sized_bitstring(sink, self.driving_lane_status.bits(), min_len, max_len)?;
        if let Some(distance) = self.distance_to_event_dm {
            put(sink, distance, ranges::DISTANCE_DM)?;
        }
        if let Some(speed) = self.speed_limit_kmh {
            put(sink, speed, ranges::SPEED_LIMIT_KMH)?;
        }
        if let Some(rule) = self.traffic_flow_rule {
            put(sink, rule.index(), (0, 3))?;
        }
        Ok(())
    }

    fn decode_from(src: &mut BitSource<'_>) -> Result<Self, UperError> {
        let has_distance = flag(src, "alacarte.distance_to_event_dm.present")?;
        let has_speed = flag(src, "alacarte.speed_limit_kmh.present")?;
        let has_rule = flag(src, "alacarte.traffic_flow_rule.present")?;
        let number_of_lanes = get(src, "alacarte.number_of_lanes", ranges::NUMBER_OF_LANES)?;
        let (min_len, max_len) = ranges::LANE_STATUS_LEN;
        let bits = read_sized_bitstring(src, min_len, max_len).map_err(|e| e.at("alacarte.driving_lane_status"))?;
        let distance_to_event_dm = if has_distance {
            Some(get(src, "alacarte.distance_to_event_dm", ranges::DISTANCE_DM)?)
        } else {
            None
        };
        let speed_limit_kmh = if has_speed {
            Some(get(src, "alacarte.speed_limit_kmh", ranges::SPEED_LIMIT_KMH)?)
        } else {
            None
        };
        let traffic_flow_rule = if has_rule {
            let index = get(src, "alacarte.traffic_flow_rule", (0, 3))?;
            Some(TrafficFlowRule::from_index(index).expect("two-bit index is always a rule"))
        } else {
            None
        };
        Ok(AlacarteContainer {
            number_of_lanes,
            driving_lane_status: LaneStatus::from_bits(bits),
            distance_to_event_dm,
            speed_limit_kmh,
            traffic_flow_rule,
        })
    }
}

impl PerCodec for Denm {
    fn encode_to(&self, sink: &mut BitSink) -> Result<(), UperError> {
        sink.write_bit(self.situation.is_some());
        sink.write_bit(self.alacarte.is_some());
        self.management.encode_to(sink)?;
        if let Some(situation) = &self.situation {
            situation.encode_to(sink)?;
        }
        if let Some(alacarte) = &self.alacarte {
            alacarte.encode_to(sink)?;
        }
        Ok(())
    }

    fn decode_from(src: &mut BitSource<'_>) -> Result<Self, UperError> {
        let has_situation = flag(src, "situation.present")?;
        let has_alacarte = flag(src, "alacarte.present")?;
        let management = ManagementContainer::decode_from(src)?;
        let situation = if has_situation {
            Some(SituationContainer::decode_from(src)?)
        } else {
            None
        };
        let alacarte = if has_alacarte {
            Some(AlacarteContainer::decode_from(src)?)
        } else {
            None
        };
        Ok(Denm {
            management,
            situation,
            alacarte,
        })
    }
}

/// Encodes any single layout unit, zero-padding the final octet.
pub fn encode_fragment<T: PerCodec>(value: &T) -> Result<UperPayload, UperError> {
    let mut sink = BitSink::new();
    value.encode_to(&mut sink)?;
    Ok(UperPayload::from_sink(sink))
}

/// Decodes one unit and checks that only zero padding follows it.
pub fn decode_fragment<T: PerCodec>(octets: &[u8]) -> Result<T, UperError> {
    let mut src = BitSource::new(octets);
    let value = T::decode_from(&mut src)?;
    let remaining = src.remaining();
    if remaining >= 8 {
        return Err(UperError::TrailingData { count: remaining / 8 });
    }
    if src.read_bits(remaining as u32)? != 0 {
        return Err(UperError::NonZeroPadding);
    }
    Ok(value)
}

/// Encodes a DENM after checking it against every non-strict invariant.
pub fn encode_denm(denm: &Denm) -> Result<UperPayload, UperError> {
    let report = validate_denm(denm, false, CauseRegistry::bundled_ref());
    if !report.valid {
        return Err(UperError::InvalidMessage(report));
    }
    encode_fragment(denm)
}

pub fn decode_denm(octets: &[u8]) -> Result<Denm, UperError> {
    decode_fragment(octets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denm::parse_lane_status;

    #[test]
    fn situation_fragment_octets() {
        let situation = SituationContainer {
            information_quality: 3,
            cause_code: 90,
            sub_cause_code: 0,
        };
        let payload = encode_fragment(&situation).unwrap();
        assert_eq!(payload.bit_length, 19);
        assert_eq!(payload.octets, vec![0x6B, 0x40, 0x00]);
        let back: SituationContainer = decode_fragment(&[0x6B, 0x40, 0x00]).unwrap();
        assert_eq!(back, situation);
    }

    fn bare() -> Denm {
        Denm {
            management: ManagementContainer {
                action_id: ActionId {
                    originating_station_id: 1,
                    sequence_number: 2,
                },
                detection_time_its_ms: 10,
                reference_time_its_ms: 20,
                event_position: GeoPosition::unavailable(),
                validity_duration_s: None,
                station_type: 15,
            },
            situation: None,
            alacarte: None,
        }
    }

    #[test]
    fn bare_message_length() {
        let payload = encode_denm(&bare()).unwrap();
        // 1 + 32 + 16 + 42 + 42 + 31 + 32 + 20 + 8
        assert_eq!(payload.bit_length, 2 + 224);
        assert_eq!(payload.octets[0] & 0xC0, 0);
        assert_eq!(decode_denm(&payload.octets).unwrap(), bare());
    }

    #[test]
    fn rejects_invalid_and_dirty_input() {
        let mut d = bare();
        d.management.reference_time_its_ms = 5;
        assert!(matches!(encode_denm(&d), Err(UperError::InvalidMessage(_))));

        let mut octets = encode_denm(&bare()).unwrap().octets;
        *octets.last_mut().unwrap() |= 0x01;
        assert_eq!(decode_denm(&octets), Err(UperError::NonZeroPadding));

        let mut octets = encode_denm(&bare()).unwrap().octets;
        octets.push(0);
        assert_eq!(decode_denm(&octets), Err(UperError::TrailingData { count: 1 }));

        assert!(matches!(
            decode_denm(&[]),
            Err(UperError::Truncated { field, .. }) if field == "situation.present"
        ));
    }

    #[test]
    fn full_round_trip() {
        let mut d = bare();
        d.management.validity_duration_s = Some(600);
        d.situation = Some(SituationContainer {
            information_quality: 7,
            cause_code: 255,
            sub_cause_code: 0,
        });
        d.alacarte = Some(AlacarteContainer {
            number_of_lanes: 13,
            driving_lane_status: parse_lane_status("1010101010101").unwrap(),
            distance_to_event_dm: Some(65_535),
            speed_limit_kmh: Some(1),
            traffic_flow_rule: Some(TrafficFlowRule::PassToRight),
        });
        let payload = encode_denm(&d).unwrap();
        assert_eq!(decode_denm(&payload.octets).unwrap(), d);
    }
}
