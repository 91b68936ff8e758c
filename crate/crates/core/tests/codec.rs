mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use roadside_denm::denm::{ranges, Denm, SituationContainer};
use roadside_denm::uper::{decode_denm, encode_denm, encode_fragment, hex_to_payload, payload_to_hex, UperError};

fn golden(n: usize) -> (Denm, String) {
    let dir = common::fixtures().join("golden");
    let json = std::fs::read_to_string(dir.join(format!("golden_denm_{n}.json"))).unwrap();
    let hex = std::fs::read_to_string(dir.join(format!("golden_denm_{n}.uper"))).unwrap();
    (Denm::from_json_str(&json).unwrap(), hex.trim_end().to_string())
}

#[test]
fn golden_pairs_match_both_ways() {
    for n in 1..=6 {
        let (denm, hex) = golden(n);
        let payload = encode_denm(&denm).unwrap();
        assert_eq!(payload_to_hex(&payload), hex, "golden_denm_{n}");
        assert_eq!(decode_denm(&hex_to_payload(&hex).unwrap().octets).unwrap(), denm);
    }
}

#[test]
fn golden_set_covers_every_optional_combination_of_containers() {
    let shapes: Vec<(bool, bool, bool)> = (1..=6)
        .map(|n| {
            let (d, _) = golden(n);
            (
                d.management.validity_duration_s.is_some(),
                d.situation.is_some(),
                d.alacarte.is_some(),
            )
        })
        .collect();
    for wanted in [
        (false, false, false),
        (true, false, false),
        (true, false, true),
        (true, true, true),
        (false, true, true),
    ] {
        assert!(shapes.contains(&wanted), "missing shape {wanted:?}");
    }
}

#[test]
fn bare_message_is_226_bits() {
    let (denm, _) = golden(2);
    assert_eq!(encode_denm(&denm).unwrap().bit_length, 226);
}

#[test]
fn situation_fragment_hand_packed() {
    // 011 | 01011010 | 00000000 -> 0110 1011 0100 0000 000(0 0000)
    let fragment = SituationContainer {
        information_quality: 3,
        cause_code: 90,
        sub_cause_code: 0,
    };
    let payload = encode_fragment(&fragment).unwrap();
    assert_eq!(payload.bit_length, 19);
    assert_eq!(payload.octets, [0x6B, 0x40, 0x00]);
    let committed = std::fs::read_to_string(common::fixtures().join("golden/situation_fragment.uper")).unwrap();
    assert_eq!(committed.trim_end(), "6B4000");
}

#[test]
fn truncated_and_padded_payloads_are_rejected() {
    let (denm, hex) = golden(1);
    let octets = hex_to_payload(&hex).unwrap().octets;
    assert!(matches!(
        decode_denm(&octets[..octets.len() - 2]),
        Err(UperError::Truncated { .. })
    ));
    let mut extra = octets.clone();
    extra.push(0);
    assert!(matches!(decode_denm(&extra), Err(UperError::TrailingData { .. })));
    let mut dirty = octets;
    *dirty.last_mut().unwrap() |= 0x01;
    let bits = encode_denm(&denm).unwrap().bit_length;
    if !bits.is_multiple_of(8) {
        assert!(matches!(decode_denm(&dirty), Err(UperError::NonZeroPadding)));
    }
}

#[test]
fn out_of_range_values_do_not_encode() {
    let (mut denm, _) = golden(1);
    denm.alacarte.as_mut().unwrap().number_of_lanes = 14;
    assert!(matches!(encode_denm(&denm), Err(UperError::InvalidMessage(_))));
}

#[test]
fn every_lane_count_round_trips() {
    let (base, _) = golden(1);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
    for lanes in ranges::NUMBER_OF_LANES.0..=ranges::NUMBER_OF_LANES.1 {
        let mut denm = base.clone();
        let mut sample = common::random_denm(&mut rng);
        while sample.alacarte.as_ref().map(|a| a.number_of_lanes) != Some(lanes) {
            sample = common::random_denm(&mut rng);
        }
        denm.alacarte = sample.alacarte;
        let payload = encode_denm(&denm).unwrap();
        assert_eq!(decode_denm(&payload.octets).unwrap(), denm);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn round_trip(seed in any::<u64>()) {
        let denm = common::random_denm(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let payload = encode_denm(&denm).unwrap();
        prop_assert_eq!(payload.octets.len(), payload.bit_length.div_ceil(8));
        prop_assert_eq!(decode_denm(&payload.octets).unwrap(), denm);
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let denm = common::random_denm(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(Denm::from_json_str(&denm.to_json_string()).unwrap(), denm);
    }
}
