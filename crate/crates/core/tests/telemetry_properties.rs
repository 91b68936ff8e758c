use proptest::prelude::*;
use roadside_denm::providers::Stage;
use roadside_denm::telemetry::{aggregate, totals_for, RequestRecord};

fn record() -> impl Strategy<Value = RequestRecord> {
    (
        0u8..3,
        any::<bool>(),
        prop::option::weighted(0.8, 0i64..10_000),
        0i64..60_000,
    )
        .prop_map(|(image, extract, tokens, latency)| RequestRecord {
            image_id: format!("img{image}"),
            stage: if extract { Stage::Extract } else { Stage::Detect },
            model_id: "m".into(),
            total_tokens: tokens,
            latency_ms: latency,
            timestamp_ms: 0,
        })
}

proptest! {
    #[test]
    fn aggregate_ignores_order(mut records in prop::collection::vec(record(), 1..80), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let before = aggregate(&records, "m").unwrap();
        records.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(aggregate(&records, "m").unwrap(), before);
    }

    #[test]
    fn totals_merge_like_concatenation(a in prop::collection::vec(record(), 0..40),
                                       b in prop::collection::vec(record(), 0..40)) {
        let joined: Vec<_> = a.iter().chain(&b).cloned().collect();
        prop_assert_eq!(totals_for(&a, "m").merge(totals_for(&b, "m")), totals_for(&joined, "m"));
    }

    #[test]
    fn token_mean_uses_known_values_only(records in prop::collection::vec(record(), 1..80)) {
        let stats = aggregate(&records, "m").unwrap();
        let known: Vec<i64> = records.iter().filter_map(|r| r.total_tokens).collect();
        prop_assert_eq!(stats.unknown_token_count as usize, records.len() - known.len());
        match stats.avg_tokens_per_request {
            None => prop_assert!(known.is_empty()),
            Some(mean) => {
                let expected = known.iter().sum::<i64>() as f64 / known.len() as f64;
                prop_assert!((mean - expected).abs() < 1e-9);
            }
        }
        let latency = records.iter().map(|r| r.latency_ms).sum::<i64>() as f64 / records.len() as f64 / 1000.0;
        prop_assert!((stats.avg_latency_s - latency).abs() <= 0.005 + 1e-9);
    }
}
