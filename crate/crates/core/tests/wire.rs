use dradar_core::dist::WireMessage;
use dradar_core::C64;
use proptest::prelude::*;

fn values(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((any::<f64>(), any::<f64>()).prop_map(|(a, b)| C64::new(a, b)), n)
}

fn message() -> impl Strategy<Value = WireMessage> {
    let sensorish = (any::<u32>(), any::<u64>(), prop::collection::vec(any::<u32>(), 0..20))
        .prop_flat_map(|(q, k, idx)| {
            let n = idx.len();
            (Just(q), Just(k), Just(idx), values(n), any::<bool>())
        })
        .prop_map(|(sensor, round, indices, values, notice)| {
            if notice {
                WireMessage::ScreeningNotice { sensor, round, removed: indices, frozen: values }
            } else {
                WireMessage::Contribution { sensor, round, indices, values }
            }
        });
    let broadcast = (any::<u64>(), any::<bool>(), any::<bool>(), prop::collection::vec(any::<u32>(), 0..20))
        .prop_flat_map(|(k, c, t, idx)| {
            let n = idx.len();
            (Just(k), Just(c), Just(t), Just(idx), values(n), values(n), values(n))
        })
        .prop_map(|(round, converged, trigger, indices, global, aggregate, dual)| WireMessage::GlobalBroadcast {
            round,
            converged,
            trigger,
            indices,
            global,
            aggregate,
            dual,
        });
    let terminate = (any::<u64>(), any::<bool>()).prop_map(|(round, converged)| WireMessage::Terminate { round, converged });
    prop_oneof![sensorish, broadcast, terminate]
}

/// Equality on bit patterns, so NaN payloads count too.
fn bits(m: &WireMessage) -> Vec<u8> {
    m.encode().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn encode_decode_roundtrip(msg in message()) {
        let bytes = msg.encode().unwrap();
        prop_assert_eq!(bytes.len(), msg.encoded_len());
        let back = WireMessage::decode(&bytes).unwrap();
        prop_assert_eq!(bits(&back), bytes);
        prop_assert_eq!(back.round(), msg.round());
    }

    #[test]
    fn every_truncation_is_rejected(msg in message()) {
        let bytes = msg.encode().unwrap();
        for cut in 0..bytes.len() {
            prop_assert!(WireMessage::decode(&bytes[..cut]).is_err());
        }
        let mut longer = bytes.clone();
        longer.push(0);
        prop_assert!(WireMessage::decode(&longer).is_err());
    }
}
