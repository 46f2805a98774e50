//! Confidence score and threshold controller invariants.

use awd_core::adaptive::{
    hypertuner_update, q_from_weights, should_retry, AdaptiveConfig, HypertunerState,
    THRESHOLD_FLOOR,
};
use proptest::prelude::*;

/// Direct evaluation without the overflow-avoiding rescale.
fn q_direct(weights: &[f64], total: f64, alpha: f64) -> f64 {
    weights.iter().map(|w| w.powf(alpha)).sum::<f64>().powf(1.0 / alpha) / total
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..50.0, 0..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn q_matches_direct_formula(w in weights(), extra in 0.1f64..100.0, alpha in 1.0f64..6.0) {
        let total = w.iter().sum::<f64>() + extra;
        let q = q_from_weights(w.iter().copied(), total, alpha).unwrap();
        let expected = q_direct(&w, total, alpha);
        prop_assert!((q - expected).abs() <= 1e-9 * expected.max(1.0), "{q} vs {expected}");
    }

    #[test]
    fn q_is_scale_invariant(w in weights(), extra in 0.1f64..100.0, k in 1e-3f64..1e3, alpha in 1.0f64..6.0) {
        let total = w.iter().sum::<f64>() + extra;
        let a = q_from_weights(w.iter().copied(), total, alpha).unwrap();
        let b = q_from_weights(w.iter().map(|x| x * k), total * k, alpha).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "{a} vs {b}");
    }

    #[test]
    fn q_lies_in_unit_interval(w in weights(), extra in 0.0f64..100.0, alpha in 1.0f64..6.0) {
        let total = w.iter().sum::<f64>() + extra;
        prop_assume!(total > 0.0);
        let q = q_from_weights(w.iter().copied(), total, alpha).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&q));
    }

    #[test]
    fn merging_clusters_never_lowers_q(w in proptest::collection::vec(0.0f64..50.0, 2..12), alpha in 1.0f64..6.0) {
        let total = w.iter().sum::<f64>() + 1.0;
        let before = q_from_weights(w.iter().copied(), total, alpha).unwrap();
        let mut merged = w[2..].to_vec();
        merged.push(w[0] + w[1]);
        let after = q_from_weights(merged, total, alpha).unwrap();
        prop_assert!(after >= before - 1e-12, "{after} < {before}");
    }

    #[test]
    fn threshold_stays_positive_and_finite(
        c0 in 1e-6f64..10.0,
        delta in 0.01f64..0.99,
        r_min in 0.0f64..0.5,
        gap in 0.0f64..0.5,
        decisions in proptest::collection::vec(any::<bool>(), 1..400),
    ) {
        let mut s = HypertunerState::new(c0, delta, r_min, r_min + gap).unwrap();
        for retried in decisions {
            let c = s.update(retried);
            prop_assert!(c.is_finite());
            prop_assert!(c >= THRESHOLD_FLOOR);
        }
    }

    #[test]
    fn update_follows_the_band_rule(
        c in 1e-6f64..10.0,
        delta in 0.01f64..0.99,
        n_proc in 0u64..100,
        frac in 0.0f64..=1.0,
        retried in any::<bool>(),
    ) {
        let n_retry = (n_proc as f64 * frac).floor() as u64;
        let s = HypertunerState { c, c0: c, delta, r_min: 0.2, r_max: 0.3, n_proc, n_retry };
        let next = hypertuner_update(&s, retried);
        let n = n_proc + 1;
        let k = n_retry + u64::from(retried);
        let r = k as f64 / n as f64;
        let expected = if r > 0.3 {
            c * (1.0 + delta)
        } else if r < 0.2 {
            (c * (1.0 - delta)).max(THRESHOLD_FLOOR)
        } else {
            c
        };
        prop_assert_eq!(next.n_proc, n);
        prop_assert_eq!(next.n_retry, k);
        prop_assert!((next.c - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn retry_is_strictly_above_threshold(c in 1e-6f64..1.0, q in 0.0f64..1.0) {
        let s = HypertunerState::new(c, 0.1, 0.2, 0.3).unwrap();
        prop_assert_eq!(should_retry(q, &s), q > c);
        prop_assert!(!should_retry(c, &s));
    }
}

#[test]
fn dead_zone_holds_threshold() {
    let mut s = HypertunerState::new(0.01f64, 0.1, 0.2, 0.3).unwrap();
    // One retry in four: the running rate stays within [0.2, 0.3] once n >= 14.
    let mut trace = Vec::new();
    for i in 0..200 {
        trace.push(s.update(i % 4 == 0));
    }
    assert!(trace[13..].iter().all(|&c| c == trace[13]), "{trace:?}");
    assert!(trace[13] > 0.01);
}

#[test]
fn sustained_retries_raise_and_quiet_lowers() {
    let mut up = HypertunerState::new(0.01f64, 0.1, 0.2, 0.3).unwrap();
    for _ in 0..10 {
        up.update(true);
    }
    assert!((up.c - 0.01 * 1.1f64.powi(10)).abs() < 1e-12);

    let mut down = HypertunerState::new(0.01f64, 0.1, 0.2, 0.3).unwrap();
    for _ in 0..1000 {
        down.update(false);
    }
    assert_eq!(down.c, THRESHOLD_FLOOR);
}

#[test]
fn invalid_controller_parameters_are_rejected() {
    assert!(HypertunerState::new(0.0f64, 0.1, 0.2, 0.3).is_err());
    assert!(HypertunerState::new(0.01f64, 1.0, 0.2, 0.3).is_err());
    assert!(HypertunerState::new(0.01f64, 0.1, 0.4, 0.3).is_err());
    let cfg = AdaptiveConfig::<f64> {
        target_window: 2,
        ..Default::default()
    };
    assert!(cfg.validate().is_err());
}
