use labelnoise::noise::{corrupted_eta, corrupted_threshold, flip_probability, invert_corrupted_eta};
use proptest::prelude::*;

fn rates() -> impl Strategy<Value = (f64, f64)> {
    (0.0..0.95f64, 0.0..1.0f64).prop_map(|(total, share)| (total * share, total * (1.0 - share)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn inversion_recovers_eta(eta in 0.0..=1.0f64, (rp, rn) in rates()) {
        let bar = corrupted_eta(eta, rp, rn).unwrap();
        prop_assert!((0.0..=1.0).contains(&bar));
        let back = invert_corrupted_eta(bar, rp, rn).unwrap();
        prop_assert!((back - eta).abs() <= 1e-12);
    }

    #[test]
    fn class_conditional_noise_scales_differences(a in 0.0..=1.0f64, b in 0.0..=1.0f64, (rp, rn) in rates()) {
        let lhs = corrupted_eta(a, rp, rn).unwrap() - corrupted_eta(b, rp, rn).unwrap();
        prop_assert!((lhs - (1.0 - rp - rn) * (a - b)).abs() <= 1e-12);
    }

    #[test]
    fn threshold_moves_with_eta(eta in 0.0..=1.0f64, t in 0.0..=1.0f64, (rp, rn) in rates()) {
        let bar = corrupted_eta(eta, rp, rn).unwrap();
        let t_bar = corrupted_threshold(t, rp, rn).unwrap();
        if (eta - t).abs() > 1e-9 {
            prop_assert_eq!(eta > t, bar > t_bar);
        }
    }

    #[test]
    fn flip_probability_is_the_label_disagreement(eta in 0.0..=1.0f64, (rp, rn) in rates()) {
        let flip = flip_probability(eta, rp, rn).unwrap();
        let bar = corrupted_eta(eta, rp, rn).unwrap();
        // P(noisy label differs) = eta (1 - P(noisy + | +)) + (1 - eta) P(noisy + | -).
        let disagreement = eta * rp + (1.0 - eta) * rn;
        prop_assert!((flip - disagreement).abs() <= 1e-15);
        prop_assert!(bar >= 0.0 && flip <= 1.0);
    }
}

#[test]
fn inadmissible_rates_are_rejected() {
    assert!(corrupted_eta(0.3, 0.6, 0.4).is_err());
    assert!(invert_corrupted_eta(0.3, 0.5, 0.5).is_err());
    assert!(corrupted_eta(1.2, 0.1, 0.1).is_err());
}
