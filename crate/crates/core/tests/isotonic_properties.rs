use labelnoise::isotonic::{lpav, pav};
use proptest::prelude::*;

fn sample() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-3.0..3.0f64, n).prop_map(|mut s| {
                s.sort_by(f64::total_cmp);
                s
            }),
            prop::collection::vec(0.0..=1.0f64, n),
        )
    })
}

proptest! {
    #[test]
    fn pav_is_monotone_and_preserves_the_mean((scores, targets) in sample()) {
        let fit = pav(&scores, &targets).unwrap();
        let v = fit.values();
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        prop_assert!((mean(v) - mean(&targets)).abs() <= 1e-10);
        for pair in scores.windows(2).zip(v.windows(2)) {
            if pair.0[0] == pair.0[1] {
                prop_assert_eq!(pair.1[0], pair.1[1]);
            }
        }
    }

    #[test]
    fn lpav_respects_the_slope_bound((scores, targets) in sample(), lipschitz in 0.0..5.0f64) {
        let fit = lpav(&scores, &targets, lipschitz).unwrap();
        let v = fit.values();
        for (s, u) in scores.windows(2).zip(v.windows(2)) {
            prop_assert!(u[1] - u[0] >= -1e-10);
            prop_assert!(u[1] - u[0] <= lipschitz * (s[1] - s[0]) + 1e-9);
        }
        prop_assert!(fit.sse(&targets) + 1e-10 >= pav(&scores, &targets).unwrap().sse(&targets));
    }

    #[test]
    fn loose_bound_gives_the_pav_fit((scores, targets) in sample()) {
        let plain = pav(&scores, &targets).unwrap();
        let loose = lpav(&scores, &targets, f64::INFINITY).unwrap();
        prop_assert_eq!(plain.values(), loose.values());
    }
}

#[test]
fn unsorted_scores_are_rejected() {
    assert!(pav(&[1.0, 0.0], &[0.0, 1.0]).is_err());
    assert!(pav(&[0.0, 1.0], &[0.0]).is_err());
}
