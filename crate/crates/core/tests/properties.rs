//! Randomized invariants for the smoothing kernel, the propagation chain,
//! and the normal toolkit.

use proptest::prelude::*;

use dpinfer::data_model::MeansWithCovariance;
use dpinfer::inference::{confidence_interval, phi, phi_inv};
use dpinfer::propagation::{dp_point_and_variance, dp_raw, smoothed_extremes};
use dpinfer::smoothing::{rsmax, rsmin, softmax, softmax_jacobian, softmin, Alpha};

fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 1..8)
}

fn alpha_strategy() -> impl Strategy<Value = f64> {
    0.1..1000.0f64
}

fn means_strategy() -> impl Strategy<Value = MeansWithCovariance> {
    (2usize..6)
        .prop_flat_map(|g| {
            (
                prop::collection::vec(0.01..0.99f64, g),
                prop::collection::vec(0.1..1.0f64, g),
                1000u64..1_000_000,
            )
        })
        .prop_map(|(s, w, n)| {
            let total: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|x| x / total).collect();
            let sigma2 = s
                .iter()
                .zip(&p)
                .map(|(&si, &pi)| si * (1.0 - si) / pi)
                .collect();
            MeansWithCovariance {
                labels: (0..s.len()).map(|i| format!("g{i}")).collect(),
                s_hat: s,
                p_hat: p,
                sigma2,
                n,
                degenerate_groups: vec![],
            }
        })
}

proptest! {
    #[test]
    fn rsmax_within_bounds(a in vec_strategy(), av in alpha_strategy()) {
        let alpha = Alpha::new(av).unwrap();
        let mx = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = rsmax(&a, alpha).unwrap();
        prop_assert!(v >= mx);
        prop_assert!(v <= mx + (a.len() as f64).ln() / av + 1e-12);
    }

    #[test]
    fn rsmin_mirrors_rsmax(a in vec_strategy(), av in alpha_strategy()) {
        let alpha = Alpha::new(av).unwrap();
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let lhs = rsmin(&a, alpha).unwrap();
        let rhs = -rsmax(&neg, alpha).unwrap();
        prop_assert_eq!(lhs, rhs);
        let mn = a.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(lhs <= mn);
        prop_assert!(lhs >= mn - (a.len() as f64).ln() / av - 1e-12);
    }

    #[test]
    fn shift_equivariance(a in vec_strategy(), av in alpha_strategy(), c in -5.0..5.0f64) {
        let alpha = Alpha::new(av).unwrap();
        let shifted: Vec<f64> = a.iter().map(|x| x + c).collect();
        let lhs = rsmax(&shifted, alpha).unwrap();
        let rhs = rsmax(&a, alpha).unwrap() + c;
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn softmax_is_simplex_weight(a in vec_strategy(), av in alpha_strategy()) {
        let alpha = Alpha::new(av).unwrap();
        for w in [softmax(&a, alpha).unwrap(), softmin(&a, alpha).unwrap()] {
            let sum: f64 = w.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for &x in &w {
                prop_assert!(x >= 0.0 && x <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_rows_sum_to_zero(a in vec_strategy(), av in 0.1..100.0f64) {
        let alpha = Alpha::new(av).unwrap();
        let j = softmax_jacobian(&a, alpha).unwrap();
        for (i, row) in j.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            prop_assert!(sum.abs() < 1e-10 * av);
            for (k, &x) in row.iter().enumerate() {
                prop_assert!((x - j[k][i]).abs() < 1e-12 * av); // symmetry
            }
        }
    }

    #[test]
    fn propagated_variance_nonnegative(m in means_strategy(), av in 0.5..200.0f64) {
        let e = smoothed_extremes(&m, Alpha::new(av).unwrap()).unwrap();
        prop_assert!(e.cov[0][0] >= 0.0);
        prop_assert!(e.cov[1][1] >= 0.0);
        prop_assert_eq!(e.cov[0][1], e.cov[1][0]);
        let est = dp_point_and_variance(&e).unwrap();
        prop_assert!(est.variance >= 0.0);
        prop_assert!(est.se.is_finite());
    }

    #[test]
    fn raw_dp_in_unit_interval(m in means_strategy()) {
        let est = dp_raw(&m).unwrap();
        prop_assert!(est.dp >= 0.0 && est.dp <= 1.0);
        prop_assert!(est.variance >= 0.0);
    }

    #[test]
    fn ci_brackets_the_estimate(m in means_strategy(), level in 0.5..0.999f64) {
        let est = dp_raw(&m).unwrap();
        let ci = confidence_interval(&est, level).unwrap();
        prop_assert!(ci.lower <= est.dp && est.dp <= ci.upper);
        prop_assert!(ci.clipped_lower >= 0.0 && ci.clipped_upper <= 1.0);
        prop_assert!(ci.clipped_lower <= ci.clipped_upper);
    }

    #[test]
    fn normal_cdf_quantile_consistent(p in 0.001..0.999f64, z in -6.0..6.0f64) {
        let c = phi(z);
        prop_assert!(c > 0.0 && c < 1.0);
        prop_assert!((phi(phi_inv(p)) - p).abs() < 1e-12);
        // monotonicity
        prop_assert!(phi(z + 0.01) > c);
    }
}
