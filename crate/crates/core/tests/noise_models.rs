mod common;

use common::median;
use lagnet_core::{decompose_covariance, jittered_noise, offset_noise, sample_noise, DMatrix};
use nalgebra::DVector;
use proptest::prelude::*;

fn empirical_covariance(samples: &[DVector<f64>]) -> DMatrix<f64> {
    let n = samples[0].len();
    let mut c = DMatrix::zeros(n, n);
    for s in samples {
        c += s * s.transpose();
    }
    c / samples.len() as f64
}

#[test]
fn scalar_sample_variance_band() {
    let model = offset_noise(1, 4.0, 0.0).unwrap();
    let s = sample_noise(&model, 100_000, 17);
    let var = empirical_covariance(&s)[(0, 0)];
    assert!((3.9..=4.1).contains(&var), "{var}");
}

#[test]
fn offset_cross_covariance_band() {
    let model = offset_noise(2, 1.0, 1.0).unwrap();
    let s = sample_noise(&model, 100_000, 23);
    let c = empirical_covariance(&s);
    assert!((0.97..=1.03).contains(&c[(0, 1)]), "{}", c[(0, 1)]);
    assert!((1.94..=2.06).contains(&c[(0, 0)]));
}

#[test]
fn empirical_covariance_converges() {
    let model = jittered_noise(5, 1.0, 2.0, 0.3, 4).unwrap();
    let deviation = |count: usize| -> f64 {
        let errs: Vec<f64> = (0..10)
            .map(|seed| {
                common::max_abs(
                    &(empirical_covariance(&sample_noise(&model, count, seed))
                        - model.covariance()),
                )
            })
            .collect();
        median(&errs)
    };
    let (e3, e4, e5) = (deviation(1_000), deviation(10_000), deviation(100_000));
    assert!(e5 < e4 && e4 < e3, "{e3} {e4} {e5}");
}

#[test]
fn jitter_spread_bound_and_rejection() {
    let m = jittered_noise(10, 1.0, 2.0, 0.05, 8).unwrap();
    assert!(m.off_diagonal_osc() <= 2.0 * 0.05 + 1e-15);
    assert!(jittered_noise(5, 0.01, 0.0, 10.0, 1).is_err());
    let extreme = offset_noise(50, 1.0, 50.0).unwrap();
    assert_eq!(extreme.covariance()[(0, 0)], 51.0);
    assert_eq!(extreme.covariance()[(3, 7)], 50.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_round_trip(n in 2usize..15, gap in 0.1f64..5.0, beta in 0.0f64..20.0, frac in 0.0f64..0.45, seed in any::<u64>()) {
        let m = jittered_noise(n, gap, beta, frac * gap, seed);
        prop_assume!(m.is_ok());
        let m = m.unwrap();
        let back = decompose_covariance(m.covariance()).unwrap();
        prop_assert!((back.sigma_gap_sq() - m.sigma_gap_sq()).abs() <= 1e-12 * (1.0 + beta));
        prop_assert!((back.beta() - m.beta()).abs() <= 1e-12 * (1.0 + beta));
        prop_assert!(common::max_abs(&(back.sigma_bar() - m.sigma_bar())) <= 1e-12 * (1.0 + beta));
        // covariance = gap·I + beta·11ᵀ + sigma_bar
        let rebuilt = DMatrix::identity(n, n) * m.sigma_gap_sq() + DMatrix::from_element(n, n, m.beta()) + m.sigma_bar();
        prop_assert!(common::max_abs(&(rebuilt - m.covariance())) <= 1e-12 * (1.0 + beta));
        // homogeneous diagonal, strictly dominant, mean-free residual, PSD
        let cov = m.covariance();
        let mut off_sum = 0.0;
        for i in 0..n {
            prop_assert!((cov[(i, i)] - m.sigma_sq()).abs() <= 1e-12 * (1.0 + beta));
            for j in 0..n {
                if i != j {
                    prop_assert!(cov[(i, j)] < m.sigma_sq());
                    off_sum += m.sigma_bar()[(i, j)];
                }
            }
        }
        prop_assert!(off_sum.abs() / ((n * (n - 1)) as f64) <= 1e-12 * (1.0 + beta));
        prop_assert!(cov.clone().symmetric_eigen().eigenvalues.min() >= -1e-10);
    }

    #[test]
    fn offset_noise_has_flat_off_diagonals(n in 1usize..30, gap in 0.1f64..5.0, beta in 0.0f64..50.0) {
        let m = offset_noise(n, gap, beta).unwrap();
        prop_assert_eq!(m.off_diagonal_osc(), 0.0);
    }
}
