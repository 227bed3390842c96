mod common;

use lagnet_core::moments::lag_moment;
use lagnet_core::{
    laplacian_weights, offset_noise, restrict, simulate, Graph, InteractionMatrix, SimConfig,
};
use proptest::prelude::*;

fn scalar(a: f64) -> InteractionMatrix {
    laplacian_weights(&Graph::empty(1), a).unwrap()
}

#[test]
fn zero_coupling_gives_white_noise() {
    let noise = offset_noise(4, 1.0, 0.0).unwrap();
    let ts = simulate(
        &InteractionMatrix::zero(4),
        &noise,
        10_000,
        &SimConfig::new(5, 1),
    )
    .unwrap();
    let r1 = lag_moment(ts.samples(), 1, 10_000).unwrap();
    assert!(common::max_abs(&r1) <= 0.05, "{}", common::max_abs(&r1));
}

#[test]
fn scalar_stationary_variance() {
    let noise = offset_noise(1, 1.0, 0.0).unwrap();
    let ts = simulate(&scalar(0.5), &noise, 200_000, &SimConfig::new(9, 0)).unwrap();
    let var = lag_moment(ts.samples(), 0, 200_000).unwrap()[(0, 0)];
    let target = 1.0 / (1.0 - 0.25);
    assert!((var - target).abs() <= 0.03 * target, "{var}");
}

#[test]
fn halves_look_alike() {
    let a = common::random_coupling(6, 0.5, 0.8, 2);
    let noise = offset_noise(6, 1.0, 3.0).unwrap();
    let ts = simulate(&a, &noise, 100_000, &SimConfig::new(4, 0)).unwrap();
    let first = lag_moment(&ts.samples().rows(0, 50_000).into_owned(), 0, 50_000).unwrap();
    let second = lag_moment(&ts.samples().rows(50_000, 50_000).into_owned(), 0, 50_000).unwrap();
    let scale = common::max_abs(&first);
    assert!(common::max_abs(&(first - second)) <= 0.1 * scale);
}

#[test]
fn shape_and_bad_input() {
    let a = common::random_coupling(5, 0.6, 0.7, 1);
    let noise = offset_noise(5, 1.0, 0.0).unwrap();
    let ts = simulate(&a, &noise, 100, &SimConfig::new(0, 7)).unwrap();
    assert_eq!(ts.sample_count(), 107);
    assert_eq!(ts.observed(), &[0, 1, 2, 3, 4]);
    assert!(simulate(
        &a,
        &offset_noise(4, 1.0, 0.0).unwrap(),
        100,
        &SimConfig::new(0, 0)
    )
    .is_err());
    assert!(simulate(&a, &noise, 0, &SimConfig::new(0, 0)).is_err());
    assert!(restrict(&ts, &[3, 1]).is_err());
    assert!(restrict(&ts, &[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn same_seed_same_trajectory(n in 2usize..8, seed in any::<u64>(), beta in 0.0f64..10.0) {
        let a = common::random_coupling(n, 0.5, 0.8, seed);
        let noise = offset_noise(n, 1.0, beta).unwrap();
        let cfg = SimConfig::new(seed, 3);
        let x = simulate(&a, &noise, 200, &cfg).unwrap();
        let y = simulate(&a, &noise, 200, &cfg).unwrap();
        prop_assert_eq!(&x, &y);
        let z = simulate(&a, &noise, 200, &SimConfig::new(seed.wrapping_add(1), 3)).unwrap();
        prop_assert_ne!(x, z);
    }

    #[test]
    fn restriction_composes(n in 4usize..10, seed in any::<u64>()) {
        let a = common::random_coupling(n, 0.5, 0.8, seed);
        let noise = offset_noise(n, 1.0, 1.0).unwrap();
        let ts = simulate(&a, &noise, 50, &SimConfig::new(seed, 0)).unwrap();
        let mut rng = lagnet_core::seeds::rng(seed);
        let outer = common::random_subset(&mut rng, n, n - 1);
        let inner: Vec<usize> = outer.iter().copied().step_by(2).collect();
        let nested = restrict(&restrict(&ts, &outer).unwrap(), &inner).unwrap();
        let direct = restrict(&ts, &inner).unwrap();
        prop_assert_eq!(&nested, &direct);
        for (c, &node) in inner.iter().enumerate() {
            prop_assert_eq!(direct.samples().column(c), ts.samples().column(node));
        }
    }
}
