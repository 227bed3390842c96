//! Shared fixtures for the criterion benches under `benches/`.

use lagnet_core::{
    erdos_renyi, jittered_noise, laplacian_weights, simulate, InteractionMatrix, NoiseModel,
    SimConfig, TimeSeries,
};

/// Random graph with `n` nodes (edge probability 0.5), Laplacian weights at
/// 0.8 and jittered offset noise.
pub fn model(n: usize, seed: u64) -> (InteractionMatrix, NoiseModel) {
    let g = erdos_renyi(n, 0.5, seed).expect("graph");
    let a = laplacian_weights(&g, 0.8).expect("weights");
    let noise = jittered_noise(n, 1.0, 5.0, 0.2, seed).expect("noise");
    (a, noise)
}

/// Trajectory of `samples` steps plus `tail` extra ones.
pub fn trajectory(n: usize, samples: usize, tail: usize, seed: u64) -> TimeSeries {
    let (a, noise) = model(n, seed);
    simulate(&a, &noise, samples, &SimConfig::new(seed, tail)).expect("trajectory")
}
