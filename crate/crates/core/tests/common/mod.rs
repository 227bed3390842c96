//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use lagnet_core::seeds::{self, Rng};
use lagnet_core::{
    erdos_renyi, jittered_noise, laplacian_weights, offset_noise, DMatrix, Error,
    InteractionMatrix, NoiseModel,
};
use rand::seq::SliceRandom;
use rand::Rng as _;

/// Stationary covariance by a direct solve of `vec(R) = vec(Q) + (A⊗A)·vec(R)`.
pub fn lyapunov_direct(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let system = DMatrix::identity(n * n, n * n) - a.kronecker(a);
    let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
    let vec_r = system.lu().solve(&rhs).expect("stable system");
    DMatrix::from_column_slice(n, n, vec_r.as_slice())
}

/// `A^k · R0` by repeated multiplication.
pub fn lag_moment_oracle(a: &DMatrix<f64>, r0: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = r0.clone();
    for _ in 0..k {
        out = a * out;
    }
    out
}

pub fn submatrix(m: &DMatrix<f64>, s: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(s.len(), s.len(), |i, j| m[(s[i], s[j])])
}

/// Gauss–Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut inv = DMatrix::<f64>::identity(n, n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[(x, col)].abs().total_cmp(&a[(y, col)].abs()))
            .unwrap();
        a.swap_rows(col, pivot);
        inv.swap_rows(col, pivot);
        let p = a[(col, col)];
        assert!(p.abs() > 1e-14, "singular matrix");
        for j in 0..n {
            a[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[(r, col)];
                for j in 0..n {
                    a[(r, j)] -= f * a[(col, j)];
                    inv[(r, j)] -= f * inv[(col, j)];
                }
            }
        }
    }
    inv
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Random sorted subset of `0..n` with `size` elements.
pub fn random_subset(rng: &mut Rng, n: usize, size: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let mut s = ids[..size].to_vec();
    s.sort_unstable();
    s
}

/// Erdős–Rényi graph weighted by the Laplacian rule; reseeds until the graph
/// has at least one edge.
pub fn random_coupling(n: usize, p: f64, rho: f64, seed: u64) -> InteractionMatrix {
    for attempt in 0.. {
        let g = erdos_renyi(n, p, seeds::derive(seed, &[attempt])).unwrap();
        if g.edge_count() > 0 {
            return laplacian_weights(&g, rho).unwrap();
        }
    }
    unreachable!()
}

/// Offset noise, or jittered noise with a random spread below the gap.
pub fn random_noise(rng: &mut Rng, n: usize, jittered: bool) -> NoiseModel {
    let gap = rng.random_range(0.5..2.0);
    let beta = rng.random_range(0.0..10.0);
    if !jittered {
        return offset_noise(n, gap, beta).unwrap();
    }
    loop {
        let jitter = rng.random_range(0.05..0.45) * gap;
        match jittered_noise(n, gap, beta, jitter, rng.random()) {
            Ok(noise) => return noise,
            Err(Error::JitterRejected { .. }) => continue,
            Err(e) => panic!("{e}"),
        }
    }
}
