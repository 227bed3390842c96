//! Trajectories of `y(n+1) = A·y(n) + x(n+1) [+ ξ(n+1)]`.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionMatrix;
use crate::noise::{GaussianSampler, NoiseModel};
use crate::seeds;

pub const DEFAULT_BURN_IN: usize = 1000;

/// Time-major samples over an observed node set.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: DMatrix<f64>,
    observed: Vec<usize>,
}

impl TimeSeries {
    /// Wrap a `time × |observed|` sample matrix.
    pub fn new(samples: DMatrix<f64>, observed: Vec<usize>) -> Result<Self> {
        if samples.nrows() == 0 {
            return Err(Error::invalid("time series needs at least one sample"));
        }
        if observed.is_empty() {
            return Err(Error::invalid("observed set is empty"));
        }
        if observed.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("observed set must be strictly increasing"));
        }
        if samples.ncols() != observed.len() {
            return Err(Error::DimensionMismatch {
                expected: observed.len(),
                found: samples.ncols(),
            });
        }
        Ok(TimeSeries { samples, observed })
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn sample_count(&self) -> usize {
        self.samples.nrows()
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub burn_in: usize,
    /// Extra trailing samples so that lags up to this value can be
    /// normalized by the nominal sample count.
    pub extra_tail: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(seed: u64, extra_tail: usize) -> Self {
        SimConfig {
            burn_in: DEFAULT_BURN_IN,
            extra_tail,
            seed,
        }
    }
}

/// Run the recursion from `y(0) = 0` and keep `n + extra_tail` samples after
/// the burn-in. All nodes are observed.
pub fn simulate(
    a: &InteractionMatrix,
    noise: &NoiseModel,
    n: usize,
    cfg: &SimConfig,
) -> Result<TimeSeries> {
    simulate_with_covariance(a, noise.covariance(), noise.xi_variance(), n, cfg)
}

/// Same recursion for an arbitrary PSD input covariance (including the
/// degenerate all-zero one).
pub fn simulate_with_covariance(
    a: &InteractionMatrix,
    covariance: &DMatrix<f64>,
    xi_variance: f64,
    n: usize,
    cfg: &SimConfig,
) -> Result<TimeSeries> {
    let dim = a.dim();
    if covariance.nrows() != dim || covariance.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: covariance.nrows(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    if xi_variance.is_nan() || xi_variance < 0.0 {
        return Err(Error::invalid("exogenous variance must be nonnegative"));
    }
    let sampler = GaussianSampler::new(covariance)?;
    let xi_sd = xi_variance.sqrt();
    let keep = n + cfg.extra_tail;
    let total = cfg.burn_in + keep;
    let mut rng = seeds::rng(cfg.seed);
    let mut samples = DMatrix::zeros(keep, dim);
    let mut y = DVector::zeros(dim);
    let mut next = DVector::zeros(dim);
    let mut scratch = DVector::zeros(dim);
    let mut x = DVector::zeros(dim);
    let entries = a.entries();
    for step in 0..total {
        if step > 0 {
            entries.mul_to(&y, &mut next);
            sampler.sample_into(&mut rng, &mut scratch, &mut x);
            next += &x;
            if xi_sd > 0.0 {
                for v in next.iter_mut() {
                    *v += xi_sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            std::mem::swap(&mut y, &mut next);
        }
        if step >= cfg.burn_in {
            samples.row_mut(step - cfg.burn_in).tr_copy_from(&y);
        }
    }
    TimeSeries::new(samples, (0..dim).collect())
}

/// Keep only the columns of the nodes in `s` (global ids, strictly increasing,
/// all currently observed).
pub fn restrict(ts: &TimeSeries, s: &[usize]) -> Result<TimeSeries> {
    if s.is_empty() {
        return Err(Error::invalid("cannot restrict to an empty node set"));
    }
    if s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "restriction set must be strictly increasing",
        ));
    }
    let mut cols = Vec::with_capacity(s.len());
    for &node in s {
        let pos = ts
            .observed
            .binary_search(&node)
            .map_err(|_| Error::invalid(format!("node {node} is not observed")))?;
        cols.push(pos);
    }
    let samples = ts.samples.select_columns(cols.iter());
    TimeSeries::new(samples, s.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian_weights, Graph};
    use crate::noise::offset_noise;

    fn small_system() -> (InteractionMatrix, NoiseModel) {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        (
            laplacian_weights(&g, 0.8).unwrap(),
            offset_noise(3, 1.0, 0.5).unwrap(),
        )
    }

    #[test]
    fn zero_noise_stays_at_rest() {
        let (a, _) = small_system();
        let ts =
            simulate_with_covariance(&a, &DMatrix::zeros(3, 3), 0.0, 50, &SimConfig::new(1, 3))
                .unwrap();
        assert_eq!(ts.sample_count(), 53);
        assert!(ts.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_per_seed() {
        let (a, noise) = small_system();
        let cfg = SimConfig::new(5, 2);
        assert_eq!(
            simulate(&a, &noise, 100, &cfg).unwrap(),
            simulate(&a, &noise, 100, &cfg).unwrap()
        );
        let other = simulate(&a, &noise, 100, &SimConfig::new(6, 2)).unwrap();
        assert_ne!(simulate(&a, &noise, 100, &cfg).unwrap(), other);
    }

    #[test]
    fn burn_in_zero_starts_at_origin() {
        let (a, noise) = small_system();
        let cfg = SimConfig {
            burn_in: 0,
            extra_tail: 0,
            seed: 1,
        };
        let ts = simulate(&a, &noise, 10, &cfg).unwrap();
        assert!(ts.samples().row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (a, _) = small_system();
        let noise = offset_noise(4, 1.0, 0.0).unwrap();
        assert!(matches!(
            simulate(&a, &noise, 10, &SimConfig::new(0, 0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn restrict_projects_columns() {
        let (a, noise) = small_system();
        let ts = simulate(&a, &noise, 20, &SimConfig::new(2, 0)).unwrap();
        let all = restrict(&ts, &[0, 1, 2]).unwrap();
        assert_eq!(all, ts);
        let sub = restrict(&ts, &[0, 2]).unwrap();
        assert_eq!(sub.observed(), &[0, 2]);
        assert_eq!(sub.samples().column(1), ts.samples().column(2));
        let twice = restrict(&restrict(&ts, &[0, 2]).unwrap(), &[2]).unwrap();
        assert_eq!(twice, restrict(&ts, &[2]).unwrap());
    }

    #[test]
    fn restrict_errors() {
        let (a, noise) = small_system();
        let ts = simulate(&a, &noise, 5, &SimConfig::new(2, 0)).unwrap();
        assert!(restrict(&ts, &[]).is_err());
        assert!(restrict(&ts, &[3]).is_err());
        assert!(restrict(&ts, &[2, 0]).is_err());
        let sub = restrict(&ts, &[0, 2]).unwrap();
        assert!(restrict(&sub, &[1]).is_err());
    }
}
