//! Lag moments `R_k`: empirical estimates from trajectories and analytic
//! values from model parameters.
//!
//! For `k >= 0` the empirical moment is `(1/n) Σ_{ℓ<n} y(ℓ+k)·y(ℓ)ᵀ`, always
//! normalized by the nominal sample count `n` (the trajectory carries the
//! trailing samples needed for the largest lag). Negative lags are defined as
//! transposes, `R_{-k} = R_kᵀ`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionMatrix;
use crate::linalg;
use crate::noise::NoiseModel;
use crate::simulate::TimeSeries;

const LYAPUNOV_TOL: f64 = 1e-13;
const LYAPUNOV_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    Empirical,
    Analytic,
}

/// A contiguous family of lag moments over an observed node set.
#[derive(Debug, Clone, PartialEq)]
pub struct LagMoments {
    min_lag: i64,
    max_lag: i64,
    matrices: Vec<DMatrix<f64>>,
    sample_count: usize,
    source: MomentSource,
    observed: Vec<usize>,
}

impl LagMoments {
    /// Assemble from a matrix per lag in `min_lag..=max_lag`.
    pub fn from_parts(
        min_lag: i64,
        max_lag: i64,
        matrices: Vec<DMatrix<f64>>,
        sample_count: usize,
        source: MomentSource,
        observed: Vec<usize>,
    ) -> Result<Self> {
        check_lag_range(min_lag, max_lag)?;
        if matrices.len() as i64 != max_lag - min_lag + 1 {
            return Err(Error::DimensionMismatch {
                expected: (max_lag - min_lag + 1) as usize,
                found: matrices.len(),
            });
        }
        let dim = observed.len();
        if let Some(bad) = matrices
            .iter()
            .find(|m| m.nrows() != dim || m.ncols() != dim)
        {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.nrows(),
            });
        }
        Ok(LagMoments {
            min_lag,
            max_lag,
            matrices,
            sample_count,
            source,
            observed,
        })
    }

    pub fn min_lag(&self) -> i64 {
        self.min_lag
    }

    pub fn max_lag(&self) -> i64 {
        self.max_lag
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> {
        self.min_lag..=self.max_lag
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.observed.len()
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn source(&self) -> MomentSource {
        self.source
    }

    pub fn get(&self, lag: i64) -> Option<&DMatrix<f64>> {
        if lag < self.min_lag || lag > self.max_lag {
            return None;
        }
        self.matrices.get((lag - self.min_lag) as usize)
    }

    pub fn require(&self, lag: i64) -> Result<&DMatrix<f64>> {
        self.get(lag).ok_or_else(|| {
            Error::invalid(format!(
                "lag {lag} outside [{}, {}]",
                self.min_lag, self.max_lag
            ))
        })
    }

    /// Matrices in lag order, paired with their lag.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &DMatrix<f64>)> {
        self.lags().zip(self.matrices.iter())
    }

    /// The same moments on a subset of the observed nodes (global ids).
    pub fn restrict(&self, s: &[usize]) -> Result<LagMoments> {
        let positions = s
            .iter()
            .map(|node| {
                self.observed
                    .iter()
                    .position(|o| o == node)
                    .ok_or_else(|| Error::invalid(format!("node {node} is not observed")))
            })
            .collect::<Result<Vec<_>>>()?;
        let matrices = self
            .matrices
            .iter()
            .map(|m| linalg::principal_submatrix(m, &positions))
            .collect();
        LagMoments::from_parts(
            self.min_lag,
            self.max_lag,
            matrices,
            self.sample_count,
            self.source,
            s.to_vec(),
        )
    }
}

fn check_lag_range(min_lag: i64, max_lag: i64) -> Result<()> {
    if min_lag > 1 {
        return Err(Error::invalid(format!(
            "smallest lag {min_lag} must be at most 1"
        )));
    }
    if max_lag < 3 {
        return Err(Error::invalid(format!(
            "largest lag {max_lag} must be at least 3"
        )));
    }
    Ok(())
}

/// `(1/n) Σ_{ℓ=0}^{n-1} y(ℓ+k)·y(ℓ)ᵀ` over the columns of a time-major sample
/// matrix. Requires `samples.nrows() >= n + k`.
pub fn lag_moment(samples: &DMatrix<f64>, k: usize, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::invalid("normalization count must be positive"));
    }
    if samples.nrows() < n + k {
        return Err(Error::InsufficientSamples {
            required: n + k,
            available: samples.nrows(),
        });
    }
    let lead = samples.rows(k, n).transpose();
    let mut out = lead * samples.rows(0, n);
    out /= n as f64;
    Ok(out)
}

/// Empirical moments for lags `d..=m` (with `d <= 1`, `m >= 3`). The
/// normalization count is the series length minus the largest absolute lag.
pub fn empirical_lag_moments(ts: &TimeSeries, d: i64, m: i64) -> Result<LagMoments> {
    check_lag_range(d, m)?;
    let reach = m.max(-d) as usize;
    let total = ts.sample_count();
    if total <= reach {
        return Err(Error::InsufficientSamples {
            required: reach + 1,
            available: total,
        });
    }
    empirical_lag_moments_with_count(ts, d, m, total - reach)
}

/// Empirical moments with an explicit normalization count `n`; the series
/// must hold at least `n + max(m, -d)` samples.
pub fn empirical_lag_moments_with_count(
    ts: &TimeSeries,
    d: i64,
    m: i64,
    n: usize,
) -> Result<LagMoments> {
    check_lag_range(d, m)?;
    let reach = m.max(-d) as usize;
    if n == 0 || ts.sample_count() < n + reach {
        return Err(Error::InsufficientSamples {
            required: n.max(1) + reach,
            available: ts.sample_count(),
        });
    }
    let lo = d.max(0) as usize;
    let hi = m.max(-d) as usize;
    let needed: Vec<usize> = (0..=hi).filter(|&k| k >= lo || (k as i64) <= -d).collect();
    let computed: Vec<(usize, DMatrix<f64>)> = needed
        .par_iter()
        .map(|&k| lag_moment(ts.samples(), k, n).map(|r| (k, r)))
        .collect::<Result<_>>()?;
    let lookup = |k: usize| {
        &computed
            .iter()
            .find(|(lag, _)| *lag == k)
            .expect("lag computed")
            .1
    };
    let matrices = (d..=m)
        .map(|k| {
            if k >= 0 {
                lookup(k as usize).clone()
            } else {
                lookup((-k) as usize).transpose()
            }
        })
        .collect();
    LagMoments::from_parts(
        d,
        m,
        matrices,
        n,
        MomentSource::Empirical,
        ts.observed().to_vec(),
    )
}

/// Stationary covariance `R0` solving `R0 = A·R0·A + Σ_eff` by fixed-point
/// iteration from `R0 = Σ_eff`, where `Σ_eff = Σ_x + σ²_ξ·I`.
pub fn stationary_covariance(a: &InteractionMatrix, noise: &NoiseModel) -> Result<DMatrix<f64>> {
    if a.dim() != noise.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: noise.dim(),
        });
    }
    Ok(solve_stein(a.entries(), &noise.effective_covariance()))
}

/// Fixed-point solver for `R = A·R·Aᵀ + Q` with `ρ(A) < 1`. Iterates until
/// the max-abs update drops below `1e-13` (relative to the solution scale
/// once entries exceed 1).
pub fn solve_stein(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let at = a.transpose();
    let mut r = q.clone();
    for _ in 0..LYAPUNOV_MAX_ITERS {
        let next = a * &r * &at + q;
        let update = linalg::max_abs(&(&next - &r));
        let scale = linalg::max_abs(&next).max(1.0);
        r = next;
        if update <= LYAPUNOV_TOL * scale {
            break;
        }
    }
    r
}

/// Model lag moment `A^|k|·R0`, transposed for negative `k`.
pub fn analytic_lag_moment(a: &InteractionMatrix, r0: &DMatrix<f64>, k: i64) -> DMatrix<f64> {
    let rk = linalg::matrix_power(a.entries(), k.unsigned_abs() as usize) * r0;
    if k >= 0 {
        rk
    } else {
        rk.transpose()
    }
}

/// Analytic moments for lags `d..=m`, restricted to the observed set `s`.
pub fn analytic_lag_moments(
    a: &InteractionMatrix,
    noise: &NoiseModel,
    s: &[usize],
    d: i64,
    m: i64,
) -> Result<LagMoments> {
    check_lag_range(d, m)?;
    if s.is_empty() || s.iter().any(|&i| i >= a.dim()) {
        return Err(Error::invalid(
            "observed set must be nonempty and within range",
        ));
    }
    let r0 = stationary_covariance(a, noise)?;
    let reach = m.max(-d) as usize;
    let mut positive = Vec::with_capacity(reach + 1);
    let mut current = r0;
    for _ in 0..=reach {
        let next = a.entries() * &current;
        positive.push(current);
        current = next;
    }
    let matrices = (d..=m)
        .map(|k| {
            let full = &positive[k.unsigned_abs() as usize];
            let sub = linalg::principal_submatrix(full, s);
            if k >= 0 {
                sub
            } else {
                sub.transpose()
            }
        })
        .collect();
    LagMoments::from_parts(d, m, matrices, 0, MomentSource::Analytic, s.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian_weights, Graph};
    use crate::noise::offset_noise;

    fn scalar_series(values: &[f64]) -> TimeSeries {
        TimeSeries::new(DMatrix::from_column_slice(values.len(), 1, values), vec![0]).unwrap()
    }

    #[test]
    fn constant_series_has_unit_moments() {
        let ts = scalar_series(&[1.0; 13]);
        let mo = empirical_lag_moments(&ts, -3, 3).unwrap();
        assert_eq!(mo.sample_count(), 10);
        for (_, m) in mo.iter() {
            assert_eq!(m[(0, 0)], 1.0);
        }
    }

    #[test]
    fn hand_computed_single_lag() {
        let samples = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        assert_eq!(lag_moment(&samples, 1, 1).unwrap()[(0, 0)], 2.0);
        assert!(matches!(
            lag_moment(&samples, 2, 1),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn negative_lags_are_transposes() {
        let samples = DMatrix::from_fn(40, 3, |r, c| ((r * 7 + c * 3) % 5) as f64 - 2.0);
        let ts = TimeSeries::new(samples, vec![0, 1, 2]).unwrap();
        let mo = empirical_lag_moments(&ts, -5, 5).unwrap();
        for k in 1..=5 {
            assert_eq!(mo.get(-k).unwrap(), &mo.get(k).unwrap().transpose());
        }
    }

    #[test]
    fn lag_range_contract() {
        let ts = scalar_series(&[1.0; 10]);
        assert!(empirical_lag_moments(&ts, 2, 5).is_err());
        assert!(empirical_lag_moments(&ts, 0, 2).is_err());
        assert!(matches!(
            empirical_lag_moments(&ts, 0, 10),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn stationary_covariance_of_scalar_ar1() {
        let a = laplacian_weights(&Graph::empty(1), 0.5).unwrap();
        let noise = offset_noise(1, 1.0, 0.0).unwrap();
        let r0 = stationary_covariance(&a, &noise).unwrap();
        assert!((r0[(0, 0)] - 4.0 / 3.0).abs() < 1e-12);
        let r3 = analytic_lag_moment(&a, &r0, 3);
        assert!((r3[(0, 0)] - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_gives_input_covariance() {
        let a = InteractionMatrix::zero(3);
        let noise = offset_noise(3, 1.0, 2.0).unwrap();
        let r0 = stationary_covariance(&a, &noise).unwrap();
        assert_eq!(&r0, noise.covariance());
        assert_eq!(analytic_lag_moment(&a, &r0, 0), r0);
        assert_eq!(analytic_lag_moment(&a, &r0, 1), DMatrix::zeros(3, 3));
    }

    #[test]
    fn triangle_fixed_point_residual() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let a = laplacian_weights(&g, 0.9).unwrap();
        let noise = offset_noise(3, 1.0, 0.0).unwrap();
        let r0 = stationary_covariance(&a, &noise).unwrap();
        let residual = a.entries() * &r0 * a.entries() + noise.covariance() - &r0;
        assert!(linalg::max_abs(&residual) <= 1e-11);
    }

    #[test]
    fn analytic_family_matches_single_lag() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let a = laplacian_weights(&g, 0.7).unwrap();
        let noise = offset_noise(4, 1.0, 1.0).unwrap();
        let r0 = stationary_covariance(&a, &noise).unwrap();
        let fam = analytic_lag_moments(&a, &noise, &[0, 1, 2, 3], -4, 4).unwrap();
        for k in -4..=4 {
            let single = analytic_lag_moment(&a, &r0, k);
            assert!(linalg::max_abs(&(fam.get(k).unwrap() - single)) < 1e-12);
        }
        let sub = fam.restrict(&[1, 3]).unwrap();
        assert_eq!(sub.get(2).unwrap()[(0, 1)], fam.get(2).unwrap()[(1, 3)]);
    }
}
