//! Spatially colored, temporally white Gaussian noise with homogeneous variance.
//!
//! Every covariance `Σ` handled here has a constant diagonal `σ²` and
//! off-diagonals strictly below it, which makes the split
//!
//! ```text
//! Σ = σ²_gap·I + β·11ᵀ + Σ̄
//! ```
//!
//! unique: `σ²_gap` is `σ²` minus the largest off-diagonal, `β` the mean
//! off-diagonal, and `Σ̄` whatever remains.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::seeds;

const DIAGONAL_TOL: f64 = 1e-10;
const DOMINANCE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const EIGEN_CLAMP: f64 = 1e-12;
const JITTER_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    covariance: DMatrix<f64>,
    sigma_sq: f64,
    sigma_gap_sq: f64,
    beta: f64,
    sigma_bar: DMatrix<f64>,
    xi_variance: f64,
}

impl NoiseModel {
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn sigma_gap_sq(&self) -> f64 {
        self.sigma_gap_sq
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma_bar(&self) -> &DMatrix<f64> {
        &self.sigma_bar
    }

    /// Variance of the isotropic exogenous excitation (0 when absent).
    pub fn xi_variance(&self) -> f64 {
        self.xi_variance
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    /// Attach an isotropic exogenous excitation of variance `xi_variance`.
    pub fn with_xi_variance(mut self, xi_variance: f64) -> Result<Self> {
        if !(xi_variance >= 0.0 && xi_variance.is_finite()) {
            return Err(Error::invalid(format!(
                "exogenous variance {xi_variance} must be finite and >= 0"
            )));
        }
        self.xi_variance = xi_variance;
        Ok(self)
    }

    /// Variance gap seen by the dynamics once the exogenous term is included.
    pub fn effective_gap(&self) -> f64 {
        self.sigma_gap_sq + self.xi_variance
    }

    /// Total input covariance `Σ_x + σ²_ξ·I`.
    pub fn effective_covariance(&self) -> DMatrix<f64> {
        let n = self.dim();
        &self.covariance + DMatrix::identity(n, n) * self.xi_variance
    }

    /// `Osc(Off(Σ_x))`; zero when there are no off-diagonals.
    pub fn off_diagonal_osc(&self) -> f64 {
        let off = linalg::off_diagonals(&self.covariance);
        match (
            off.iter().copied().reduce(f64::max),
            off.iter().copied().reduce(f64::min),
        ) {
            (Some(max), Some(min)) => max - min,
            _ => 0.0,
        }
    }

    /// Max-abs residual of `Σ − (σ²_gap·I + β·11ᵀ + Σ̄)`.
    pub fn reconstruction_residual(&self) -> f64 {
        let n = self.dim();
        let rebuilt = DMatrix::identity(n, n) * self.sigma_gap_sq
            + DMatrix::from_element(n, n, self.beta)
            + &self.sigma_bar;
        linalg::max_abs(&(&self.covariance - rebuilt))
    }
}

/// Split a homogeneous, strictly diagonally dominated covariance into
/// `(σ²_gap, β, Σ̄)`.
pub fn decompose_covariance(cov: &DMatrix<f64>) -> Result<NoiseModel> {
    let n = cov.nrows();
    if n == 0 || !cov.is_square() {
        return Err(Error::invalid(
            "covariance must be a nonempty square matrix",
        ));
    }
    if !linalg::is_symmetric(cov, 0.0) {
        return Err(Error::invalid("covariance is not symmetric"));
    }
    let diag = cov.diagonal();
    let dmax = diag.max();
    let dmin = diag.min();
    if dmax - dmin > DIAGONAL_TOL {
        return Err(Error::HeterogeneousDiagonal {
            spread: dmax - dmin,
        });
    }
    let sigma_sq = diag.mean();
    if sigma_sq <= 0.0 {
        return Err(Error::invalid(format!(
            "diagonal variance {sigma_sq} must be positive"
        )));
    }
    let mut max_off = f64::NEG_INFINITY;
    let mut sum_off = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = cov[(i, j)];
            if v >= sigma_sq - DOMINANCE_TOL {
                return Err(Error::DominanceViolated {
                    row: i,
                    col: j,
                    value: v,
                    diagonal: sigma_sq,
                });
            }
            max_off = max_off.max(v);
            sum_off += v;
        }
    }
    let min_eigenvalue = linalg::min_symmetric_eigenvalue(cov);
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    let (sigma_gap_sq, beta) = if n == 1 {
        (sigma_sq, 0.0)
    } else {
        (sigma_sq - max_off, sum_off / (n * (n - 1)) as f64)
    };
    let sigma_bar =
        cov - DMatrix::identity(n, n) * sigma_gap_sq - DMatrix::from_element(n, n, beta);
    Ok(NoiseModel {
        covariance: cov.clone(),
        sigma_sq,
        sigma_gap_sq,
        beta,
        sigma_bar,
        xi_variance: 0.0,
    })
}

/// `σ²_gap·I + β·11ᵀ`, the family swept in the experiments (`Σ̄ = 0`).
pub fn offset_noise(n_nodes: usize, sigma_gap_sq: f64, beta: f64) -> Result<NoiseModel> {
    if n_nodes == 0 {
        return Err(Error::invalid("noise needs at least one node"));
    }
    if !(sigma_gap_sq > 0.0 && sigma_gap_sq.is_finite()) {
        return Err(Error::invalid(format!(
            "variance gap {sigma_gap_sq} must be positive"
        )));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("offset {beta} must be nonnegative")));
    }
    let covariance = DMatrix::identity(n_nodes, n_nodes) * sigma_gap_sq
        + DMatrix::from_element(n_nodes, n_nodes, beta);
    let beta = if n_nodes == 1 { 0.0 } else { beta };
    let sigma_gap_sq = covariance[(0, 0)]
        - if n_nodes == 1 {
            0.0
        } else {
            covariance[(0, 1)]
        };
    Ok(NoiseModel {
        sigma_sq: covariance[(0, 0)],
        sigma_bar: DMatrix::zeros(n_nodes, n_nodes),
        covariance,
        sigma_gap_sq,
        beta,
        xi_variance: 0.0,
    })
}

/// Offset noise plus a random, mean-free off-diagonal perturbation whose
/// largest magnitude (before centering) is `jitter`. The perturbation is the
/// off-diagonal part of a seeded Gram matrix `G·Gᵀ`. Draws that break
/// positive semidefiniteness or strict dominance are rejected and redrawn.
pub fn jittered_noise(
    n_nodes: usize,
    sigma_gap_sq: f64,
    beta: f64,
    jitter: f64,
    seed: u64,
) -> Result<NoiseModel> {
    let base = offset_noise(n_nodes, sigma_gap_sq, beta)?;
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(Error::invalid(format!(
            "jitter {jitter} must be nonnegative"
        )));
    }
    if jitter == 0.0 || n_nodes < 2 {
        return Ok(base);
    }
    let n = n_nodes;
    let mut rng = seeds::rng(seed);
    for _ in 0..JITTER_ATTEMPTS {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut p = &g * g.transpose();
        p.fill_diagonal(0.0);
        let scale = linalg::max_abs(&p);
        if scale == 0.0 {
            continue;
        }
        p *= jitter / scale;
        let mean = p.sum() / (n * (n - 1)) as f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    p[(i, j)] -= mean;
                }
            }
        }
        let p = (&p + p.transpose()) * 0.5;
        let cov = base.covariance() + p;
        if let Ok(model) = decompose_covariance(&cov) {
            return Ok(model);
        }
    }
    Err(Error::JitterRejected {
        attempts: JITTER_ATTEMPTS,
    })
}

/// Draws `N(0, Σ)` through the symmetric square root of `Σ`. Eigenvalues
/// below `1e-12` are clamped to zero, so semidefinite inputs are fine.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    root: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() {
            return Err(Error::invalid("covariance must be square"));
        }
        let eig = cov.clone().symmetric_eigen();
        let sqrt_vals = eig
            .eigenvalues
            .map(|v| if v < EIGEN_CLAMP { 0.0 } else { v.sqrt() });
        let v = &eig.eigenvectors;
        let root = v * DMatrix::from_diagonal(&sqrt_vals) * v.transpose();
        Ok(GaussianSampler { root })
    }

    pub fn dim(&self) -> usize {
        self.root.nrows()
    }

    pub fn root(&self) -> &DMatrix<f64> {
        &self.root
    }

    /// Overwrite `out` with one draw; `scratch` holds the standard normals.
    pub fn sample_into(
        &self,
        rng: &mut seeds::Rng,
        scratch: &mut DVector<f64>,
        out: &mut DVector<f64>,
    ) {
        for z in scratch.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        self.root.mul_to(scratch, out);
    }

    pub fn sample(&self, rng: &mut seeds::Rng) -> DVector<f64> {
        let n = self.dim();
        let mut scratch = DVector::zeros(n);
        let mut out = DVector::zeros(n);
        self.sample_into(rng, &mut scratch, &mut out);
        out
    }
}

/// `count` i.i.d. draws from `N(0, Σ_x)`.
pub fn sample_noise(model: &NoiseModel, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let sampler = GaussianSampler::new(model.covariance()).expect("noise covariance is square");
    let mut rng = seeds::rng(seed);
    (0..count).map(|_| sampler.sample(&mut rng)).collect()
}
