use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimators::MatrixEstimate;

pub const GMM_MAX_ITERS: usize = 500;
pub const GMM_TOL: f64 = 1e-9;
const VARIANCE_FLOOR: f64 = 1e-12;
const WEIGHT_FLOOR: f64 = 1e-16;

/// Two-component one-dimensional Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Gmm1d {
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub iterations_run: usize,
    pub final_log_likelihood: f64,
    /// Log-likelihood at the initial parameters and after every iteration.
    pub log_likelihood_trace: Vec<f64>,
}

fn log_density(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean) * (x - mean) / var)
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Gmm1d {
    fn component_log_terms(&self, x: f64) -> [f64; 2] {
        [0, 1].map(|c| self.weights[c].ln() + log_density(x, self.means[c], self.variances[c]))
    }

    pub fn log_likelihood(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .map(|&x| {
                let [a, b] = self.component_log_terms(x);
                log_sum_exp(a, b)
            })
            .sum()
    }

    /// Index of the component with the larger mean.
    pub fn upper_component(&self) -> usize {
        if self.means[1] >= self.means[0] {
            1
        } else {
            0
        }
    }

    /// Posterior probability that `x` belongs to the larger-mean component.
    pub fn upper_posterior(&self, x: f64) -> f64 {
        let terms = self.component_log_terms(x);
        let up = self.upper_component();
        (terms[up] - log_sum_exp(terms[0], terms[1])).exp()
    }
}

/// EM from means at the 10th/90th percentiles, equal weights and the overall
/// variance. Stops when the log-likelihood changes by less than `tol`.
pub fn fit_gmm(values: &[f64], max_iters: usize, tol: f64) -> Result<Gmm1d> {
    if values.len() < 4 {
        return Err(Error::Degenerate(format!(
            "need at least 4 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::Degenerate("all values are equal".into()));
    }
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var =
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count).max(VARIANCE_FLOOR);
    let mut model = Gmm1d {
        weights: [0.5, 0.5],
        means: [percentile(&sorted, 0.1), percentile(&sorted, 0.9)],
        variances: [var, var],
        iterations_run: 0,
        final_log_likelihood: 0.0,
        log_likelihood_trace: Vec::new(),
    };
    let mut ll = model.log_likelihood(values);
    model.log_likelihood_trace.push(ll);
    let mut resp = vec![0.0; values.len()];
    for iter in 1..=max_iters {
        // E-step: responsibility of component 1
        for (r, &x) in resp.iter_mut().zip(values) {
            let [a, b] = model.component_log_terms(x);
            *r = (b - log_sum_exp(a, b)).exp();
        }
        // M-step
        let n1: f64 = resp.iter().sum();
        let n0 = count - n1;
        let mut means = model.means;
        if n0 > 0.0 {
            means[0] = values
                .iter()
                .zip(&resp)
                .map(|(x, r)| (1.0 - r) * x)
                .sum::<f64>()
                / n0;
        }
        if n1 > 0.0 {
            means[1] = values.iter().zip(&resp).map(|(x, r)| r * x).sum::<f64>() / n1;
        }
        let mut variances = model.variances;
        if n0 > 0.0 {
            variances[0] = values
                .iter()
                .zip(&resp)
                .map(|(x, r)| (1.0 - r) * (x - means[0]).powi(2))
                .sum::<f64>()
                / n0;
        }
        if n1 > 0.0 {
            variances[1] = values
                .iter()
                .zip(&resp)
                .map(|(x, r)| r * (x - means[1]).powi(2))
                .sum::<f64>()
                / n1;
        }
        let w1 = (n1 / count).clamp(WEIGHT_FLOOR, 1.0 - WEIGHT_FLOOR);
        model.weights = [1.0 - w1, w1];
        model.means = means;
        model.variances = variances.map(|v| v.max(VARIANCE_FLOOR));
        model.iterations_run = iter;
        let next = model.log_likelihood(values);
        model.log_likelihood_trace.push(next);
        let change = (next - ll).abs();
        ll = next;
        if change < tol {
            break;
        }
    }
    model.final_log_likelihood = ll;
    Ok(model)
}

/// Classify every pair of an estimate: connected iff the larger-mean
/// component's posterior at the (sign-oriented) symmetrized value exceeds 0.5.
pub fn gmm_classify(model: &Gmm1d, est: &MatrixEstimate) -> DMatrix<bool> {
    let n = est.dim();
    let sign = est.kind.orientation();
    DMatrix::from_fn(n, n, |i, j| {
        i != j
            && model.upper_posterior(sign * 0.5 * (est.values[(i, j)] + est.values[(j, i)])) > 0.5
    })
}
