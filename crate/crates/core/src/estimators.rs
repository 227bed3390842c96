//! Matrix-valued structure estimators and the analytic error and feasibility
//! characterization of the `R̂_1 − R̂_3` estimator.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionMatrix;
use crate::linalg;
use crate::moments::LagMoments;
use crate::noise::NoiseModel;
use crate::pairs;

const SERIES_TOL: f64 = 1e-14;
const SERIES_MAX_TERMS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `[R̂_1]_S`
    OneLag,
    /// `[R̂_1]_S − [R̂_3]_S`
    Nig,
    /// `([R̂_0]_S)^{-1}`
    Precision,
    /// `[R̂_1]_S·([R̂_0]_S)^{-1}`
    Granger,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::OneLag,
        EstimatorKind::Nig,
        EstimatorKind::Precision,
        EstimatorKind::Granger,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::OneLag => "one_lag",
            EstimatorKind::Nig => "nig",
            EstimatorKind::Precision => "precision",
            EstimatorKind::Granger => "granger",
        }
    }

    /// Sign that makes larger values mean "connected". Couplings are
    /// nonnegative, which shows up as negative precision-matrix entries.
    pub fn orientation(self) -> f64 {
        match self {
            EstimatorKind::Precision => -1.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown estimator {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEstimate {
    pub values: DMatrix<f64>,
    pub kind: EstimatorKind,
    pub sample_count: usize,
    pub observed: Vec<usize>,
}

impl MatrixEstimate {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Symmetrized off-diagonal values per unordered pair, signed so that
    /// larger means connected.
    pub fn pair_scores(&self) -> Vec<f64> {
        let sign = self.kind.orientation();
        pairs::symmetrized_values(&self.values)
            .into_iter()
            .map(|v| sign * v)
            .collect()
    }
}

/// `max − min`.
pub fn osc(values: &[f64]) -> Result<f64> {
    let max = values.iter().copied().reduce(f64::max);
    let min = values.iter().copied().reduce(f64::min);
    match (max, min) {
        (Some(max), Some(min)) => Ok(max - min),
        _ => Err(Error::invalid("oscillation of an empty sequence")),
    }
}

pub fn estimate(moments: &LagMoments, kind: EstimatorKind) -> Result<MatrixEstimate> {
    let values = match kind {
        EstimatorKind::OneLag => moments.require(1)?.clone(),
        EstimatorKind::Nig => moments.require(1)? - moments.require(3)?,
        EstimatorKind::Precision => linalg::regularized_inverse(moments.require(0)?, Some(0))?,
        EstimatorKind::Granger => {
            moments.require(1)? * linalg::regularized_inverse(moments.require(0)?, Some(0))?
        }
    };
    Ok(MatrixEstimate {
        values,
        kind,
        sample_count: moments.sample_count(),
        observed: moments.observed().to_vec(),
    })
}

fn check_subset(a: &InteractionMatrix, s: &[usize]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::invalid("observed set is empty"));
    }
    if let Some(&bad) = s.iter().find(|&&i| i >= a.dim()) {
        return Err(Error::invalid(format!(
            "node {bad} outside {} nodes",
            a.dim()
        )));
    }
    Ok(())
}

/// Limiting error of the normalized `R̂_1 − R̂_3` estimator on `s`:
///
/// ```text
/// E_S = (1/σ²_gap)·[ βρ·1_S 1_Sᵀ + [(I − A²)·Σ_{i≥0} A^{i+1} Σ̄ A^i]_S ]
/// ```
///
/// `σ²_gap` includes any exogenous variance. The series stops once a term's
/// max-abs entry drops below `1e-14`.
pub fn error_matrix(
    a: &InteractionMatrix,
    noise: &NoiseModel,
    s: &[usize],
) -> Result<DMatrix<f64>> {
    check_subset(a, s)?;
    if a.dim() != noise.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: noise.dim(),
        });
    }
    let n = a.dim();
    let am = a.entries();
    let mut term = am * noise.sigma_bar();
    let mut series = DMatrix::zeros(n, n);
    for _ in 0..SERIES_MAX_TERMS {
        series += &term;
        if linalg::max_abs(&term) < SERIES_TOL {
            break;
        }
        term = am * term * am;
    }
    let shaped = (DMatrix::identity(n, n) - am * am) * series;
    let mut e = linalg::principal_submatrix(&shaped, s);
    e.add_scalar_mut(noise.beta() * a.rho());
    e /= noise.effective_gap();
    Ok(e)
}

/// Both sides of the feasibility inequality plus the resulting error spread.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub error_matrix: DMatrix<f64>,
    /// Oscillation of the off-diagonals of the error matrix.
    pub osc_error: f64,
    /// `Osc(Off(Σ_x)) / σ²_gap`
    pub lhs: f64,
    /// `A⁺_min (1 − ρ²) / (2ρ(ρ² + 1))`
    pub rhs: f64,
    pub feasible: bool,
    /// `A⁺_min / 2`
    pub consistency_bound: f64,
}

impl FeasibilityReport {
    /// Flat `key=value` record, one field per line.
    pub fn to_record(&self) -> String {
        format!(
            "lhs={}\nrhs={}\nfeasible={}\nosc_error={}\nconsistency_bound={}\nstructurally_consistent={}\n",
            self.lhs,
            self.rhs,
            self.feasible,
            self.osc_error,
            self.consistency_bound,
            self.osc_error <= self.consistency_bound
        )
    }
}

fn feasibility_rhs(a_plus_min: Option<f64>, rho: f64) -> f64 {
    match a_plus_min {
        Some(amin) if rho > 0.0 => amin * (1.0 - rho * rho) / (2.0 * rho * (rho * rho + 1.0)),
        _ => f64::INFINITY,
    }
}

pub fn feasibility_margin(
    a: &InteractionMatrix,
    noise: &NoiseModel,
    s: &[usize],
) -> Result<FeasibilityReport> {
    let error_matrix = error_matrix(a, noise, s)?;
    let off = linalg::off_diagonals(&error_matrix);
    let osc_error = if off.is_empty() { 0.0 } else { osc(&off)? };
    let a_plus_min = a.a_plus_min_on(s);
    let lhs = noise.off_diagonal_osc() / noise.effective_gap();
    let rhs = feasibility_rhs(a_plus_min, a.rho());
    Ok(FeasibilityReport {
        error_matrix,
        osc_error,
        lhs,
        rhs,
        feasible: lhs <= rhs,
        consistency_bound: a_plus_min.map_or(f64::INFINITY, |v| v / 2.0),
    })
}

/// Smallest exogenous variance `σ²_ξ` for which the feasibility inequality
/// holds over the full node set: `max(0, Osc(Off(Σ_x))/rhs − σ²_gap)`,
/// rounded up to the first double that satisfies the inequality.
pub fn min_exogenous_variance(a: &InteractionMatrix, noise: &NoiseModel) -> f64 {
    let spread = noise.off_diagonal_osc();
    let gap = noise.sigma_gap_sq();
    let rhs = feasibility_rhs(a.a_plus_min(), a.rho());
    if spread / gap <= rhs {
        return 0.0;
    }
    let mut xi = (spread / rhs - gap).max(0.0);
    while spread / (gap + xi) > rhs {
        xi = xi.next_up();
    }
    xi
}

/// Pairs whose symmetrized estimate exceeds `threshold`; diagonal is false.
pub fn threshold_support(est: &MatrixEstimate, threshold: f64) -> DMatrix<bool> {
    let n = est.dim();
    DMatrix::from_fn(n, n, |i, j| {
        i != j && 0.5 * (est.values[(i, j)] + est.values[(j, i)]) > threshold
    })
}
