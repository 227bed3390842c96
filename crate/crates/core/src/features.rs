//! Per-pair feature vectors built from lag moments.
//!
//! For an ordered pair `(i, j)` of observed nodes:
//! * F reads entry `(i, j)` of every lag moment `R_D..R_M`,
//! * T reads entry `(i, j)` of every inverse `([R_k]_S)^{-1}`,
//! * K is F followed by T.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::LagMoments;
use crate::pairs;

const DEGENERATE_STD: f64 = 1e-15;
/// Spreads below this fraction of a column's magnitude are rounding noise.
const DEGENERATE_REL_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    F,
    T,
    K,
}

/// Per-dimension standardization parameters (population standard deviation,
/// zero for columns that are constant up to rounding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Fit on a set of equal-length rows (at least two).
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Scaler> {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        if rows.len() < 2 {
            return Err(Error::Degenerate(format!(
                "scaler needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let dim = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let count = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((acc, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let mut magnitude = vec![0.0f64; dim];
        for r in &rows {
            for (acc, v) in magnitude.iter_mut().zip(r.iter()) {
                *acc = acc.max(v.abs());
            }
        }
        // a constant column keeps std 0 and is only centered
        let std = var
            .into_iter()
            .zip(magnitude)
            .map(|(v, mag)| {
                let s = (v / count).sqrt();
                if s < DEGENERATE_STD || s <= DEGENERATE_REL_STD * mag {
                    0.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Scaler { mean, std })
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| {
                if *s < DEGENERATE_STD {
                    v - m
                } else {
                    (v - m) / s
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub kind: FeatureKind,
    pub min_lag: i64,
    pub max_lag: i64,
    /// Global ids of the observed nodes; pairs index into this list.
    pub observed: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    pub vectors: Vec<Vec<f64>>,
    pub labels: Option<Vec<bool>>,
    pub scaler: Option<Scaler>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Length of every feature vector.
    pub fn width(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn with_labels(mut self, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// CSV with `pair_i,pair_j,label,k_0..`. Pair ids are global node ids;
    /// the label column is empty when unlabeled.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair_i,pair_j,label");
        for c in 0..self.width() {
            let _ = write!(out, ",k_{c}");
        }
        out.push('\n');
        for (row, &(i, j)) in self.pairs.iter().enumerate() {
            let _ = write!(out, "{},{},", self.observed[i], self.observed[j]);
            if let Some(labels) = &self.labels {
                out.push_str(if labels[row] { "1" } else { "0" });
            }
            for v in &self.vectors[row] {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

fn per_pair(
    moments: &LagMoments,
    kind: FeatureKind,
    mats: &[nalgebra::DMatrix<f64>],
) -> FeatureSet {
    let pairs = pairs::ordered_pairs(moments.dim());
    let vectors = pairs
        .iter()
        .map(|&(i, j)| mats.iter().map(|m| m[(i, j)]).collect())
        .collect();
    FeatureSet {
        kind,
        min_lag: moments.min_lag(),
        max_lag: moments.max_lag(),
        observed: moments.observed().to_vec(),
        pairs,
        vectors,
        labels: None,
        scaler: None,
    }
}

/// Lag-moment entries per pair, in lag order `D..=M`.
pub fn build_f(moments: &LagMoments) -> FeatureSet {
    let mats: Vec<_> = moments.iter().map(|(_, m)| m.clone()).collect();
    per_pair(moments, FeatureKind::F, &mats)
}

/// Inverse-lag-moment entries per pair, with the ridge fallback applied to
/// ill-conditioned lags.
pub fn build_t(moments: &LagMoments) -> Result<FeatureSet> {
    let mats = moments
        .iter()
        .map(|(k, m)| linalg::regularized_inverse(m, Some(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_pair(moments, FeatureKind::T, &mats))
}

/// F followed by T for every pair. Arguments must be an F set and a T set
/// over the same pairs, in that order.
pub fn build_k(f: &FeatureSet, t: &FeatureSet) -> Result<FeatureSet> {
    if f.kind != FeatureKind::F || t.kind != FeatureKind::T {
        return Err(Error::invalid(
            "build_k expects an F set followed by a T set",
        ));
    }
    if f.pairs != t.pairs || f.observed != t.observed {
        return Err(Error::PairMismatch);
    }
    let vectors = f
        .vectors
        .iter()
        .zip(&t.vectors)
        .map(|(a, b)| a.iter().chain(b.iter()).copied().collect())
        .collect();
    Ok(FeatureSet {
        kind: FeatureKind::K,
        min_lag: f.min_lag,
        max_lag: f.max_lag,
        observed: f.observed.clone(),
        pairs: f.pairs.clone(),
        vectors,
        labels: f.labels.clone().or_else(|| t.labels.clone()),
        scaler: None,
    })
}

/// Standardize every dimension over the pair population and keep the scaler.
pub fn fit_scaler(fs: &FeatureSet) -> Result<FeatureSet> {
    let scaler = Scaler::fit(fs.vectors.iter().map(Vec::as_slice))?;
    apply_scaler(fs, &scaler)
}

pub fn apply_scaler(fs: &FeatureSet, scaler: &Scaler) -> Result<FeatureSet> {
    let vectors = fs
        .vectors
        .iter()
        .map(|v| scaler.transform_row(v))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureSet {
        vectors,
        scaler: Some(scaler.clone()),
        ..fs.clone()
    })
}

/// Remove additive per-node effects from every dimension: each value
/// `v_ij` becomes `v_ij − r_i − c_j + g`, with `r_i`, `c_j` the row and column
/// means over off-diagonal pairs and `g` the overall mean. A constant shift of
/// a whole lag matrix leaves the result unchanged; shifts shared by all pairs
/// touching one node are removed up to an `O(1/n)` remainder (the diagonal is
/// missing). Needs all ordered pairs of at least 3 nodes.
pub fn center_node_effects(fs: &FeatureSet) -> Result<FeatureSet> {
    let n = fs.observed.len();
    if n < 3 {
        return Err(Error::invalid(
            "node centering needs at least 3 observed nodes",
        ));
    }
    if fs.pairs.len() != n * (n - 1) {
        return Err(Error::PairMismatch);
    }
    let width = fs.width();
    let mut row = vec![vec![0.0; width]; n];
    let mut col = vec![vec![0.0; width]; n];
    let mut all = vec![0.0; width];
    for (&(i, j), v) in fs.pairs.iter().zip(&fs.vectors) {
        for (c, &x) in v.iter().enumerate() {
            row[i][c] += x;
            col[j][c] += x;
            all[c] += x;
        }
    }
    let per_node = (n - 1) as f64;
    let total = (n * (n - 1)) as f64;
    let vectors = fs
        .pairs
        .iter()
        .zip(&fs.vectors)
        .map(|(&(i, j), v)| {
            v.iter()
                .enumerate()
                .map(|(c, &x)| x - row[i][c] / per_node - col[j][c] / per_node + all[c] / total)
                .collect()
        })
        .collect();
    Ok(FeatureSet {
        vectors,
        ..fs.clone()
    })
}
