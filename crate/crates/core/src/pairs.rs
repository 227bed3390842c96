//! Unordered node-pair bookkeeping shared by classifiers and experiments.

use nalgebra::DMatrix;

/// Pairs `(i, j)` with `i < j < dim`, lexicographic.
pub fn unordered_pairs(dim: usize) -> Vec<(usize, usize)> {
    (0..dim)
        .flat_map(|i| ((i + 1)..dim).map(move |j| (i, j)))
        .collect()
}

/// `(v_ij + v_ji) / 2` for every unordered pair.
pub fn symmetrized_values(m: &DMatrix<f64>) -> Vec<f64> {
    unordered_pairs(m.nrows())
        .into_iter()
        .map(|(i, j)| 0.5 * (m[(i, j)] + m[(j, i)]))
        .collect()
}

/// Upper-triangle readout of a symmetric boolean matrix.
pub fn upper_labels(m: &DMatrix<bool>) -> Vec<bool> {
    unordered_pairs(m.nrows())
        .into_iter()
        .map(|(i, j)| m[(i, j)])
        .collect()
}

/// Symmetric boolean matrix from per-unordered-pair decisions.
pub fn from_upper_labels(dim: usize, labels: &[bool]) -> DMatrix<bool> {
    let mut out = DMatrix::from_element(dim, dim, false);
    for ((i, j), &l) in unordered_pairs(dim).into_iter().zip(labels) {
        out[(i, j)] = l;
        out[(j, i)] = l;
    }
    out
}

/// Pairs `(i, j)` with `i != j`, row-major. This is the row order of every
/// per-pair feature set.
pub fn ordered_pairs(dim: usize) -> Vec<(usize, usize)> {
    (0..dim)
        .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}
