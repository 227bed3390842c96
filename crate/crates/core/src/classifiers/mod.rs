//! Decision engines: a two-component Gaussian mixture over matrix-estimate
//! off-diagonals and a feedforward network over pair features.

mod gmm;
mod mlp;

pub use gmm::{fit_gmm, gmm_classify, Gmm1d, GMM_MAX_ITERS, GMM_TOL};
pub use mlp::{
    ffnn_predict, ffnn_predict_scaled, symmetric_decisions, train_ffnn, Gradients, Layer, MlpModel,
    Predictions, TrainConfig, MODEL_MAGIC,
};

use nalgebra::DMatrix;

use crate::graph::InteractionMatrix;
use crate::pairs;

/// Ground-truth connectivity `A_ij != 0` for every ordered pair of `s`, in
/// [`pairs::ordered_pairs`] order.
pub fn extract_labels(a: &InteractionMatrix, s: &[usize]) -> Vec<bool> {
    pairs::ordered_pairs(s.len())
        .into_iter()
        .map(|(i, j)| a.entries()[(s[i], s[j])] != 0.0)
        .collect()
}

/// Symmetric boolean support of `A_S` with a false diagonal.
pub fn support_on(a: &InteractionMatrix, s: &[usize]) -> DMatrix<bool> {
    let n = s.len();
    DMatrix::from_fn(n, n, |i, j| i != j && a.entries()[(s[i], s[j])] != 0.0)
}
