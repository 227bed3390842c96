//! Network topology inference for linear networked dynamical systems driven
//! by spatially colored noise and observed on a subset of nodes.
//!
//! The pipeline runs bottom-up:
//!
//! * [`graph`]: random and file-based graphs, weighted into a stable
//!   interaction matrix by the Laplacian rule,
//! * [`noise`]: homogeneous colored noise and its gap/offset/residual split,
//! * [`simulate`]: trajectories of `y(n+1) = A·y(n) + x(n+1)`,
//! * [`moments`]: empirical and analytic lag moments,
//! * [`estimators`]: matrix estimators, the limiting error matrix of
//!   `R̂_1 − R̂_3`, and the noise feasibility condition,
//! * [`features`] and [`classifiers`]: per-pair features, Gaussian-mixture
//!   and neural-network decisions,
//! * [`experiments`]: accuracy sweeps with CSV/SVG reports.

pub mod classifiers;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod features;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod noise;
pub mod pairs;
pub mod seeds;
pub mod simulate;

pub use classifiers::{
    extract_labels, ffnn_predict, fit_gmm, gmm_classify, train_ffnn, Gmm1d, MlpModel, Predictions,
    TrainConfig,
};
pub use error::{Error, Result};
pub use estimators::{
    error_matrix, estimate, feasibility_margin, min_exogenous_variance, osc, threshold_support,
    EstimatorKind, FeasibilityReport, MatrixEstimate,
};
pub use experiments::{
    accuracy, build_training_corpus, evaluate_cell, run_sweep, train_models, AccuracyReport, Axis,
    CorpusConfig, EstimatorName, FrozenParams, SweepConfig, TrainedModels,
};
pub use features::{
    apply_scaler, build_f, build_k, build_t, fit_scaler, FeatureKind, FeatureSet, Scaler,
};
pub use graph::{
    erdos_renyi, laplacian_weights, load_edge_list, watts_strogatz, Graph, InteractionMatrix,
};
pub use moments::{
    analytic_lag_moment, analytic_lag_moments, empirical_lag_moments, stationary_covariance,
    LagMoments, MomentSource,
};
pub use noise::{decompose_covariance, jittered_noise, offset_noise, sample_noise, NoiseModel};
pub use simulate::{restrict, simulate, SimConfig, TimeSeries};

pub use nalgebra::DMatrix;
