use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    self, ffnn_predict, ffnn_predict_scaled, fit_gmm, gmm_classify, symmetric_decisions,
    GMM_MAX_ITERS, GMM_TOL,
};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorKind};
use crate::experiments::accuracy;
use crate::experiments::corpus::{ScalingPolicy, TrainedModels};
use crate::features::{build_f, build_k, build_t};
use crate::graph::{
    erdos_renyi, laplacian_weights, load_edge_list, watts_strogatz, Graph, InteractionMatrix,
};
use crate::moments::{analytic_lag_moments, empirical_lag_moments_with_count, LagMoments};
use crate::noise::{jittered_noise, NoiseModel};
use crate::pairs;
use crate::seeds;
use crate::simulate::{restrict, simulate, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorName {
    OneLagGmm,
    PrecisionGmm,
    NigGmm,
    GrangerGmm,
    FfnnK,
    FfnnFOnly,
}

impl EstimatorName {
    pub const ALL: [EstimatorName; 6] = [
        EstimatorName::OneLagGmm,
        EstimatorName::PrecisionGmm,
        EstimatorName::NigGmm,
        EstimatorName::GrangerGmm,
        EstimatorName::FfnnK,
        EstimatorName::FfnnFOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorName::OneLagGmm => "one_lag_gmm",
            EstimatorName::PrecisionGmm => "precision_gmm",
            EstimatorName::NigGmm => "nig_gmm",
            EstimatorName::GrangerGmm => "granger_gmm",
            EstimatorName::FfnnK => "ffnn_k",
            EstimatorName::FfnnFOnly => "ffnn_f_only",
        }
    }

    /// Matrix estimator behind a mixture-classified pipeline.
    pub fn matrix_kind(self) -> Option<EstimatorKind> {
        match self {
            EstimatorName::OneLagGmm => Some(EstimatorKind::OneLag),
            EstimatorName::PrecisionGmm => Some(EstimatorKind::Precision),
            EstimatorName::NigGmm => Some(EstimatorKind::Nig),
            EstimatorName::GrangerGmm => Some(EstimatorKind::Granger),
            EstimatorName::FfnnK | EstimatorName::FfnnFOnly => None,
        }
    }

    pub fn needs_network(self) -> bool {
        self.matrix_kind().is_none()
    }
}

impl fmt::Display for EstimatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorName::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown estimator {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GraphModel {
    ErdosRenyi,
    WattsStrogatz { ring_degree: usize, rewire_p: f64 },
    EdgeList { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentsMode {
    /// Simulate and estimate lag moments from the trajectory.
    Empirical,
    /// Use the exact model moments (infinite-sample limit).
    Analytic,
}

/// Every parameter of an evaluation cell that is not being swept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrozenParams {
    pub n_nodes: usize,
    pub connection_p: f64,
    pub rho: f64,
    pub observed_count: usize,
    pub beta: f64,
    pub sigma_gap_sq: f64,
    pub jitter: f64,
    pub sample_count: usize,
    pub min_lag: i64,
    pub max_lag: i64,
    pub burn_in: usize,
    pub graph: GraphModel,
    pub moments: MomentsMode,
}

impl Default for FrozenParams {
    fn default() -> Self {
        FrozenParams {
            n_nodes: 30,
            connection_p: 0.7,
            rho: 0.8,
            observed_count: 20,
            beta: 5.0,
            sigma_gap_sq: 1.0,
            jitter: 0.0,
            sample_count: 100_000,
            min_lag: -50,
            max_lag: 50,
            burn_in: crate::simulate::DEFAULT_BURN_IN,
            graph: GraphModel::ErdosRenyi,
            moments: MomentsMode::Empirical,
        }
    }
}

/// Everything generated for one replicate: the model, the observed set and
/// its lag moments.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub interaction: InteractionMatrix,
    pub noise: NoiseModel,
    pub observed: Vec<usize>,
    /// Moments over `[min(D, 0), max(M, 3)]` when a network estimator is
    /// requested, `[0, 3]` otherwise.
    pub moments: LagMoments,
}

impl Dataset {
    pub fn truth(&self) -> Vec<bool> {
        pairs::upper_labels(&classifiers::support_on(&self.interaction, &self.observed))
    }
}

fn build_graph(p: &FrozenParams, seed: u64) -> Result<Graph> {
    match &p.graph {
        GraphModel::ErdosRenyi => erdos_renyi(p.n_nodes, p.connection_p, seed),
        GraphModel::WattsStrogatz {
            ring_degree,
            rewire_p,
        } => watts_strogatz(p.n_nodes, *ring_degree, *rewire_p, seed),
        GraphModel::EdgeList { path } => load_edge_list(std::fs::File::open(path)?),
    }
}

/// Generate the replicate's graph, weights, noise and trajectory, restrict to
/// the observed set (the first `observed_count` nodes of a seeded
/// permutation, sorted) and compute lag moments.
pub fn generate_dataset(p: &FrozenParams, seed: u64, full_lag_range: bool) -> Result<Dataset> {
    let graph = build_graph(p, seeds::derive(seed, &[0]))?;
    let n_nodes = graph.node_count();
    let interaction = laplacian_weights(&graph, p.rho)?;
    let noise = jittered_noise(
        n_nodes,
        p.sigma_gap_sq,
        p.beta,
        p.jitter,
        seeds::derive(seed, &[1]),
    )?;
    if p.observed_count == 0 || p.observed_count > n_nodes {
        return Err(Error::invalid(format!(
            "observed count {} outside 1..={n_nodes}",
            p.observed_count
        )));
    }
    let mut perm: Vec<usize> = (0..n_nodes).collect();
    perm.shuffle(&mut seeds::rng(seeds::derive(seed, &[3])));
    let mut observed = perm[..p.observed_count].to_vec();
    observed.sort_unstable();
    let (d, m) = if full_lag_range {
        (p.min_lag.min(0), p.max_lag.max(3))
    } else {
        (0, 3)
    };
    let moments = match p.moments {
        MomentsMode::Analytic => analytic_lag_moments(&interaction, &noise, &observed, d, m)?,
        MomentsMode::Empirical => {
            let tail = p.max_lag.max(-p.min_lag).max(3) as usize;
            let cfg = SimConfig {
                burn_in: p.burn_in,
                extra_tail: tail,
                seed: seeds::derive(seed, &[2]),
            };
            let ts = simulate(&interaction, &noise, p.sample_count, &cfg)?;
            let ts = restrict(&ts, &observed)?;
            empirical_lag_moments_with_count(&ts, d, m, p.sample_count)?
        }
    };
    Ok(Dataset {
        interaction,
        noise,
        observed,
        moments,
    })
}

fn gmm_accuracy(data: &Dataset, kind: EstimatorKind) -> Result<f64> {
    let est = estimate(&data.moments, kind)?;
    let model = fit_gmm(&est.pair_scores(), GMM_MAX_ITERS, GMM_TOL)?;
    let predicted = pairs::upper_labels(&gmm_classify(&model, &est));
    accuracy(&predicted, &data.truth())
}

fn network_accuracy(data: &Dataset, name: EstimatorName, models: &TrainedModels) -> Result<f64> {
    let moments =
        if data.moments.min_lag() == models.min_lag && data.moments.max_lag() == models.max_lag {
            data.moments.clone()
        } else {
            let mats = (models.min_lag..=models.max_lag)
                .map(|k| data.moments.require(k).cloned())
                .collect::<Result<Vec<_>>>()?;
            LagMoments::from_parts(
                models.min_lag,
                models.max_lag,
                mats,
                data.moments.sample_count(),
                data.moments.source(),
                data.moments.observed().to_vec(),
            )?
        };
    let f = build_f(&moments);
    let (features, model) = match name {
        EstimatorName::FfnnK => (build_k(&f, &build_t(&moments)?)?, &models.k_model),
        _ => (f, &models.f_model),
    };
    let predictions = match models.scaling {
        ScalingPolicy::Pooled => ffnn_predict(model, &features)?,
        policy => ffnn_predict_scaled(model, &policy.normalize(&features)?)?,
    };
    let predicted = pairs::upper_labels(&symmetric_decisions(&features, &predictions));
    accuracy(&predicted, &data.truth())
}

/// Score one estimator on an already generated dataset.
pub fn score(data: &Dataset, name: EstimatorName, models: Option<&TrainedModels>) -> Result<f64> {
    match name.matrix_kind() {
        Some(kind) => gmm_accuracy(data, kind),
        None => {
            let models =
                models.ok_or_else(|| Error::invalid(format!("{name} needs trained networks")))?;
            network_accuracy(data, name, models)
        }
    }
}

/// Generate one dataset and score every requested estimator on it.
pub fn evaluate_replicate(
    p: &FrozenParams,
    seed: u64,
    estimators: &[EstimatorName],
    models: Option<&TrainedModels>,
) -> Vec<(EstimatorName, Result<f64>)> {
    let full = estimators.iter().any(|e| e.needs_network());
    match generate_dataset(p, seed, full) {
        Ok(data) => estimators
            .iter()
            .map(|&e| (e, score(&data, e, models)))
            .collect(),
        Err(err) => {
            let msg = err.to_string();
            estimators
                .iter()
                .map(|&e| {
                    (
                        e,
                        Err(Error::Degenerate(format!(
                            "dataset generation failed: {msg}"
                        ))),
                    )
                })
                .collect()
        }
    }
}

/// Accuracy of a single estimator on a single replicate.
pub fn evaluate_cell(
    p: &FrozenParams,
    estimator: EstimatorName,
    seed: u64,
    models: Option<&TrainedModels>,
) -> Result<f64> {
    let data = generate_dataset(p, seed, estimator.needs_network())?;
    score(&data, estimator, models)
}
