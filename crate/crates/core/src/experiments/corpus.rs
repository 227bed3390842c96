use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{extract_labels, ffnn_predict_scaled, train_ffnn, MlpModel, TrainConfig};
use crate::error::{Error, Result};
use crate::experiments::cell::MomentsMode;
use crate::features::{
    build_f, build_k, build_t, center_node_effects, fit_scaler, FeatureKind, FeatureSet,
};
use crate::graph::{erdos_renyi, laplacian_weights};
use crate::moments::{analytic_lag_moments, empirical_lag_moments_with_count};
use crate::noise::offset_noise;
use crate::seeds;
use crate::simulate::{simulate, SimConfig, DEFAULT_BURN_IN};

/// Sample count used for full-size reproductions.
pub const PAPER_SCALE_SAMPLES: usize = 500_000;

/// How network features are standardized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingPolicy {
    /// One scaler fitted on the pooled corpus, stored in the model and
    /// reused on every later dataset.
    Pooled,
    /// Every dataset, training or evaluation, is standardized over its own
    /// pairs. Removes the scale shift between graphs of different degree.
    PerDataset,
    /// Per-node row and column effects are removed from every dataset before
    /// standardizing it over its own pairs. The offset term adds a constant to
    /// each lag moment and its finite-sample error is mostly shared by all
    /// pairs of a node; both drop out.
    NodeCentered,
}

impl ScalingPolicy {
    /// Normalize one dataset's features, if the policy does that per dataset.
    pub fn normalize(self, fs: &FeatureSet) -> Result<FeatureSet> {
        let mut out = match self {
            ScalingPolicy::Pooled => return Ok(fs.clone()),
            ScalingPolicy::PerDataset => fit_scaler(fs)?,
            ScalingPolicy::NodeCentered => fit_scaler(&center_node_effects(fs)?)?,
        };
        out.scaler = None;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub n_nodes: usize,
    pub connection_p: f64,
    pub rho: f64,
    pub sigma_gap_sq: f64,
    pub betas: Vec<f64>,
    pub sample_count: usize,
    pub min_lag: i64,
    pub max_lag: i64,
    pub burn_in: usize,
    pub moments: MomentsMode,
    pub scaling: ScalingPolicy,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_nodes: 50,
            connection_p: 0.5,
            rho: 0.8,
            sigma_gap_sq: 1.0,
            betas: (0..=10).map(|i| 5.0 * i as f64).collect(),
            sample_count: 100_000,
            min_lag: -50,
            max_lag: 50,
            burn_in: DEFAULT_BURN_IN,
            moments: MomentsMode::Empirical,
            scaling: ScalingPolicy::NodeCentered,
        }
    }
}

impl CorpusConfig {
    pub fn paper_scale() -> Self {
        CorpusConfig {
            sample_count: PAPER_SCALE_SAMPLES,
            ..CorpusConfig::default()
        }
    }
}

/// Pooled, labeled and standardized training rows. `k` and `f` hold the
/// same pairs in the same order. Under pooled scaling each carries its own
/// scaler; otherwise every dataset was normalized separately and neither does.
#[derive(Debug, Clone)]
pub struct TrainingCorpus {
    pub k: FeatureSet,
    pub f: FeatureSet,
    pub datasets: usize,
    pub scaling: ScalingPolicy,
}

fn pool(sets: &[FeatureSet], kind: FeatureKind, scaling: ScalingPolicy) -> Result<FeatureSet> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Degenerate("empty corpus".into()))?;
    let mut pooled = FeatureSet {
        kind,
        min_lag: first.min_lag,
        max_lag: first.max_lag,
        observed: first.observed.clone(),
        pairs: Vec::new(),
        vectors: Vec::new(),
        labels: Some(Vec::new()),
        scaler: None,
    };
    for s in sets {
        pooled.pairs.extend(&s.pairs);
        pooled.vectors.extend(s.vectors.iter().cloned());
        let labels = s.labels.as_ref().ok_or(Error::Unlabeled)?;
        pooled.labels.as_mut().expect("labels").extend(labels);
    }
    match scaling {
        ScalingPolicy::Pooled => fit_scaler(&pooled),
        ScalingPolicy::PerDataset | ScalingPolicy::NodeCentered => Ok(pooled),
    }
}

/// One random graph, one dataset per offset value under full observability,
/// pooled into a single labeled corpus.
pub fn build_training_corpus(cfg: &CorpusConfig, seed: u64) -> Result<TrainingCorpus> {
    if cfg.betas.is_empty() {
        return Err(Error::invalid("offset grid is empty"));
    }
    let graph = erdos_renyi(cfg.n_nodes, cfg.connection_p, seeds::derive(seed, &[0]))?;
    let a = laplacian_weights(&graph, cfg.rho)?;
    let all: Vec<usize> = (0..cfg.n_nodes).collect();
    let labels = extract_labels(&a, &all);
    let per_beta = cfg
        .betas
        .par_iter()
        .enumerate()
        .map(|(b, &beta)| {
            let noise = offset_noise(cfg.n_nodes, cfg.sigma_gap_sq, beta)?;
            let moments = match cfg.moments {
                MomentsMode::Analytic => {
                    analytic_lag_moments(&a, &noise, &all, cfg.min_lag, cfg.max_lag)?
                }
                MomentsMode::Empirical => {
                    let sim = SimConfig {
                        burn_in: cfg.burn_in,
                        extra_tail: cfg.max_lag.max(-cfg.min_lag) as usize,
                        seed: seeds::derive(seed, &[1, b as u64]),
                    };
                    let ts = simulate(&a, &noise, cfg.sample_count, &sim)?;
                    empirical_lag_moments_with_count(
                        &ts,
                        cfg.min_lag,
                        cfg.max_lag,
                        cfg.sample_count,
                    )?
                }
            };
            let f = build_f(&moments).with_labels(labels.clone())?;
            let k = build_k(&f, &build_t(&moments)?)?;
            Ok((cfg.scaling.normalize(&k)?, cfg.scaling.normalize(&f)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (ks, fs): (Vec<_>, Vec<_>) = per_beta.into_iter().unzip();
    Ok(TrainingCorpus {
        k: pool(&ks, FeatureKind::K, cfg.scaling)?,
        f: pool(&fs, FeatureKind::F, cfg.scaling)?,
        scaling: cfg.scaling,
        datasets: cfg.betas.len(),
    })
}

/// The two trained networks: one on K features, one on F features only.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub k_model: MlpModel,
    pub f_model: MlpModel,
    pub min_lag: i64,
    pub max_lag: i64,
    pub scaling: ScalingPolicy,
}

impl TrainedModels {
    /// Accuracy of each network on its own (scaled) training rows, `(k, f)`.
    pub fn training_accuracy(&self, corpus: &TrainingCorpus) -> Result<(f64, f64)> {
        let score = |model: &MlpModel, fs: &FeatureSet| -> Result<f64> {
            let predictions = ffnn_predict_scaled(model, fs)?;
            let labels = fs.labels.as_ref().ok_or(Error::Unlabeled)?;
            crate::experiments::accuracy(&predictions.decisions, labels)
        };
        Ok((
            score(&self.k_model, &corpus.k)?,
            score(&self.f_model, &corpus.f)?,
        ))
    }
}

/// Corpus and network settings for the network estimators, with the seed of
/// the corpus graph and trajectories.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingPlan {
    pub corpus: CorpusConfig,
    pub network: TrainConfig,
    pub corpus_seed: u64,
}

impl TrainingPlan {
    pub fn run(&self) -> Result<(TrainingCorpus, TrainedModels)> {
        let corpus = build_training_corpus(&self.corpus, self.corpus_seed)?;
        let models = train_models(&corpus, &self.network)?;
        Ok((corpus, models))
    }
}

const K_MODEL_FILE: &str = "model_k.bin";
const F_MODEL_FILE: &str = "model_f.bin";
const MANIFEST_FILE: &str = "models.json";

impl TrainedModels {
    /// Write both networks into `dir` as `model_k.bin` and `model_f.bin`,
    /// plus `models.json` naming the scaling policy.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.k_model
            .save(BufWriter::new(File::create(dir.join(K_MODEL_FILE))?))?;
        self.f_model
            .save(BufWriter::new(File::create(dir.join(F_MODEL_FILE))?))?;
        let manifest = serde_json::json!({ "scaling": self.scaling, "min_lag": self.min_lag, "max_lag": self.max_lag });
        fs::write(
            dir.join(MANIFEST_FILE),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let k_model = MlpModel::load(BufReader::new(File::open(dir.join(K_MODEL_FILE))?))?;
        let f_model = MlpModel::load(BufReader::new(File::open(dir.join(F_MODEL_FILE))?))?;
        if k_model.input_kind != FeatureKind::K || f_model.input_kind != FeatureKind::F {
            return Err(Error::ModelFormat(
                "model files hold the wrong feature kinds".into(),
            ));
        }
        if (k_model.min_lag, k_model.max_lag) != (f_model.min_lag, f_model.max_lag) {
            return Err(Error::ModelFormat(
                "models disagree on the lag range".into(),
            ));
        }
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
        let scaling: ScalingPolicy = serde_json::from_value(manifest["scaling"].clone())?;
        let stored = scaling == ScalingPolicy::Pooled;
        if k_model.scaler.is_some() != stored || f_model.scaler.is_some() != stored {
            return Err(Error::ModelFormat(
                "stored scalers do not match the scaling policy".into(),
            ));
        }
        Ok(TrainedModels {
            scaling,
            min_lag: k_model.min_lag,
            max_lag: k_model.max_lag,
            k_model,
            f_model,
        })
    }
}

pub fn train_models(corpus: &TrainingCorpus, cfg: &TrainConfig) -> Result<TrainedModels> {
    let (k_model, f_model) =
        rayon::join(|| train_ffnn(&corpus.k, cfg), || train_ffnn(&corpus.f, cfg));
    Ok(TrainedModels {
        k_model: k_model?,
        f_model: f_model?,
        min_lag: corpus.k.min_lag,
        max_lag: corpus.k.max_lag,
        scaling: corpus.scaling,
    })
}
