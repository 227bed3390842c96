mod common;

use lagnet_core::classifiers::{
    ffnn_predict, fit_gmm, symmetric_decisions, GMM_MAX_ITERS, GMM_TOL,
};
use lagnet_core::moments::LagMoments;
use lagnet_core::DMatrix;
use lagnet_core::{estimate, gmm_classify, train_ffnn, EstimatorKind, MomentSource};
use lagnet_core::{pairs, seeds, FeatureKind, FeatureSet, MlpModel, TrainConfig};
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};

/// Two Gaussian blobs, one per class, over all ordered pairs of `nodes`.
fn blobs(nodes: usize, dim: usize, gap: f64, seed: u64) -> FeatureSet {
    let pairs = pairs::ordered_pairs(nodes);
    let mut rng = seeds::rng(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let labels: Vec<bool> = pairs.iter().map(|&(i, j)| (i + j) % 3 == 0).collect();
    let vectors = labels
        .iter()
        .map(|&l| {
            let centre = if l { gap / 2.0 } else { -gap / 2.0 };
            (0..dim).map(|_| centre + noise.sample(&mut rng)).collect()
        })
        .collect();
    FeatureSet {
        kind: FeatureKind::K,
        min_lag: 0,
        max_lag: 3,
        observed: (0..nodes).collect(),
        pairs,
        vectors,
        labels: Some(labels),
        scaler: None,
    }
}

fn accuracy_on(model: &MlpModel, fs: &FeatureSet) -> f64 {
    let p = ffnn_predict(model, fs).unwrap();
    let labels = fs.labels.as_ref().unwrap();
    p.decisions
        .iter()
        .zip(labels)
        .filter(|(a, b)| a == b)
        .count() as f64
        / labels.len() as f64
}

#[test]
fn separable_blobs_are_learned_at_default_settings() {
    let train = blobs(40, 8, 6.0, 1);
    let cfg = TrainConfig::default();
    assert_eq!(cfg.epochs, 50);
    let model = train_ffnn(&train, &cfg).unwrap();
    assert_eq!(accuracy_on(&model, &train), 1.0);
    assert_eq!(model.loss_trace.len(), 50);
    assert!(model.loss_trace.last().unwrap() < &model.loss_trace[0]);
}

#[test]
fn single_class_training_predicts_that_class() {
    let mut train = blobs(12, 4, 1.0, 3);
    train.labels = Some(vec![true; train.len()]);
    let model = train_ffnn(&train, &TrainConfig::default()).unwrap();
    let p = ffnn_predict(&model, &blobs(12, 4, 1.0, 4)).unwrap();
    assert!(p.decisions.iter().all(|&d| d));
}

#[test]
fn saved_models_predict_identically() {
    let train = blobs(15, 5, 3.0, 5);
    let cfg = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    let model = train_ffnn(&lagnet_core::fit_scaler(&train).unwrap(), &cfg).unwrap();
    let mut bytes = Vec::new();
    model.save(&mut bytes).unwrap();
    let back = MlpModel::load(bytes.as_slice()).unwrap();
    let probe = blobs(15, 5, 3.0, 6);
    let a = ffnn_predict(&model, &probe).unwrap();
    let b = ffnn_predict(&back, &probe).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.probabilities), bits(&b.probabilities));
    assert!(MlpModel::load(&bytes[..bytes.len() - 3]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(MlpModel::load(bad.as_slice()).is_err());
}

#[test]
fn single_gaussian_mixture_keeps_the_sample_moments() {
    let n = 4000;
    let mut rng = seeds::rng(11);
    let dist = Normal::new(3.0, 2.0).unwrap();
    let values: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
    let m = fit_gmm(&values, GMM_MAX_ITERS, GMM_TOL).unwrap();
    let mixture_mean = m.weights[0] * m.means[0] + m.weights[1] * m.means[1];
    let se = 2.0 / (n as f64).sqrt();
    assert!((mixture_mean - 3.0).abs() <= 2.0 * se, "{mixture_mean}");
    let second = (0..2)
        .map(|c| m.weights[c] * (m.variances[c] + m.means[c] * m.means[c]))
        .sum::<f64>();
    let var = second - mixture_mean * mixture_mean;
    assert!((var - 4.0).abs() <= 0.3, "{var}");
}

#[test]
fn gmm_decisions_are_symmetric_and_oriented() {
    let values = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, -0.9, 0.0, 0.01, //
            -0.8, 0.0, -1.0, 0.02, //
            0.0, -1.1, 0.0, 0.0, //
            0.03, 0.0, 0.01, 0.0,
        ],
    );
    let moments = LagMoments::from_parts(
        0,
        3,
        vec![
            values.clone(),
            values.clone(),
            values.clone(),
            DMatrix::zeros(4, 4),
        ],
        1,
        MomentSource::Analytic,
        vec![0, 1, 2, 3],
    )
    .unwrap();
    let est = estimate(&moments, EstimatorKind::OneLag).unwrap();
    let precision_like = lagnet_core::MatrixEstimate {
        kind: EstimatorKind::Precision,
        ..est
    };
    let model = fit_gmm(&precision_like.pair_scores(), GMM_MAX_ITERS, GMM_TOL).unwrap();
    let support = gmm_classify(&model, &precision_like);
    assert_eq!(support, support.transpose());
    assert!(support[(0, 1)] && support[(1, 2)]);
    assert!(!support[(0, 3)] && !support[(2, 3)] && !support[(0, 0)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn network_decisions_are_symmetric(nodes in 2usize..9, seed in any::<u64>()) {
        let fs = blobs(nodes, 3, 0.0, seed);
        let model = MlpModel::new(&[3, 5, 1], seed).unwrap();
        let p = ffnn_predict(&model, &fs).unwrap();
        let d = symmetric_decisions(&fs, &p);
        prop_assert_eq!(&d, &d.transpose());
        for i in 0..nodes {
            prop_assert!(!d[(i, i)]);
        }
        for (&(i, j), &dec) in fs.pairs.iter().zip(&p.decisions) {
            if dec {
                prop_assert!(d[(i, j)] && d[(j, i)]);
            }
        }
        for (&q, &dec) in p.probabilities.iter().zip(&p.decisions) {
            prop_assert!((0.0..=1.0).contains(&q));
            prop_assert_eq!(dec, q > 0.5);
        }
    }
}
