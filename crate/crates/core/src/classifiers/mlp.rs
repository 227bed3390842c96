//! Feedforward network (rectifier hidden layers, logistic output) trained by
//! mini-batch gradient descent on class-weighted binary cross-entropy.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureSet, Scaler};
use crate::seeds;

pub const MODEL_MAGIC: &[u8; 12] = b"LAGNET-MLP-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub class_weighting: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_sizes: vec![32, 32],
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 256,
            seed: 0,
            class_weighting: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_sizes.contains(&0) {
            return Err(Error::invalid("hidden layer sizes must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch size must be positive"));
        }
        Ok(())
    }
}

/// Dense layer `z = W·x + b` with `W` of shape `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub input_kind: FeatureKind,
    pub min_lag: i64,
    pub max_lag: i64,
    pub scaler: Option<Scaler>,
    pub config: TrainConfig,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-[y·ln σ(z) + (1−y)·ln(1−σ(z))]` computed from the logit.
fn bce_with_logit(z: f64, y: bool) -> f64 {
    let t = if y { 1.0 } else { 0.0 };
    z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()
}

/// Columns are samples.
fn batch_matrix(rows: &[&[f64]]) -> DMatrix<f64> {
    let width = rows.first().map_or(0, |r| r.len());
    let mut m = DMatrix::zeros(width, rows.len());
    for (c, r) in rows.iter().enumerate() {
        m.column_mut(c).copy_from_slice(r);
    }
    m
}

impl MlpModel {
    /// He-uniform initialization with zero biases.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 || *layer_sizes.last().unwrap() != 1 || layer_sizes.contains(&0) {
            return Err(Error::invalid(
                "layer sizes must be positive and end in a single output",
            ));
        }
        let mut rng = seeds::rng(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let bound = (6.0 / w[0] as f64).sqrt();
                Layer {
                    weights: DMatrix::from_fn(w[1], w[0], |_, _| rng.random_range(-bound..bound)),
                    bias: DVector::zeros(w[1]),
                }
            })
            .collect();
        Ok(MlpModel {
            layers,
            input_kind: FeatureKind::K,
            min_lag: 0,
            max_lag: 0,
            scaler: None,
            config: TrainConfig::default(),
            loss_trace: Vec::new(),
        })
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.weights.nrows()));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    /// Pre-activations of every layer for a batch (columns are samples).
    fn forward_all(&self, x: &DMatrix<f64>) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut activations = vec![x.clone()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (idx, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.weights * activations.last().unwrap();
            for mut col in z.column_iter_mut() {
                col += &layer.bias;
            }
            let last = idx + 1 == self.layers.len();
            if !last {
                activations.push(z.map(|v| v.max(0.0)));
            }
            pre.push(z);
        }
        (pre, activations)
    }

    /// Output logits for a batch.
    pub fn logits(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let (pre, _) = self.forward_all(x);
        pre.last().unwrap().row(0).iter().copied().collect()
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.logits(&batch_matrix(&[row]))[0])
    }

    /// Weighted mean loss `(1/B) Σ w_b·BCE_b` and its gradient.
    pub fn loss_and_gradient(
        &self,
        rows: &[&[f64]],
        labels: &[bool],
        sample_weights: &[f64],
    ) -> (f64, Gradients) {
        let x = batch_matrix(rows);
        let batch = rows.len() as f64;
        let (pre, activations) = self.forward_all(&x);
        let out = pre.last().unwrap();
        let mut loss = 0.0;
        let mut delta = DMatrix::zeros(1, rows.len());
        for b in 0..rows.len() {
            let z = out[(0, b)];
            let t = if labels[b] { 1.0 } else { 0.0 };
            loss += sample_weights[b] * bce_with_logit(z, labels[b]);
            delta[(0, b)] = sample_weights[b] * (sigmoid(z) - t) / batch;
        }
        loss /= batch;
        let depth = self.layers.len();
        let mut gw = vec![DMatrix::zeros(0, 0); depth];
        let mut gb = vec![DVector::zeros(0); depth];
        for l in (0..depth).rev() {
            gw[l] = &delta * activations[l].transpose();
            gb[l] = DVector::from_iterator(delta.nrows(), delta.row_iter().map(|r| r.sum()));
            if l > 0 {
                let mut back = self.layers[l].weights.transpose() * &delta;
                back.zip_apply(&pre[l - 1], |d, z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
        }
        (
            loss,
            Gradients {
                weights: gw,
                biases: gb,
            },
        )
    }

    fn step(&mut self, grads: &Gradients, lr: f64) {
        for (layer, (gw, gb)) in self
            .layers
            .iter_mut()
            .zip(grads.weights.iter().zip(&grads.biases))
        {
            layer.weights -= gw * lr;
            layer.bias -= gb * lr;
        }
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        fn u64le<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
            w.write_all(&v.to_le_bytes())
        }
        fn f64le<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
            w.write_all(&v.to_le_bytes())
        }
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&[match self.input_kind {
            FeatureKind::F => 0,
            FeatureKind::T => 1,
            FeatureKind::K => 2,
        }])?;
        u64le(&mut w, self.min_lag as u64)?;
        u64le(&mut w, self.max_lag as u64)?;
        let cfg = &self.config;
        u64le(&mut w, cfg.hidden_sizes.len() as u64)?;
        for &h in &cfg.hidden_sizes {
            u64le(&mut w, h as u64)?;
        }
        f64le(&mut w, cfg.learning_rate)?;
        u64le(&mut w, cfg.epochs as u64)?;
        u64le(&mut w, cfg.batch_size as u64)?;
        u64le(&mut w, cfg.seed)?;
        w.write_all(&[cfg.class_weighting as u8])?;
        let sizes = self.layer_sizes();
        u64le(&mut w, sizes.len() as u64)?;
        for &s in &sizes {
            u64le(&mut w, s as u64)?;
        }
        for layer in &self.layers {
            for r in 0..layer.weights.nrows() {
                for c in 0..layer.weights.ncols() {
                    f64le(&mut w, layer.weights[(r, c)])?;
                }
            }
            for &b in layer.bias.iter() {
                f64le(&mut w, b)?;
            }
        }
        match &self.scaler {
            Some(s) => {
                w.write_all(&[1])?;
                u64le(&mut w, s.dim() as u64)?;
                for &v in s.mean.iter().chain(&s.std) {
                    f64le(&mut w, v)?;
                }
            }
            None => w.write_all(&[0])?,
        }
        u64le(&mut w, self.loss_trace.len() as u64)?;
        for &v in &self.loss_trace {
            f64le(&mut w, v)?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        struct Reader<R>(R);
        impl<R: Read> Reader<R> {
            fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
                let mut buf = [0u8; N];
                self.0
                    .read_exact(&mut buf)
                    .map_err(|e| Error::ModelFormat(format!("truncated file: {e}")))?;
                Ok(buf)
            }
            fn u8(&mut self) -> Result<u8> {
                Ok(self.bytes::<1>()?[0])
            }
            fn u64(&mut self) -> Result<u64> {
                Ok(u64::from_le_bytes(self.bytes()?))
            }
            fn len(&mut self) -> Result<usize> {
                let v = self.u64()?;
                if v > 1 << 32 {
                    return Err(Error::ModelFormat(format!("implausible length {v}")));
                }
                Ok(v as usize)
            }
            fn f64(&mut self) -> Result<f64> {
                Ok(f64::from_le_bytes(self.bytes()?))
            }
        }
        let mut rd = Reader(&mut r);
        let magic: [u8; 12] = rd.bytes()?;
        if &magic != MODEL_MAGIC {
            return Err(Error::ModelFormat("bad magic".into()));
        }
        let input_kind = match rd.u8()? {
            0 => FeatureKind::F,
            1 => FeatureKind::T,
            2 => FeatureKind::K,
            other => return Err(Error::ModelFormat(format!("unknown feature kind {other}"))),
        };
        let min_lag = rd.u64()? as i64;
        let max_lag = rd.u64()? as i64;
        let hidden = rd.len()?;
        let hidden_sizes = (0..hidden).map(|_| rd.len()).collect::<Result<Vec<_>>>()?;
        let config = TrainConfig {
            hidden_sizes,
            learning_rate: rd.f64()?,
            epochs: rd.len()?,
            batch_size: rd.len()?,
            seed: rd.u64()?,
            class_weighting: rd.u8()? != 0,
        };
        let count = rd.len()?;
        let sizes = (0..count).map(|_| rd.len()).collect::<Result<Vec<_>>>()?;
        if sizes.len() < 2 || *sizes.last().unwrap() != 1 {
            return Err(Error::ModelFormat(
                "layer sizes must end in a single output".into(),
            ));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for w in sizes.windows(2) {
            let mut weights = DMatrix::zeros(w[1], w[0]);
            for r in 0..w[1] {
                for c in 0..w[0] {
                    weights[(r, c)] = rd.f64()?;
                }
            }
            let bias = DVector::from_iterator(
                w[1],
                (0..w[1]).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?,
            );
            layers.push(Layer { weights, bias });
        }
        let scaler = match rd.u8()? {
            0 => None,
            1 => {
                let dim = rd.len()?;
                let mean = (0..dim).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
                let std = (0..dim).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
                Some(Scaler { mean, std })
            }
            other => return Err(Error::ModelFormat(format!("bad scaler flag {other}"))),
        };
        let trace_len = rd.len()?;
        let loss_trace = (0..trace_len)
            .map(|_| rd.f64())
            .collect::<Result<Vec<_>>>()?;
        Ok(MlpModel {
            layers,
            input_kind,
            min_lag,
            max_lag,
            scaler,
            config,
            loss_trace,
        })
    }
}

/// Inverse-frequency weights `N / (2·N_class)`; all ones when disabled or
/// when only one class is present.
fn class_weights(labels: &[bool], enabled: bool) -> (f64, f64) {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if !enabled || pos == 0 || neg == 0 {
        return (1.0, 1.0);
    }
    let n = labels.len() as f64;
    (n / (2.0 * neg as f64), n / (2.0 * pos as f64))
}

/// Train on a labeled (already scaled) feature set. The returned model keeps
/// the feature set's scaler for use on unseen data.
pub fn train_ffnn(train: &FeatureSet, cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    let labels = train.labels.as_ref().ok_or(Error::Unlabeled)?;
    if train.is_empty() {
        return Err(Error::Degenerate("empty training set".into()));
    }
    let width = train.width();
    if let Some(bad) = train.vectors.iter().find(|v| v.len() != width) {
        return Err(Error::DimensionMismatch {
            expected: width,
            found: bad.len(),
        });
    }
    let mut sizes = vec![width];
    sizes.extend(&cfg.hidden_sizes);
    sizes.push(1);
    let mut model = MlpModel::new(&sizes, cfg.seed)?;
    model.input_kind = train.kind;
    model.min_lag = train.min_lag;
    model.max_lag = train.max_lag;
    model.scaler = train.scaler.clone();
    model.config = cfg.clone();

    let (w_neg, w_pos) = class_weights(labels, cfg.class_weighting);
    // start the output at the (smoothed) weighted label prior; this is 0 for
    // balanced weighting and saturates toward the only class of a one-class set
    let pos = labels.iter().filter(|&&l| l).count() as f64 * w_pos;
    let neg = labels.iter().filter(|&&l| !l).count() as f64 * w_neg;
    let output = model.layers.last_mut().expect("at least one layer");
    output.bias[0] = ((pos + 0.5) / (neg + 0.5)).ln();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = seeds::rng(seeds::derive(cfg.seed, &[1]));
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| train.vectors[i].as_slice()).collect();
            let ys: Vec<bool> = chunk.iter().map(|&i| labels[i]).collect();
            let ws: Vec<f64> = ys.iter().map(|&y| if y { w_pos } else { w_neg }).collect();
            let (loss, grads) = model.loss_and_gradient(&rows, &ys, &ws);
            epoch_loss += loss * chunk.len() as f64;
            model.step(&grads, cfg.learning_rate);
        }
        model.loss_trace.push(epoch_loss / train.len() as f64);
    }
    Ok(model)
}

/// Per ordered pair probabilities and their 0.5-cutoff decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub probabilities: Vec<f64>,
    pub decisions: Vec<bool>,
}

/// Forward pass on features that are already scaled.
pub fn ffnn_predict_scaled(model: &MlpModel, fs: &FeatureSet) -> Result<Predictions> {
    if fs.width() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            found: fs.width(),
        });
    }
    let mut probabilities = Vec::with_capacity(fs.len());
    for chunk in fs.vectors.chunks(1024) {
        let rows: Vec<&[f64]> = chunk.iter().map(Vec::as_slice).collect();
        probabilities.extend(model.logits(&batch_matrix(&rows)).into_iter().map(sigmoid));
    }
    let decisions = probabilities.iter().map(|&p| p > 0.5).collect();
    Ok(Predictions {
        probabilities,
        decisions,
    })
}

/// Forward pass on raw features, standardized with the model's stored scaler.
pub fn ffnn_predict(model: &MlpModel, fs: &FeatureSet) -> Result<Predictions> {
    match &model.scaler {
        Some(scaler) => ffnn_predict_scaled(model, &crate::features::apply_scaler(fs, scaler)?),
        None => ffnn_predict_scaled(model, fs),
    }
}

/// Symmetric pair decisions: `(i, j)` is connected if either ordered pair was.
pub fn symmetric_decisions(fs: &FeatureSet, predictions: &Predictions) -> DMatrix<bool> {
    let n = fs.observed.len();
    let mut out = DMatrix::from_element(n, n, false);
    for (&(i, j), &d) in fs.pairs.iter().zip(&predictions.decisions) {
        if d {
            out[(i, j)] = true;
            out[(j, i)] = true;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n_per_class: usize, seed: u64) -> FeatureSet {
        use rand_distr::StandardNormal;
        let mut rng = seeds::rng(seed);
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for class in [false, true] {
            let centre = if class { 2.5 } else { -2.5 };
            for _ in 0..n_per_class {
                vectors.push(
                    (0..4)
                        .map(|_| centre + rng.sample::<f64, _>(StandardNormal))
                        .collect(),
                );
                labels.push(class);
            }
        }
        FeatureSet {
            kind: FeatureKind::K,
            min_lag: 0,
            max_lag: 3,
            observed: vec![0],
            pairs: vec![(0, 0); vectors.len()],
            vectors,
            labels: Some(labels),
            scaler: None,
        }
    }

    #[test]
    fn zero_weights_output_logistic_bias() {
        let mut m = MlpModel::new(&[3, 4, 1], 1).unwrap();
        for l in &mut m.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        m.layers[1].bias[0] = 0.7;
        let p = m.predict_proba_row(&[1.0, -2.0, 3.0]);
        assert_eq!(p, sigmoid(0.7));
    }

    #[test]
    fn unlabeled_and_mismatched_inputs() {
        let mut fs = toy(5, 1);
        fs.labels = None;
        assert!(matches!(
            train_ffnn(&fs, &TrainConfig::default()),
            Err(Error::Unlabeled)
        ));
        let mut fs = toy(5, 1);
        fs.vectors[3].push(1.0);
        assert!(matches!(
            train_ffnn(&fs, &TrainConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let m = MlpModel::new(&[3, 2, 1], 0).unwrap();
        assert!(ffnn_predict(&m, &toy(2, 1)).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            seed: 9,
            ..TrainConfig::default()
        };
        let a = train_ffnn(&toy(30, 2), &cfg).unwrap();
        let b = train_ffnn(&toy(30, 2), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weighted_loss_balances_classes() {
        assert_eq!(
            class_weights(&[true, false, false, false], true),
            (4.0 / 6.0, 2.0)
        );
        assert_eq!(class_weights(&[true, true], true), (1.0, 1.0));
        assert_eq!(class_weights(&[true, false, false], false), (1.0, 1.0));
    }

    #[test]
    fn bce_matches_direct_formula() {
        for &z in &[-3.0, -0.1, 0.0, 0.4, 5.0] {
            let p = sigmoid(z);
            assert!((bce_with_logit(z, true) + p.ln()).abs() < 1e-12);
            assert!((bce_with_logit(z, false) + (1.0 - p).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn model_file_round_trip() {
        let mut fs = toy(10, 3);
        fs.scaler = Some(Scaler {
            mean: vec![0.1; 4],
            std: vec![2.0; 4],
        });
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let m = train_ffnn(&fs, &cfg).unwrap();
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        assert_eq!(&buf[..12], MODEL_MAGIC);
        let back = MlpModel::load(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        let raw = toy(4, 8);
        assert_eq!(
            ffnn_predict(&m, &raw).unwrap(),
            ffnn_predict(&back, &raw).unwrap()
        );
        assert!(MlpModel::load(&buf[..20]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            MlpModel::load(bad.as_slice()),
            Err(Error::ModelFormat(_))
        ));
    }
}
