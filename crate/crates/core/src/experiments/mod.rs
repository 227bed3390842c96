//! Accuracy evaluation and parameter sweeps.

mod cell;
mod corpus;
mod plot;
mod sweep;

pub use cell::{
    evaluate_cell, evaluate_replicate, generate_dataset, score, Dataset, EstimatorName,
    FrozenParams, GraphModel, MomentsMode,
};
pub use corpus::{
    build_training_corpus, train_models, CorpusConfig, ScalingPolicy, TrainedModels,
    TrainingCorpus, TrainingPlan, PAPER_SCALE_SAMPLES,
};
pub use plot::render_svg;
pub use sweep::{
    read_report_csv, run_sweep, write_outputs, AccuracyReport, AccuracyRow, Aggregate, Axis,
    SweepConfig, SweepOutputs,
};

use crate::error::{Error, Result};

/// Fraction of pairs whose predicted connectivity matches the truth.
pub fn accuracy(predicted: &[bool], truth: &[bool]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::PairMismatch);
    }
    if truth.is_empty() {
        return Err(Error::Degenerate("no pairs to score".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[true, false], &[true, false]).unwrap(), 1.0);
        assert_eq!(accuracy(&[true, true], &[true, false]).unwrap(), 0.5);
        assert!(accuracy(&[true], &[true, false]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }
}
