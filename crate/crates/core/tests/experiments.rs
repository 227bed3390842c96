mod common;

use lagnet_core::experiments::{
    generate_dataset, read_report_csv, write_outputs, TrainingPlan, PAPER_SCALE_SAMPLES,
};
use lagnet_core::{
    accuracy, build_training_corpus, run_sweep, train_models, Axis, CorpusConfig, EstimatorName,
    FrozenParams, SweepConfig, TrainConfig, TrainedModels,
};

fn small_frozen() -> FrozenParams {
    FrozenParams {
        n_nodes: 10,
        observed_count: 8,
        sample_count: 2_000,
        min_lag: -5,
        max_lag: 5,
        ..FrozenParams::default()
    }
}

fn small_models() -> TrainedModels {
    let plan = TrainingPlan {
        corpus: CorpusConfig {
            n_nodes: 10,
            betas: vec![0.0, 25.0, 50.0],
            sample_count: 2_000,
            min_lag: -5,
            max_lag: 5,
            ..CorpusConfig::default()
        },
        network: TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        },
        corpus_seed: 3,
    };
    plan.run().unwrap().1
}

#[test]
fn beta_sweep_has_one_row_per_cell() {
    let models = small_models();
    let mut cfg = SweepConfig::new(Axis::Beta, vec![0.0, 25.0, 50.0]);
    cfg.frozen = small_frozen();
    cfg.seeds_per_cell = 3;
    cfg.estimators = vec![EstimatorName::NigGmm, EstimatorName::FfnnK];
    let report = run_sweep(&cfg, Some(&models)).unwrap();
    assert_eq!(report.rows.len(), 18);
    for value in [0.0, 25.0, 50.0] {
        for est in &cfg.estimators {
            let cell: Vec<_> = report
                .rows
                .iter()
                .filter(|r| r.axis_value == value && r.estimator == *est)
                .collect();
            assert_eq!(cell.len(), 3);
            let mut seeds: Vec<usize> = cell.iter().map(|r| r.seed).collect();
            seeds.dedup();
            assert_eq!(seeds, vec![0, 1, 2]);
            assert!(cell
                .iter()
                .all(|r| r.accuracy.is_some_and(|a| (0.0..=1.0).contains(&a))));
            assert_eq!(report.aggregate(value, *est).unwrap().count, 3);
        }
    }
    let again = run_sweep(&cfg, Some(&models)).unwrap();
    assert_eq!(report.to_csv(), again.to_csv());

    let dir = tempfile::tempdir().unwrap();
    let out = write_outputs(&cfg, &report, dir.path(), None).unwrap();
    let csv = std::fs::read_to_string(&out.csv).unwrap();
    assert!(csv.starts_with("axis_value,estimator,seed,accuracy"));
    assert_eq!(read_report_csv(Axis::Beta, &csv).unwrap().rows, report.rows);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out.meta).unwrap()).unwrap();
    assert_eq!(meta["config"]["frozen"]["n_nodes"], 10);
    assert!(out.svg.is_some());

    assert!(run_sweep(&cfg, None).is_err());
}

#[test]
fn observed_count_axis_sets_the_observed_set() {
    let values = vec![10.0, 20.0, 30.0, 40.0, 50.0];
    let mut cfg = SweepConfig::new(Axis::ObservedCount, values.clone());
    cfg.frozen = FrozenParams {
        n_nodes: 50,
        sample_count: 2_000,
        ..FrozenParams::default()
    };
    cfg.seeds_per_cell = 1;
    cfg.estimators = vec![EstimatorName::NigGmm];
    let report = run_sweep(&cfg, None).unwrap();
    let column: Vec<f64> = report.rows.iter().map(|r| r.axis_value).collect();
    assert_eq!(column, values);
    for (a, &v) in values.iter().enumerate() {
        let params = cfg.axis.apply(&cfg.frozen, v);
        let data = generate_dataset(&params, cfg.cell_seed(a, 0), false).unwrap();
        assert_eq!(data.observed.len(), v as usize);
        assert_eq!(data.moments.dim(), v as usize);
    }
}

#[test]
fn training_corpus_smoke_run() {
    let cfg = CorpusConfig {
        sample_count: 1_000,
        ..CorpusConfig::default()
    };
    assert_eq!(cfg.betas.len(), 11);
    let corpus = build_training_corpus(&cfg, 1).unwrap();
    assert_eq!(corpus.k.len(), 26_950);
    assert_eq!(corpus.f.len(), 26_950);
    assert_eq!(corpus.k.width(), 202);
    let models = train_models(
        &corpus,
        &TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let (k_acc, f_acc) = models.training_accuracy(&corpus).unwrap();
    assert!((0.0..=1.0).contains(&k_acc) && (0.0..=1.0).contains(&f_acc));
}

#[test]
fn offset_does_not_help_nig() {
    let mut cfg = SweepConfig::new(Axis::Beta, vec![0.0, 50.0]);
    cfg.seeds_per_cell = 5;
    cfg.estimators = vec![EstimatorName::NigGmm];
    let report = run_sweep(&cfg, None).unwrap();
    let low = report.aggregate(0.0, EstimatorName::NigGmm).unwrap().median;
    let high = report
        .aggregate(50.0, EstimatorName::NigGmm)
        .unwrap()
        .median;
    assert!(high <= low, "beta 0: {low}, beta 50: {high}");
}

#[test]
fn paper_scale_switch() {
    let cfg = SweepConfig::new(Axis::Beta, vec![0.0]).paper_scale();
    assert_eq!(PAPER_SCALE_SAMPLES, 500_000);
    assert_eq!(cfg.frozen.sample_count, 500_000);
    assert_eq!(cfg.training.corpus.sample_count, 500_000);
    assert_eq!(CorpusConfig::paper_scale().sample_count, 500_000);
}

#[test]
fn accuracy_contract() {
    let truth = [true, false, true, true];
    assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
    assert_eq!(accuracy(&[false; 4], &truth).unwrap(), 0.25);
    assert!(accuracy(&[true], &truth).is_err());
    assert!(accuracy(&[], &[]).is_err());
}
