use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::cell::{evaluate_replicate, EstimatorName, FrozenParams};
use crate::experiments::corpus::{TrainedModels, TrainingPlan, PAPER_SCALE_SAMPLES};
use crate::experiments::plot::render_svg;
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    ObservedCount,
    ConnectionP,
    Beta,
    SampleCount,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::ObservedCount => "observed_count",
            Axis::ConnectionP => "connection_p",
            Axis::Beta => "beta",
            Axis::SampleCount => "sample_count",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Axis::ObservedCount | Axis::SampleCount)
    }

    /// Copy of `frozen` with this axis set to `value`.
    pub fn apply(self, frozen: &FrozenParams, value: f64) -> FrozenParams {
        let mut p = frozen.clone();
        match self {
            Axis::ObservedCount => p.observed_count = value as usize,
            Axis::ConnectionP => p.connection_p = value,
            Axis::Beta => p.beta = value,
            Axis::SampleCount => p.sample_count = value as usize,
        }
        p
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Axis::ObservedCount,
            Axis::ConnectionP,
            Axis::Beta,
            Axis::SampleCount,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| Error::invalid(format!("unknown axis {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub axis: Axis,
    pub axis_values: Vec<f64>,
    #[serde(default)]
    pub frozen: FrozenParams,
    #[serde(default = "default_seeds")]
    pub seeds_per_cell: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorName>,
    #[serde(default)]
    pub master_seed: u64,
    /// Directory receiving `report.csv`, `report.meta.json` and `report.svg`.
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default = "default_plot")]
    pub plot: bool,
    /// How the network estimators are trained when no models are supplied.
    #[serde(default)]
    pub training: TrainingPlan,
}

fn default_seeds() -> usize {
    5
}

fn default_estimators() -> Vec<EstimatorName> {
    EstimatorName::ALL.to_vec()
}

fn default_plot() -> bool {
    true
}

impl SweepConfig {
    pub fn new(axis: Axis, axis_values: Vec<f64>) -> Self {
        SweepConfig {
            axis,
            axis_values,
            frozen: FrozenParams::default(),
            seeds_per_cell: default_seeds(),
            estimators: default_estimators(),
            master_seed: 0,
            output_path: None,
            plot: true,
            training: TrainingPlan::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis_values.is_empty() {
            return Err(Error::invalid("axis_values is empty"));
        }
        if self.axis_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("axis_values must be strictly increasing"));
        }
        if self.axis_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("axis_values must be finite"));
        }
        if self.axis.is_integer()
            && self
                .axis_values
                .iter()
                .any(|v| v.fract() != 0.0 || *v < 1.0)
        {
            return Err(Error::invalid(format!(
                "{} takes positive integers",
                self.axis.name()
            )));
        }
        if self.seeds_per_cell == 0 {
            return Err(Error::invalid("seeds_per_cell must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(Error::invalid("no estimators selected"));
        }
        Ok(())
    }

    /// Switch trajectories and training corpus to the full sample count.
    pub fn paper_scale(mut self) -> Self {
        self.frozen.sample_count = PAPER_SCALE_SAMPLES;
        self.training.corpus.sample_count = PAPER_SCALE_SAMPLES;
        self
    }

    pub fn needs_networks(&self) -> bool {
        self.estimators.iter().any(|e| e.needs_network())
    }

    /// Seed of replicate `replicate` at axis position `axis_index`.
    pub fn cell_seed(&self, axis_index: usize, replicate: usize) -> u64 {
        seeds::derive(self.master_seed, &[axis_index as u64, replicate as u64])
    }
}

/// `accuracy` is `None` when the cell failed; `error` then says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub axis_value: f64,
    pub estimator: EstimatorName,
    pub seed: usize,
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub axis_value: f64,
    pub estimator: EstimatorName,
    pub median: f64,
    pub iqr: f64,
    pub count: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub axis: Axis,
    pub rows: Vec<AccuracyRow>,
    pub aggregates: Vec<Aggregate>,
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl AccuracyReport {
    /// Sort rows by (axis value, estimator, seed) and compute aggregates.
    pub fn from_rows(axis: Axis, mut rows: Vec<AccuracyRow>) -> Self {
        rows.sort_by(|a, b| {
            a.axis_value
                .total_cmp(&b.axis_value)
                .then(a.estimator.cmp(&b.estimator))
                .then(a.seed.cmp(&b.seed))
        });
        let mut aggregates: Vec<Aggregate> = Vec::new();
        for r in &rows {
            if aggregates.last().is_some_and(|a: &Aggregate| {
                a.axis_value == r.axis_value && a.estimator == r.estimator
            }) {
                continue;
            }
            let group: Vec<&AccuracyRow> = rows
                .iter()
                .filter(|o| o.axis_value == r.axis_value && o.estimator == r.estimator)
                .collect();
            let failures = group.iter().filter(|o| o.accuracy.is_none()).count();
            let mut sorted: Vec<f64> = group.iter().filter_map(|o| o.accuracy).collect();
            sorted.sort_by(f64::total_cmp);
            let (median, iqr) = if sorted.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                (
                    quantile(&sorted, 0.5),
                    quantile(&sorted, 0.75) - quantile(&sorted, 0.25),
                )
            };
            aggregates.push(Aggregate {
                axis_value: r.axis_value,
                estimator: r.estimator,
                median,
                iqr,
                count: sorted.len(),
                failures,
            });
        }
        AccuracyReport {
            axis,
            rows,
            aggregates,
        }
    }

    pub fn aggregate(&self, axis_value: f64, estimator: EstimatorName) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.axis_value == axis_value && a.estimator == estimator)
    }

    /// `axis_value,estimator,seed,accuracy`; failed cells carry `ERROR`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis_value,estimator,seed,accuracy\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},{},", r.axis_value, r.estimator, r.seed);
            match r.accuracy {
                Some(a) => {
                    let _ = writeln!(out, "{a}");
                }
                None => out.push_str("ERROR\n"),
            }
        }
        out
    }
}

pub fn read_report_csv(axis: Axis, text: &str) -> Result<AccuracyReport> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(parse_err(format!(
                "expected 4 columns, found {}",
                cols.len()
            )));
        }
        let axis_value = cols[0]
            .parse::<f64>()
            .map_err(|e| parse_err(e.to_string()))?;
        let estimator = cols[1]
            .parse::<EstimatorName>()
            .map_err(|e| parse_err(e.to_string()))?;
        let seed = cols[2]
            .parse::<usize>()
            .map_err(|e| parse_err(e.to_string()))?;
        let (accuracy, error) = if cols[3] == "ERROR" {
            (None, Some("recorded as failed".to_string()))
        } else {
            (
                Some(
                    cols[3]
                        .parse::<f64>()
                        .map_err(|e| parse_err(e.to_string()))?,
                ),
                None,
            )
        };
        rows.push(AccuracyRow {
            axis_value,
            estimator,
            seed,
            accuracy,
            error,
        });
    }
    Ok(AccuracyReport::from_rows(axis, rows))
}

/// Evaluate every (axis value, replicate) dataset in parallel and score all
/// configured estimators on it. Failed cells are kept with an error marker.
/// Writes the report files when `cfg.output_path` is set.
pub fn run_sweep(cfg: &SweepConfig, models: Option<&TrainedModels>) -> Result<AccuracyReport> {
    cfg.validate()?;
    if cfg.needs_networks() && models.is_none() {
        return Err(Error::invalid(
            "sweep includes network estimators but no trained models were given",
        ));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.axis_values.len())
        .flat_map(|a| (0..cfg.seeds_per_cell).map(move |r| (a, r)))
        .collect();
    let rows: Vec<AccuracyRow> = jobs
        .par_iter()
        .flat_map_iter(|&(a, r)| {
            let value = cfg.axis_values[a];
            let params = cfg.axis.apply(&cfg.frozen, value);
            evaluate_replicate(&params, cfg.cell_seed(a, r), &cfg.estimators, models)
                .into_iter()
                .map(move |(estimator, outcome)| {
                    let (accuracy, error) = match outcome {
                        Ok(acc) => (Some(acc), None),
                        Err(e) => (None, Some(e.to_string())),
                    };
                    AccuracyRow {
                        axis_value: value,
                        estimator,
                        seed: r,
                        accuracy,
                        error,
                    }
                })
        })
        .collect();
    let report = AccuracyReport::from_rows(cfg.axis, rows);
    if let Some(dir) = &cfg.output_path {
        write_outputs(cfg, &report, dir, None)?;
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct SweepOutputs {
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Write `report.csv`, the JSON run manifest and (if enabled) the SVG plot.
/// `extra` is merged into the manifest under `"extra"`.
pub fn write_outputs(
    cfg: &SweepConfig,
    report: &AccuracyReport,
    dir: &Path,
    extra: Option<serde_json::Value>,
) -> Result<SweepOutputs> {
    fs::create_dir_all(dir)?;
    let csv = dir.join("report.csv");
    fs::write(&csv, report.to_csv())?;
    let cell_seeds: Vec<serde_json::Value> = cfg
        .axis_values
        .iter()
        .enumerate()
        .map(|(a, v)| {
            serde_json::json!({
                "axis_value": v,
                "seeds": (0..cfg.seeds_per_cell).map(|r| cfg.cell_seed(a, r)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let failures: Vec<&AccuracyRow> = report
        .rows
        .iter()
        .filter(|r| r.accuracy.is_none())
        .collect();
    let manifest = serde_json::json!({
        "tool": "lagnet",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "cell_seeds": cell_seeds,
        "aggregates": report.aggregates,
        "failures": failures,
        "extra": extra,
    });
    let meta = dir.join("report.meta.json");
    fs::write(&meta, serde_json::to_string_pretty(&manifest)?)?;
    let svg = if cfg.plot {
        let path = dir.join("report.svg");
        fs::write(
            &path,
            render_svg(report, &format!("accuracy vs {}", cfg.axis.name())),
        )?;
        Some(path)
    } else {
        None
    };
    Ok(SweepOutputs { csv, meta, svg })
}
