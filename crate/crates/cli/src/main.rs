//! `lagnet`: generate graphs and trajectories, estimate couplings, train the
//! pair classifiers and run accuracy sweeps.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lagnet_core::experiments::{
    self, read_report_csv, render_svg, write_outputs, EstimatorName, FrozenParams, TrainedModels,
    TrainingPlan, PAPER_SCALE_SAMPLES,
};
use lagnet_core::{
    build_f, build_k, build_t, empirical_lag_moments, erdos_renyi, estimate, extract_labels,
    feasibility_margin, fit_gmm, gmm_classify, io, jittered_noise, laplacian_weights,
    load_edge_list, min_exogenous_variance, restrict, simulate, threshold_support, watts_strogatz,
    Axis, EstimatorKind, Graph, InteractionMatrix, NoiseModel, SimConfig, SweepConfig,
};

#[derive(Parser)]
#[command(
    name = "lagnet",
    version,
    about = "Topology inference from partially observed networked time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random graph and write it as an edge list.
    GenGraph(GenGraphArgs),
    /// Simulate the linear dynamics on a graph and write the trajectory CSV.
    Simulate(SimulateArgs),
    /// Write empirical lag moments `R_k.csv` of a trajectory.
    Moments(MomentsArgs),
    /// Matrix estimate from a trajectory, optionally classified into a support.
    Estimate(EstimateArgs),
    /// Check the noise feasibility condition for a graph and noise model.
    Feasibility(FeasibilityArgs),
    /// Per-pair feature vectors of a trajectory.
    Features(FeaturesArgs),
    /// Build the training corpus and train both networks.
    Train(TrainArgs),
    /// Accuracy of one estimator on one generated dataset.
    Evaluate(EvaluateArgs),
    /// Run a parameter sweep described by a JSON config.
    Sweep(SweepArgs),
    /// Render a sweep report CSV as an SVG line plot.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Er,
    Ws,
}

#[derive(Args)]
struct GenGraphArgs {
    #[arg(long, value_enum, default_value = "er")]
    model: GraphKind,
    #[arg(long, default_value_t = 50)]
    nodes: usize,
    /// Edge probability (Erdős–Rényi).
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Even ring degree (Watts–Strogatz).
    #[arg(long, default_value_t = 4)]
    ring_degree: usize,
    /// Rewiring probability (Watts–Strogatz).
    #[arg(long, default_value_t = 0.1)]
    rewire_p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Graph file plus weighting and noise parameters.
#[derive(Args)]
struct ModelArgs {
    /// Edge list (`i j` per line).
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_gap: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Max-abs size of the random off-diagonal perturbation.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
    /// Variance of the injected isotropic exogenous noise.
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
}

impl ModelArgs {
    fn build(&self) -> Result<(InteractionMatrix, NoiseModel)> {
        let graph = read_graph(&self.graph)?;
        let a = laplacian_weights(&graph, self.rho)?;
        let noise = jittered_noise(
            graph.node_count(),
            self.sigma_gap,
            self.beta,
            self.jitter,
            self.noise_seed,
        )?
        .with_xi_variance(self.xi)?;
        Ok((a, noise))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Extra samples kept after the nominal count (lag headroom).
    #[arg(long, default_value_t = 0)]
    tail: usize,
    #[arg(long, default_value_t = lagnet_core::simulate::DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated observed node ids; all nodes when omitted.
    #[arg(long, value_delimiter = ',')]
    observed: Option<Vec<usize>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    min_lag: i64,
    #[arg(long, default_value_t = 3)]
    max_lag: i64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    trajectory: PathBuf,
    /// one_lag, nig, precision or granger.
    #[arg(long, default_value = "nig")]
    estimator: EstimatorKind,
    /// Matrix estimate CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Classify pairs by thresholding the symmetrized estimate.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "gmm")]
    threshold: Option<f64>,
    /// Classify pairs with a two-component Gaussian mixture.
    #[arg(long)]
    gmm: bool,
    /// 0/1 support CSV (needs --threshold or --gmm).
    #[arg(long)]
    support_out: Option<PathBuf>,
}

#[derive(Args)]
struct FeasibilityArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated observed node ids; all nodes when omitted.
    #[arg(long, value_delimiter = ',')]
    observed: Option<Vec<usize>>,
    /// Also write the error matrix CSV here.
    #[arg(long)]
    error_matrix_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureArg {
    F,
    T,
    K,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long, value_enum, default_value = "k")]
    kind: FeatureArg,
    #[arg(long, default_value_t = -50, allow_hyphen_values = true)]
    min_lag: i64,
    #[arg(long, default_value_t = 50)]
    max_lag: i64,
    /// Edge list used to attach ground-truth labels.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON training plan (`corpus`, `network`, `corpus_seed`); defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    /// Use the full-size sample count for the corpus.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// JSON with any subset of the frozen cell parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "nig_gmm")]
    estimator: EstimatorName,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    observed_count: Option<usize>,
    #[arg(long)]
    connection_p: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Directory written by `train` (needed for network estimators).
    #[arg(long)]
    models: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output path.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Directory written by `train`; otherwise networks are trained from the
    /// config's training plan when needed.
    #[arg(long)]
    models: Option<PathBuf>,
    /// Use the full-size sample count for cells and corpus.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    no_plot: bool,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value = "beta")]
    axis: Axis,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn read_graph(path: &Path) -> Result<Graph> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    load_edge_list(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen_graph(args: GenGraphArgs) -> Result<()> {
    let g = match args.model {
        GraphKind::Er => erdos_renyi(args.nodes, args.p, args.seed)?,
        GraphKind::Ws => watts_strogatz(args.nodes, args.ring_degree, args.rewire_p, args.seed)?,
    };
    eprintln!(
        "nodes={} edges={} max_degree={} connected={}",
        g.node_count(),
        g.edge_count(),
        g.max_degree(),
        g.is_connected()
    );
    emit(args.out.as_deref(), &g.to_edge_list())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let (a, noise) = args.model.build()?;
    let cfg = SimConfig {
        burn_in: args.burn_in,
        extra_tail: args.tail,
        seed: args.seed,
    };
    let mut ts = simulate(&a, &noise, args.samples, &cfg)?;
    if let Some(observed) = &args.observed {
        ts = restrict(&ts, observed)?;
    }
    write_text(&args.out, &io::trajectory_to_csv(&ts))
}

fn moments(args: MomentsArgs) -> Result<()> {
    let ts = io::trajectory_from_csv(&read_text(&args.trajectory)?)?;
    let m = empirical_lag_moments(&ts, args.min_lag, args.max_lag)?;
    io::write_lag_moments(&m, &args.out_dir)?;
    eprintln!(
        "lags {}..={} over n={} samples",
        m.min_lag(),
        m.max_lag(),
        m.sample_count()
    );
    Ok(())
}

fn run_estimate(args: EstimateArgs) -> Result<()> {
    let ts = io::trajectory_from_csv(&read_text(&args.trajectory)?)?;
    let m = empirical_lag_moments(&ts, 0, 3)?;
    let est = estimate(&m, args.estimator)?;
    emit(args.out.as_deref(), &io::matrix_to_csv(&est.values))?;
    let support = match (args.threshold, args.gmm) {
        (Some(t), _) => Some(threshold_support(&est, t)),
        (None, true) => Some(gmm_classify(
            &fit_gmm(
                &est.pair_scores(),
                lagnet_core::classifiers::GMM_MAX_ITERS,
                lagnet_core::classifiers::GMM_TOL,
            )?,
            &est,
        )),
        (None, false) => None,
    };
    match (support, &args.support_out) {
        (Some(s), Some(path)) => write_text(path, &io::bool_matrix_to_csv(&s)),
        (Some(s), None) => {
            let edges = (0..s.nrows()).flat_map(|i| (i + 1..s.ncols()).map(move |j| (i, j)));
            let count = edges.filter(|&(i, j)| s[(i, j)]).count();
            eprintln!("{count} connected pairs");
            Ok(())
        }
        (None, Some(_)) => bail!("--support-out needs --threshold or --gmm"),
        (None, None) => Ok(()),
    }
}

fn feasibility(args: FeasibilityArgs) -> Result<()> {
    let (a, noise) = args.model.build()?;
    let s = args
        .observed
        .clone()
        .unwrap_or_else(|| (0..a.dim()).collect());
    let report = feasibility_margin(&a, &noise, &s)?;
    print!("{}", report.to_record());
    println!(
        "min_exogenous_variance={}",
        min_exogenous_variance(&a, &noise)
    );
    if let Some(path) = &args.error_matrix_out {
        write_text(path, &io::matrix_to_csv(&report.error_matrix))?;
    }
    Ok(())
}

fn features(args: FeaturesArgs) -> Result<()> {
    let ts = io::trajectory_from_csv(&read_text(&args.trajectory)?)?;
    let m = empirical_lag_moments(&ts, args.min_lag, args.max_lag)?;
    let mut fs = match args.kind {
        FeatureArg::F => build_f(&m),
        FeatureArg::T => build_t(&m)?,
        FeatureArg::K => build_k(&build_f(&m), &build_t(&m)?)?,
    };
    if let Some(path) = &args.graph {
        // labels depend on the support only, so any admissible rho works
        let a = laplacian_weights(&read_graph(path)?, 0.5)?;
        fs = fs.with_labels(extract_labels(&a, ts.observed()))?;
    }
    write_text(&args.out, &fs.to_csv())
}

fn train(args: TrainArgs) -> Result<()> {
    let mut plan: TrainingPlan = match &args.config {
        Some(path) => serde_json::from_str(&read_text(path)?)?,
        None => TrainingPlan::default(),
    };
    if args.paper_scale {
        plan.corpus.sample_count = PAPER_SCALE_SAMPLES;
    }
    if let Some(n) = args.samples {
        plan.corpus.sample_count = n;
    }
    if let Some(e) = args.epochs {
        plan.network.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        plan.network.learning_rate = lr;
    }
    if let Some(seed) = args.seed {
        plan.corpus_seed = seed;
    }
    let (corpus, models) = plan.run()?;
    let (acc_k, acc_f) = models.training_accuracy(&corpus)?;
    models.save(&args.out_dir)?;
    let summary = serde_json::json!({
        "plan": plan,
        "rows": corpus.k.len(),
        "datasets": corpus.datasets,
        "training_accuracy_k": acc_k,
        "training_accuracy_f_only": acc_f,
        "loss_trace_k": models.k_model.loss_trace,
        "loss_trace_f_only": models.f_model.loss_trace,
    });
    write_text(
        &args.out_dir.join("training.json"),
        &serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "rows={} training_accuracy_k={acc_k} training_accuracy_f_only={acc_f}",
        corpus.k.len()
    );
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let mut p: FrozenParams = match &args.config {
        Some(path) => serde_json::from_str(&read_text(path)?)?,
        None => FrozenParams::default(),
    };
    if let Some(v) = args.beta {
        p.beta = v;
    }
    if let Some(v) = args.observed_count {
        p.observed_count = v;
    }
    if let Some(v) = args.connection_p {
        p.connection_p = v;
    }
    if let Some(v) = args.samples {
        p.sample_count = v;
    }
    let models = args
        .models
        .as_deref()
        .map(TrainedModels::load)
        .transpose()?;
    let acc = experiments::evaluate_cell(&p, args.estimator, args.seed, models.as_ref())?;
    println!("{},{},{acc}", args.estimator, args.seed);
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut cfg = SweepConfig::from_json(&read_text(&args.config)?)?;
    if args.paper_scale {
        cfg = cfg.paper_scale();
    }
    if let Some(dir) = args.out_dir {
        cfg.output_path = Some(dir);
    }
    if args.no_plot {
        cfg.plot = false;
    }
    let out_dir = cfg
        .output_path
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    cfg.output_path = Some(out_dir.clone());

    let mut training = None;
    let models = match (&args.models, cfg.needs_networks()) {
        (Some(dir), true) => Some(TrainedModels::load(dir)?),
        (None, true) => {
            eprintln!(
                "training networks ({} samples per corpus dataset)",
                cfg.training.corpus.sample_count
            );
            let (corpus, models) = cfg.training.run()?;
            let (k, f) = models.training_accuracy(&corpus)?;
            training = Some(
                serde_json::json!({ "training_accuracy_k": k, "training_accuracy_f_only": f }),
            );
            models.save(&out_dir.join("models"))?;
            Some(models)
        }
        (_, false) => None,
    };
    // files are written below, together with the training summary
    let unwritten = SweepConfig {
        output_path: None,
        ..cfg.clone()
    };
    let report = experiments::run_sweep(&unwritten, models.as_ref())?;
    let outputs = write_outputs(&cfg, &report, &out_dir, training)?;
    for a in &report.aggregates {
        println!(
            "{}={} {} median={:.4} iqr={:.4} n={} failed={}",
            cfg.axis, a.axis_value, a.estimator, a.median, a.iqr, a.count, a.failures
        );
    }
    eprintln!("wrote {}", outputs.csv.display());
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let report = read_report_csv(args.axis, &read_text(&args.report)?)?;
    let title = args
        .title
        .unwrap_or_else(|| format!("accuracy vs {}", args.axis));
    write_text(&args.out, &render_svg(&report, &title))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenGraph(a) => gen_graph(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Moments(a) => moments(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Feasibility(a) => feasibility(a),
        Command::Features(a) => features(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Plot(a) => plot(a),
    }
}
