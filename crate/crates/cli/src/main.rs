//! Command-line front end: dataset generation, training, prediction,
//! distribution reports, and benchmark grids.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fnnrhn::bench::ExperimentConfig;
use fnnrhn::datagen::{self, NormalizationOrder};
use fnnrhn::network::{self, hidden_matrix, Model};
use fnnrhn::paramgen::{self, AnchorStrategy, GenConfig, Method};
use fnnrhn::solver::{fit_output_weights, rmse, FitOptions};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "fnnrhn",
    version,
    about = "Feedforward networks with random hidden nodes: generate data, fit models, analyze parameter distributions, run method-comparison benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV
    GenData(GenDataArgs),
    /// Generate a hidden layer, fit output weights on a dataset, save the model
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset
    Predict(PredictArgs),
    /// Emit distribution-diagnostic CSV reports
    Analyze {
        #[command(subcommand)]
        report: AnalyzeCommand,
    },
    /// Run a method-comparison grid from a config file
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    /// Add noise, then normalize targets onto [-1, 1]
    NoiseFirst,
    /// Normalize targets onto [-1, 1], then add noise
    NormalizeFirst,
}

impl From<OrderArg> for NormalizationOrder {
    fn from(v: OrderArg) -> Self {
        match v {
            OrderArg::NoiseFirst => NormalizationOrder::NoiseThenNormalize,
            OrderArg::NormalizeFirst => NormalizationOrder::NormalizeThenNoise,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Weights and biases uniform on [-u, u]
    Sm,
    /// Weights uniform on [-u, u], biases anchored in the data
    Pmu,
    /// Slope angles uniform on [alpha-min, alpha-max], biases anchored
    Pma,
}

impl From<MethodArg> for Method {
    fn from(v: MethodArg) -> Self {
        match v {
            MethodArg::Sm => Method::Sm,
            MethodArg::Pmu => Method::PmU,
            MethodArg::Pma => Method::PmAlpha,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AnchorArg {
    /// Uniform draws inside the input hypercube
    Uniform,
    /// Training inputs drawn with replacement
    Sample,
    /// k-means cluster prototypes of the training inputs
    Prototype,
}

impl From<AnchorArg> for AnchorStrategy {
    fn from(v: AnchorArg) -> Self {
        match v {
            AnchorArg::Uniform => AnchorStrategy::UniformInH,
            AnchorArg::Sample => AnchorStrategy::TrainingSample,
            AnchorArg::Prototype => AnchorStrategy::ClusterPrototype,
        }
    }
}

#[derive(Args)]
struct GenDataArgs {
    /// Input dimension n
    #[arg(long)]
    dims: usize,
    /// Number of points N
    #[arg(long)]
    count: usize,
    /// Noise amplitude (targets get U(-amp, amp) added)
    #[arg(long)]
    noise: f64,
    #[arg(long)]
    seed: u64,
    /// Whether noise is applied before or after normalization
    #[arg(long, value_enum)]
    order: OrderArg,
    /// Skip the noise term (test sets)
    #[arg(long)]
    no_noise: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset CSV (as written by gen-data)
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Hidden node count m
    #[arg(long)]
    nodes: usize,
    /// Weight bound for sm / pmu
    #[arg(long)]
    u: Option<f64>,
    /// Lower slope-angle bound in degrees (pma)
    #[arg(long)]
    alpha_min: Option<f64>,
    /// Upper slope-angle bound in degrees (pma)
    #[arg(long, default_value_t = 90.0)]
    alpha_max: f64,
    /// Anchor selection for the anchored methods
    #[arg(long, value_enum, default_value_t = AnchorArg::Sample)]
    anchors: AnchorArg,
    /// Ridge penalty on the output weights
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    #[arg(long)]
    seed: u64,
    /// Output model file (TOML)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file written by train
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV to evaluate on
    #[arg(long)]
    data: PathBuf,
    /// Output CSV: inputs, target, prediction
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Weight bound u
    #[arg(long, default_value_t = 1.0)]
    u: f64,
    /// Monte Carlo sample count
    #[arg(long)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Inflection-point density: closed form vs sampled histogram
    ChiPdf(AnalyzeArgs),
    /// Probability that a random inflection hyperplane meets [0,1]^n, n = 1..dims
    InBox {
        /// Largest dimension to report
        #[arg(long, default_value_t = 10)]
        dims: usize,
        #[command(flatten)]
        common: AnalyzeArgs,
    },
    /// Slope-angle histogram for weights from U(-u, u)
    AngleDist(AnalyzeArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output report CSV
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(args) => gen_data(args),
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Analyze { report } => analyze(report),
        Command::Bench(args) => bench(args),
    }
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    let dataset = datagen::make_dataset(
        args.dims,
        args.count,
        args.noise,
        args.seed,
        args.order.into(),
        !args.no_noise,
    )?;
    datagen::write_csv(&dataset, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "wrote {} points ({} dims) to {}",
        dataset.n_points(),
        dataset.dim(),
        args.out.display()
    );
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let data = datagen::read_csv(&args.data)
        .with_context(|| format!("reading {}", args.data.display()))?;
    let method: Method = args.method.into();
    let config = match method {
        Method::Sm | Method::PmU => {
            let Some(u) = args.u else {
                bail!("--u is required for methods sm and pmu");
            };
            if args.alpha_min.is_some() {
                bail!("--alpha-min only applies to method pma");
            }
            match method {
                Method::Sm => GenConfig::sm(u, args.seed),
                _ => GenConfig::pmu(u, args.anchors.into(), args.seed),
            }
        }
        Method::PmAlpha => {
            let Some(alpha_min) = args.alpha_min else {
                bail!("--alpha-min is required for method pma");
            };
            if args.u.is_some() {
                bail!("--u only applies to methods sm and pmu");
            }
            GenConfig::pm_alpha(alpha_min, args.alpha_max, args.anchors.into(), args.seed)
        }
    };

    let layer = paramgen::generate(args.nodes, data.dim(), &config, Some(&data))?;
    network::audit_anchoring(&layer, 1e-12)?;
    let h = hidden_matrix(data.inputs(), &layer)?;
    let beta = fit_output_weights(&h, data.targets(), &FitOptions::ridge(args.ridge))?;
    let fitted = &h * &beta;
    let train_rmse = rmse(fitted.as_slice(), data.targets().as_slice())?;
    let model = Model::new(layer, beta, args.ridge, train_rmse)?;
    model
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "trained {method} with {} nodes, train rmse {train_rmse:.6}, model at {}",
        args.nodes,
        args.out.display()
    );
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let model = Model::load(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let data = datagen::read_csv(&args.data)
        .with_context(|| format!("reading {}", args.data.display()))?;
    let predictions = network::predict(&model, data.inputs())?;
    let test_rmse = rmse(predictions.as_slice(), data.targets().as_slice())?;
    let csv = datagen::predictions_csv(&data, predictions.as_slice())?;
    std::fs::write(&args.out, csv).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "predicted {} points, rmse {test_rmse:.6}, wrote {}",
        data.n_points(),
        args.out.display()
    );
    Ok(())
}

fn analyze(report: AnalyzeCommand) -> Result<()> {
    let (csv, out) = match report {
        AnalyzeCommand::ChiPdf(args) => (
            fnnrhn::analysis::chi_pdf_report(args.u, args.samples, args.seed)?,
            args.out,
        ),
        AnalyzeCommand::InBox { dims, common } => (
            fnnrhn::analysis::in_box_report(dims, common.u, common.samples, common.seed)?,
            common.out,
        ),
        AnalyzeCommand::AngleDist(args) => (
            fnnrhn::analysis::angle_dist_report(args.u, args.samples, args.seed)?,
            args.out,
        ),
    };
    std::fs::write(&out, csv).with_context(|| format!("writing {}", out.display()))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let config = ExperimentConfig::load(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let report = match args.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .context("building worker pool")?;
            pool.install(|| fnnrhn::bench::run_grid(&config))?
        }
        None => fnnrhn::bench::run_grid(&config)?,
    };
    fnnrhn::bench::emit_report(&report, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "ran {} cells ({} methods x {} node counts), report at {}",
        report.cells.len(),
        config.methods.len(),
        config.node_counts.len(),
        args.out.display()
    );
    Ok(())
}
