use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cqr::bench::{self, DataSource, ExperimentConfig, OutputFormat, Tuning};
use cqr::data::{FixedCounts, TargetColumn};
use cqr::regressors::QuantileRegressorSpec;
use cqr::synthetic::SyntheticConfig;
use cqr::MethodTag;

#[derive(Parser)]
#[command(
    name = "cqr-bench",
    about = "Coverage/width benchmark for conformal quantile regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a repeated-split experiment and write the results.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Synthetic,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Regressor {
    Linear,
    Qrf,
    Knn,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "synthetic")]
    source: Source,
    #[arg(long)]
    csv_path: Option<PathBuf>,
    /// Target column name, or `#<index>` for a zero-based column index.
    #[arg(long)]
    target: Option<String>,
    /// Training + calibration samples for the synthetic source.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Independent synthetic test samples.
    #[arg(long, default_value_t = bench::DEFAULT_SYNTHETIC_TEST)]
    n_test: usize,
    /// Synthetic feature dimension.
    #[arg(long, default_value_t = cqr::synthetic::DEFAULT_DIM)]
    dim: usize,
    #[arg(long, value_enum, default_value = "qrf")]
    regressor: Regressor,
    #[arg(long, value_delimiter = ',', default_value = "cqr,cqr-m,cqr-r")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Training fraction; repeat for a sweep.
    #[arg(long)]
    gamma: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = cqr::conformal::DEFAULT_EPS)]
    eps: f64,
    /// `off` or `target=<coverage>`.
    #[arg(long, default_value = "off")]
    tune: String,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// `train,calib,test` sizes overriding the fractions (CSV only).
    #[arg(long, value_delimiter = ',', num_args = 3)]
    fixed_counts: Option<Vec<usize>>,
    /// Skip dividing CSV responses by their mean absolute training value.
    #[arg(long)]
    no_standardize: bool,
    #[arg(long, default_value_t = QuantileRegressorSpec::DEFAULT_TREES)]
    trees: usize,
    #[arg(long, default_value_t = QuantileRegressorSpec::DEFAULT_MIN_LEAF)]
    min_leaf: usize,
    /// Neighbours for KNN; defaults to ⌈√n⌉.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = QuantileRegressorSpec::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = QuantileRegressorSpec::DEFAULT_STEP)]
    step: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

fn build_config(args: &RunArgs) -> cqr::Result<ExperimentConfig> {
    let invalid = |m: &str| cqr::Error::InvalidConfig(m.to_string());
    let synthetic = SyntheticConfig::with_dim(args.dim, args.seed)?;
    let source = match args.source {
        Source::Synthetic => DataSource::Synthetic {
            config: synthetic.clone(),
            n: args.n,
            n_test: args.n_test,
        },
        Source::Csv => {
            let path = args
                .csv_path
                .clone()
                .ok_or_else(|| invalid("--csv-path is required for --source csv"))?;
            let target = args
                .target
                .as_deref()
                .ok_or_else(|| invalid("--target is required for --source csv"))?;
            let target = match target.strip_prefix('#') {
                Some(i) => TargetColumn::Index(
                    i.parse()
                        .map_err(|_| invalid("column index after `#` must be an integer"))?,
                ),
                None => TargetColumn::Name(target.to_string()),
            };
            DataSource::Csv {
                path,
                target,
                standardize: !args.no_standardize,
            }
        }
    };
    let regressor = match args.regressor {
        Regressor::Linear => QuantileRegressorSpec::linear(args.epochs, args.step, args.seed)?,
        Regressor::Qrf => QuantileRegressorSpec::qrf(args.trees, args.min_leaf, args.seed)?,
        Regressor::Knn => QuantileRegressorSpec::knn(args.k, args.seed)?,
        Regressor::Oracle => QuantileRegressorSpec::oracle(synthetic),
    };
    let mut cfg = ExperimentConfig::new(source, regressor);
    cfg.methods = args
        .methods
        .iter()
        .map(|m| m.parse::<MethodTag>())
        .collect::<cqr::Result<_>>()?;
    cfg.alpha = args.alpha;
    if !args.gamma.is_empty() {
        cfg.gammas = args.gamma.clone();
    }
    cfg.repetitions = args.reps;
    cfg.seed = args.seed;
    cfg.eps = args.eps;
    cfg.tuning = args.tune.parse::<Tuning>()?;
    cfg.folds = args.folds;
    cfg.test_fraction = args.test_fraction;
    cfg.fixed_counts = args.fixed_counts.as_ref().map(|c| FixedCounts {
        train: c[0],
        calib: c[1],
        test: c[2],
    });
    Ok(cfg)
}

fn run(args: &RunArgs) -> cqr::Result<()> {
    let cfg = build_config(args)?;
    let result = bench::run_experiment(&cfg)?;
    let format = match args.format {
        Format::Json => OutputFormat::Json,
        Format::Csv => OutputFormat::Csv,
    };
    bench::emit(&result, format, &args.out)?;
    for a in &result.aggregates {
        let width = a
            .width_mean
            .map_or_else(|| "inf".to_string(), |w| format!("{w:.4}"));
        eprintln!(
            "{:<6} gamma={:<5} coverage={:.4} width={}",
            a.method, a.gamma, a.coverage_mean, width
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
