//! `nhca` — train, evaluate and benchmark nonparallel hyperplane
//! classifiers.

mod benchmark;
mod data;
mod model_file;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use nhca::dataio::Scaling;
use nhca::evaluation::{self, confusion_counts, fit_scaled, grid_search, GridSpec, Protocol};
use nhca::multiclass::{TreeOptions, DEFAULT_FOCUS_THRESHOLD, DEFAULT_SEED};
use nhca::{HyperParams, KernelSpec, LabeledDataset, Strategy, Variant};

use benchmark::{Config, Dataset};
use data::CsvArgs;
use model_file::ModelFile;

#[derive(Parser)]
#[command(name = "nhca", version, about = "Nonparallel hyperplane classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a full dataset and write the model as JSON.
    Train(TrainArgs),
    /// Score a saved model on a labelled dataset.
    Eval(EvalArgs),
    /// Grid search plus cross-validation over every variant × strategy.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: nhca::NhcaError| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: nhca::NhcaError| e.to_string())
}

fn parse_scaling(s: &str) -> Result<Scaling, String> {
    s.parse().map_err(|e: nhca::NhcaError| e.to_string())
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long, value_enum, default_value = "linear")]
    kernel: KernelKind,
    /// RBF width in `exp(-gamma‖x−y‖²)`.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    nu1: Option<f64>,
    #[arg(long)]
    nu2: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Ridge added to HᵀH in the TWSVM dual.
    #[arg(long)]
    qp_ridge: Option<f64>,
}

impl ParamArgs {
    fn params(&self) -> HyperParams<f64> {
        let mut p = HyperParams::default();
        if let KernelKind::Rbf = self.kernel {
            p.kernel = KernelSpec::Rbf { gamma: self.gamma };
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.delta, self.delta);
        set(&mut p.nu, self.nu);
        set(&mut p.nu1, self.nu1);
        set(&mut p.nu2, self.nu2);
        set(&mut p.c1, self.c1);
        set(&mut p.c2, self.c2);
        set(&mut p.qp_ridge, self.qp_ridge);
        p
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// CSV path or bundled dataset name (iris, wine).
    #[arg(long)]
    data: String,
    #[command(flatten)]
    csv: CsvArgs,
    #[arg(long, value_parser = parse_variant)]
    variant: Variant,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Strategy,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value = "minmax", value_parser = parse_scaling)]
    scaling: Scaling,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Share of a class that must fall in one cluster to count as focused.
    #[arg(long, default_value_t = DEFAULT_FOCUS_THRESHOLD)]
    focus_threshold: f64,
    /// Tune parameters with the default grid before the final fit.
    #[arg(long)]
    tune: bool,
    #[arg(long)]
    model_out: PathBuf,
    /// Also print the model structure.
    #[arg(long)]
    describe: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: String,
    #[command(flatten)]
    csv: CsvArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Comma-separated CSV paths or bundled names.
    #[arg(long, value_delimiter = ',', default_value = "iris,wine")]
    datasets: Vec<String>,
    #[command(flatten)]
    csv: CsvArgs,
    #[arg(long, value_enum, default_value = "linear")]
    kernel: KernelKind,
    /// JSON grid file; missing keys keep their defaults.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    variants: Option<Vec<Variant>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategies: Option<Vec<Strategy>>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = evaluation::DEFAULT_FOLDS)]
    folds: usize,
    #[arg(long, default_value = "minmax", value_parser = parse_scaling)]
    scaling: Scaling,
    #[arg(long, default_value_t = DEFAULT_FOCUS_THRESHOLD)]
    focus_threshold: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn protocol(variant: Variant, strategy: Strategy, scaling: Scaling, seed: u64, focus: f64) -> Protocol {
    let mut p = Protocol::new(variant, strategy).with_seed(seed);
    p.scaling = scaling;
    p.tree = TreeOptions {
        seed,
        focus_threshold: focus,
    };
    p
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let named = data::load(&args.data, &args.csv)?;
    let proto = protocol(args.variant, args.strategy, args.scaling, args.seed, args.focus_threshold);
    let mut params = args.params.params();
    if args.tune {
        let tuned = grid_search(&named.data, &proto, &params, &GridSpec::default())?;
        println!(
            "tuned on validation split: accuracy {:.4} ({} of {} grid points failed)",
            tuned.validation_accuracy, tuned.failed, tuned.evaluated
        );
        params = tuned.params;
    }
    let start = Instant::now();
    let fitted = fit_scaled(&named.data, &proto, &params)?;
    let seconds = start.elapsed().as_secs_f64();
    let predicted = fitted.predict_batch(named.data.features())?;
    let train_acc = evaluation::accuracy(&predicted, named.data.labels())?;
    let (m, n) = named.data.features().shape();
    println!(
        "trained {} {} on {m} samples × {n} features, {} classes in {seconds:.4}s",
        args.variant.display_name(),
        args.strategy.name().to_uppercase(),
        named.data.class_count()
    );
    println!("training accuracy: {:.4}", train_acc);
    if !fitted.model.converged {
        println!("warning: a dual QP stopped at its iteration cap");
    }
    if args.describe {
        print!("{}", fitted.model.describe());
    }
    ModelFile::new(fitted, named.class_names).save(&args.model_out)?;
    println!("model written to {}", args.model_out.display());
    Ok(())
}

/// Re-encodes labels of `data` to the model's class numbering by name.
fn align_labels(data: &LabeledDataset<f64>, names: &[String], model_names: &[String]) -> Result<Vec<usize>> {
    let map: Vec<usize> = names
        .iter()
        .map(|n| {
            model_names
                .iter()
                .position(|m| m == n)
                .with_context(|| format!("label '{n}' is not a class of the model"))
        })
        .collect::<Result<_>>()?;
    Ok(data.labels().iter().map(|&l| map[l]).collect())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let file = ModelFile::load(&args.model)?;
    let named = data::load(&args.data, &args.csv)?;
    let model = &file.fitted.model;
    if named.data.feature_count() != model.feature_count {
        bail!(nhca::NhcaError::DimensionMismatch(format!(
            "data has {} features, model expects {}",
            named.data.feature_count(),
            model.feature_count
        )));
    }
    let actual = align_labels(&named.data, &named.class_names, &file.class_names)?;
    let predicted = file.fitted.predict_batch(named.data.features())?;
    let acc = evaluation::accuracy(&predicted, &actual)?;
    let counts = confusion_counts(&predicted, &actual, model.class_count)?;
    match args.format {
        Format::Json => {
            let classes: Vec<_> = counts
                .iter()
                .zip(&file.class_names)
                .map(|(c, name)| json!({"class": name, "tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn_}))
                .collect();
            let out = json!({"schema": 1, "samples": actual.len(), "accuracy": acc, "classes": classes});
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Format::Csv => {
            println!("class,tp,fp,tn,fn");
            for (c, name) in counts.iter().zip(&file.class_names) {
                println!("{name},{},{},{},{}", c.tp, c.fp, c.tn, c.fn_);
            }
            println!("accuracy,{acc}");
        }
        Format::Text => {
            println!("samples: {}", actual.len());
            println!("accuracy: {acc:.4}");
            println!("{:<20}{:>6}{:>6}{:>6}{:>6}", "class", "TP", "FP", "TN", "FN");
            for (c, name) in counts.iter().zip(&file.class_names) {
                println!("{name:<20}{:>6}{:>6}{:>6}{:>6}", c.tp, c.fp, c.tn, c.fn_);
            }
        }
    }
    Ok(())
}

fn load_grid(path: Option<&PathBuf>) -> Result<GridSpec> {
    let Some(path) = path else {
        return Ok(GridSpec::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading grid {}", path.display()))?;
    let overrides: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).with_context(|| format!("parsing grid {}", path.display()))?;
    let mut merged = match serde_json::to_value(GridSpec::default())? {
        serde_json::Value::Object(m) => m,
        _ => unreachable!("grid serializes to an object"),
    };
    for (k, v) in overrides {
        if !merged.contains_key(&k) {
            bail!("unknown grid key '{k}'");
        }
        merged.insert(k, v);
    }
    let grid: GridSpec = serde_json::from_value(serde_json::Value::Object(merged))?;
    grid.validate()?;
    Ok(grid)
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<bool> {
    let grid = load_grid(args.grid.as_ref())?;
    let datasets: Vec<Dataset> = args
        .datasets
        .iter()
        .map(|src| {
            Ok(Dataset {
                name: data::display_name(src),
                data: data::load(src, &args.csv)?.data,
            })
        })
        .collect::<Result<_>>()?;
    let kernel_name = match args.kernel {
        KernelKind::Linear => "linear",
        KernelKind::Rbf => "rbf",
    };
    let mut base = HyperParams::default();
    if let KernelKind::Rbf = args.kernel {
        // the grid supplies the actual width
        base.kernel = KernelSpec::Rbf { gamma: 1.0 };
    }
    let mut proto = protocol(Variant::Twsvm, Strategy::Oaa, args.scaling, args.seed, args.focus_threshold);
    proto.folds = args.folds;
    let config = Config {
        variants: args.variants.unwrap_or_else(|| Variant::ALL.to_vec()),
        strategies: args.strategies.unwrap_or_else(|| Strategy::ALL.to_vec()),
        base,
        grid,
        protocol: proto,
        kernel_name: kernel_name.into(),
    };
    let report = benchmark::run(&datasets, &config);
    let text = match args.format {
        Format::Text => report.to_text(),
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    match &args.output {
        Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(report.succeeded() > 0)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("NHCA_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("NHCA_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = init_threads().and_then(|()| match cli.command {
        Command::Train(a) => cmd_train(a).map(|()| true),
        Command::Eval(a) => cmd_eval(a).map(|()| true),
        Command::Benchmark(a) => cmd_benchmark(a),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: every benchmark cell failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
