//! Command-line pipeline: `train`, `eval`, `explain`, `info`.
//!
//! Every subcommand resolves its configuration in three layers: built-in
//! defaults, then a JSON config file (`--config`, or the `config.json` a
//! previous `train` wrote into the output directory), then command-line
//! flags. Exit codes: 0 success, 2 input/config error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ginnk_core::data::FeatureMode;
use ginnk_core::gin::CheckpointKind;
use ginnk_core::knn::MetricKind;
use ginnk_core::nnk::KernelKind;
use ginnk_core::pipeline::{
    dataset_info, run_eval, run_explain, run_train, CheckpointSelector, MetricsReport, RunConfig,
};
use ginnk_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ginnk",
    about = "Graph classification with a GIN encoder and a non-negative kernel interpolation classifier",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the encoder; writes best/last checkpoints and a training curve.
    Train(TrainArgs),
    /// Evaluate the supervised head and the NNK classifier on the test split.
    Eval(EvalArgs),
    /// Write the example-based explanation for one test graph.
    Explain(ExplainArgs),
    /// Print dataset statistics as JSON.
    Info(InfoArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file mirroring the full run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory in TU layout.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Node feature encoding: one_hot or scalar degree.
    #[arg(long, value_parser = parse_feature_mode)]
    feature_mode: Option<FeatureMode>,
    /// Train/val/test ratios, e.g. 0.8,0.1,0.1.
    #[arg(long, value_parser = parse_ratios)]
    split_ratios: Option<[f64; 3]>,
    #[arg(long)]
    split_seed: Option<u64>,
    /// Retrieval metric: euclidean or cosine.
    #[arg(long, value_parser = parse_metric)]
    metric: Option<MetricKind>,
    /// Kernel: cosine_shifted or rbf.
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<KernelKindArg>,
    /// RBF bandwidth (rbf kernel only).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Diagonal jitter added to neighborhood Gram matrices.
    #[arg(long)]
    jitter: Option<f64>,
    /// Neighbors retrieved per query.
    #[arg(long, short)]
    k: Option<usize>,
    /// Sparsity threshold zeroing tiny coefficients.
    #[arg(long)]
    tau_edge: Option<f64>,
    /// KKT tolerance of the quadratic-program solver.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct GinArgs {
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    mlp_depth: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    /// "learnable" or a fixed value, e.g. 0.0.
    #[arg(long)]
    epsilon: Option<String>,
    /// sum or mean readout.
    #[arg(long)]
    pooling: Option<String>,
    /// relu or identity.
    #[arg(long)]
    activation: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    gin: GinArgs,
    /// Training seed (required; controls init, shuffling, and dropout).
    #[arg(long)]
    seed: u64,
    /// Evaluate both classifiers on the val split every N epochs.
    #[arg(long)]
    nnk_every: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// best, last, or both.
    #[arg(long, value_parser = parse_selector)]
    checkpoint: Option<CheckpointSelector>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Graph id within the test split.
    #[arg(long)]
    id: usize,
    /// best or last.
    #[arg(long, value_parser = parse_kind)]
    checkpoint: Option<CheckpointKind>,
}

#[derive(Args)]
struct InfoArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy)]
enum KernelKindArg {
    CosineShifted,
    Rbf,
}

fn parse_feature_mode(s: &str) -> std::result::Result<FeatureMode, String> {
    match s {
        "one_hot" | "one-hot" => Ok(FeatureMode::OneHot),
        "scalar" => Ok(FeatureMode::Scalar),
        other => Err(format!("unknown feature mode {other:?} (one_hot|scalar)")),
    }
}

fn parse_ratios(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated ratios".into());
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("bad ratio {p:?}"))?;
    }
    Ok(out)
}

fn parse_metric(s: &str) -> std::result::Result<MetricKind, String> {
    match s {
        "euclidean" => Ok(MetricKind::Euclidean),
        "cosine" => Ok(MetricKind::Cosine),
        other => Err(format!("unknown metric {other:?} (euclidean|cosine)")),
    }
}

fn parse_kernel(s: &str) -> std::result::Result<KernelKindArg, String> {
    match s {
        "cosine_shifted" | "cosine-shifted" => Ok(KernelKindArg::CosineShifted),
        "rbf" => Ok(KernelKindArg::Rbf),
        other => Err(format!("unknown kernel {other:?} (cosine_shifted|rbf)")),
    }
}

fn parse_selector(s: &str) -> std::result::Result<CheckpointSelector, String> {
    match s {
        "best" => Ok(CheckpointSelector::Best),
        "last" => Ok(CheckpointSelector::Last),
        "both" => Ok(CheckpointSelector::Both),
        other => Err(format!("unknown checkpoint {other:?} (best|last|both)")),
    }
}

fn parse_kind(s: &str) -> std::result::Result<CheckpointKind, String> {
    match s {
        "best" => Ok(CheckpointKind::Best),
        "last" => Ok(CheckpointKind::Last),
        other => Err(format!("unknown checkpoint {other:?} (best|last)")),
    }
}

/// Defaults <- config file <- flags.
fn resolve_config(common: &CommonArgs, gin: Option<&GinArgs>) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => read_config(path)?,
        None => {
            // eval/explain reuse the config the train run echoed.
            let from_out = common.out.as_ref().map(|o| o.join("config.json"));
            match from_out {
                Some(p) if p.is_file() => read_config(&p)?,
                _ => RunConfig::default(),
            }
        }
    };

    if let Some(data) = &common.data {
        config.data_dir = data.clone();
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(mode) = common.feature_mode {
        config.feature_mode = mode;
    }
    if let Some([train, val, test]) = common.split_ratios {
        config.split_ratios = ginnk_core::data::SplitRatios::new(train, val, test);
    }
    if let Some(seed) = common.split_seed {
        config.split_seed = seed;
    }
    if let Some(metric) = common.metric {
        config.metric = metric;
    }
    if let Some(kind) = common.kernel {
        config.kernel.kind = match kind {
            KernelKindArg::CosineShifted => KernelKind::CosineShifted,
            KernelKindArg::Rbf => KernelKind::Rbf {
                bandwidth: common.bandwidth.unwrap_or(1.0),
            },
        };
    }
    if let Some(bandwidth) = common.bandwidth {
        match &mut config.kernel.kind {
            KernelKind::Rbf { bandwidth: b } => *b = bandwidth,
            KernelKind::CosineShifted => {
                return Err(Error::InvalidInput(
                    "--bandwidth only applies to the rbf kernel".into(),
                ))
            }
        }
    }
    if let Some(jitter) = common.jitter {
        config.kernel.jitter = jitter;
    }
    if let Some(k) = common.k {
        config.k_neighbors = k;
    }
    if let Some(tau) = common.tau_edge {
        config.tau_edge = tau;
    }
    if let Some(tol) = common.tolerance {
        config.solver_tolerance = tol;
    }

    if let Some(gin) = gin {
        if let Some(v) = gin.layers {
            config.gin.num_layers = v;
        }
        if let Some(v) = gin.hidden_dim {
            config.gin.hidden_dim = v;
        }
        if let Some(v) = gin.mlp_depth {
            config.gin.mlp_depth = v;
        }
        if let Some(v) = gin.dropout {
            config.gin.dropout = v;
        }
        if let Some(s) = &gin.epsilon {
            config.gin.epsilon_mode = if s == "learnable" {
                ginnk_core::gin::EpsilonMode::Learnable
            } else {
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad --epsilon value {s:?}")))?;
                ginnk_core::gin::EpsilonMode::Fixed(v)
            };
        }
        if let Some(s) = &gin.pooling {
            config.gin.pooling = match s.as_str() {
                "sum" => ginnk_core::gin::Pooling::Sum,
                "mean" => ginnk_core::gin::Pooling::Mean,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown pooling {other:?} (sum|mean)"
                    )))
                }
            };
        }
        if let Some(s) = &gin.activation {
            config.gin.activation = match s.as_str() {
                "relu" => ginnk_core::gin::Activation::Relu,
                "identity" => ginnk_core::gin::Activation::Identity,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown activation {other:?} (relu|identity)"
                    )))
                }
            };
        }
        if let Some(v) = gin.learning_rate {
            config.gin.learning_rate = v;
        }
        if let Some(v) = gin.batch_size {
            config.gin.batch_size = v;
        }
        if let Some(v) = gin.epochs {
            config.gin.epochs = v;
        }
    }

    Ok(config)
}

fn read_config(path: &PathBuf) -> Result<RunConfig> {
    if !path.is_file() {
        return Err(Error::InvalidInput(format!(
            "config file not found: {}",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn require_dirs(config: &RunConfig, need_data: bool, need_out: bool) -> Result<()> {
    if need_data && config.data_dir.as_os_str().is_empty() {
        return Err(Error::InvalidInput("--data is required".into()));
    }
    if need_out && config.out_dir.as_os_str().is_empty() {
        return Err(Error::InvalidInput("--out is required".into()));
    }
    Ok(())
}

fn print_report(report: &MetricsReport) {
    let epoch = report
        .checkpoint_epoch
        .map(|e| e.to_string())
        .unwrap_or_else(|| "-".into());
    println!("checkpoint {} (epoch {})", report.checkpoint, epoch);
    println!("  {:<12} {:>9} {:>9}", "classifier", "accuracy", "macro-F1");
    println!(
        "  {:<12} {:>9.4} {:>9.4}",
        "supervised", report.supervised.metrics.accuracy, report.supervised.metrics.macro_f1
    );
    println!(
        "  {:<12} {:>9.4} {:>9.4}   mean k-hat {:.2}, fallbacks {}",
        "nnk",
        report.nnk.metrics.accuracy,
        report.nnk.metrics.macro_f1,
        report.nnk.mean_active_neighbors,
        report.nnk.fallback_count
    );
    println!(
        "  gap (nnk - supervised): {:+.4}",
        report.nnk.metrics.accuracy - report.supervised.metrics.accuracy
    );
    println!("  embedding sha256: {}", report.embedding_checksum);
    println!(
        "  timings: embed {:.2}s, supervised {:.2}s, nnk {:.2}s",
        report.timings.embed_seconds,
        report.timings.supervised_seconds,
        report.timings.nnk_seconds
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let mut config = resolve_config(&args.common, Some(&args.gin))?;
            config.gin.seed = args.seed;
            config.nnk_every = args.nnk_every.or(config.nnk_every);
            require_dirs(&config, true, true)?;
            let state = run_train(&config)?;
            let last = state.history.last();
            println!(
                "trained {} epochs; final train loss {}, val accuracy {}",
                state.history.len(),
                last.map(|r| r.train_loss.to_string()).unwrap_or_else(|| "-".into()),
                last.map(|r| r.val_accuracy.to_string()).unwrap_or_else(|| "-".into()),
            );
            if let Some(best) = &state.best {
                println!(
                    "best checkpoint: epoch {}, val accuracy {}",
                    best.epoch, best.val_accuracy
                );
            }
            println!("artifacts in {}", config.out_dir.display());
            Ok(())
        }
        Command::Eval(args) => {
            let config = resolve_config(&args.common, None)?;
            require_dirs(&config, true, true)?;
            let selector = args.checkpoint.unwrap_or(config.checkpoint);
            for kind in selector.kinds() {
                let report = run_eval(&config, kind)?;
                print_report(&report);
                println!("  report: {}\n", config.report_path(kind).display());
            }
            Ok(())
        }
        Command::Explain(args) => {
            let config = resolve_config(&args.common, None)?;
            require_dirs(&config, false, true)?;
            let kind = args.checkpoint.unwrap_or(CheckpointKind::Best);
            let explanation = run_explain(&config, kind, args.id)?;
            println!(
                "graph {}: predicted class {} ({} active neighbors{})",
                args.id,
                explanation.predicted,
                explanation.neighbors.len(),
                if explanation.fallback { ", nearest-neighbor fallback" } else { "" }
            );
            for n in &explanation.neighbors {
                println!(
                    "  neighbor graph {:>6}  label {}  weight {:.6}  similarity {:.6}",
                    n.graph_id, n.label, n.weight, n.similarity
                );
            }
            println!(
                "written to {}",
                config.explanation_path(kind, args.id).display()
            );
            Ok(())
        }
        Command::Info(args) => {
            let config = resolve_config(&args.common, None)?;
            require_dirs(&config, true, false)?;
            let summary = dataset_info(&config)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
