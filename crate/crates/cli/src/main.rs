//! Command-line workflows for spectral filter design, application,
//! validation, learning, and node classification.
//!
//! Every command is deterministic given its flags and seed. Human-readable
//! summaries go to stdout; `--json` switches each summary to a single-line
//! structured record. Data always lands in files. Exit codes: 0 success,
//! 1 runtime failure (or an invalid filter for `validate`), 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use bernfilter::classify::TrainConfig;
use bernfilter::io::{self, CurveTable, GridSignalKind};
use bernfilter::learn::{LearnConfig, RegressionTask};
use bernfilter::{
    design_coeffs, eigendecompose, make_regression_task, named_filter, validate_filter,
    NormalizedOperator, NAMED_FILTERS,
};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "bernfilter",
    version,
    about = "Design, apply, validate, and learn graph spectral filters",
    after_help = "File formats:\n  \
        graph: one 'u v' edge per line, 0-based ids, '#' comments; node count\n  \
        is max id + 1 unless --nodes overrides it\n  \
        coefficients: line 1 the order K, line 2 K+1 space-separated values\n  \
        signals: headerless CSV, one node per row (one or more columns)\n  \
        curves: CSV with 'lambda,value' header"
)]
struct Cli {
    /// Emit one-line JSON summaries instead of human-readable text
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a named filter into polynomial coefficients
    Design(DesignArgs),
    /// Filter a signal on a graph by sparse propagation
    Apply(ApplyArgs),
    /// Check coefficients against the 0 <= g(lambda) <= 1 constraint
    Validate(ValidateArgs),
    /// Dump the Laplacian eigenvalues of a graph (dense solver, small graphs)
    Spectrum(SpectrumArgs),
    /// Learn non-negative filter coefficients from an input/target signal pair
    LearnFilter(LearnFilterArgs),
    /// Train the perceptron-plus-propagation node classifier
    Train(TrainArgs),
    /// Generate synthetic inputs
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Args)]
struct DesignArgs {
    /// Catalog filter name
    #[arg(long, value_parser = NAMED_FILTERS.to_vec())]
    filter: String,
    /// Polynomial order K
    #[arg(long, default_value_t = 10)]
    order: usize,
    /// Output coefficients file
    #[arg(long)]
    out: PathBuf,
    /// Optional filter-response CSV
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    /// Edge-list file
    #[arg(long)]
    graph: PathBuf,
    /// Override the node count implied by the edge list
    #[arg(long)]
    nodes: Option<usize>,
    /// Coefficients file
    #[arg(long)]
    coeffs: PathBuf,
    /// Input signal CSV (one value per node, or an n-by-d matrix)
    #[arg(long)]
    signal: PathBuf,
    /// Output CSV, same shape as the input
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Coefficients file
    #[arg(long)]
    coeffs: PathBuf,
    /// Number of grid points sampled over [0,2]
    #[arg(long, default_value_t = 1000)]
    grid_points: usize,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Edge-list file
    #[arg(long)]
    graph: PathBuf,
    /// Override the node count implied by the edge list
    #[arg(long)]
    nodes: Option<usize>,
    /// Eigenvalue CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LearnFilterArgs {
    /// Edge-list file
    #[arg(long)]
    graph: PathBuf,
    /// Override the node count implied by the edge list
    #[arg(long)]
    nodes: Option<usize>,
    /// Input signal CSV, one value per node
    #[arg(long)]
    signal: PathBuf,
    /// Target signal CSV; mutually exclusive with --named-filter
    #[arg(long, conflicts_with = "named_filter")]
    target: Option<PathBuf>,
    /// Synthesize the target by exact filtering with this catalog filter
    #[arg(long, value_parser = NAMED_FILTERS.to_vec())]
    named_filter: Option<String>,
    /// Polynomial order K
    #[arg(long, default_value_t = 10)]
    order: usize,
    #[arg(long, default_value_t = 2000)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Stop after this many epochs without improvement
    #[arg(long, default_value_t = 100)]
    patience: usize,
    /// Stacked convolutions sharing the coefficients (1 or 2)
    #[arg(long, default_value_t = 1)]
    layers: usize,
    /// Node mask file (one 0/1 per line); all nodes when omitted
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output coefficients file
    #[arg(long)]
    out: PathBuf,
    /// Optional learned-filter response CSV
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory with edges.txt, features.csv, labels.txt
    #[arg(long)]
    data: PathBuf,
    /// Number of random splits to train
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    order: usize,
    #[arg(long, default_value_t = 0.01)]
    lr_linear: f64,
    #[arg(long, default_value_t = 0.01)]
    lr_prop: f64,
    #[arg(long, default_value_t = 0.5)]
    dropout_linear: f64,
    #[arg(long, default_value_t = 0.5)]
    dropout_prop: f64,
    #[arg(long, default_value_t = 0.0005)]
    weight_decay: f64,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    #[arg(long, default_value_t = 200)]
    patience: usize,
    /// Learned-filter response CSV from the best split
    #[arg(long)]
    filter_out: Option<PathBuf>,
    /// Learned coefficients file from the best split
    #[arg(long)]
    coeffs_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Grid signal in [0,1], one value per node
    Grid(SynthGridArgs),
    /// Two-clique classification dataset directory
    TwoCluster(SynthTwoClusterArgs),
}

#[derive(Args)]
struct SynthGridArgs {
    #[arg(long)]
    height: usize,
    #[arg(long)]
    width: usize,
    /// random, gradient, or checker
    #[arg(long, default_value = "random")]
    kind: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output signal CSV
    #[arg(long)]
    out: PathBuf,
    /// Also write the grid's edge list here
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthTwoClusterArgs {
    /// Nodes per clique
    #[arg(long, default_value_t = 10)]
    size: usize,
    /// Feature noise amplitude
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output dataset directory
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Design(args) => design(args, cli.json),
        Command::Apply(args) => apply(args, cli.json),
        Command::Validate(args) => validate(args, cli.json),
        Command::Spectrum(args) => spectrum(args, cli.json),
        Command::LearnFilter(args) => learn_filter_cmd(args, cli.json),
        Command::Train(args) => train_cmd(args, cli.json),
        Command::Synth(SynthCommand::Grid(args)) => synth_grid(args, cli.json),
        Command::Synth(SynthCommand::TwoCluster(args)) => synth_two_cluster(args, cli.json),
    }
}

fn design(args: DesignArgs, as_json: bool) -> Result<ExitCode> {
    let h = named_filter(&args.filter)?;
    let coeffs = design_coeffs(&h, args.order)?;
    io::write_coeffs(&args.out, &coeffs)?;
    if let Some(curve_path) = &args.curve_out {
        let curve = CurveTable::from_coeffs(&coeffs, 1000)?;
        io::write_curve(curve_path, &curve)?;
    }
    if as_json {
        println!(
            "{}",
            json!({
                "command": "design",
                "filter": args.filter,
                "order": args.order,
                "out": args.out,
            })
        );
    } else {
        println!(
            "designed '{}' at order {} -> {}",
            args.filter,
            args.order,
            args.out.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn apply(args: ApplyArgs, as_json: bool) -> Result<ExitCode> {
    let graph = io::load_graph(&args.graph, args.nodes)?;
    let coeffs = io::read_coeffs(&args.coeffs)?;
    let signal = io::read_signal_matrix(&args.signal)?;
    let op = NormalizedOperator::laplacian(&graph);
    let out = bernfilter::apply_filter_matrix(&op, &coeffs, &signal)?;
    io::write_signal_matrix(&args.out, &out)?;
    if as_json {
        println!(
            "{}",
            json!({
                "command": "apply",
                "nodes": graph.node_count(),
                "columns": signal.cols(),
                "order": coeffs.order(),
                "out": args.out,
            })
        );
    } else {
        println!(
            "filtered {} column(s) over {} nodes at order {} -> {}",
            signal.cols(),
            graph.node_count(),
            coeffs.order(),
            args.out.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs, as_json: bool) -> Result<ExitCode> {
    let coeffs = io::read_coeffs(&args.coeffs)?;
    let report = validate_filter(&coeffs, args.grid_points);
    if as_json {
        println!(
            "{}",
            json!({
                "command": "validate",
                "order": coeffs.order(),
                "min": report.min_value,
                "max": report.max_value,
                "nonneg_ok": report.nonneg_ok,
                "bounded_ok": report.bounded_ok,
                "theta_nonneg": report.theta_nonneg,
                "theta_bounded": report.theta_bounded,
                "valid": report.is_valid(),
            })
        );
    } else {
        println!(
            "g over [0,2]: min {:.6e}, max {:.6e}",
            report.min_value, report.max_value
        );
        println!(
            "nonneg_ok={} bounded_ok={} theta_nonneg={} theta_bounded={}",
            report.nonneg_ok, report.bounded_ok, report.theta_nonneg, report.theta_bounded
        );
        if !report.nonneg_violations.is_empty() {
            println!(
                "negative response near lambda = {:.4} (first of {})",
                report.nonneg_violations[0],
                report.nonneg_violations.len()
            );
        }
        if !report.bound_violations.is_empty() {
            println!(
                "response above one near lambda = {:.4} (first of {})",
                report.bound_violations[0],
                report.bound_violations.len()
            );
        }
        println!("valid: {}", report.is_valid());
    }
    Ok(if report.is_valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn spectrum(args: SpectrumArgs, as_json: bool) -> Result<ExitCode> {
    let graph = io::load_graph(&args.graph, args.nodes)?;
    let op = NormalizedOperator::laplacian(&graph);
    let dec = eigendecompose(&op)?;
    match &args.out {
        Some(path) => {
            io::write_spectrum(path, dec.eigenvalues())?;
            if as_json {
                println!(
                    "{}",
                    json!({
                        "command": "spectrum",
                        "nodes": graph.node_count(),
                        "min": dec.eigenvalues().first(),
                        "max": dec.eigenvalues().last(),
                        "out": path,
                    })
                );
            } else {
                println!(
                    "{} eigenvalues in [{:.6}, {:.6}] -> {}",
                    graph.node_count(),
                    dec.eigenvalues().first().unwrap(),
                    dec.eigenvalues().last().unwrap(),
                    path.display()
                );
            }
        }
        None => {
            // tolerate a closed pipe (e.g. piping into head)
            use std::io::Write;
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            let mut write_all = || -> std::io::Result<()> {
                writeln!(out, "eigenvalue")?;
                for v in dec.eigenvalues() {
                    writeln!(out, "{v:.16e}")?;
                }
                out.flush()
            };
            if let Err(e) = write_all() {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_mask(path: &PathBuf, n: usize) -> Result<Vec<bool>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading mask {}", path.display()))?;
    let mut mask = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "0" => mask.push(false),
            "1" => mask.push(true),
            other => bail!(
                "{}:{}: bad mask entry '{other}' (use 0 or 1)",
                path.display(),
                lineno + 1
            ),
        }
    }
    if mask.len() != n {
        bail!(
            "{}: expected {n} mask entries, found {}",
            path.display(),
            mask.len()
        );
    }
    Ok(mask)
}

fn learn_filter_cmd(args: LearnFilterArgs, as_json: bool) -> Result<ExitCode> {
    let graph = io::load_graph(&args.graph, args.nodes)?;
    let n = graph.node_count();
    let input = io::read_signal_vector(&args.signal)?;
    let mask = match &args.mask {
        Some(path) => read_mask(path, n)?,
        None => RegressionTask::full_mask(n),
    };

    let task = match (&args.target, &args.named_filter) {
        (Some(path), None) => {
            let target = io::read_signal_vector(path)?;
            RegressionTask::new(&graph, input, target, mask)?
        }
        (None, Some(name)) => {
            let h = named_filter(name)?;
            make_regression_task(&graph, &h, input, mask)?
        }
        _ => bail!("provide exactly one of --target or --named-filter"),
    };

    let cfg = LearnConfig {
        order: args.order,
        learning_rate: args.lr,
        max_epochs: args.epochs,
        patience: args.patience,
        seed: args.seed,
        layers: args.layers,
    };
    let report = bernfilter::learn_filter(&task, &cfg)?;
    io::write_coeffs(&args.out, &report.coeffs)?;
    if let Some(curve_path) = &args.curve_out {
        let curve = CurveTable::from_coeffs(&report.coeffs, 1000)?;
        io::write_curve(curve_path, &curve)?;
    }
    if as_json {
        println!(
            "{}",
            json!({
                "command": "learn-filter",
                "nodes": n,
                "order": args.order,
                "epochs_run": report.loss_trajectory.len(),
                "sse": report.sse,
                "r2": report.r_squared,
                "out": args.out,
            })
        );
    } else {
        println!(
            "learned order-{} filter in {} epochs: sse {:.6e}, r2 {}",
            args.order,
            report.loss_trajectory.len(),
            report.sse,
            report
                .r_squared
                .map_or("undefined (zero-variance target)".to_string(), |r| format!(
                    "{r:.4}"
                )),
        );
        println!("coefficients -> {}", args.out.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn train_cmd(args: TrainArgs, as_json: bool) -> Result<ExitCode> {
    let dataset = io::load_dataset(&args.data)?;
    let cfg = TrainConfig {
        lr_linear: args.lr_linear,
        lr_prop: args.lr_prop,
        dropout_linear: args.dropout_linear,
        dropout_prop: args.dropout_prop,
        weight_decay: args.weight_decay,
        hidden_dim: args.hidden,
        order: args.order,
        max_epochs: args.max_epochs,
        patience: args.patience,
        seed: args.seed,
    };
    let report = bernfilter::classify::run_splits(&dataset, &cfg, args.splits, args.seed)?;

    let coeffs = report.best_outcome.params.coeffs()?;
    if let Some(path) = &args.coeffs_out {
        io::write_coeffs(path, &coeffs)?;
    }
    if let Some(path) = &args.filter_out {
        let curve = CurveTable::from_coeffs(&coeffs, 1000)?;
        io::write_curve(path, &curve)?;
    }

    if as_json {
        println!(
            "{}",
            json!({
                "command": "train",
                "nodes": dataset.node_count(),
                "classes": dataset.num_classes,
                "splits": args.splits,
                "accuracies": report.accuracies,
                "mean_accuracy": report.mean_accuracy,
                "std_accuracy": report.std_accuracy,
            })
        );
    } else {
        println!(
            "dataset: {} nodes, {} edges, {} features, {} classes",
            dataset.node_count(),
            dataset.graph.edge_count(),
            dataset.feature_dim(),
            dataset.num_classes
        );
        for (i, acc) in report.accuracies.iter().enumerate() {
            println!("split {i}: test accuracy {acc:.4}");
        }
        println!(
            "mean test accuracy over {} splits: {:.4} +/- {:.4}",
            args.splits, report.mean_accuracy, report.std_accuracy
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn synth_grid(args: SynthGridArgs, as_json: bool) -> Result<ExitCode> {
    let kind: GridSignalKind = args.kind.parse()?;
    let signal = io::synth_grid_signal(args.height, args.width, args.seed, kind)?;
    io::write_signal_vector(&args.out, &signal)?;
    if let Some(graph_path) = &args.graph_out {
        let graph = bernfilter::grid_graph(args.height, args.width)?;
        io::write_edge_list(graph_path, &graph)?;
    }
    if as_json {
        println!(
            "{}",
            json!({
                "command": "synth-grid",
                "height": args.height,
                "width": args.width,
                "kind": args.kind,
                "seed": args.seed,
                "out": args.out,
            })
        );
    } else {
        println!(
            "{}x{} {} signal -> {}",
            args.height,
            args.width,
            args.kind,
            args.out.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn synth_two_cluster(args: SynthTwoClusterArgs, as_json: bool) -> Result<ExitCode> {
    let dataset = bernfilter::io::synth_two_cluster(args.size, args.noise, args.seed)?;
    io::write_dataset(&args.out_dir, &dataset)?;
    if as_json {
        println!(
            "{}",
            json!({
                "command": "synth-two-cluster",
                "nodes": dataset.node_count(),
                "out_dir": args.out_dir,
            })
        );
    } else {
        println!(
            "two-cluster dataset ({} nodes) -> {}",
            dataset.node_count(),
            args.out_dir.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}
