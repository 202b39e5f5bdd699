use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qc50_core::bench::{self, AttributeMix, BenchConfig};
use qc50_core::builder::{train, Backend, BuildConfig, BuildStats};
use qc50_core::dataset::{load_csv, read_unlabeled, AttributeSchema};
use qc50_core::model;
use qc50_core::qbuilder::q_train;
use qc50_core::suites::{self, SuiteResult};

#[derive(Parser)]
#[command(name = "qc50", version, about = "Gain-ratio decision trees with classical and simulated quantum split search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a tree from a labelled CSV and write it as JSON.
    Train(TrainArgs),
    /// Print one predicted label per row of a CSV.
    Predict(PredictArgs),
    /// Run an instrumented build grid on synthetic data and print CSV.
    Bench(BenchArgs),
    /// Run the randomized verification suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value = "treemap")]
    backend: Backend,
    #[arg(long, default_value_t = 8)]
    max_height: usize,
    #[arg(long, default_value_t = 2)]
    min_split: usize,
    /// Required by the quantum backend.
    #[arg(long)]
    seed: Option<u64>,
    /// Dürr-Høyer runs per node (default: ceil(log2 d), at least 1).
    #[arg(long)]
    repeats: Option<usize>,
    /// Compare every quantum search against the classical choice.
    #[arg(long)]
    verify: bool,
    /// Also write `<out>.report.json`.
    #[arg(long)]
    report: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "baseline,treemap,quantum")]
    backends: Vec<Backend>,
    #[arg(long = "n", value_delimiter = ',', default_value = "512")]
    samples: Vec<usize>,
    #[arg(long = "d", value_delimiter = ',', default_value = "4,16")]
    dimensions: Vec<usize>,
    #[arg(long = "m", value_delimiter = ',', default_value = "4")]
    classes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    /// `real`, `discrete:T` or `mixed:T`.
    #[arg(long, default_value = "real")]
    mix: AttributeMix,
    /// Classes occurring in the labels (capped by M).
    #[arg(long, default_value_t = 4)]
    present: usize,
    /// Depth of the hidden labelling tree; 0 draws labels uniformly.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 4)]
    max_height: usize,
    #[arg(long, default_value_t = 2)]
    min_split: usize,
    #[arg(long)]
    repeats: Option<usize>,
    /// Fill the wall_ms column (output is then no longer byte-stable).
    #[arg(long)]
    wall_clock: bool,
    /// Write to a file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Oracle,
    Prefix,
    Discrete,
    Backend,
    Quantum,
    Scaling,
    Tree,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Random instances for the oracle, prefix, discrete and backend suites.
    #[arg(long)]
    instances: Option<usize>,
    /// Trials for the quantum and scaling suites, builds for the tree suite.
    #[arg(long)]
    trials: Option<usize>,
    /// Attribute count for the per-node and whole-tree checks.
    #[arg(long, default_value_t = 16)]
    d: usize,
    #[arg(long)]
    repeats: Option<usize>,
    /// Monte-Carlo allowance below the per-node bound 1 - 2^-repeats.
    #[arg(long, default_value_t = 0.0075)]
    slack: f64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

#[derive(Serialize)]
struct ClassicalReport<'a> {
    backend: &'a str,
    internal_nodes: usize,
    stats: &'a BuildStats,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn report_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".report.json");
    PathBuf::from(name)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let schema = AttributeSchema::load(&args.schema)?;
    let data = load_csv(&args.data, &schema).with_context(|| format!("reading {}", args.data.display()))?;
    let config = BuildConfig {
        max_height: args.max_height,
        min_split: args.min_split,
        backend: args.backend,
        repeats: args.repeats,
        seed: args.seed,
        verify: args.verify,
        report: args.report,
    };
    config.validate()?;
    let (tree_json, report_json) = if args.backend == Backend::Quantum {
        let report = q_train(&data, &config)?;
        (model::to_json(report.tree()), report.to_json())
    } else {
        let tree = train(&data, &config)?;
        let report = ClassicalReport {
            backend: args.backend.name(),
            internal_nodes: tree.internal_nodes(),
            stats: &tree.stats,
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        (model::to_json(&tree), text)
    };
    write_file(&args.out, &tree_json)?;
    if args.report {
        write_file(&report_path(&args.out), &report_json)?;
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model).with_context(|| format!("cannot read {}", args.model.display()))?;
    let tree = model::from_json(&text).with_context(|| format!("invalid model {}", args.model.display()))?;
    let file = fs::File::open(&args.data).with_context(|| format!("cannot open {}", args.data.display()))?;
    let rows = read_unlabeled(file, &tree.schema)?;
    let labels = tree.schema.class_labels();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let class = tree.classify(row).with_context(|| format!("row {}", i + 1))?;
        out.push_str(&labels[class]);
        out.push('\n');
    }
    std::io::stdout().lock().write_all(out.as_bytes())?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let config = BenchConfig {
        backends: args.backends,
        samples: args.samples,
        dimensions: args.dimensions,
        classes: args.classes,
        seeds: args.seeds,
        mix: args.mix,
        present_classes: args.present,
        planted_depth: args.depth,
        noise: args.noise,
        max_height: args.max_height,
        min_split: args.min_split,
        repeats: args.repeats,
        wall_clock: args.wall_clock,
    };
    let csv = bench::to_csv(&bench::run(&config)?);
    match args.out {
        Some(path) => write_file(&path, &csv),
        None => Ok(std::io::stdout().lock().write_all(csv.as_bytes())?),
    }
}

fn selected(args: &VerifyArgs) -> Vec<SuiteResult> {
    let want = |s: Suite| args.suite == Suite::All || args.suite == s;
    let seed = args.seed;
    let mut results = Vec::new();
    if want(Suite::Oracle) {
        results.push(suites::oracle_equivalence(args.instances.unwrap_or(200), seed));
    }
    if want(Suite::Prefix) {
        results.push(suites::prefix_arrays(args.instances.unwrap_or(100), seed));
    }
    if want(Suite::Discrete) {
        results.push(suites::discrete_incremental(args.instances.unwrap_or(200), seed));
    }
    if want(Suite::Backend) {
        results.push(suites::backend_identity(args.instances.unwrap_or(100), seed));
    }
    if want(Suite::Quantum) {
        results.push(suites::single_search(&[8, 32, 128], args.trials.unwrap_or(2000), seed));
        let repeats = args.repeats.or(Some(qc50_core::qsearch::default_repeats(args.d)));
        results.push(suites::node_search(args.d, repeats, args.trials.unwrap_or(5000), args.slack, seed));
    }
    if want(Suite::Scaling) {
        results.push(suites::query_scaling(&[4, 16, 64, 256, 1024], args.trials.unwrap_or(200), seed));
    }
    if want(Suite::Tree) {
        results.push(suites::whole_tree(args.d, args.trials.unwrap_or(1000), seed));
    }
    results
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let results = selected(&args);
    let mut failed = Vec::new();
    for r in &results {
        println!("[{}] {}", if r.passed { "pass" } else { "FAIL" }, r.name);
        for line in &r.lines {
            println!("    {line}");
        }
        if !r.passed {
            failed.push(r.name.as_str());
        }
    }
    if !failed.is_empty() {
        bail!("failing suites: {}", failed.join(", "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
