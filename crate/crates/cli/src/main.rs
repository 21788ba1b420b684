//! `hebb`: train annealed Hebbian node embeddings on edge-list graphs and
//! evaluate them with ranking protocols (reconstruction MAP, link-prediction
//! MAP, binary link AP, HitRate@k).
//!
//! Exit codes: 0 success, 1 input error, 2 numerical divergence, 3 partial
//! sweep failure.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hebb_core::engine::{self, AnnealingSchedule, TrainConfig, UpdateMode};
use hebb_core::eval::{
    self, map_link_prediction, map_link_prediction_sampled, map_reconstruction,
    map_reconstruction_sampled, EvalReport, InteractionLog,
};
use hebb_core::graph::{EdgeSplit, RawEdgeList, WeightedGraph};
use hebb_core::persist::{
    self, load_embeddings, read_split, save_embeddings, write_report, write_split,
    write_telemetry, EmbeddingFormat, RunManifest,
};
use hebb_core::{EmbeddingsF64, GraphF64};

const VERSION: &str = env!("CARGO_PKG_VERSION");

const EXIT_INPUT: i32 = 1;
const EXIT_DIVERGED: i32 = 2;
const EXIT_PARTIAL: i32 = 3;

struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_INPUT,
        }
    }
}

impl From<hebb_core::GraphError> for CliError {
    fn from(e: hebb_core::GraphError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<hebb_core::EngineError> for CliError {
    fn from(e: hebb_core::EngineError) -> Self {
        let code = match e {
            hebb_core::EngineError::NonFinite { .. } => EXIT_DIVERGED,
            _ => EXIT_INPUT,
        };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

impl From<hebb_core::EvalError> for CliError {
    fn from(e: hebb_core::EvalError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<hebb_core::PersistError> for CliError {
    fn from(e: hebb_core::PersistError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "hebb", version, about = "Annealed Hebbian node embeddings on weighted graphs")]
struct Cli {
    /// Worker threads (default: all cores). Results never depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train embeddings on an edge list
    Embed(EmbedArgs),
    /// Hold out a fraction of edges, writing train/test/metadata files
    Split(SplitArgs),
    /// Evaluate embeddings with a ranking protocol
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Train and evaluate across dimensions, seeds, and datasets
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Batched,
    InPlace,
}

impl From<ModeArg> for UpdateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Batched => UpdateMode::Batched,
            ModeArg::InPlace => UpdateMode::InPlace,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Binary,
}

impl From<FormatArg> for EmbeddingFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => EmbeddingFormat::Text,
            FormatArg::Binary => EmbeddingFormat::Binary,
        }
    }
}

/// Candidate scope for the MAP protocols: `all` ranks every node,
/// `sampled` restricts candidates to the sampled query set (the public
/// benchmark suite's protocol).
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScopeArg {
    All,
    Sampled,
}

#[derive(Args)]
struct TrainFlags {
    /// Embedding dimensionality
    #[arg(long)]
    dim: usize,
    /// Training sweeps
    #[arg(long, default_value_t = 10)]
    iters: u32,
    /// Learning rate
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    /// Initial noise variance
    #[arg(long, default_value_t = 10.0)]
    sigma2: f64,
    /// Variance reduction factor per sweep
    #[arg(long, default_value_t = 1.1)]
    tau: f64,
    /// Weight of the repulsive update across sampled non-edges
    #[arg(long, default_value_t = 0.5)]
    neg_weight: f64,
    /// Enable negative-edge repulsion (one sampled non-edge per node)
    #[arg(long, conflicts_with = "no_negatives")]
    negatives: bool,
    /// Disable negative-edge repulsion (the default)
    #[arg(long)]
    no_negatives: bool,
    /// Base seed for initialization, noise, and negative sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Update order: snapshot-batched or sequential in-place
    #[arg(long, value_enum, default_value_t = ModeArg::Batched)]
    mode: ModeArg,
}

impl TrainFlags {
    fn config(&self, seed: u64) -> TrainConfig<f64> {
        TrainConfig::new(self.dim, seed)
            .with_iterations(self.iters)
            .with_learning_rate(self.lr)
            .with_schedule(AnnealingSchedule::new(self.sigma2, self.tau))
            .with_negative_weight(self.neg_weight)
            .with_negatives(self.negatives)
            .with_update_mode(self.mode.into())
    }
}

#[derive(Args)]
struct EmbedArgs {
    /// Edge-list file (`src dst [count]`, `#` comments)
    input: PathBuf,
    #[command(flatten)]
    train: TrainFlags,
    /// Keep directed arcs as given instead of symmetrizing counts
    #[arg(long)]
    no_symmetrize: bool,
    /// Embedding output format
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Embedding output path; also writes `<out>.manifest` and
    /// `<out>.telemetry.csv`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    /// Edge-list file
    input: PathBuf,
    /// Fraction of undirected edges to hold out
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep directed arcs as given instead of symmetrizing counts
    #[arg(long)]
    no_symmetrize: bool,
    /// Directory receiving train.edges, test.edges, split.json
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Graph-reconstruction MAP
    Recon(ReconArgs),
    /// Link-prediction MAP over a held-out split
    Linkpred(LinkpredArgs),
    /// Binary average precision over held-out edges vs sampled non-edges
    LinkpredAp(LinkpredApArgs),
    /// Item-to-item HitRate@k over a user interaction log
    Hitrate(HitrateArgs),
}

#[derive(Args)]
struct ReportFlags {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report CSV here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include one CSV row per query
    #[arg(long)]
    per_query: bool,
}

#[derive(Args)]
struct ReconArgs {
    /// Edge-list file the embeddings were trained on
    #[arg(long)]
    graph: PathBuf,
    /// Embeddings file (text or binary)
    #[arg(long)]
    emb: PathBuf,
    /// Query sample size
    #[arg(long, default_value_t = 1024)]
    sample: usize,
    /// Candidate scope (see --help)
    #[arg(long, value_enum, default_value_t = ScopeArg::All)]
    scope: ScopeArg,
    #[command(flatten)]
    report: ReportFlags,
}

#[derive(Args)]
struct LinkpredArgs {
    /// train.edges file of a split
    #[arg(long)]
    train: PathBuf,
    /// test.edges file of the same split
    #[arg(long)]
    test: PathBuf,
    /// split.json metadata sidecar
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Embeddings trained on the train graph
    #[arg(long)]
    emb: PathBuf,
    #[arg(long, default_value_t = 1024)]
    sample: usize,
    #[arg(long, value_enum, default_value_t = ScopeArg::All)]
    scope: ScopeArg,
    #[command(flatten)]
    report: ReportFlags,
}

#[derive(Args)]
struct LinkpredApArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    emb: PathBuf,
    #[command(flatten)]
    report: ReportFlags,
}

#[derive(Args)]
struct HitrateArgs {
    /// Edge-list file naming the item nodes
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    emb: PathBuf,
    /// CSV interaction log with header `user_id,item_id`
    #[arg(long)]
    log: PathBuf,
    /// Recommendation list length
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[command(flatten)]
    report: ReportFlags,
}

#[derive(Args)]
struct SweepArgs {
    /// Edge-list files, one per dataset
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
    /// Comma-separated dimensionalities
    #[arg(long, value_delimiter = ',', default_values_t = vec![10usize, 20, 50, 100, 200, 300, 400, 500])]
    dims: Vec<usize>,
    /// Comma-separated seeds
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u64])]
    seeds: Vec<u64>,
    /// Protocols to run (recon, linkpred)
    #[arg(long, value_delimiter = ',', default_values_t = vec!["recon".to_string(), "linkpred".to_string()])]
    protocols: Vec<String>,
    /// Held-out fraction for the linkpred protocol
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 1024)]
    sample: usize,
    #[arg(long, value_enum, default_value_t = ScopeArg::All)]
    scope: ScopeArg,
    #[arg(long, default_value_t = 10)]
    iters: u32,
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    #[arg(long, default_value_t = 10.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 1.1)]
    tau: f64,
    #[arg(long, default_value_t = 0.5)]
    neg_weight: f64,
    #[arg(long)]
    negatives: bool,
    /// Long-format results CSV (`dataset,dim,seed,protocol,map,seconds`)
    #[arg(long)]
    out: PathBuf,
    /// Skip cells already present in the output CSV
    #[arg(long)]
    resume: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            eprintln!("{e}");
            std::process::exit(EXIT_INPUT);
        }
    };

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("hebb: could not configure {threads} threads: {e}");
            std::process::exit(EXIT_INPUT);
        }
    }

    let result = match cli.command {
        Command::Embed(args) => cmd_embed(args),
        Command::Split(args) => cmd_split(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    if let Err(e) = result {
        eprintln!("hebb: {}", e.message);
        std::process::exit(e.code);
    }
}

fn invocation() -> String {
    let args: Vec<String> = std::env::args().collect();
    format!("hebb {VERSION} | {}", args[1..].join(" "))
}

fn load_graph(path: &Path, symmetrize: bool) -> Result<GraphF64, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let raw = RawEdgeList::<f64>::from_reader(BufReader::new(file))?;
    Ok(WeightedGraph::from_raw(&raw, symmetrize)?)
}

fn load_emb(path: &Path) -> Result<(EmbeddingsF64, Vec<String>), CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(load_embeddings::<f64, _>(BufReader::new(file))?)
}

/// Embeddings are keyed by the graph's node ids; a label mismatch means the
/// files belong to different runs.
fn check_alignment(graph: &GraphF64, labels: &[String]) -> Result<(), CliError> {
    if labels.len() != graph.node_count() {
        return Err(CliError::input(format!(
            "embedding rows ({}) do not match graph nodes ({})",
            labels.len(),
            graph.node_count()
        )));
    }
    for (i, label) in labels.iter().enumerate() {
        if graph.label(i) != label {
            return Err(CliError::input(format!(
                "embedding row {i} is `{label}` but the graph node {i} is `{}`",
                graph.label(i)
            )));
        }
    }
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let graph = load_graph(&args.input, !args.no_symmetrize)?;
    let config = args.train.config(args.train.seed);
    let outcome = engine::train(&graph, &config)?;
    let train_seconds = started.elapsed().as_secs_f64();

    let format: EmbeddingFormat = args.format.into();
    let out = File::create(&args.out)
        .map_err(|e| CliError::input(format!("{}: {e}", args.out.display())))?;
    save_embeddings(
        &outcome.embeddings,
        graph.labels(),
        BufWriter::new(out),
        format,
    )?;

    let manifest = RunManifest {
        tool_version: VERSION.to_string(),
        dataset: args.input.display().to_string(),
        graph_sha256: persist::graph_sha256(&graph),
        nodes: graph.node_count(),
        edges: graph.undirected_edge_count(),
        symmetrize: !args.no_symmetrize,
        dim: config.dim,
        iterations: config.iterations,
        learning_rate: config.learning_rate,
        sigma2_0: config.schedule.sigma2_0,
        tau: config.schedule.tau,
        negative_weight: config.negative_weight,
        negatives_enabled: config.negatives_enabled,
        seed: config.seed,
        update_mode: config.update_mode,
        format,
        train_seconds,
    };
    let manifest_path = sidecar(&args.out, "manifest");
    manifest.write(BufWriter::new(File::create(&manifest_path)?))?;

    let telemetry_path = sidecar(&args.out, "telemetry.csv");
    write_telemetry(
        BufWriter::new(File::create(&telemetry_path)?),
        &outcome.telemetry,
        &invocation(),
    )?;

    println!(
        "embedded {} nodes at dim {} in {:.2}s -> {} (+ manifest, telemetry)",
        graph.node_count(),
        config.dim,
        train_seconds,
        args.out.display()
    );
    Ok(())
}

fn sidecar(base: &Path, extension: &str) -> PathBuf {
    let mut name = base.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(extension);
    base.with_file_name(name)
}

fn cmd_split(args: SplitArgs) -> Result<(), CliError> {
    let graph = load_graph(&args.input, !args.no_symmetrize)?;
    let split = graph.split_edges(args.fraction, args.seed)?;
    write_split(&split, &args.out_dir)?;
    println!(
        "split {} edges into {} train / {} test -> {}",
        split.train.undirected_edge_count() + split.test_edges.len(),
        split.train.undirected_edge_count(),
        split.test_edges.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn load_split_files(
    train: &Path,
    test: &Path,
    meta: Option<&PathBuf>,
) -> Result<EdgeSplit<f64>, CliError> {
    Ok(read_split::<f64>(train, test, meta.map(|p| p.as_path()))?)
}

fn emit_report(report: &EvalReport, flags: &ReportFlags) -> Result<(), CliError> {
    let mut line = format!(
        "{} {} (queries={})",
        report.metric,
        report.value,
        report.per_query.len()
    );
    if report.metric == "hit_rate_at_k" {
        line.push_str(&format!(" [{:.2}%]", report.value * 100.0));
    }
    println!("{line}");
    println!("# {}", report.config_echo);
    if let Some(path) = &flags.out {
        write_report(
            BufWriter::new(File::create(path)?),
            report,
            flags.per_query,
            &invocation(),
        )?;
    }
    Ok(())
}

fn cmd_eval(cmd: EvalCommand) -> Result<(), CliError> {
    match cmd {
        EvalCommand::Recon(args) => {
            let graph = load_graph(&args.graph, true)?;
            let (emb, labels) = load_emb(&args.emb)?;
            check_alignment(&graph, &labels)?;
            let report = match args.scope {
                ScopeArg::All => {
                    map_reconstruction(&graph, &emb, args.sample, args.report.seed)?
                }
                ScopeArg::Sampled => {
                    map_reconstruction_sampled(&graph, &emb, args.sample, args.report.seed)?
                }
            };
            emit_report(&report, &args.report)
        }
        EvalCommand::Linkpred(args) => {
            let split = load_split_files(&args.train, &args.test, args.meta.as_ref())?;
            let (emb, labels) = load_emb(&args.emb)?;
            check_alignment(&split.train, &labels)?;
            let report = match args.scope {
                ScopeArg::All => {
                    map_link_prediction(&split, &emb, args.sample, args.report.seed)?
                }
                ScopeArg::Sampled => {
                    map_link_prediction_sampled(&split, &emb, args.sample, args.report.seed)?
                }
            };
            emit_report(&report, &args.report)
        }
        EvalCommand::LinkpredAp(args) => {
            let split = load_split_files(&args.train, &args.test, args.meta.as_ref())?;
            let (emb, labels) = load_emb(&args.emb)?;
            check_alignment(&split.train, &labels)?;
            let report = eval::binary_link_ap(&split, &emb, args.report.seed)?;
            emit_report(&report, &args.report)
        }
        EvalCommand::Hitrate(args) => {
            let graph = load_graph(&args.graph, true)?;
            let (emb, labels) = load_emb(&args.emb)?;
            check_alignment(&graph, &labels)?;
            let log_file = File::open(&args.log)
                .map_err(|e| CliError::input(format!("{}: {e}", args.log.display())))?;
            let log = InteractionLog::from_csv(BufReader::new(log_file), &graph)?;
            let report = eval::hit_rate_at_k(&emb, &log, args.k, args.report.seed)?;
            emit_report(&report, &args.report)
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    for protocol in &args.protocols {
        if protocol != "recon" && protocol != "linkpred" {
            return Err(CliError::input(format!(
                "unknown protocol `{protocol}` (expected recon, linkpred)"
            )));
        }
    }

    let mut done: BTreeSet<(String, usize, u64, String)> = BTreeSet::new();
    let mut file_has_rows = false;
    if args.resume && args.out.exists() {
        let existing = std::fs::read_to_string(&args.out)?;
        for line in existing.lines() {
            if line.starts_with('#') || line.starts_with("dataset,") || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() >= 4 {
                if let (Ok(dim), Ok(seed)) = (cols[1].parse(), cols[2].parse()) {
                    done.insert((cols[0].to_string(), dim, seed, cols[3].to_string()));
                    file_has_rows = true;
                }
            }
        }
    }

    let fresh_file = !(args.resume && args.out.exists());
    let mut out: Box<dyn Write> = if fresh_file {
        let mut f = BufWriter::new(File::create(&args.out)?);
        writeln!(f, "# {}", invocation())?;
        writeln!(f, "dataset,dim,seed,protocol,map,seconds")?;
        Box::new(f)
    } else {
        Box::new(BufWriter::new(
            std::fs::OpenOptions::new().append(true).open(&args.out)?,
        ))
    };
    if file_has_rows {
        eprintln!("resuming: {} cells already present", done.len());
    }

    let mut failures = 0usize;
    for data_path in &args.data {
        let dataset = data_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| data_path.display().to_string());
        let graph = load_graph(data_path, true)?;

        for &seed in &args.seeds {
            // one split per (dataset, seed), shared across dims
            let split = if args.protocols.iter().any(|p| p == "linkpred") {
                Some(graph.split_edges(args.fraction, seed)?)
            } else {
                None
            };
            for &dim in &args.dims {
                for protocol in &args.protocols {
                    let key = (dataset.clone(), dim, seed, protocol.clone());
                    if done.contains(&key) {
                        continue;
                    }
                    let started = Instant::now();
                    let config = TrainConfig::new(dim, seed)
                        .with_iterations(args.iters)
                        .with_learning_rate(args.lr)
                        .with_schedule(AnnealingSchedule::new(args.sigma2, args.tau))
                        .with_negative_weight(args.neg_weight)
                        .with_negatives(args.negatives);
                    let cell = run_cell(&graph, split.as_ref(), protocol, &config, &args);
                    let seconds = started.elapsed().as_secs_f64();
                    match cell {
                        Ok(value) => {
                            writeln!(out, "{dataset},{dim},{seed},{protocol},{value},{seconds}")?;
                        }
                        Err(e) => {
                            failures += 1;
                            eprintln!("cell {dataset}/{dim}/{seed}/{protocol} failed: {}", e.message);
                            writeln!(out, "{dataset},{dim},{seed},{protocol},error,{seconds}")?;
                        }
                    }
                    out.flush()?;
                }
            }
        }
    }
    if failures > 0 {
        return Err(CliError {
            message: format!("{failures} sweep cell(s) failed"),
            code: EXIT_PARTIAL,
        });
    }
    println!("sweep complete -> {}", args.out.display());
    Ok(())
}

fn run_cell(
    graph: &GraphF64,
    split: Option<&EdgeSplit<f64>>,
    protocol: &str,
    config: &TrainConfig<f64>,
    args: &SweepArgs,
) -> Result<f64, CliError> {
    match protocol {
        "recon" => {
            let outcome = engine::train(graph, config)?;
            let report = match args.scope {
                ScopeArg::All => {
                    map_reconstruction(graph, &outcome.embeddings, args.sample, config.seed)?
                }
                ScopeArg::Sampled => map_reconstruction_sampled(
                    graph,
                    &outcome.embeddings,
                    args.sample,
                    config.seed,
                )?,
            };
            Ok(report.value)
        }
        "linkpred" => {
            let split = split.expect("split prepared for linkpred");
            let outcome = engine::train(&split.train, config)?;
            let report = match args.scope {
                ScopeArg::All => {
                    map_link_prediction(split, &outcome.embeddings, args.sample, config.seed)?
                }
                ScopeArg::Sampled => map_link_prediction_sampled(
                    split,
                    &outcome.embeddings,
                    args.sample,
                    config.seed,
                )?,
            };
            Ok(report.value)
        }
        other => Err(CliError::input(format!("unknown protocol `{other}`"))),
    }
}
