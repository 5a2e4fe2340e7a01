//! Command-line surface: analytics, propagation, verification and training.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 IO or data error.

mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::kg::{distance_distribution, mean_degree, EntityId, KnowledgeGraph, RelationId, Split, SplitDataset};
use crate::neural::{compositional_dataset, rank_filtered, train_toy, training_view, ModelParams, SyntheticConfig, TrainConfig};
use crate::oracle::{run_theorem_suite, SuiteConfig};
use crate::semiring::{generalized_bellman_ford, Katz, MinDist, PathCount, Semiring, SemiringConfig, WeightedReach};
use crate::truncated::{
    message_reduction_report, truncated_bellman_ford, MaskTable, TruncatedOptions, Window, WindowRule,
};

pub use report::{Report, Table, REPORT_FORMAT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Precondition(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

#[derive(Debug, Parser)]
#[command(name = "tagnet", version, about = "Truncated path propagation over knowledge graphs")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the JSON report here (and a TSV next to it) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entity, relation and split counts plus mean degree.
    Stats(DatasetArg),
    /// Shortest-distance histogram of a split's query pairs on the augmented train graph.
    Distances {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Truncated vs. full message counts over sampled test sources.
    CountMessages(CountArgs),
    /// Randomized check of truncated propagation against walk enumeration.
    #[command(name = "verify-theorem1")]
    Verify(VerifyArgs),
    /// Semiring propagation from one source.
    Propagate(PropagateArgs),
    /// Train the neural model from a JSON config.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Filtered ranking metrics of a checkpoint.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct DatasetArg {
    /// Directory with train.txt/valid.txt/test.txt, or a single triple file.
    #[arg(long)]
    pub dataset: PathBuf,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    /// Layer count T.
    #[arg(long = "layers", visible_alias = "T", default_value_t = 6)]
    pub layers: usize,
    #[arg(long, default_value_t = 2)]
    pub delta: u32,
    /// Make the degree-message count the headline reduction.
    #[arg(long)]
    pub degree_messages: bool,
    /// Include the per-layer counter table.
    #[arg(long)]
    pub per_layer: bool,
    /// Number of sampled test triples; their subjects are the sources.
    #[arg(long, default_value_t = 500)]
    pub sample: usize,
    /// Use every test triple.
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Random graphs to check.
    #[arg(long, alias = "graphs", default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 10)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 30)]
    pub max_edges: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, hide = true)]
    pub inject_off_by_one: bool,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    /// Source entity token.
    #[arg(long)]
    pub source: String,
    /// Query relation token.
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value = "path-count", value_parser = clap::builder::PossibleValuesParser::new(SemiringConfig::NAMES))]
    pub semiring: String,
    /// JSON semiring config (`{"semiring": "katz", "beta": 0.05}`); overrides --semiring.
    #[arg(long)]
    pub semiring_config: Option<PathBuf>,
    #[arg(long = "layers", visible_alias = "T", default_value_t = 3)]
    pub layers: usize,
    #[arg(long, default_value_t = 1)]
    pub delta: u32,
    /// Run the unconstrained recursion instead.
    #[arg(long)]
    pub unconstrained: bool,
    /// Edge mask TSV (`source<TAB>target<TAB>layer<TAB>edge_index`).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Propagate on the train graph without reciprocal edges.
    #[arg(long)]
    pub no_reciprocal: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset path or `synthetic`.
    #[arg(long, default_value = "synthetic")]
    pub dataset: String,
    #[arg(long, default_value = "test")]
    pub split: String,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// A dataset directory, or a single triple file read as the train split.
pub fn load_dataset(path: &Path) -> Result<SplitDataset> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    if path.is_dir() {
        SplitDataset::load(path)
    } else {
        SplitDataset::parse(name, &read(path)?, "", "")
    }
}

fn load_named_dataset(name: &str) -> Result<SplitDataset> {
    if name == "synthetic" {
        compositional_dataset(&SyntheticConfig::default())
    } else {
        load_dataset(Path::new(name))
    }
}

fn parse_split(name: &str) -> Result<Split> {
    Split::parse(name).ok_or_else(|| Error::Config(format!("unknown split `{name}` (expected train, valid or test)")))
}

pub fn cmd_stats(dataset: &Path) -> Result<Report> {
    let ds = load_dataset(dataset)?;
    let mut r = Report::new("stats");
    r.config("dataset", dataset.display().to_string());
    r.metric("name", &ds.name)
        .metric("entities", ds.graph.entity_count())
        .metric("relations", ds.graph.relation_count())
        .metric("train", ds.train.len())
        .metric("valid", ds.valid.len())
        .metric("test", ds.test.len())
        .metric("augmented_edges", 2 * ds.graph.edge_count());
    if ds.graph.entity_count() > 0 {
        r.metric("mean_degree", mean_degree(&ds.graph)?);
    }
    Ok(r)
}

pub fn cmd_distances(dataset: &Path, split: &str) -> Result<Report> {
    let split = parse_split(split)?;
    let ds = load_dataset(dataset)?;
    let graph = ds.graph.augment_reciprocal()?;
    let hist = distance_distribution(&graph, ds.split(split))?;
    let mut r = Report::new("distances");
    r.config("dataset", dataset.display().to_string()).config("split", split.file_name());
    r.metric("samples", hist.total());
    let mut t = Table::new(&["distance", "count", "percent"]);
    for (label, pct) in hist.percentages() {
        r.metric(&format!("percent_{label}"), pct);
        t.push(vec![label.into(), hist.count(label).into(), pct.into()]);
    }
    // keep the conventional bucket order in the table
    t.rows.sort_by_key(|row| crate::kg::HISTOGRAM_LABELS.iter().position(|l| row[0] == *l));
    r.table("histogram", t);
    Ok(r)
}

pub fn cmd_count_messages(args: &CountArgs) -> Result<Report> {
    if args.layers < 1 {
        return Err(Error::Config("--layers must be at least 1".into()));
    }
    let ds = load_dataset(&args.data.dataset)?;
    let graph = ds.graph.augment_reciprocal()?;
    let test = if ds.test.is_empty() { &ds.train } else { &ds.test };
    let picked: Vec<usize> = if args.all || args.sample >= test.len() {
        (0..test.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let mut v = sample(&mut rng, test.len(), args.sample).into_vec();
        v.sort_unstable();
        v
    };
    let sources: Vec<EntityId> = picked.iter().map(|&i| test[i].subject).collect();
    let rep = message_reduction_report(&graph, &sources, args.layers, Window::new(args.delta))?;

    let mut r = Report::new("count-messages");
    r.config("dataset", args.data.dataset.display().to_string())
        .config("layers", args.layers)
        .config("delta", args.delta)
        .config("degree_messages", args.degree_messages)
        .config("sample", sources.len())
        .config("seed", args.seed);
    let headline = if args.degree_messages {
        rep.reduction_percent_with_degree
    } else {
        rep.reduction_percent
    };
    r.metric("sources", rep.sources)
        .metric("baseline_messages", rep.baseline_messages)
        .metric("edge_aggregations", rep.edge_aggregations)
        .metric("degree_message_units", rep.degree_message_units)
        .metric("reduction_percent", headline)
        .metric("reduction_percent_without_degree", rep.reduction_percent)
        .metric("reduction_percent_with_degree", rep.reduction_percent_with_degree)
        .metric("pruned_empty_percent", rep.composition.empty_percent())
        .metric("pruned_redundant_percent", rep.composition.redundant_percent())
        .metric("pruned_empty", rep.composition.empty)
        .metric("pruned_redundant", rep.composition.redundant)
        .metric("never_schedulable", rep.composition.never_schedulable)
        .metric("max_node_updates", rep.max_node_updates)
        .metric("max_edge_aggregations", rep.max_edge_aggregations);
    if args.per_layer {
        let mut t = Table::new(&[
            "layer",
            "node_updates",
            "edge_aggregations",
            "degree_message_units",
            "pruned_empty",
            "pruned_redundant",
            "never_schedulable",
        ]);
        for (i, c) in rep.per_layer.iter().enumerate() {
            t.push(vec![
                (i + 1).into(),
                c.node_updates.into(),
                c.edge_aggregations.into(),
                c.degree_message_units.into(),
                c.pruned_empty.into(),
                c.pruned_redundant.into(),
                c.never_schedulable.into(),
            ]);
        }
        r.table("per_layer", t);
    }
    Ok(r)
}

/// Runs the suite; the boolean is whether every check passed.
pub fn cmd_verify(args: &VerifyArgs) -> Result<(Report, bool)> {
    let cfg = SuiteConfig {
        graphs: args.trials,
        max_nodes: args.max_nodes.max(1),
        max_edges: args.max_edges,
        seed: args.seed,
        rule: if args.inject_off_by_one {
            WindowRule::InjectedOffByOne
        } else {
            WindowRule::Standard
        },
        ..SuiteConfig::default()
    };
    let s = run_theorem_suite(&cfg)?;
    let mut r = Report::new("verify-theorem1");
    r.config("trials", args.trials)
        .config("max_nodes", args.max_nodes)
        .config("max_edges", args.max_edges)
        .config("seed", args.seed)
        .config("deltas", &cfg.deltas);
    if args.inject_off_by_one {
        r.config("window_rule", "injected-off-by-one");
    }
    r.metric("passed", s.passed())
        .metric("graphs_checked", s.graphs_checked)
        .metric("graphs_redrawn", s.graphs_redrawn)
        .metric("window_comparisons", s.window_comparisons)
        .metric("unconstrained_comparisons", s.unconstrained_comparisons)
        .metric("bound_checks", s.bound_checks)
        .metric("layer_independence_checks", s.layer_independence_checks)
        .metric("failures", s.failure_count)
        .metric("max_katz_error", s.max_katz_error)
        .metric("elapsed_ms", s.elapsed_ms as u64);
    if args.trials == 0 {
        r.metric("warning", "no trials requested; passing vacuously");
    }
    if !s.failures.is_empty() {
        r.metric("counterexamples", serde_json::to_value(&s.failures)?);
    }
    Ok((r, s.passed()))
}

#[allow(clippy::too_many_arguments)]
fn propagate_with<S: Semiring>(
    graph: &KnowledgeGraph,
    ds: &SplitDataset,
    source: EntityId,
    query: RelationId,
    semiring: &S,
    args: &PropagateArgs,
    mask: Option<&MaskTable>,
    r: &mut Report,
) -> Result<()> {
    let values = if args.unconstrained {
        generalized_bellman_ford(graph, source, query, semiring, args.layers)?
            .pop()
            .expect("layer T present")
            .values
    } else {
        let mut opts = TruncatedOptions::new(args.layers, args.delta);
        if let Some(m) = mask {
            opts = opts.with_mask(m);
        }
        let run = truncated_bellman_ford(graph, source, query, semiring, opts)?;
        r.metric("edge_aggregations", run.trace.totals.edge_aggregations)
            .metric("node_updates", run.trace.totals.node_updates)
            .metric("baseline_messages", run.trace.baseline)
            .metric("pruned_other", run.trace.totals.pruned_other);
        run.values
    };
    let mut t = Table::new(&["entity", "value"]);
    let mut nonzero = 0usize;
    for o in graph.entities() {
        let v = &values[o.index()];
        if !semiring.is_zero(v) {
            nonzero += 1;
            let name = ds.vocabs.entities.token(o.0).map_or_else(|| o.0.to_string(), str::to_string);
            t.push(vec![name.into(), v.to_string().into()]);
        }
    }
    r.metric("nonzero_targets", nonzero);
    r.table("values", t);
    Ok(())
}

pub fn cmd_propagate(args: &PropagateArgs) -> Result<Report> {
    let ds = load_dataset(&args.data.dataset)?;
    let graph = if args.no_reciprocal {
        ds.graph.clone()
    } else {
        ds.graph.augment_reciprocal()?
    };
    let source = ds
        .vocabs
        .entities
        .get(&args.source)
        .map(EntityId)
        .ok_or_else(|| Error::Vocabulary {
            kind: "entity",
            token: args.source.clone(),
        })?;
    let query = ds
        .vocabs
        .relations
        .get(&args.query)
        .map(RelationId)
        .ok_or_else(|| Error::Vocabulary {
            kind: "relation",
            token: args.query.clone(),
        })?;
    let semiring = match &args.semiring_config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => SemiringConfig::from_name(&args.semiring)?,
    };
    let mask = args.mask.as_deref().map(read).transpose()?.map(|t| MaskTable::parse(&t)).transpose()?;

    let mut r = Report::new("propagate");
    r.config("dataset", args.data.dataset.display().to_string())
        .config("source", &args.source)
        .config("query", &args.query)
        .config("semiring", &semiring)
        .config("layers", args.layers)
        .config("delta", args.delta)
        .config("unconstrained", args.unconstrained);
    if let Some(m) = &args.mask {
        r.config("mask", m.display().to_string());
    }
    match semiring {
        SemiringConfig::PathCount => propagate_with(&graph, &ds, source, query, &PathCount, args, mask.as_ref(), &mut r)?,
        SemiringConfig::MinDist => propagate_with(&graph, &ds, source, query, &MinDist, args, mask.as_ref(), &mut r)?,
        SemiringConfig::Katz { beta } => {
            propagate_with(&graph, &ds, source, query, &Katz { beta }, args, mask.as_ref(), &mut r)?
        }
        SemiringConfig::WeightedReach {
            relation_weights,
            default_weight,
        } => {
            let s = WeightedReach::new(relation_weights, default_weight)?;
            propagate_with(&graph, &ds, source, query, &s, args, mask.as_ref(), &mut r)?
        }
    }
    Ok(r)
}

fn metrics_json(m: &crate::neural::RankingMetrics) -> Value {
    json!({"queries": m.queries, "mrr": m.mrr, "hits_at_1": m.hits_at_1, "hits_at_10": m.hits_at_10})
}

pub const DEFAULT_CHECKPOINT: &str = "tagnet-checkpoint.json";

pub fn cmd_train(config: &Path) -> Result<Report> {
    let cfg = TrainConfig::from_json(&read(config)?)?;
    let ds = load_named_dataset(&cfg.dataset)?;
    let (graph, known) = training_view(&ds)?;
    let out = train_toy(&graph, &ds.train, &known, &cfg)?;
    let ck = PathBuf::from(cfg.checkpoint.clone().unwrap_or_else(|| DEFAULT_CHECKPOINT.into()));
    out.params.save(&ck)?;
    let test = rank_filtered(&out.params, &graph, &ds.test, &known)?;
    let train = rank_filtered(&out.params, &graph, &ds.train, &known)?;

    let mut r = Report::new("train");
    for (k, v) in serde_json::to_value(&cfg)?.as_object().expect("object") {
        r.config(k, v);
    }
    r.metric("checkpoint", ck.display().to_string())
        .metric("parameters", out.params.len())
        .metric("final_loss", out.epoch_losses.last().copied().unwrap_or(f64::NAN))
        .metric("test", metrics_json(&test))
        .metric("train", metrics_json(&train));
    let mut t = Table::new(&["epoch", "loss"]);
    for (e, l) in out.epoch_losses.iter().enumerate() {
        t.push(vec![e.into(), (*l).into()]);
    }
    r.table("epochs", t);
    Ok(r)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Report> {
    let split = parse_split(&args.split)?;
    let params = ModelParams::load(&args.checkpoint)?;
    let ds = load_named_dataset(&args.dataset)?;
    let (graph, known) = training_view(&ds)?;
    if graph.relation_count() != params.relations {
        return Err(Error::Dimension {
            expected: params.relations,
            got: graph.relation_count(),
        });
    }
    let m = rank_filtered(&params, &graph, ds.split(split), &known)?;
    let mut r = Report::new("evaluate");
    r.config("checkpoint", args.checkpoint.display().to_string())
        .config("dataset", &args.dataset)
        .config("split", split.file_name());
    r.metric("queries", m.queries)
        .metric("mrr", m.mrr)
        .metric("hits_at_1", m.hits_at_1)
        .metric("hits_at_10", m.hits_at_10);
    Ok(r)
}

fn emit(report: &Report, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => report.write(p),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{}", report.to_json()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
                _ => Ok(()),
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let (report, code) = match &cli.command {
        Command::Stats(d) => (cmd_stats(&d.dataset)?, EXIT_OK),
        Command::Distances { data, split } => (cmd_distances(&data.dataset, split)?, EXIT_OK),
        Command::CountMessages(a) => (cmd_count_messages(a)?, EXIT_OK),
        Command::Verify(a) => {
            if a.trials == 0 {
                eprintln!("warning: --trials 0 checks nothing; passing vacuously");
            }
            let (r, ok) = cmd_verify(a)?;
            if !ok {
                if let Some(Value::Array(cs)) = r.metrics.get("counterexamples") {
                    eprintln!("verification failed; first counterexample:");
                    eprintln!("{}", serde_json::to_string(&cs[0])?);
                }
            }
            (r, if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::Propagate(a) => (cmd_propagate(a)?, EXIT_OK),
        Command::Train { config } => (cmd_train(config)?, EXIT_OK),
        Command::Evaluate(a) => (cmd_evaluate(a)?, EXIT_OK),
    };
    emit(&report, cli.out.as_deref())?;
    Ok(code)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
