use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kpa_cli::config::{PipelineConfig, SubgraphCount};
use kpa_cli::stages::{self, Embeddings};
use kpa_core::corpus::{self, Dataset};
use kpa_core::partition::KmeansInit;
use kpa_core::scorer::Backend;

#[derive(Parser)]
#[command(name = "kpa", version, about = "Graph-based key point analysis pipeline")]
struct Cli {
    /// JSON pipeline config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// off, error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export labelled argument pairs (training data) as JSONL.
    Pairs(PairsArgs),
    /// Score every argument pair and write predictions.jsonl.
    Score(ScoreArgs),
    /// Build one argument graph per topic-stance group.
    Graph(GraphArgs),
    /// Partition graphs into subgraphs and pick their key points.
    Partition(PartitionArgs),
    /// Evaluate generated key points against the references.
    Eval(EvalArgs),
    /// Run every stage end to end.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct PairsArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Most intra-cluster pairs kept per argument.
    #[arg(long, default_value_t = 5, conflicts_with = "no_cap")]
    max_intra: usize,
    /// Keep every intra-cluster pair.
    #[arg(long)]
    no_cap: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Default)]
struct ScorerFlags {
    #[arg(long)]
    backend: Option<Backend>,
    /// Predictions file (file backend) or base URL (http backend).
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Request timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    retries: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scorer: ScorerFlags,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct PartitionFlags {
    /// External embeddings; without it arguments are hash-embedded from --data.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// `auto` (reference key-point count per group) or a positive integer.
    #[arg(long)]
    num_subgraphs: Option<SubgraphCount>,
    #[arg(long = "threshold-h")]
    threshold: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_init)]
    kmeans_init: Option<KmeansInit>,
}

fn parse_init(s: &str) -> Result<KmeansInit, String> {
    match s {
        "farthest-first" => Ok(KmeansInit::FarthestFirst),
        "uniform" => Ok(KmeansInit::Uniform),
        _ => Err(format!("unknown init \"{s}\" (farthest-first|uniform)")),
    }
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    graphs: Option<PathBuf>,
    /// Dataset, for `auto` subgraph counts and the fallback embedder.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    partition: PartitionFlags,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of partition files.
    #[arg(long)]
    generated: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// token-f1, exact or http:<base-url>.
    #[arg(long)]
    sim: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scorer: ScorerFlags,
    #[command(flatten)]
    partition: PartitionFlags,
    #[arg(long)]
    sim: Option<String>,
}

// =============================================================================
// Flag overrides
// =============================================================================

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl ScorerFlags {
    fn apply(self, cfg: &mut PipelineConfig) {
        let s = &mut cfg.scorer;
        set(&mut s.backend, self.backend);
        set(&mut s.source, self.source);
        set(&mut s.max_in_flight, self.max_in_flight);
        set(&mut s.timeout_secs, self.timeout);
        set(&mut s.retries, self.retries);
        set(&mut s.batch_size, self.batch_size);
    }
}

impl PartitionFlags {
    fn apply(self, cfg: &mut PipelineConfig) {
        if self.embeddings.is_some() {
            cfg.embeddings = self.embeddings;
        }
        let p = &mut cfg.partition;
        set(&mut p.num_subgraphs, self.num_subgraphs);
        set(&mut p.threshold, self.threshold);
        set(&mut p.max_steps, self.max_steps);
        set(&mut p.kmeans_init, self.kmeans_init);
        set(&mut cfg.seed, self.seed);
    }
}

/// The dataset at `dir`, or `None` when it holds no arguments file.
fn optional_data(dir: &Path) -> Result<Option<Dataset>> {
    if dir.join(corpus::ARGUMENTS_FILE).is_file() {
        stages::load_data(dir).map(Some)
    } else {
        Ok(None)
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = PipelineConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Pairs(a) => {
            set(&mut cfg.data, a.data);
            set(&mut cfg.seed, a.seed);
            let out = a.out.unwrap_or_else(|| cfg.out.join("pairs.jsonl"));
            let dataset = stages::load_data(&cfg.data)?;
            let cap = (!a.no_cap).then_some(a.max_intra);
            let records = stages::export_pairs(&dataset, cap, cfg.seed)?;
            stages::ensure_parent(&out).context("pairs")?;
            corpus::write_jsonl(&out, &records).with_context(|| format!("pairs: write {}", out.display()))?;
            println!("{} pairs -> {}", records.len(), out.display());
        }
        Command::Score(a) => {
            set(&mut cfg.data, a.data);
            a.scorer.apply(&mut cfg);
            let out = a.out.unwrap_or_else(|| cfg.out.join(stages::PREDICTIONS_FILE));
            let dataset = stages::load_data(&cfg.data)?;
            let preds = stages::score_dataset(&dataset, &cfg.scorer)?;
            stages::write_predictions(&out, &preds)?;
            println!("{} predictions -> {}", preds.len(), out.display());
        }
        Command::Graph(a) => {
            set(&mut cfg.data, a.data);
            let predictions = a.predictions.unwrap_or_else(|| cfg.out.join(stages::PREDICTIONS_FILE));
            let out = a.out.unwrap_or_else(|| cfg.out.join(stages::GRAPHS_DIR));
            let dataset = stages::load_data(&cfg.data)?;
            for g in stages::build_graphs(&dataset, &predictions, &out)? {
                println!(
                    "{}: {} vertices, {} edges -> {}",
                    g.key,
                    g.vertices,
                    g.edges,
                    g.path.display()
                );
            }
        }
        Command::Partition(a) => {
            set(&mut cfg.data, a.data);
            a.partition.apply(&mut cfg);
            let graphs = a.graphs.unwrap_or_else(|| cfg.out.join(stages::GRAPHS_DIR));
            let out = a.out.unwrap_or_else(|| cfg.out.join(stages::PARTITIONS_DIR));
            let dataset = optional_data(&cfg.data)?;
            let embeddings = match (&cfg.embeddings, &dataset) {
                (Some(p), _) => Embeddings::File(p),
                (None, Some(d)) => Embeddings::Fallback(d),
                (None, None) => anyhow::bail!("partition: embeddings not found (pass --embeddings or --data)"),
            };
            let files = stages::json_files(&graphs).context("partition")?;
            let done = stages::partition_graphs(&files, embeddings, dataset.as_ref(), &cfg.partition, cfg.seed, &out)?;
            for p in done {
                println!(
                    "{}: {} subgraphs, {} moves -> {}",
                    p.key,
                    p.subgraphs,
                    p.moves,
                    p.path.display()
                );
            }
        }
        Command::Eval(a) => {
            set(&mut cfg.data, a.data);
            set(&mut cfg.sim, a.sim);
            let generated = a.generated.unwrap_or_else(|| cfg.out.join(stages::PARTITIONS_DIR));
            let out = a.out.unwrap_or_else(|| cfg.out.join(stages::REPORT_FILE));
            let dataset = stages::load_data(&cfg.data)?;
            let sim = stages::make_similarity(&cfg.sim, cfg.scorer.timeout(), cfg.scorer.retries).context("eval")?;
            let files = stages::json_files(&generated).context("eval")?;
            let report = stages::evaluate_files(&files, &dataset, sim.as_ref())?;
            stages::write_report(&out, &report)?;
            let m = report.macro_avg;
            println!(
                "{} groups: R1 {:.3} R2 {:.3} sP {:.3} sR {:.3} sF1 {:.3} -> {}",
                report.groups.len(),
                m.rouge1,
                m.rouge2,
                m.sp,
                m.sr,
                m.sf1,
                out.display()
            );
        }
        Command::Pipeline(a) => {
            set(&mut cfg.data, a.data);
            set(&mut cfg.out, a.out);
            set(&mut cfg.sim, a.sim);
            a.scorer.apply(&mut cfg);
            a.partition.apply(&mut cfg);
            let summary = stages::run_pipeline(&cfg)?;
            println!("{}", summary.table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
