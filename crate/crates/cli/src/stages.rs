//! The pipeline stages, each reading and writing its own artifacts.
//!
//! Errors leave a stage tagged with its name (`"partition: ..."`), and with
//! the group or record they concern where there is one.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use kpa_core::corpus::{self, Dataset, GroupKey};
use kpa_core::embed::{EmbeddingTable, HashingEmbedder};
use kpa_core::graph::{build_graph, ArgumentGraph};
use kpa_core::metrics::{self, EvalReport, ExactMatch, Similarity, TokenF1};
use kpa_core::pairing::{enumerate_pairs, label_pairs, training_record, PairPrediction, TrainingRecord};
use kpa_core::partition::{kmeans_init, local_search, select_key_points, PartitionConfig, PartitionFile};
use kpa_core::scorer::{self, Backend, PredictionFile, ScorerConfig};
use kpa_core::seed;

use crate::config::{PartitionSettings, PipelineConfig, SubgraphCount};

pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";
pub const GRAPHS_DIR: &str = "graphs";
pub const PARTITIONS_DIR: &str = "partitions";
pub const REPORT_FILE: &str = "report.json";

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("create {}", dir.display()))
}

/// Creates the parent directory of an output file.
pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => ensure_dir(d),
        _ => Ok(()),
    }
}

/// `*.json` files of a directory, sorted by name.
pub fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("read {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_data(dir: &Path) -> Result<Dataset> {
    let dataset = corpus::load_dataset_dir(dir).context("load")?;
    for issue in corpus::validate(&dataset).issues {
        log::warn!("load: {}", issue.message);
    }
    Ok(dataset)
}

// =============================================================================
// pairs
// =============================================================================

/// Training export: labelled pairs of every group that has gold labels.
pub fn export_pairs(dataset: &Dataset, max_intra: Option<usize>, base_seed: u64) -> Result<Vec<TrainingRecord>> {
    let mut out = Vec::new();
    for group in &dataset.groups {
        let key = group.key();
        if group.labels.is_empty() {
            log::warn!("pairs: {key}: no gold labels, skipped");
            continue;
        }
        let s = seed::stream_seed(base_seed, seed::PAIR_SAMPLING, &key.scope());
        let labels =
            label_pairs(&enumerate_pairs(group), group, max_intra, s).with_context(|| format!("pairs: {key}"))?;
        for label in &labels {
            out.push(training_record(label, group).with_context(|| format!("pairs: {key}"))?);
        }
    }
    Ok(out)
}

// =============================================================================
// score
// =============================================================================

/// Scores every pair of every group with the configured backend.
pub fn score_dataset(dataset: &Dataset, cfg: &ScorerConfig) -> Result<Vec<PairPrediction>> {
    cfg.validate().context("score")?;
    let file = match cfg.backend {
        Backend::File => Some(PredictionFile::load(Path::new(&cfg.source)).context("score")?),
        _ => None,
    };
    let mut out = Vec::new();
    for group in &dataset.groups {
        let key = group.key();
        let pairs = enumerate_pairs(group);
        let preds = match &file {
            Some(f) => f.lookup(&pairs),
            None => scorer::score_pairs(cfg, group, &pairs),
        }
        .with_context(|| format!("score: {key}"))?;
        log::info!("score: {key}: {} pairs", preds.len());
        out.extend(preds);
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, predictions: &[PairPrediction]) -> Result<()> {
    ensure_parent(path).context("score")?;
    scorer::write_predictions(path, predictions).with_context(|| format!("score: write {}", path.display()))
}

// =============================================================================
// graph
// =============================================================================

#[derive(Debug, Clone)]
pub struct GraphSummary {
    pub key: GroupKey,
    pub path: PathBuf,
    pub vertices: usize,
    pub edges: usize,
}

/// Builds and writes one `graph.json` per group from a predictions file.
pub fn build_graphs(dataset: &Dataset, predictions: &Path, out_dir: &Path) -> Result<Vec<GraphSummary>> {
    let preds = PredictionFile::load(predictions).context("graph")?;
    ensure_dir(out_dir).context("graph")?;
    let mut out = Vec::new();
    for group in &dataset.groups {
        let key = group.key();
        let tag = || format!("graph: {key}");
        let found = preds.lookup(&enumerate_pairs(group)).with_context(tag)?;
        let g = build_graph(group, &found).with_context(tag)?;
        let path = out_dir.join(format!("{}.json", key.file_stem()));
        g.save(&path).with_context(tag)?;
        out.push(GraphSummary {
            vertices: g.num_vertices(),
            edges: g.edges().len(),
            key,
            path,
        });
    }
    Ok(out)
}

// =============================================================================
// partition
// =============================================================================

/// Where argument vectors come from.
pub enum Embeddings<'a> {
    /// An `embeddings.jsonl` file; a missing file is a stage error.
    File(&'a Path),
    /// Hashing embedder over the dataset's argument texts.
    Fallback(&'a Dataset),
}

impl Embeddings<'_> {
    pub fn table(&self) -> Result<EmbeddingTable> {
        match self {
            Embeddings::File(p) if !p.is_file() => bail!("embeddings not found: {}", p.display()),
            Embeddings::File(p) => EmbeddingTable::load(p).map_err(Into::into),
            Embeddings::Fallback(d) => Ok(HashingEmbedder::default().embed_dataset(d)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PartitionSummary {
    pub key: GroupKey,
    pub path: PathBuf,
    pub vertices: usize,
    pub subgraphs: usize,
    pub moves: usize,
    pub key_points: Vec<String>,
}

fn subgraph_count(g: &ArgumentGraph, mode: SubgraphCount, refs: Option<&Dataset>) -> Result<usize> {
    let wanted = match mode {
        SubgraphCount::Fixed(n) => n,
        SubgraphCount::Auto => {
            let d = refs.ok_or_else(|| anyhow!("--num-subgraphs auto needs --data for reference counts"))?;
            let n = d.group(&g.group).map_or(0, |grp| grp.reference_kps.len());
            if n == 0 {
                log::warn!("partition: {}: no reference key points, using one subgraph", g.group);
            }
            n.max(1)
        }
    };
    if wanted > g.num_vertices() {
        log::warn!(
            "partition: {}: {} subgraphs requested but only {} arguments, using {}",
            g.group,
            wanted,
            g.num_vertices(),
            g.num_vertices()
        );
    }
    Ok(wanted.min(g.num_vertices()))
}

/// Partitions one graph: k-means start, local search, key-point selection.
pub fn partition_graph(
    g: &ArgumentGraph,
    table: &EmbeddingTable,
    s: usize,
    settings: &PartitionSettings,
    base_seed: u64,
) -> Result<PartitionFile> {
    let scope = g.group.scope();
    let init = kmeans_init(
        table,
        g.vertices(),
        s,
        seed::stream_seed(base_seed, seed::KMEANS, &scope),
        settings.kmeans_max_iters,
        settings.kmeans_init,
    )?;
    let cfg = PartitionConfig {
        num_subgraphs: s,
        threshold: settings.threshold,
        max_steps: settings.max_steps,
        seed: seed::stream_seed(base_seed, seed::LOCAL_SEARCH, &scope),
        kmeans_max_iters: settings.kmeans_max_iters,
        kmeans_init: settings.kmeans_init,
    };
    cfg.validate(g.num_vertices())?;
    let p = local_search(g, &init, &cfg)?;
    let results = select_key_points(g, &p);
    Ok(PartitionFile::new(g, &p, &results))
}

/// Partitions each graph file into `out_dir`, one partition file per group.
pub fn partition_graphs(
    graph_files: &[PathBuf],
    embeddings: Embeddings<'_>,
    refs: Option<&Dataset>,
    settings: &PartitionSettings,
    base_seed: u64,
    out_dir: &Path,
) -> Result<Vec<PartitionSummary>> {
    let table = embeddings.table().context("partition")?;
    ensure_dir(out_dir).context("partition")?;
    let mut out = Vec::new();
    for path in graph_files {
        let g = ArgumentGraph::load(path).with_context(|| format!("partition: {}", path.display()))?;
        let tag = || format!("partition: {}", g.group);
        if g.num_vertices() == 0 {
            log::warn!("partition: {}: no arguments, skipped", g.group);
            continue;
        }
        let s = subgraph_count(&g, settings.num_subgraphs, refs).with_context(tag)?;
        let file = partition_graph(&g, &table, s, settings, base_seed).with_context(tag)?;
        let target = out_dir.join(format!("{}.json", g.group.file_stem()));
        file.save(&target).with_context(tag)?;
        out.push(PartitionSummary {
            key: g.group.clone(),
            path: target,
            vertices: g.num_vertices(),
            subgraphs: file.subgraphs.len(),
            moves: file.moves.len(),
            key_points: file.key_points(),
        });
    }
    Ok(out)
}

// =============================================================================
// eval
// =============================================================================

pub fn check_similarity_name(name: &str) -> Result<()> {
    match name {
        "token-f1" | "exact" => Ok(()),
        _ if name.strip_prefix("http:").is_some_and(|u| !u.is_empty()) => Ok(()),
        other => bail!("unknown similarity \"{other}\" (token-f1|exact|http:<url>)"),
    }
}

pub fn make_similarity(name: &str, timeout: Duration, retries: usize) -> Result<Box<dyn Similarity>> {
    check_similarity_name(name)?;
    Ok(match name {
        "token-f1" => Box::new(TokenF1),
        "exact" => Box::new(ExactMatch),
        _ => {
            let url = &name["http:".len()..];
            Box::new(scorer::http::HttpSimilarity::new(url, timeout, retries)?)
        }
    })
}

/// Generated key points per group, read from partition files.
pub fn read_generated(files: &[PathBuf]) -> Result<BTreeMap<GroupKey, Vec<String>>> {
    let mut out = BTreeMap::new();
    for path in files {
        let f = PartitionFile::load(path)?;
        let key = GroupKey::new(f.topic.clone(), f.stance);
        if out.insert(key.clone(), f.key_points()).is_some() {
            bail!("{}: second partition file for {key}", path.display());
        }
    }
    Ok(out)
}

/// Scores generated key points against the dataset's references. Groups
/// without reference key points cannot be scored and are skipped.
pub fn evaluate_files(files: &[PathBuf], dataset: &Dataset, sim: &dyn Similarity) -> Result<EvalReport> {
    let mut generated = read_generated(files).context("eval")?;
    generated.retain(|key, _| match dataset.group(key) {
        Some(g) if g.reference_kps.is_empty() => {
            log::warn!("eval: {key}: no reference key points, skipped");
            false
        }
        _ => true,
    });
    metrics::evaluate(&generated, dataset, sim).context("eval")
}

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    ensure_parent(path).context("eval")?;
    fs::write(path, report.to_json() + "\n").with_context(|| format!("eval: write {}", path.display()))
}

// =============================================================================
// pipeline
// =============================================================================

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub graphs: Vec<GraphSummary>,
    pub partitions: Vec<PartitionSummary>,
    pub report: EvalReport,
}

impl PipelineSummary {
    /// Fixed-width table, one row per group plus the macro average.
    pub fn table(&self) -> String {
        let mut lines = vec![format!(
            "{:<40} {:>6} {:>6} {:>3} {:>5} {:>6} {:>6} {:>6} {:>6} {:>6}",
            "group", "args", "edges", "s", "moves", "R1", "R2", "sP", "sR", "sF1"
        )];
        for row in &self.report.groups {
            let key = GroupKey::new(row.topic.clone(), row.stance);
            let g = self.graphs.iter().find(|g| g.key == key);
            let p = self.partitions.iter().find(|p| p.key == key);
            let mut name = key.to_string();
            if name.chars().count() > 40 {
                name = name.chars().take(37).collect::<String>() + "...";
            }
            lines.push(format!(
                "{:<40} {:>6} {:>6} {:>3} {:>5} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3}{}",
                name,
                g.map_or(0, |g| g.vertices),
                g.map_or(0, |g| g.edges),
                p.map_or(0, |p| p.subgraphs),
                p.map_or(0, |p| p.moves),
                row.rouge1,
                row.rouge2,
                row.sp,
                row.sr,
                row.sf1,
                if row.flagged { "  (no key points)" } else { "" }
            ));
        }
        let m = &self.report.macro_avg;
        lines.push(format!(
            "{:<40} {:>6} {:>6} {:>3} {:>5} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
            "macro", "", "", "", "", m.rouge1, m.rouge2, m.sp, m.sr, m.sf1
        ));
        lines.join("\n")
    }
}

/// load, score, graph, partition, select, evaluate; every artifact lands
/// under `cfg.out`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    cfg.validate()?;
    ensure_dir(&cfg.out)?;
    let dataset = load_data(&cfg.data)?;

    let predictions = cfg.out.join(PREDICTIONS_FILE);
    write_predictions(&predictions, &score_dataset(&dataset, &cfg.scorer)?)?;

    let graphs = build_graphs(&dataset, &predictions, &cfg.out.join(GRAPHS_DIR))?;
    let graph_files: Vec<PathBuf> = graphs.iter().map(|g| g.path.clone()).collect();

    let embeddings = match &cfg.embeddings {
        Some(p) => p.clone(),
        None => {
            let path = cfg.out.join(EMBEDDINGS_FILE);
            HashingEmbedder::default()
                .embed_dataset(&dataset)
                .save(&path)
                .with_context(|| format!("partition: write {}", path.display()))?;
            path
        }
    };
    let partitions = partition_graphs(
        &graph_files,
        Embeddings::File(&embeddings),
        Some(&dataset),
        &cfg.partition,
        cfg.seed,
        &cfg.out.join(PARTITIONS_DIR),
    )?;
    let partition_files: Vec<PathBuf> = partitions.iter().map(|p| p.path.clone()).collect();

    let sim = make_similarity(&cfg.sim, cfg.scorer.timeout(), cfg.scorer.retries).context("eval")?;
    let report = evaluate_files(&partition_files, &dataset, sim.as_ref())?;
    write_report(&cfg.out.join(REPORT_FILE), &report)?;
    Ok(PipelineSummary {
        graphs,
        partitions,
        report,
    })
}
