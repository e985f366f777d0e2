//! Pipeline configuration: one JSON document, overridable by `KPA_SEED` and
//! then by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use kpa_core::partition::KmeansInit;
use kpa_core::scorer::ScorerConfig;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const SEED_ENV: &str = "KPA_SEED";

/// Number of subgraphs per group: fixed, or the group's reference count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubgraphCount {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for SubgraphCount {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(SubgraphCount::Auto);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("expected \"auto\" or a positive integer, got \"{s}\"")),
            Ok(n) => Ok(SubgraphCount::Fixed(n)),
        }
    }
}

impl fmt::Display for SubgraphCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgraphCount::Auto => f.write_str("auto"),
            SubgraphCount::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for SubgraphCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SubgraphCount::Auto => s.serialize_str("auto"),
            SubgraphCount::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for SubgraphCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(serde::de::Error::custom("num_subgraphs must be at least 1")),
            Raw::Num(n) => Ok(SubgraphCount::Fixed(n)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSettings {
    pub num_subgraphs: SubgraphCount,
    /// Soft-retention threshold `h`.
    pub threshold: f64,
    /// Local-search steps `l`.
    pub max_steps: usize,
    pub kmeans_max_iters: usize,
    pub kmeans_init: KmeansInit,
}

impl Default for PartitionSettings {
    fn default() -> Self {
        Self {
            num_subgraphs: SubgraphCount::Auto,
            threshold: 0.008,
            max_steps: 200,
            kmeans_max_iters: 100,
            kmeans_init: KmeansInit::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: PathBuf,
    pub out: PathBuf,
    pub scorer: ScorerConfig,
    /// External `embeddings.jsonl`; the hashing embedder is used when absent.
    pub embeddings: Option<PathBuf>,
    pub partition: PartitionSettings,
    /// `token-f1`, `exact` or `http:<base-url>`.
    pub sim: String,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data: PathBuf::from("data"),
            out: PathBuf::from("out"),
            scorer: ScorerConfig::default(),
            embeddings: None,
            partition: PartitionSettings::default(),
            sim: "token-f1".into(),
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("config {}", path.display()))
    }

    /// Loads `path` if given, else defaults, then applies `KPA_SEED`.
    pub fn resolve(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(seed) = env_seed()? {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    /// Checks that every referenced path exists before anything runs.
    pub fn validate(&self) -> anyhow::Result<()> {
        if !self.data.join(kpa_core::corpus::ARGUMENTS_FILE).is_file() {
            bail!(
                "load: no {} in {}",
                kpa_core::corpus::ARGUMENTS_FILE,
                self.data.display()
            );
        }
        self.scorer.validate().context("score")?;
        if self.scorer.backend == kpa_core::scorer::Backend::File && !Path::new(&self.scorer.source).is_file() {
            bail!("score: predictions file {} not found", self.scorer.source);
        }
        if let Some(e) = &self.embeddings {
            if !e.is_file() {
                bail!("partition: embeddings not found: {}", e.display());
            }
        }
        if !(self.partition.threshold.is_finite() && self.partition.threshold >= 0.0) {
            bail!("partition: threshold must be finite and non-negative");
        }
        crate::stages::check_similarity_name(&self.sim).context("eval")?;
        Ok(())
    }
}

pub fn env_seed() -> anyhow::Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{SEED_ENV}: {e}"),
    }
}
