//! Sources of [`PairPrediction`]s.
//!
//! Three interchangeable backends: a precomputed `predictions.jsonl`, a
//! remote scoring service (feature `http`), and a gold-label oracle that
//! answers from the corpus labels. Whatever the backend, the rest of the
//! pipeline only sees the returned predictions.

#[cfg(feature = "http")]
pub mod http;

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, CorpusError, GroupKey, Stance, TopicStanceGroup};
use crate::pairing::{ArgumentPair, PairPrediction, PairingError};

#[derive(Debug, thiserror::Error)]
pub enum ScorerError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error("{path}:{line}: share_score {score} outside [0, 1]")]
    ScoreOutOfRange { path: String, line: usize, score: f64 },
    #[error("{path}:{line}: duplicate prediction for ({pair})")]
    Duplicate { path: String, line: usize, pair: String },
    #[error("missing predictions for {} pair(s): {}", .0.len(), .0.join("; "))]
    Missing(Vec<String>),
    #[error("pair ({pair}): {message}")]
    Pair { pair: String, message: String },
    #[error("{} pair(s) failed: {}", .0.len(), .0.iter().map(|(p, m)| format!("({p}): {m}")).collect::<Vec<_>>().join("; "))]
    Failures(Vec<(String, String)>),
    #[error("invalid scorer config: {0}")]
    InvalidConfig(String),
    #[error("backend \"{0}\" is not available in this build")]
    Unavailable(&'static str),
}

pub type Result<T, E = ScorerError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    File,
    Http,
    #[default]
    Oracle,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "file" => Ok(Backend::File),
            "http" => Ok(Backend::Http),
            "oracle" => Ok(Backend::Oracle),
            other => Err(format!("unknown backend \"{other}\" (file|http|oracle)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub backend: Backend,
    /// Predictions file for `file`, base URL for `http`; unused by `oracle`.
    pub source: String,
    pub timeout_secs: f64,
    pub max_in_flight: usize,
    pub retries: usize,
    /// Pairs per `/v1/score_batch` request; 1 disables batching.
    pub batch_size: usize,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Oracle,
            source: String::new(),
            timeout_secs: 30.0,
            max_in_flight: 8,
            retries: 2,
            batch_size: 32,
        }
    }
}

impl ScorerConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_in_flight == 0 {
            return Err(ScorerError::InvalidConfig("max_in_flight must be at least 1".into()));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(ScorerError::InvalidConfig("timeout must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(ScorerError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.backend != Backend::Oracle && self.source.is_empty() {
            return Err(ScorerError::InvalidConfig(format!(
                "{:?} backend needs a source",
                self.backend
            )));
        }
        Ok(())
    }
}

// =============================================================================
// predictions.jsonl
// =============================================================================

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub topic: String,
    pub stance: Stance,
    pub arg_i: String,
    pub arg_j: String,
    pub share_score: f64,
    pub key_point: Option<String>,
}

impl From<&PairPrediction> for PredictionRecord {
    fn from(p: &PairPrediction) -> Self {
        PredictionRecord {
            topic: p.pair.group.topic.clone(),
            stance: p.pair.group.stance,
            arg_i: p.pair.i.clone(),
            arg_j: p.pair.j.clone(),
            share_score: p.share_score,
            key_point: p.key_point.clone(),
        }
    }
}

pub fn write_predictions(path: &Path, predictions: &[PairPrediction]) -> std::io::Result<()> {
    let records: Vec<PredictionRecord> = predictions.iter().map(Into::into).collect();
    corpus::write_jsonl(path, &records)
}

/// Normalizes an optional key point: empty text means "no key point".
pub(crate) fn clean_key_point(pair: &ArgumentPair, kp: Option<String>) -> Option<String> {
    match kp {
        Some(k) if k.trim().is_empty() => {
            log::warn!("pair ({pair}): empty key point treated as \"No\"");
            None
        }
        Some(k) => Some(k.trim().to_string()),
        None => None,
    }
}

/// Predictions loaded from `predictions.jsonl`, keyed by unordered pair.
#[derive(Debug, Clone, Default)]
pub struct PredictionFile {
    by_pair: HashMap<ArgumentPair, (f64, Option<String>)>,
}

impl PredictionFile {
    pub fn load(path: &Path) -> Result<Self> {
        let shown = path.display().to_string();
        let mut by_pair = HashMap::new();
        for (line, rec) in corpus::read_jsonl::<PredictionRecord>(path)? {
            if !(0.0..=1.0).contains(&rec.share_score) {
                return Err(ScorerError::ScoreOutOfRange {
                    path: shown,
                    line,
                    score: rec.share_score,
                });
            }
            let pair = ArgumentPair::new(GroupKey::new(rec.topic, rec.stance), rec.arg_i, rec.arg_j).map_err(|e| {
                CorpusError::Malformed {
                    path: path.to_path_buf(),
                    line,
                    message: e.to_string(),
                }
            })?;
            let kp = clean_key_point(&pair, rec.key_point);
            if by_pair.contains_key(&pair) {
                return Err(ScorerError::Duplicate {
                    path: shown,
                    line,
                    pair: pair.to_string(),
                });
            }
            by_pair.insert(pair, (rec.share_score, kp));
        }
        Ok(Self { by_pair })
    }

    pub fn len(&self) -> usize {
        self.by_pair.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_pair.is_empty()
    }

    /// One prediction per requested pair, in request order.
    pub fn lookup(&self, pairs: &[ArgumentPair]) -> Result<Vec<PairPrediction>> {
        let mut out = Vec::with_capacity(pairs.len());
        let mut missing = Vec::new();
        for pair in pairs {
            let key = ArgumentPair::new(pair.group.clone(), pair.i.clone(), pair.j.clone())?;
            match self.by_pair.get(&key) {
                Some((score, kp)) => out.push(PairPrediction {
                    pair: key,
                    share_score: *score,
                    key_point: kp.clone(),
                }),
                None => missing.push(format!("{} / {}", pair.group, pair)),
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(ScorerError::Missing(missing))
        }
    }
}

pub fn score_from_file(path: &Path, pairs: &[ArgumentPair]) -> Result<Vec<PairPrediction>> {
    PredictionFile::load(path)?.lookup(pairs)
}

// =============================================================================
// Oracle
// =============================================================================

/// Scores a pair from gold labels: 1 with the smallest shared key-point text
/// when the two arguments share a key point, 0 without key point otherwise.
pub fn oracle_score(group: &TopicStanceGroup, pair: &ArgumentPair) -> Result<PairPrediction> {
    pair.ensure_in(group)?;
    let pair = ArgumentPair::new(pair.group.clone(), pair.i.clone(), pair.j.clone())?;
    let shared = group.smallest_shared_kp(&pair.i, &pair.j);
    Ok(PairPrediction {
        share_score: if shared.is_some() { 1.0 } else { 0.0 },
        key_point: shared,
        pair,
    })
}

/// Scores the pairs of one group with the configured backend.
pub fn score_pairs(
    cfg: &ScorerConfig,
    group: &TopicStanceGroup,
    pairs: &[ArgumentPair],
) -> Result<Vec<PairPrediction>> {
    cfg.validate()?;
    match cfg.backend {
        Backend::Oracle => pairs.iter().map(|p| oracle_score(group, p)).collect(),
        Backend::File => score_from_file(Path::new(&cfg.source), pairs),
        #[cfg(feature = "http")]
        Backend::Http => http::score_from_http(cfg, group, pairs),
        #[cfg(not(feature = "http"))]
        Backend::Http => Err(ScorerError::Unavailable("http")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Argument, Dataset, KeyPoint, MatchLabel};
    use crate::pairing::enumerate_pairs;
    use std::fs;

    fn group() -> TopicStanceGroup {
        let args = ["a1", "a2", "a3", "a4"];
        let kps = [
            ("k1", "Child actors are denied a normal childhood"),
            ("k2", "B"),
            ("k3", "A"),
        ];
        let gold = [
            ("a1", "k1"),
            ("a2", "k1"),
            ("a3", "k2"),
            ("a3", "k3"),
            ("a4", "k3"),
            ("a4", "k2"),
        ];
        Dataset::from_records(
            args.iter()
                .map(|id| Argument {
                    arg_id: id.to_string(),
                    topic: "T".into(),
                    stance: Stance::Con,
                    text: format!("text of {id}"),
                })
                .collect(),
            kps.iter()
                .map(|(id, t)| KeyPoint {
                    kp_id: id.to_string(),
                    topic: "T".into(),
                    stance: Stance::Con,
                    text: t.to_string(),
                })
                .collect(),
            gold.iter()
                .map(|(a, k)| MatchLabel {
                    arg_id: a.to_string(),
                    kp_id: k.to_string(),
                    label: true,
                })
                .collect(),
        )
        .unwrap()
        .groups
        .remove(0)
    }

    fn pair(a: &str, b: &str) -> ArgumentPair {
        ArgumentPair::new(GroupKey::new("T", Stance::Con), a, b).unwrap()
    }

    #[test]
    fn oracle_answers_from_gold() {
        let g = group();
        let p = oracle_score(&g, &pair("a1", "a2")).unwrap();
        assert_eq!(p.share_score, 1.0);
        assert_eq!(
            p.key_point.as_deref(),
            Some("Child actors are denied a normal childhood")
        );
        let p = oracle_score(&g, &pair("a1", "a3")).unwrap();
        assert_eq!((p.share_score, p.key_point), (0.0, None));
        let p = oracle_score(&g, &pair("a4", "a3")).unwrap();
        assert_eq!(p.key_point.as_deref(), Some("A"));
        assert!(oracle_score(&g, &pair("a1", "zz")).is_err());
    }

    #[test]
    fn oracle_scores_are_binary_and_symmetric() {
        let g = group();
        for p in enumerate_pairs(&g) {
            let fwd = oracle_score(&g, &p).unwrap();
            let rev = oracle_score(
                &g,
                &ArgumentPair {
                    i: p.j.clone(),
                    j: p.i.clone(),
                    ..p.clone()
                },
            )
            .unwrap();
            assert_eq!(fwd, rev);
            assert!(fwd.share_score == 0.0 || fwd.share_score == 1.0);
        }
    }

    fn line(i: &str, j: &str, s: f64, kp: Option<&str>) -> String {
        serde_json::to_string(&PredictionRecord {
            topic: "T".into(),
            stance: Stance::Con,
            arg_i: i.into(),
            arg_j: j.into(),
            share_score: s,
            key_point: kp.map(String::from),
        })
        .unwrap()
    }

    #[test]
    fn file_backend_matches_unordered_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("predictions.jsonl");
        let body = [
            line("a2", "a1", 0.9, Some("K")),
            line("a1", "a3", 0.1, None),
            line("a1", "a4", 0.2, None),
            line("a2", "a3", 0.3, None),
            line("a2", "a4", 0.4, Some("")),
            line("a3", "a4", 0.8, Some("L")),
        ]
        .join("\n");
        fs::write(&path, body).unwrap();
        let pairs = enumerate_pairs(&group());
        let preds = score_from_file(&path, &pairs).unwrap();
        assert_eq!(preds.len(), 6);
        assert_eq!(
            preds.iter().map(|p| &p.pair).collect::<Vec<_>>(),
            pairs.iter().collect::<Vec<_>>()
        );
        assert_eq!(preds[0].key_point.as_deref(), Some("K"));
        assert_eq!(preds[4].key_point, None);
    }

    #[test]
    fn file_backend_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        fs::write(
            &path,
            format!("{}\n{}", line("a1", "a2", 0.5, None), line("a1", "a3", 1.3, None)),
        )
        .unwrap();
        match score_from_file(&path, &[]) {
            Err(ScorerError::ScoreOutOfRange { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }

        fs::write(&path, line("a1", "a2", 0.5, None)).unwrap();
        let err = score_from_file(&path, &[pair("a1", "a2"), pair("a3", "a4")]).unwrap_err();
        assert!(
            matches!(&err, ScorerError::Missing(m) if m.len() == 1 && m[0].contains("a3, a4")),
            "{err}"
        );

        fs::write(
            &path,
            format!("{}\n{}", line("a1", "a2", 0.5, None), line("a2", "a1", 0.6, None)),
        )
        .unwrap();
        assert!(matches!(
            score_from_file(&path, &[]),
            Err(ScorerError::Duplicate { line: 2, .. })
        ));
    }

    #[test]
    fn config_invariants() {
        let mut cfg = ScorerConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.max_in_flight = 0;
        assert!(cfg.validate().is_err());
        let cfg = ScorerConfig {
            backend: Backend::File,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
