//! Client for a remote pair-scoring service.
//!
//! Wire protocol (JSON over HTTP POST):
//!
//! * `/v1/score`: `{topic, stance_i, arg_i, stance_j, arg_j}` (argument
//!   texts, stances as `"pro"`/`"con"`) answered by
//!   `{share_score, key_point}` with `key_point` a string or `null`.
//! * `/v1/score_batch`: `{"pairs": [request, ...]}` answered by
//!   `{"results": [response, ...]}` in request order. Optional: a 404/405
//!   (or any failed batch) makes the client retry those pairs one by one.
//! * `/v1/similarity`: `{reference, generated}` answered by `{score}`.
//!
//! Transport errors (connect, timeout) are retried; an HTTP error status is
//! final for that request. Failures stay local to their pair.

use std::time::Duration;

use futures::stream::{self, StreamExt};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{clean_key_point, Result, ScorerConfig, ScorerError};
use crate::corpus::{Stance, TopicStanceGroup};
use crate::metrics::{self, MetricsError, Similarity};
use crate::pairing::{ArgumentPair, PairPrediction};

pub const SCORE_PATH: &str = "/v1/score";
pub const BATCH_PATH: &str = "/v1/score_batch";
pub const SIMILARITY_PATH: &str = "/v1/similarity";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub topic: String,
    pub stance_i: Stance,
    pub arg_i: String,
    pub stance_j: Stance,
    pub arg_j: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub share_score: f64,
    #[serde(default)]
    pub key_point: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRequest {
    pub pairs: Vec<ScoreRequest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchResponse {
    pub results: Vec<ScoreResponse>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityRequest {
    pub reference: String,
    pub generated: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityResponse {
    pub score: f64,
}

#[derive(Debug)]
enum CallError {
    Status(StatusCode, String),
    Failed(String),
}

impl std::fmt::Display for CallError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CallError::Status(code, body) if body.is_empty() => write!(f, "HTTP {code}"),
            CallError::Status(code, body) => write!(f, "HTTP {code}: {body}"),
            CallError::Failed(m) => f.write_str(m),
        }
    }
}

fn backoff(attempt: usize) -> Duration {
    Duration::from_millis(50u64 << attempt.min(6))
}

fn runtime() -> std::io::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_current_thread().enable_all().build()
}

// =============================================================================
// Client
// =============================================================================

#[derive(Debug, Clone)]
pub struct HttpClient {
    client: reqwest::Client,
    base: String,
    retries: usize,
}

impl HttpClient {
    pub fn new(base: &str, timeout: Duration, retries: usize) -> Result<Self> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ScorerError::InvalidConfig(format!("http client: {e}")))?;
        Ok(Self {
            client,
            base: base.trim_end_matches('/').to_string(),
            retries,
        })
    }

    async fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, CallError> {
        let url = format!("{}{}", self.base, path);
        let mut attempt = 0;
        loop {
            match self.client.post(&url).json(body).send().await {
                Ok(resp) => {
                    let status = resp.status();
                    if !status.is_success() {
                        let text = resp.text().await.unwrap_or_default();
                        return Err(CallError::Status(status, text.trim().to_string()));
                    }
                    return resp
                        .json::<R>()
                        .await
                        .map_err(|e| CallError::Failed(format!("bad response body: {e}")));
                }
                Err(e) if attempt < self.retries => {
                    log::debug!("POST {url} attempt {} failed: {e}", attempt + 1);
                    tokio::time::sleep(backoff(attempt)).await;
                    attempt += 1;
                }
                Err(e) => {
                    let kind = if e.is_timeout() { "timed out" } else { "transport error" };
                    return Err(CallError::Failed(format!(
                        "{kind} after {} attempt(s): {e}",
                        attempt + 1
                    )));
                }
            }
        }
    }
}

pub struct HttpScorer {
    client: HttpClient,
    max_in_flight: usize,
    batch_size: usize,
}

fn accept(pair: &ArgumentPair, resp: ScoreResponse) -> Result<PairPrediction> {
    if !(0.0..=1.0).contains(&resp.share_score) {
        return Err(ScorerError::Pair {
            pair: pair.to_string(),
            message: format!("share_score {} outside [0, 1]", resp.share_score),
        });
    }
    Ok(PairPrediction {
        share_score: resp.share_score,
        key_point: clean_key_point(pair, resp.key_point),
        pair: pair.clone(),
    })
}

impl HttpScorer {
    pub fn new(cfg: &ScorerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            client: HttpClient::new(&cfg.source, cfg.timeout(), cfg.retries)?,
            max_in_flight: cfg.max_in_flight,
            batch_size: cfg.batch_size,
        })
    }

    /// Scores every pair, one result per pair in request order. At most
    /// `max_in_flight` requests are outstanding at any time.
    pub async fn score_all(&self, group: &TopicStanceGroup, pairs: &[ArgumentPair]) -> Vec<Result<PairPrediction>> {
        let mut results: Vec<Option<Result<PairPrediction>>> = Vec::with_capacity(pairs.len());
        let mut requests: Vec<Option<(ArgumentPair, ScoreRequest)>> = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let built = ArgumentPair::new(pair.group.clone(), pair.i.clone(), pair.j.clone())
                .and_then(|p| p.ensure_in(group).map(|_| p));
            match built {
                Ok(p) => {
                    let text = |id: &str| group.argument(id).map(|a| a.text.clone()).unwrap_or_default();
                    let req = ScoreRequest {
                        topic: group.topic.clone(),
                        stance_i: group.stance,
                        arg_i: text(&p.i),
                        stance_j: group.stance,
                        arg_j: text(&p.j),
                    };
                    requests.push(Some((p, req)));
                    results.push(None);
                }
                Err(e) => {
                    requests.push(None);
                    results.push(Some(Err(e.into())));
                }
            }
        }
        let pending: Vec<usize> = (0..pairs.len()).filter(|&k| requests[k].is_some()).collect();

        if self.batch_size > 1 && pending.len() > 1 {
            let chunks: Vec<&[usize]> = pending.chunks(self.batch_size).collect();
            let requests = &requests;
            let answers: Vec<(&[usize], Result<BatchResponse, CallError>)> = stream::iter(chunks)
                .map(|chunk| async move {
                    let body = BatchRequest {
                        pairs: chunk.iter().map(|&k| requests[k].as_ref().unwrap().1.clone()).collect(),
                    };
                    (chunk, self.client.post(BATCH_PATH, &body).await)
                })
                .buffer_unordered(self.max_in_flight)
                .collect()
                .await;
            let mut unsupported = false;
            for (chunk, answer) in answers {
                match answer {
                    Ok(resp) if resp.results.len() == chunk.len() => {
                        for (&k, r) in chunk.iter().zip(resp.results) {
                            results[k] = Some(accept(&requests[k].as_ref().unwrap().0, r));
                        }
                    }
                    Ok(resp) => log::warn!(
                        "batch of {} returned {} results, retrying pairs singly",
                        chunk.len(),
                        resp.results.len()
                    ),
                    Err(CallError::Status(StatusCode::NOT_FOUND | StatusCode::METHOD_NOT_ALLOWED, _)) => {
                        unsupported = true
                    }
                    Err(e) => log::warn!("batch of {} failed ({e}), retrying pairs singly", chunk.len()),
                }
            }
            if unsupported {
                log::info!("{BATCH_PATH} not supported, scoring pairs one by one");
            }
        }

        let remaining: Vec<usize> = pending.into_iter().filter(|&k| results[k].is_none()).collect();
        let requests = &requests;
        let singles: Vec<(usize, Result<PairPrediction>)> = stream::iter(remaining)
            .map(|k| async move {
                let (pair, req) = requests[k].as_ref().unwrap();
                let out = match self.client.post::<_, ScoreResponse>(SCORE_PATH, req).await {
                    Ok(resp) => accept(pair, resp),
                    Err(e) => Err(ScorerError::Pair {
                        pair: pair.to_string(),
                        message: e.to_string(),
                    }),
                };
                (k, out)
            })
            .buffer_unordered(self.max_in_flight)
            .collect()
            .await;
        for (k, out) in singles {
            results[k] = Some(out);
        }
        results.into_iter().map(|r| r.expect("every pair resolved")).collect()
    }
}

/// Blocking entry point: scores all pairs or reports every failed pair.
pub fn score_from_http(
    cfg: &ScorerConfig,
    group: &TopicStanceGroup,
    pairs: &[ArgumentPair],
) -> Result<Vec<PairPrediction>> {
    let scorer = HttpScorer::new(cfg)?;
    let rt = runtime().map_err(|e| ScorerError::InvalidConfig(format!("runtime: {e}")))?;
    let results = rt.block_on(scorer.score_all(group, pairs));
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (pair, r) in pairs.iter().zip(results) {
        match r {
            Ok(p) => ok.push(p),
            Err(ScorerError::Pair { pair, message }) => failed.push((pair, message)),
            Err(e) => failed.push((pair.to_string(), e.to_string())),
        }
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        Err(ScorerError::Failures(failed))
    }
}

// =============================================================================
// Remote similarity
// =============================================================================

/// [`Similarity`] answered by `/v1/similarity`.
pub struct HttpSimilarity {
    client: HttpClient,
    rt: tokio::runtime::Runtime,
}

impl HttpSimilarity {
    pub fn new(base: &str, timeout: Duration, retries: usize) -> Result<Self> {
        Ok(Self {
            client: HttpClient::new(base, timeout, retries)?,
            rt: runtime().map_err(|e| ScorerError::InvalidConfig(format!("runtime: {e}")))?,
        })
    }
}

impl Similarity for HttpSimilarity {
    fn name(&self) -> String {
        format!("http:{}", self.client.base)
    }

    fn score(&self, reference: &str, generated: &str) -> metrics::Result<f64> {
        let body = SimilarityRequest {
            reference: reference.to_string(),
            generated: generated.to_string(),
        };
        self.rt
            .block_on(self.client.post::<_, SimilarityResponse>(SIMILARITY_PATH, &body))
            .map(|r| r.score)
            .map_err(|e| MetricsError::Backend(e.to_string()))
    }
}
