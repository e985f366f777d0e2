//! Argument embeddings used to seed the partition.
//!
//! Vectors normally come from an external sentence encoder via
//! `embeddings.jsonl` (`{"arg_id": ..., "vector": [...]}`). When none are
//! available, [`HashingEmbedder`] produces a signed feature-hashed
//! bag-of-words vector per argument.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, CorpusError};
use crate::metrics::tokenize;
use crate::seed::fnv1a;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("vector for \"{arg_id}\" has dimension {found}, expected {expected}")]
    DimensionMismatch {
        arg_id: String,
        expected: usize,
        found: usize,
    },
    #[error("vector for \"{0}\" contains a non-finite value")]
    NonFinite(String),
    #[error("duplicate vector for \"{0}\"")]
    Duplicate(String),
    #[error("no vector for argument \"{0}\"")]
    Missing(String),
    #[error("empty vector for \"{0}\"")]
    Empty(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub arg_id: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, arg_id: &str) -> Option<&[f64]> {
        self.vectors.get(arg_id).map(Vec::as_slice)
    }

    pub fn insert(&mut self, arg_id: impl Into<String>, vector: Vec<f64>) -> Result<(), EmbedError> {
        let arg_id = arg_id.into();
        if vector.is_empty() {
            return Err(EmbedError::Empty(arg_id));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite(arg_id));
        }
        if self.vectors.is_empty() {
            self.dim = vector.len();
        } else if vector.len() != self.dim {
            return Err(EmbedError::DimensionMismatch {
                arg_id,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if self.vectors.contains_key(&arg_id) {
            return Err(EmbedError::Duplicate(arg_id));
        }
        self.vectors.insert(arg_id, vector);
        Ok(())
    }

    /// Rows for `ids`, in that order.
    pub fn rows<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<&[f64]>, EmbedError> {
        ids.iter()
            .map(|id| {
                self.get(id.as_ref())
                    .ok_or_else(|| EmbedError::Missing(id.as_ref().to_string()))
            })
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self, EmbedError> {
        let mut table = Self::new();
        for (_, rec) in corpus::read_jsonl::<EmbeddingRecord>(path)? {
            table.insert(rec.arg_id, rec.vector)?;
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let records: Vec<_> = self
            .vectors
            .iter()
            .map(|(arg_id, vector)| EmbeddingRecord {
                arg_id: arg_id.clone(),
                vector: vector.clone(),
            })
            .collect();
        corpus::write_jsonl(path, &records)
    }
}

/// Signed feature hashing of lowercase tokens into a fixed number of
/// buckets, L2-normalised. Texts without tokens map to the zero vector.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self { dim: 256, seed: 0 }
    }
}

impl HashingEmbedder {
    pub fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for tok in tokenize(text) {
            let h = fnv1a(self.seed, tok.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    pub fn embed_dataset(&self, dataset: &corpus::Dataset) -> EmbeddingTable {
        let mut table = EmbeddingTable::new();
        for arg in dataset.groups.iter().flat_map(|g| &g.arguments) {
            table
                .insert(arg.arg_id.clone(), self.embed(&arg.text))
                .expect("argument ids are unique and hashed vectors are finite");
        }
        table
    }
}
