use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::http::{post_json, HttpFailure};

/// Default width of the offline embedder.
pub const DEFAULT_OFFLINE_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding provider unavailable (status {status:?}, retryable: {retryable}): {message}")]
    ProviderUnavailable {
        status: Option<u16>,
        retryable: bool,
        message: String,
    },
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("provider returned a malformed vector: {0}")]
    MalformedVector(String),
}

impl From<HttpFailure> for EmbedError {
    fn from(f: HttpFailure) -> Self {
        EmbedError::ProviderUnavailable {
            status: f.status,
            retryable: f.retryable(),
            message: f.message,
        }
    }
}

/// A finite, non-empty vector of reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::MalformedVector("zero-length vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::MalformedVector(format!("non-finite value at {i}")));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Squared Euclidean distance. Callers guarantee equal dimensions.
    pub fn squared_distance(&self, other: &EmbeddingVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum()
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = EmbedError;
    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        EmbeddingVector::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.values
    }
}

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;
}

pub fn embed_text(text: &str, embedder: &dyn Embedder) -> Result<EmbeddingVector, EmbedError> {
    if text.trim().is_empty() {
        return Err(EmbedError::EmptyText);
    }
    embedder.embed(text)
}

/// Deterministic embedder: signed feature hashing of word unigrams and
/// bigrams, L2-normalized.
#[derive(Debug, Clone)]
pub struct OfflineEmbedder {
    dim: usize,
}

impl OfflineEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }
}

impl Default for OfflineEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_OFFLINE_DIM)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '_')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Embedder for OfflineEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut features: Vec<String> = words(text);
        if features.is_empty() {
            // Symbol-only text still needs a stable representation.
            features = text.split_whitespace().map(str::to_string).collect();
        }
        let bigrams: Vec<String> = features
            .windows(2)
            .map(|w| format!("{} {}", w[0], w[1]))
            .collect();
        let mut values = vec![0.0f64; self.dim];
        for feature in features.iter().chain(&bigrams) {
            let h = fnv1a(feature.as_bytes());
            let slot = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
            values[slot] += sign;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // Every feature cancelled out; fall back to a fixed slot.
            values[(fnv1a(text.as_bytes()) % self.dim as u64) as usize] = 1.0;
        } else {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        EmbeddingVector::new(values)
    }
}

/// Embedding service reached over HTTP: `{"model", "texts": [..]}` in,
/// `{"vectors": [[..], ..]}` out.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub dim: usize,
    pub timeout: Duration,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl RemoteEmbedder {
    pub fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let body = json!({ "model": self.model, "texts": texts });
        let value = post_json(&self.endpoint, self.api_key.as_deref(), &body, self.timeout)?;
        let resp: EmbedResponse = serde_json::from_value(value)
            .map_err(|e| EmbedError::MalformedVector(e.to_string()))?;
        if resp.vectors.len() != texts.len() {
            return Err(EmbedError::MalformedVector(format!(
                "expected {} vectors, got {}",
                texts.len(),
                resp.vectors.len()
            )));
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(EmbedError::MalformedVector(format!(
                        "expected dimension {}, got {}",
                        self.dim,
                        v.len()
                    )));
                }
                EmbeddingVector::new(v)
            })
            .collect()
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        Ok(self.embed_batch(&[text])?.remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offline_is_deterministic_and_normalized() {
        let e = OfflineEmbedder::default();
        let a = e.embed("while loops repeat until the condition is false").unwrap();
        let b = e.embed("while loops repeat until the condition is false").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 256);
        assert!((a.norm() - 1.0).abs() < 1e-9);
        for text in ["+", "x", "a a", "== != <="] {
            assert!((e.embed(text).unwrap().norm() - 1.0).abs() < 1e-9, "{text}");
        }
    }

    #[test]
    fn empty_text_rejected() {
        let e = OfflineEmbedder::default();
        assert_eq!(embed_text("   ", &e), Err(EmbedError::EmptyText));
    }

    #[test]
    fn vectors_must_be_finite() {
        assert!(EmbeddingVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(EmbeddingVector::new(vec![]).is_err());
        assert!(serde_json::from_str::<EmbeddingVector>("[]").is_err());
    }

    #[test]
    fn unreachable_remote_is_provider_unavailable() {
        let remote = RemoteEmbedder {
            endpoint: "http://127.0.0.1:9/embed".into(),
            model: "m".into(),
            api_key: None,
            dim: 4,
            timeout: Duration::from_millis(500),
        };
        match remote.embed("hello") {
            Err(EmbedError::ProviderUnavailable { status: None, retryable: true, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
