use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::embed::EmbeddingVector;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("index dimension must be positive")]
    ZeroDimension,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub chunk_id: String,
    pub vector: EmbeddingVector,
}

/// Flat exhaustive index under squared Euclidean distance.
///
/// Immutable once built; [`VectorIndex::with_entries`] returns a new index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IndexRepr")]
pub struct VectorIndex {
    dim: usize,
    entries: Vec<IndexEntry>,
}

#[derive(Deserialize)]
struct IndexRepr {
    dim: usize,
    entries: Vec<IndexEntry>,
}

impl TryFrom<IndexRepr> for VectorIndex {
    type Error = IndexError;
    fn try_from(repr: IndexRepr) -> Result<Self, Self::Error> {
        let items = repr.entries.into_iter().map(|e| (e.chunk_id, e.vector)).collect();
        let idx = VectorIndex::build(items, repr.dim)?;
        if idx.dim != repr.dim {
            return Err(IndexError::DimensionMismatch { expected: repr.dim, found: idx.dim });
        }
        Ok(idx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub chunk_id: String,
    pub squared_distance: f64,
}

impl VectorIndex {
    /// Builds an index over `items`. `default_dim` applies only when `items`
    /// is empty; otherwise the first vector fixes the dimension.
    pub fn build(
        items: Vec<(String, EmbeddingVector)>,
        default_dim: usize,
    ) -> Result<Self, IndexError> {
        let dim = items.first().map_or(default_dim, |(_, v)| v.dim());
        if dim == 0 {
            return Err(IndexError::ZeroDimension);
        }
        Self { dim, entries: Vec::new() }.with_entries(items)
    }

    pub fn with_entries(&self, items: Vec<(String, EmbeddingVector)>) -> Result<Self, IndexError> {
        let mut seen: HashSet<&str> = self.entries.iter().map(|e| e.chunk_id.as_str()).collect();
        for (id, v) in &items {
            if v.dim() != self.dim {
                return Err(IndexError::DimensionMismatch { expected: self.dim, found: v.dim() });
            }
            if !seen.insert(id.as_str()) {
                return Err(IndexError::DuplicateId(id.clone()));
            }
        }
        let mut entries = self.entries.clone();
        entries.extend(
            items
                .into_iter()
                .map(|(chunk_id, vector)| IndexEntry { chunk_id, vector }),
        );
        Ok(Self { dim: self.dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn contains(&self, chunk_id: &str) -> bool {
        self.entries.iter().any(|e| e.chunk_id == chunk_id)
    }

    /// The `min(k, n)` nearest entries, ascending by distance, ties broken
    /// by insertion order.
    pub fn query_knn(&self, q: &EmbeddingVector, k: usize) -> Result<Vec<Neighbor>, IndexError> {
        if q.dim() != self.dim {
            return Err(IndexError::DimensionMismatch { expected: self.dim, found: q.dim() });
        }
        let mut scored: Vec<(f64, usize)> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.vector.squared_distance(q), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        let k = k.min(scored.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_unstable_by(order);
        Ok(scored
            .into_iter()
            .map(|(d, i)| Neighbor {
                chunk_id: self.entries[i].chunk_id.clone(),
                squared_distance: d,
            })
            .collect())
    }
}
