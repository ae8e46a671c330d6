//! Embedding and exhaustive nearest-neighbor retrieval of course chunks.

mod embed;
mod index;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use embed::{
    embed_text, EmbedError, Embedder, EmbeddingVector, OfflineEmbedder, RemoteEmbedder,
    DEFAULT_OFFLINE_DIM,
};
pub use index::{IndexEntry, IndexError, Neighbor, VectorIndex};

use crate::ingestion::Chunk;

/// Default number of chunks injected into the Generator prompt.
pub const DEFAULT_K: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("the index is empty")]
    EmptyIndex,
    #[error("chunk {0:?} is indexed but missing from the corpus")]
    MissingChunk(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedChunk {
    pub chunk: Chunk,
    pub squared_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub topic: String,
    pub chunks: Vec<RetrievedChunk>,
}

impl ContextBundle {
    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }
}

/// Chunks together with the index over their embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub chunks: Vec<Chunk>,
    pub index: VectorIndex,
}

impl KnowledgeBase {
    pub fn empty(dim: usize) -> Result<Self, RetrievalError> {
        Ok(Self { chunks: Vec::new(), index: VectorIndex::build(Vec::new(), dim)? })
    }

    /// Embeds `chunks` and returns a knowledge base extended with them.
    /// Chunks whose id is already present are replaced in the chunk table but
    /// keep their original index entry.
    pub fn with_chunks(
        &self,
        chunks: Vec<Chunk>,
        embedder: &dyn Embedder,
    ) -> Result<Self, RetrievalError> {
        let mut items = Vec::new();
        let mut table = self.chunks.clone();
        for chunk in chunks {
            if let Some(existing) = table.iter_mut().find(|c| c.chunk_id == chunk.chunk_id) {
                *existing = chunk;
                continue;
            }
            items.push((chunk.chunk_id.clone(), embed_text(&chunk.text, embedder)?));
            table.push(chunk);
        }
        let index = if self.index.is_empty() {
            VectorIndex::build(items, embedder.dim())?
        } else {
            self.index.with_entries(items)?
        };
        Ok(Self { chunks: table, index })
    }
}

pub fn retrieve_context(
    topic: &str,
    kb: &KnowledgeBase,
    embedder: &dyn Embedder,
    k: usize,
) -> Result<ContextBundle, RetrievalError> {
    if kb.index.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    let q = embed_text(topic, embedder)?;
    let by_id: HashMap<&str, &Chunk> = kb.chunks.iter().map(|c| (c.chunk_id.as_str(), c)).collect();
    let chunks = kb
        .index
        .query_knn(&q, k)?
        .into_iter()
        .map(|n| {
            let chunk = by_id
                .get(n.chunk_id.as_str())
                .ok_or_else(|| RetrievalError::MissingChunk(n.chunk_id.clone()))?;
            Ok(RetrievedChunk { chunk: (*chunk).clone(), squared_distance: n.squared_distance })
        })
        .collect::<Result<Vec<_>, RetrievalError>>()?;
    Ok(ContextBundle { topic: topic.to_string(), chunks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::{chunk_document, parse_materials};

    fn corpus() -> Vec<Chunk> {
        let raw = "OBJECTIVE: Trace while loops that count up\n\
                   OBJECTIVE: Use list append and remove\n\
                   ```\nnums = [1, 2]\nnums.append(3)\n```\n\
                   OBJECTIVE: Slice strings with negative indices";
        chunk_document(&parse_materials(raw, "doc", "basics").unwrap())
    }

    #[test]
    fn single_chunk_bundle() {
        let e = OfflineEmbedder::default();
        let kb = KnowledgeBase::empty(e.dim()).unwrap().with_chunks(corpus()[..1].to_vec(), &e).unwrap();
        let bundle = retrieve_context("anything", &kb, &e, 3).unwrap();
        assert_eq!(bundle.chunks.len(), 1);
    }

    #[test]
    fn exact_text_ranks_first_and_is_deterministic() {
        let e = OfflineEmbedder::default();
        let chunks = corpus();
        let kb = KnowledgeBase::empty(e.dim()).unwrap().with_chunks(chunks.clone(), &e).unwrap();
        for c in &chunks {
            let bundle = retrieve_context(&c.text, &kb, &e, DEFAULT_K).unwrap();
            assert_eq!(bundle.chunks[0].chunk.chunk_id, c.chunk_id);
            assert!(bundle.chunks[0].squared_distance.abs() < 1e-12);
            assert_eq!(bundle, retrieve_context(&c.text, &kb, &e, DEFAULT_K).unwrap());
        }
    }

    #[test]
    fn empty_index_is_an_error() {
        let e = OfflineEmbedder::default();
        let kb = KnowledgeBase::empty(e.dim()).unwrap();
        assert!(matches!(retrieve_context("loops", &kb, &e, 4), Err(RetrievalError::EmptyIndex)));
    }

    #[test]
    fn reingesting_same_chunks_keeps_index_size() {
        let e = OfflineEmbedder::default();
        let kb = KnowledgeBase::empty(e.dim()).unwrap().with_chunks(corpus(), &e).unwrap();
        let again = kb.with_chunks(corpus(), &e).unwrap();
        assert_eq!(again.index.len(), kb.index.len());
        assert_eq!(again.chunks.len(), kb.chunks.len());
    }
}
