//! A data directory holding the knowledge base and the review event log,
//! plus the ingest and generate pipelines that operate on it.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::agents::{
    generate_question, validate_question, AgentError, AgentSettings, ChatClient, GeneratedQuestion, Stamp,
    ValidationReport,
};
use crate::ingestion::{chunk_document, parse_materials_bytes, IngestError};
use crate::retrieval::{retrieve_context, ContextBundle, Embedder, KnowledgeBase, RetrievalError};
use crate::review::{Clock, ReviewItem, ReviewStore, StoreError};

pub const KNOWLEDGE_FILE: &str = "knowledge.json";
pub const EVENTS_FILE: &str = "events.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{doc}: {source}")]
    Ingest { doc: String, source: IngestError },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("no materials have been ingested")]
    NoMaterials,
}

fn io_err(path: &Path, e: impl ToString) -> PipelineError {
    PipelineError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Everything generation needs besides the data directory.
#[derive(Clone)]
pub struct Pipeline {
    pub embedder: Arc<dyn Embedder>,
    pub client: Arc<dyn ChatClient>,
    pub settings: AgentSettings,
    pub clock: Arc<dyn Clock>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaterialUpload {
    pub doc_id: String,
    pub topic: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub documents: usize,
    pub chunks_added: usize,
    pub total_chunks: usize,
}

#[derive(Debug)]
pub struct Workspace {
    data_dir: PathBuf,
    pub store: ReviewStore,
    kb: RwLock<KnowledgeBase>,
    generate_lock: Mutex<()>,
}

impl Workspace {
    pub fn open(data_dir: &Path, embed_dim: usize) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(data_dir).map_err(|e| io_err(data_dir, e))?;
        let kb_path = data_dir.join(KNOWLEDGE_FILE);
        let kb = match std::fs::read_to_string(&kb_path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| io_err(&kb_path, e))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => KnowledgeBase::empty(embed_dim)?,
            Err(e) => return Err(io_err(&kb_path, e)),
        };
        let store = ReviewStore::open(&data_dir.join(EVENTS_FILE))?;
        Ok(Self { data_dir: data_dir.to_path_buf(), store, kb: RwLock::new(kb), generate_lock: Mutex::new(()) })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn knowledge(&self) -> KnowledgeBase {
        self.kb.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn save_knowledge(&self, kb: &KnowledgeBase) -> Result<(), PipelineError> {
        let path = self.data_dir.join(KNOWLEDGE_FILE);
        let tmp = self.data_dir.join(format!("{KNOWLEDGE_FILE}.tmp"));
        let text = serde_json::to_string(kb).expect("knowledge base serializes");
        let write = || -> std::io::Result<()> {
            use std::io::Write;
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.sync_all()?;
            std::fs::rename(&tmp, &path)?;
            if let Ok(dir) = std::fs::File::open(&self.data_dir) {
                let _ = dir.sync_all();
            }
            Ok(())
        };
        write().map_err(|e| io_err(&path, e))
    }

    pub fn ingest(
        &self,
        uploads: &[MaterialUpload],
        embedder: &dyn Embedder,
    ) -> Result<IngestSummary, PipelineError> {
        let mut chunks = Vec::new();
        for u in uploads {
            let doc = parse_materials_bytes(&u.bytes, &u.doc_id, &u.topic)
                .map_err(|source| PipelineError::Ingest { doc: u.doc_id.clone(), source })?;
            chunks.extend(chunk_document(&doc));
        }
        let mut kb = self.kb.write().unwrap_or_else(|e| e.into_inner());
        let before = kb.index.len();
        let next = kb.with_chunks(chunks, embedder)?;
        self.save_knowledge(&next)?;
        *kb = next;
        Ok(IngestSummary {
            documents: uploads.len(),
            chunks_added: kb.index.len() - before,
            total_chunks: kb.chunks.len(),
        })
    }

    pub fn context_for(&self, topic: &str, p: &Pipeline) -> Result<ContextBundle, PipelineError> {
        let kb = self.kb.read().unwrap_or_else(|e| e.into_inner());
        match retrieve_context(topic, &kb, p.embedder.as_ref(), p.k) {
            Err(RetrievalError::EmptyIndex) => Err(PipelineError::NoMaterials),
            other => Ok(other?),
        }
    }

    /// Retrieves context, generates, validates and stores `count` questions.
    /// Items stored before a failure stay stored.
    pub fn generate(
        &self,
        topic: &str,
        count: usize,
        assigned_sme: Option<String>,
        p: &Pipeline,
    ) -> Result<Vec<ReviewItem>, PipelineError> {
        let _serial = self.generate_lock.lock().unwrap_or_else(|e| e.into_inner());
        let context = self.context_for(topic, p)?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let stamp = Stamp { seq: self.store.len() as u64, created_at: p.clock.now() };
            let generated = generate_question(topic, &context, p.client.as_ref(), &p.settings, stamp)?;
            let validated = validate_question(&generated.question, &context, p.client.as_ref(), &p.settings)?;
            out.push(self.store.store_item(generated.question, validated.report, assigned_sme.clone())?);
        }
        Ok(out)
    }

    /// Runs the Validator on an externally written question without storing it.
    pub fn validate_external(
        &self,
        question: &GeneratedQuestion,
        p: &Pipeline,
    ) -> Result<ValidationReport, PipelineError> {
        let context = match self.context_for(&question.topic, p) {
            Ok(c) => c,
            Err(PipelineError::NoMaterials) => ContextBundle { topic: question.topic.clone(), chunks: vec![] },
            Err(e) => return Err(e),
        };
        Ok(validate_question(question, &context, p.client.as_ref(), &p.settings)?.report)
    }
}
