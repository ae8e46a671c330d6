//! Review items, SME judgments, and the persistent store behind the service.

mod service;
mod store;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::agents::{DimensionKey, GeneratedQuestion, ValidationReport};

pub use service::{router, serve, AppState, GenerateRequest, ItemSummary, ServiceError};
pub use store::{Event, ItemFilter, ReviewStore, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Agree,
    Disagree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub judgment_id: String,
    pub question_id: String,
    pub sme_id: String,
    pub dimension: DimensionKey,
    pub verdict: Verdict,
    #[serde(default)]
    pub rationale: Option<String>,
    pub created_at: DateTime<Utc>,
}

/// A judgment as submitted, before validation and identification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentSubmission {
    pub sme_id: String,
    pub dimension: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub rationale: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Pending,
    PartiallyJudged,
    FullyJudged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub question: GeneratedQuestion,
    pub report: ValidationReport,
    #[serde(default)]
    pub assigned_sme: Option<String>,
    /// Current judgments, one per (SME, dimension), in dimension order.
    pub judgments: Vec<JudgmentRecord>,
    pub status: ItemStatus,
}

impl ReviewItem {
    pub fn question_id(&self) -> &str {
        &self.question.question_id
    }

    /// Fully judged once one SME (the assigned one, when set) has judged all
    /// seven dimensions.
    pub fn compute_status(&self) -> ItemStatus {
        if self.judgments.is_empty() {
            return ItemStatus::Pending;
        }
        let complete = |sme: &str| {
            DimensionKey::ALL
                .iter()
                .all(|d| self.judgments.iter().any(|j| j.sme_id == sme && j.dimension == *d))
        };
        let full = match &self.assigned_sme {
            Some(s) => complete(s),
            None => self.judgments.iter().any(|j| complete(&j.sme_id)),
        };
        if full {
            ItemStatus::FullyJudged
        } else {
            ItemStatus::PartiallyJudged
        }
    }
}

/// Source of timestamps; fixed in tests and reproducible runs.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}
