//! Append-only JSON-lines event log with an in-memory fold.
//!
//! Each event is written as one line and synced to disk before the call
//! returns, so a returned `Ok` means the record survives a crash. On open, a
//! trailing partial line (an unacknowledged write cut short) is truncated.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ItemStatus, JudgmentRecord, JudgmentSubmission, ReviewItem, Verdict};
use crate::agents::{check_question, DimensionKey, GeneratedQuestion, ValidationReport, Violation};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("question {0} is already stored")]
    DuplicateQuestion(String),
    #[error("report is for question {report} but the question is {question}")]
    QuestionMismatch { question: String, report: String },
    #[error("invalid item: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidItem(Vec<Violation>),
    #[error("unknown question {0}")]
    UnknownQuestion(String),
    #[error("unknown dimension {0:?}")]
    UnknownDimension(String),
    #[error("a disagree verdict needs a rationale")]
    MissingRationale,
    #[error("sme_id must not be empty")]
    MissingSme,
    #[error("question {question} is assigned to another SME")]
    NotAssigned { question: String },
    #[error("storage failure: {0}")]
    Storage(#[from] std::io::Error),
    #[error("event log {path} is corrupt at line {line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    ItemStored {
        question: GeneratedQuestion,
        report: ValidationReport,
        #[serde(default)]
        assigned_sme: Option<String>,
    },
    JudgmentSubmitted {
        record: JudgmentRecord,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFilter {
    pub status: Option<ItemStatus>,
    pub topic: Option<String>,
    pub sme_id: Option<String>,
}

impl ItemFilter {
    fn matches(&self, item: &ReviewItem) -> bool {
        self.status.is_none_or(|s| item.status == s)
            && self.topic.as_ref().is_none_or(|t| item.question.topic == *t)
            && self.sme_id.as_ref().is_none_or(|s| {
                item.assigned_sme.as_ref() == Some(s) || item.judgments.iter().any(|j| j.sme_id == *s)
            })
    }
}

#[derive(Debug, Default)]
struct Fold {
    items: Vec<ReviewItem>,
    index: HashMap<String, usize>,
    events: usize,
}

impl Fold {
    fn apply(&mut self, event: Event) -> Result<(), String> {
        match event {
            Event::ItemStored { question, report, assigned_sme } => {
                let id = question.question_id.clone();
                if self.index.contains_key(&id) {
                    return Err(format!("question {id} stored twice"));
                }
                self.index.insert(id, self.items.len());
                self.items.push(ReviewItem {
                    question,
                    report,
                    assigned_sme,
                    judgments: Vec::new(),
                    status: ItemStatus::Pending,
                });
            }
            Event::JudgmentSubmitted { record } => {
                let &i = self
                    .index
                    .get(&record.question_id)
                    .ok_or_else(|| format!("judgment for unknown question {}", record.question_id))?;
                let item = &mut self.items[i];
                item.judgments
                    .retain(|j| !(j.sme_id == record.sme_id && j.dimension == record.dimension));
                item.judgments.push(record);
                item.judgments
                    .sort_by(|a, b| a.dimension.cmp(&b.dimension).then_with(|| a.sme_id.cmp(&b.sme_id)));
                item.status = item.compute_status();
            }
        }
        self.events += 1;
        Ok(())
    }
}

struct Inner {
    file: File,
    len: u64,
    fold: Fold,
}

pub struct ReviewStore {
    path: PathBuf,
    inner: Mutex<Inner>,
}

impl std::fmt::Debug for ReviewStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReviewStore").field("path", &self.path).finish_non_exhaustive()
    }
}

fn check_report(report: &ValidationReport) -> Vec<Violation> {
    let mut out = Vec::new();
    for d in DimensionKey::ALL {
        let path = format!("report.dimensions.{d}");
        match report.dimensions.get(&d) {
            None => out.push(Violation { path, reason: "missing dimension".into() }),
            Some(e) => {
                if d.is_positive(&e.classification).is_none() {
                    out.push(Violation { path: format!("{path}.classification"), reason: "wrong vocabulary".into() });
                }
                if e.rationale.trim().is_empty() {
                    out.push(Violation { path: format!("{path}.rationale"), reason: "must not be empty".into() });
                }
            }
        }
    }
    out
}

impl ReviewStore {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let mut fold = Fold::default();
        let mut good = 0usize;
        let mut line_no = 0;
        while good < bytes.len() {
            line_no += 1;
            let Some(nl) = bytes[good..].iter().position(|&b| b == b'\n') else {
                break;
            };
            let line = &bytes[good..good + nl];
            let corrupt = |message: String| StoreError::Corrupt {
                path: path.display().to_string(),
                line: line_no,
                message,
            };
            let event: Event = match serde_json::from_slice(line) {
                Ok(e) => e,
                // Torn final record: never acknowledged.
                Err(_) if good + nl + 1 == bytes.len() => break,
                Err(e) => return Err(corrupt(e.to_string())),
            };
            fold.apply(event).map_err(corrupt)?;
            good += nl + 1;
        }
        if good < bytes.len() {
            file.set_len(good as u64)?;
            file.sync_all()?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            inner: Mutex::new(Inner { file, len: good as u64, fold }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn append(inner: &mut Inner, event: &Event) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(event).expect("events serialize");
        line.push(b'\n');
        let written = inner.file.write_all(&line).and_then(|_| inner.file.sync_data());
        if let Err(e) = written {
            let _ = inner.file.set_len(inner.len);
            return Err(e.into());
        }
        inner.len += line.len() as u64;
        Ok(())
    }

    pub fn store_item(
        &self,
        question: GeneratedQuestion,
        report: ValidationReport,
        assigned_sme: Option<String>,
    ) -> Result<ReviewItem, StoreError> {
        if question.question_id != report.question_id {
            return Err(StoreError::QuestionMismatch {
                question: question.question_id,
                report: report.question_id,
            });
        }
        let mut violations = check_question(&question).err().unwrap_or_default();
        violations.extend(check_report(&report));
        if !violations.is_empty() {
            return Err(StoreError::InvalidItem(violations));
        }
        let mut inner = self.lock();
        let id = question.question_id.clone();
        if inner.fold.index.contains_key(&id) {
            return Err(StoreError::DuplicateQuestion(id));
        }
        let event = Event::ItemStored { question, report, assigned_sme };
        Self::append(&mut inner, &event)?;
        inner.fold.apply(event).expect("validated before write");
        let i = inner.fold.index[&id];
        Ok(inner.fold.items[i].clone())
    }

    pub fn submit_judgment(
        &self,
        question_id: &str,
        sub: JudgmentSubmission,
        now: DateTime<Utc>,
    ) -> Result<ReviewItem, StoreError> {
        let dimension =
            DimensionKey::parse(&sub.dimension).ok_or_else(|| StoreError::UnknownDimension(sub.dimension.clone()))?;
        let sme_id = sub.sme_id.trim().to_string();
        if sme_id.is_empty() {
            return Err(StoreError::MissingSme);
        }
        let rationale = sub.rationale.filter(|r| !r.trim().is_empty());
        if sub.verdict == Verdict::Disagree && rationale.is_none() {
            return Err(StoreError::MissingRationale);
        }
        let mut inner = self.lock();
        let &i = inner
            .fold
            .index
            .get(question_id)
            .ok_or_else(|| StoreError::UnknownQuestion(question_id.to_string()))?;
        if let Some(assigned) = &inner.fold.items[i].assigned_sme {
            if *assigned != sme_id {
                return Err(StoreError::NotAssigned { question: question_id.to_string() });
            }
        }
        let record = JudgmentRecord {
            judgment_id: format!("j-{:06}", inner.fold.events),
            question_id: question_id.to_string(),
            sme_id,
            dimension,
            verdict: sub.verdict,
            rationale,
            created_at: now,
        };
        let event = Event::JudgmentSubmitted { record };
        Self::append(&mut inner, &event)?;
        inner.fold.apply(event).expect("validated before write");
        Ok(inner.fold.items[i].clone())
    }

    pub fn get(&self, question_id: &str) -> Option<ReviewItem> {
        let inner = self.lock();
        inner.fold.index.get(question_id).map(|&i| inner.fold.items[i].clone())
    }

    /// Items matching `filter`, ordered by creation time then id.
    pub fn list(&self, filter: &ItemFilter) -> Vec<ReviewItem> {
        let inner = self.lock();
        let mut items: Vec<ReviewItem> =
            inner.fold.items.iter().filter(|i| filter.matches(i)).cloned().collect();
        items.sort_by(|a, b| {
            a.question
                .created_at
                .cmp(&b.question.created_at)
                .then_with(|| a.question.question_id.cmp(&b.question.question_id))
        });
        items
    }

    pub fn snapshot(&self) -> Vec<ReviewItem> {
        self.lock().fold.items.clone()
    }

    pub fn len(&self) -> usize {
        self.lock().fold.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of events in the audit log.
    pub fn event_count(&self) -> usize {
        self.lock().fold.events
    }

    /// Every event in the log, superseded judgments included.
    pub fn audit_log(&self) -> Result<Vec<Event>, StoreError> {
        let _guard = self.lock();
        let text = std::fs::read_to_string(&self.path)?;
        text.lines()
            .enumerate()
            .map(|(n, l)| {
                serde_json::from_str(l).map_err(|e| StoreError::Corrupt {
                    path: self.path.display().to_string(),
                    line: n + 1,
                    message: e.to_string(),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::agents::{AnswerOption, DimensionEntry, Label};

    fn at() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2026-03-01T12:00:00Z").unwrap().into()
    }

    fn item(id: &str) -> (GeneratedQuestion, ValidationReport) {
        let options = Label::ALL
            .iter()
            .map(|l| AnswerOption { label: *l, text: format!("opt {l}"), feedback: "because".into() })
            .collect();
        let q = GeneratedQuestion {
            question_id: id.into(),
            topic: "loops".into(),
            stem: "What prints?".into(),
            code: Some("print(1)".into()),
            options,
            correct_label: Label::A,
            created_at: at(),
        };
        let dimensions: BTreeMap<_, _> = DimensionKey::ALL
            .iter()
            .map(|d| (*d, DimensionEntry { classification: d.vocabulary()[0].into(), rationale: "ok".into() }))
            .collect();
        let r = ValidationReport { question_id: id.into(), dimensions, tool_trace: vec![], inconsistent: false };
        (q, r)
    }

    fn judge(sme: &str, d: DimensionKey, verdict: Verdict, rationale: Option<&str>) -> JudgmentSubmission {
        JudgmentSubmission {
            sme_id: sme.into(),
            dimension: d.as_str().into(),
            verdict,
            rationale: rationale.map(String::from),
        }
    }

    #[test]
    fn store_and_fetch_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReviewStore::open(&dir.path().join("events.jsonl")).unwrap();
        let (q, r) = item("q1");
        let stored = store.store_item(q.clone(), r.clone(), None).unwrap();
        assert_eq!(stored.status, ItemStatus::Pending);
        let fetched = store.get("q1").unwrap();
        assert_eq!(serde_json::to_string(&fetched.question).unwrap(), serde_json::to_string(&q).unwrap());
        assert!(matches!(store.store_item(q, r, None), Err(StoreError::DuplicateQuestion(_))));
    }

    #[test]
    fn mismatched_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReviewStore::open(&dir.path().join("e.jsonl")).unwrap();
        let (q, _) = item("q1");
        let (_, r) = item("q2");
        assert!(matches!(store.store_item(q, r, None), Err(StoreError::QuestionMismatch { .. })));
    }

    #[test]
    fn judgments_drive_status() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReviewStore::open(&dir.path().join("e.jsonl")).unwrap();
        let (q, r) = item("q1");
        store.store_item(q, r, Some("sme1".into())).unwrap();
        let err = store
            .submit_judgment("q1", judge("sme1", DimensionKey::DistractorQuality, Verdict::Disagree, Some(" ")), at())
            .unwrap_err();
        assert!(matches!(err, StoreError::MissingRationale));
        let it = store
            .submit_judgment("q1", judge("sme1", DimensionKey::DistractorQuality, Verdict::Disagree, Some("weak")), at())
            .unwrap();
        assert_eq!(it.status, ItemStatus::PartiallyJudged);
        assert!(matches!(
            store.submit_judgment("q1", judge("sme2", DimensionKey::StemClarity, Verdict::Agree, None), at()),
            Err(StoreError::NotAssigned { .. })
        ));
        for d in DimensionKey::ALL {
            store.submit_judgment("q1", judge("sme1", d, Verdict::Agree, None), at()).unwrap();
        }
        let it = store.get("q1").unwrap();
        assert_eq!(it.status, ItemStatus::FullyJudged);
        assert_eq!(it.judgments.len(), 7);
        assert_eq!(store.event_count(), 9);
        assert_eq!(store.audit_log().unwrap().len(), 9);
    }

    #[test]
    fn unknown_dimension_and_question() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReviewStore::open(&dir.path().join("e.jsonl")).unwrap();
        let mut sub = judge("s", DimensionKey::StemClarity, Verdict::Agree, None);
        assert!(matches!(store.submit_judgment("nope", sub.clone(), at()), Err(StoreError::UnknownQuestion(_))));
        sub.dimension = "fun".into();
        assert!(matches!(store.submit_judgment("nope", sub, at()), Err(StoreError::UnknownDimension(_))));
    }

    #[test]
    fn reopen_replays_and_drops_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        {
            let store = ReviewStore::open(&path).unwrap();
            let (q, r) = item("q1");
            store.store_item(q, r, None).unwrap();
            store.submit_judgment("q1", judge("s", DimensionKey::StemClarity, Verdict::Agree, None), at()).unwrap();
        }
        let before = std::fs::metadata(&path).unwrap().len();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"event\":\"judgment_subm").unwrap();
        drop(f);
        let store = ReviewStore::open(&path).unwrap();
        assert_eq!(store.event_count(), 2);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), before);
        assert_eq!(store.get("q1").unwrap().judgments.len(), 1);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        std::fs::write(&path, "garbage\n{}\n").unwrap();
        assert!(matches!(ReviewStore::open(&path), Err(StoreError::Corrupt { line: 1, .. })));
    }

    #[test]
    fn list_filters_and_orders() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReviewStore::open(&dir.path().join("e.jsonl")).unwrap();
        assert!(store.list(&ItemFilter::default()).is_empty());
        for id in ["q2", "q1"] {
            let (q, r) = item(id);
            store.store_item(q, r, None).unwrap();
        }
        let all: Vec<_> = store.list(&ItemFilter::default()).iter().map(|i| i.question_id().to_string()).collect();
        assert_eq!(all, ["q1", "q2"]);
        for d in DimensionKey::ALL {
            store.submit_judgment("q1", judge("s", d, Verdict::Agree, None), at()).unwrap();
        }
        let pending = store.list(&ItemFilter { status: Some(ItemStatus::Pending), ..Default::default() });
        assert_eq!(pending.len(), 1);
        assert_eq!(pending[0].question_id(), "q2");
    }
}
