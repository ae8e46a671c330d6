//! Strict validation of agent outputs against the shipped JSON schemas.
//!
//! Checks run over the raw JSON value so every problem is reported with its
//! field path, then the value is converted into the typed payload.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{
    DimensionEntry, DimensionKey, GeneratedQuestion, Label, QuestionPayload,
    ReportPayload,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

impl Violation {
    fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { path: path.into(), reason: reason.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaId {
    GeneratedQuestion,
    ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentOutput {
    Question(QuestionPayload),
    Report(ReportPayload),
}

pub fn question_schema_json() -> &'static str {
    include_str!("../../schemas/generated_question.schema.json")
}

pub fn report_schema_json() -> &'static str {
    include_str!("../../schemas/validation_report.schema.json")
}

pub fn parse_agent_output(raw: &str, schema: SchemaId) -> Result<AgentOutput, Vec<Violation>> {
    match schema {
        SchemaId::GeneratedQuestion => parse_question_payload(raw).map(AgentOutput::Question),
        SchemaId::ValidationReport => parse_report_payload(raw).map(AgentOutput::Report),
    }
}

/// Accepts a bare JSON document, or one wrapped in a single markdown fence.
fn decode(raw: &str) -> Result<Value, Vec<Violation>> {
    let mut text = raw.trim();
    if let Some(rest) = text.strip_prefix("```") {
        if let Some(body) = rest.strip_suffix("```") {
            text = body.strip_prefix("json").unwrap_or(body).trim();
        }
    }
    serde_json::from_str(text).map_err(|e| vec![Violation::new("$", format!("invalid JSON: {e}"))])
}

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

fn object<'a>(v: &'a Value, path: &str, out: &mut Vec<Violation>) -> Option<&'a Map<String, Value>> {
    match v.as_object() {
        Some(m) => Some(m),
        None => {
            out.push(Violation::new(if path.is_empty() { "$" } else { path }, "expected an object"));
            None
        }
    }
}

/// Reports unknown and missing keys.
fn keys(m: &Map<String, Value>, path: &str, allowed: &[&str], out: &mut Vec<Violation>) {
    for k in m.keys() {
        if !allowed.contains(&k.as_str()) {
            out.push(Violation::new(join(path, k), "unknown field"));
        }
    }
    for k in allowed {
        if !m.contains_key(*k) {
            out.push(Violation::new(join(path, k), "missing required field"));
        }
    }
}

fn text<'a>(m: &'a Map<String, Value>, path: &str, key: &str, out: &mut Vec<Violation>) -> Option<&'a str> {
    let p = join(path, key);
    match m.get(key)? {
        Value::String(s) if s.trim().is_empty() => {
            out.push(Violation::new(p, "must not be empty"));
            None
        }
        Value::String(s) => Some(s),
        _ => {
            out.push(Violation::new(p, "expected a string"));
            None
        }
    }
}

fn check_question_value(v: &Value) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(root) = object(v, "", &mut out) else { return out };
    keys(root, "", &["stem", "code", "options", "correct_label"], &mut out);
    text(root, "", "stem", &mut out);
    match root.get("code") {
        None | Some(Value::Null) => {}
        Some(Value::String(s)) if s.trim().is_empty() => {
            out.push(Violation::new("code", "must be null or non-empty"))
        }
        Some(Value::String(_)) => {}
        Some(_) => out.push(Violation::new("code", "expected a string or null")),
    }
    if let Some(opts) = root.get("options") {
        match opts.as_array() {
            None => out.push(Violation::new("options", "expected an array")),
            Some(items) if items.len() != 4 => out.push(Violation::new(
                "options",
                format!("expected exactly 4 options, found {}", items.len()),
            )),
            Some(items) => {
                let mut texts = BTreeSet::new();
                for (i, item) in items.iter().enumerate() {
                    let path = format!("options[{i}]");
                    let Some(o) = object(item, &path, &mut out) else { continue };
                    keys(o, &path, &["label", "text", "feedback"], &mut out);
                    let want = Label::ALL[i].as_str();
                    match o.get("label") {
                        None => {}
                        Some(Value::String(l)) if l == want => {}
                        Some(other) => out.push(Violation::new(
                            join(&path, "label"),
                            format!("expected \"{want}\", found {other}"),
                        )),
                    }
                    if let Some(t) = text(o, &path, "text", &mut out) {
                        if !texts.insert(t.trim().to_string()) {
                            out.push(Violation::new(join(&path, "text"), "duplicate option text"));
                        }
                    }
                    text(o, &path, "feedback", &mut out);
                }
            }
        }
    }
    match root.get("correct_label") {
        None => {}
        Some(Value::String(l)) if Label::parse(l).is_some() => {}
        Some(other) => out.push(Violation::new(
            "correct_label",
            format!("expected one of A, B, C, D; found {other}"),
        )),
    }
    out
}

pub fn parse_question_payload(raw: &str) -> Result<QuestionPayload, Vec<Violation>> {
    let v = decode(raw)?;
    let violations = check_question_value(&v);
    if !violations.is_empty() {
        return Err(violations);
    }
    serde_json::from_value(v).map_err(|e| vec![Violation::new("$", e.to_string())])
}

fn check_report_value(v: &Value) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(root) = object(v, "", &mut out) else { return out };
    keys(root, "", &["dimensions"], &mut out);
    let Some(dims) = root.get("dimensions") else { return out };
    let Some(dims) = object(dims, "dimensions", &mut out) else { return out };
    for k in dims.keys() {
        if DimensionKey::parse(k).is_none() {
            out.push(Violation::new(format!("dimensions.{k}"), "unknown dimension"));
        }
    }
    for d in DimensionKey::ALL {
        let path = format!("dimensions.{d}");
        let Some(entry) = dims.get(d.as_str()) else {
            out.push(Violation::new(path, "missing dimension"));
            continue;
        };
        let Some(e) = object(entry, &path, &mut out) else { continue };
        keys(e, &path, &["classification", "rationale"], &mut out);
        let [pos, neg] = d.vocabulary();
        match e.get("classification") {
            None => {}
            Some(Value::String(c)) if c == pos || c == neg => {}
            Some(other) => out.push(Violation::new(
                join(&path, "classification"),
                format!("expected one of {pos}, {neg}; found {other}"),
            )),
        }
        text(e, &path, "rationale", &mut out);
    }
    out
}

pub fn parse_report_payload(raw: &str) -> Result<ReportPayload, Vec<Violation>> {
    let v = decode(raw)?;
    let violations = check_report_value(&v);
    if !violations.is_empty() {
        return Err(violations);
    }
    let dims = v["dimensions"].as_object().expect("checked");
    let dimensions: BTreeMap<DimensionKey, DimensionEntry> = dims
        .iter()
        .map(|(k, e)| {
            (
                DimensionKey::parse(k).expect("checked"),
                DimensionEntry {
                    classification: e["classification"].as_str().expect("checked").to_string(),
                    rationale: e["rationale"].as_str().expect("checked").to_string(),
                },
            )
        })
        .collect();
    Ok(ReportPayload { dimensions })
}

/// Checks a complete question against the same rules as the Generator's
/// payload, plus its identifying fields.
pub fn check_question(q: &GeneratedQuestion) -> Result<(), Vec<Violation>> {
    let mut out = check_question_value(&serde_json::to_value(q.payload()).expect("serializable"));
    if q.question_id.trim().is_empty() {
        out.push(Violation::new("question_id", "must not be empty"));
    }
    if q.topic.trim().is_empty() {
        out.push(Violation::new("topic", "must not be empty"));
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
