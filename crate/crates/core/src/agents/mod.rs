//! Generator and Validator agents over a pluggable chat client.

mod client;
mod orchestrate;
mod prompts;
mod schema;
mod tools;

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use client::{
    AgentRole, ChatClient, ChatMessage, ChatRequest, ChatResponse, ClientError, RemoteChatClient,
    ScriptedClient, ToolCall, ToolDeclaration, Transcript, TranscriptTurn,
};
pub use orchestrate::{
    generate_question, lint_inconsistent, question_id_for, validate_question, AgentSettings,
    Generated, Stamp, Validated, DEFAULT_MAX_REPAIRS, DEFAULT_MAX_TOOL_ROUNDS,
};
pub use prompts::{PromptError, PromptSet};
pub use schema::{
    check_question, parse_agent_output, parse_question_payload, parse_report_payload,
    question_schema_json, report_schema_json, AgentOutput, SchemaId, Violation,
};
pub use tools::{run_tool_call, tool_declarations, ToolError, ARITH_EVAL, RUN_CODE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
    C,
    D,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::A, Label::B, Label::C, Label::D];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::A => "A",
            Label::B => "B",
            Label::C => "C",
            Label::D => "D",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        Label::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub label: Label,
    pub text: String,
    pub feedback: String,
}

/// The part of a question the Generator writes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionPayload {
    pub stem: String,
    pub code: Option<String>,
    pub options: Vec<AnswerOption>,
    pub correct_label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub question_id: String,
    pub topic: String,
    pub stem: String,
    pub code: Option<String>,
    pub options: Vec<AnswerOption>,
    pub correct_label: Label,
    pub created_at: DateTime<Utc>,
}

impl GeneratedQuestion {
    pub fn payload(&self) -> QuestionPayload {
        QuestionPayload {
            stem: self.stem.clone(),
            code: self.code.clone(),
            options: self.options.clone(),
            correct_label: self.correct_label,
        }
    }

    pub fn option(&self, label: Label) -> Option<&AnswerOption> {
        self.options.iter().find(|o| o.label == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionKey {
    StemClarity,
    CodeValidity,
    ConceptAlignment,
    CorrectAnswerValidity,
    DistractorQuality,
    CorrectFeedbackQuality,
    DistractorFeedbackQuality,
}

impl DimensionKey {
    pub const ALL: [DimensionKey; 7] = [
        DimensionKey::StemClarity,
        DimensionKey::CodeValidity,
        DimensionKey::ConceptAlignment,
        DimensionKey::CorrectAnswerValidity,
        DimensionKey::DistractorQuality,
        DimensionKey::CorrectFeedbackQuality,
        DimensionKey::DistractorFeedbackQuality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DimensionKey::StemClarity => "stem_clarity",
            DimensionKey::CodeValidity => "code_validity",
            DimensionKey::ConceptAlignment => "concept_alignment",
            DimensionKey::CorrectAnswerValidity => "correct_answer_validity",
            DimensionKey::DistractorQuality => "distractor_quality",
            DimensionKey::CorrectFeedbackQuality => "correct_feedback_quality",
            DimensionKey::DistractorFeedbackQuality => "distractor_feedback_quality",
        }
    }

    pub fn parse(s: &str) -> Option<DimensionKey> {
        DimensionKey::ALL.into_iter().find(|d| d.as_str() == s)
    }

    /// Classification words, positive first.
    pub fn vocabulary(self) -> [&'static str; 2] {
        match self {
            DimensionKey::StemClarity
            | DimensionKey::CodeValidity
            | DimensionKey::ConceptAlignment
            | DimensionKey::CorrectAnswerValidity => ["yes", "no"],
            _ => ["good", "poor"],
        }
    }

    pub fn is_positive(self, classification: &str) -> Option<bool> {
        let [pos, neg] = self.vocabulary();
        match classification {
            c if c == pos => Some(true),
            c if c == neg => Some(false),
            _ => None,
        }
    }
}

impl fmt::Display for DimensionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionEntry {
    pub classification: String,
    pub rationale: String,
}

/// The part of a report the Validator writes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportPayload {
    pub dimensions: BTreeMap<DimensionKey, DimensionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolTraceEntry {
    pub tool: String,
    pub arguments: serde_json::Value,
    pub result: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub question_id: String,
    pub dimensions: BTreeMap<DimensionKey, DimensionEntry>,
    pub tool_trace: Vec<ToolTraceEntry>,
    /// Set when a rationale contradicts its own classification; for human
    /// attention only.
    pub inconsistent: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("output violates the schema: {}", join_violations(.0))]
    SchemaViolation(Vec<Violation>),
    #[error("exceeded {0} tool rounds")]
    ToolLoopExceeded(usize),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("generated code does not parse: {0}")]
    InvalidCode(crate::sandbox::ParseError),
    #[error("the question has code but run_code was never called")]
    MissingToolUse,
    #[error("retrieved context is empty")]
    EmptyContext,
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
