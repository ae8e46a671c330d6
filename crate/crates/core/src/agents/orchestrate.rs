use chrono::{DateTime, Utc};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::client::{AgentRole, ChatClient, ChatMessage, ChatRequest, ChatResponse};
use super::prompts::{render, PromptSet};
use super::schema::{check_question, parse_question_payload, parse_report_payload, Violation};
use super::tools::{run_tool_call, tool_declarations, ARITH_EVAL, RUN_CODE};
use super::{
    AgentError, DimensionEntry, DimensionKey, GeneratedQuestion, ToolTraceEntry, ValidationReport,
};
use crate::retrieval::ContextBundle;
use crate::sandbox::{parse_program, ResourceLimits};

pub const DEFAULT_MAX_TOOL_ROUNDS: usize = 8;
pub const DEFAULT_MAX_REPAIRS: u32 = 2;

#[derive(Debug, Clone)]
pub struct AgentSettings {
    pub generator_model: String,
    pub validator_model: String,
    pub max_tool_rounds: usize,
    pub max_repairs: u32,
    pub limits: ResourceLimits,
    pub prompts: PromptSet,
}

impl Default for AgentSettings {
    fn default() -> Self {
        Self {
            generator_model: "gpt-4.1".into(),
            validator_model: "gpt-5-mini".into(),
            max_tool_rounds: DEFAULT_MAX_TOOL_ROUNDS,
            max_repairs: DEFAULT_MAX_REPAIRS,
            limits: ResourceLimits::default(),
            prompts: PromptSet::default(),
        }
    }
}

/// Identity inputs for a new question.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stamp {
    pub seq: u64,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub question: GeneratedQuestion,
    pub tool_trace: Vec<ToolTraceEntry>,
    pub retry_count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub report: ValidationReport,
    pub retry_count: u32,
}

pub fn question_id_for(topic: &str, seq: u64, stem: &str) -> String {
    let mut h = Sha256::new();
    h.update(topic.as_bytes());
    h.update([0]);
    h.update(seq.to_be_bytes());
    h.update([0]);
    h.update(stem.as_bytes());
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("q-{hex}")
}

fn render_context(ctx: &ContextBundle) -> String {
    ctx.chunks
        .iter()
        .map(|r| {
            let kind = serde_json::to_value(r.chunk.kind).ok();
            let kind = kind.as_ref().and_then(Value::as_str).unwrap_or("other");
            format!("[{kind} {}]\n{}", r.chunk.chunk_id, r.chunk.text.trim_end())
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

enum Rejection {
    Schema(Vec<Violation>),
    NeedsTool,
    Fatal(AgentError),
}

struct Outcome<T> {
    value: T,
    trace: Vec<ToolTraceEntry>,
    repairs: u32,
}

struct Conversation<'a> {
    client: &'a dyn ChatClient,
    settings: &'a AgentSettings,
    role: AgentRole,
    model: String,
    system: String,
    declared: &'a [&'a str],
}

impl Conversation<'_> {
    fn run<T>(
        &self,
        user: String,
        mut accept: impl FnMut(&str, &[ToolTraceEntry]) -> Result<T, Rejection>,
    ) -> Result<Outcome<T>, AgentError> {
        let mut request = ChatRequest {
            role: self.role,
            model: self.model.clone(),
            system: self.system.clone(),
            messages: vec![ChatMessage::User { content: user }],
            tools: tool_declarations(self.declared),
        };
        let mut trace = Vec::new();
        let mut rounds = 0;
        let mut repairs = 0;
        loop {
            match self.client.complete(&request)? {
                ChatResponse::ToolCalls(calls) => {
                    rounds += 1;
                    if rounds > self.settings.max_tool_rounds {
                        return Err(AgentError::ToolLoopExceeded(self.settings.max_tool_rounds));
                    }
                    let calls: Vec<_> = calls
                        .into_iter()
                        .enumerate()
                        .map(|(i, mut c)| {
                            if c.id.is_empty() {
                                c.id = format!("call_{rounds}_{i}");
                            }
                            c
                        })
                        .collect();
                    request.messages.push(ChatMessage::Assistant { content: None, tool_calls: calls.clone() });
                    for call in calls {
                        let result = if self.declared.contains(&call.name.as_str()) {
                            run_tool_call(&call.name, &call.arguments, &self.settings.limits)
                                .unwrap_or_else(|_| json!({"error": "UnknownTool"}))
                        } else {
                            json!({"error": "ToolNotAvailable"})
                        };
                        request.messages.push(ChatMessage::Tool {
                            tool_call_id: call.id.clone(),
                            content: result.to_string(),
                        });
                        trace.push(ToolTraceEntry { tool: call.name, arguments: call.arguments, result });
                    }
                }
                ChatResponse::Text(text) => {
                    let rejection = match accept(&text, &trace) {
                        Ok(value) => return Ok(Outcome { value, trace, repairs }),
                        Err(Rejection::Fatal(e)) => return Err(e),
                        Err(r) => r,
                    };
                    if repairs >= self.settings.max_repairs {
                        return Err(match rejection {
                            Rejection::Schema(v) => AgentError::SchemaViolation(v),
                            _ => AgentError::MissingToolUse,
                        });
                    }
                    repairs += 1;
                    let prompts = &self.settings.prompts;
                    let follow_up = match rejection {
                        Rejection::Schema(v) => {
                            let list = v.iter().map(|x| format!("- {x}")).collect::<Vec<_>>().join("\n");
                            render("repair", &prompts.repair, &[("violations", &list)])?
                        }
                        _ => render("tool_reminder", &prompts.tool_reminder, &[])?,
                    };
                    request.messages.push(ChatMessage::Assistant { content: Some(text), tool_calls: vec![] });
                    request.messages.push(ChatMessage::User { content: follow_up });
                }
            }
        }
    }
}

pub fn generate_question(
    topic: &str,
    context: &ContextBundle,
    client: &dyn ChatClient,
    settings: &AgentSettings,
    stamp: Stamp,
) -> Result<Generated, AgentError> {
    if context.is_empty() {
        return Err(AgentError::EmptyContext);
    }
    let p = &settings.prompts;
    let schema = super::schema::question_schema_json().trim_end();
    let conv = Conversation {
        client,
        settings,
        role: AgentRole::Generator,
        model: settings.generator_model.clone(),
        system: render("generator.system", &p.generator_system, &[("schema", schema)])?,
        declared: &[ARITH_EVAL],
    };
    let ctx = render_context(context);
    let user = render("generator.user", &p.generator_user, &[("topic", topic), ("context", &ctx)])?;
    let out = conv.run(user, |text, _| {
        let payload = parse_question_payload(text).map_err(Rejection::Schema)?;
        if let Some(code) = &payload.code {
            parse_program(code).map_err(|e| Rejection::Fatal(AgentError::InvalidCode(e)))?;
        }
        Ok(payload)
    })?;
    let payload = out.value;
    Ok(Generated {
        question: GeneratedQuestion {
            question_id: question_id_for(topic, stamp.seq, &payload.stem),
            topic: topic.to_string(),
            stem: payload.stem,
            code: payload.code,
            options: payload.options,
            correct_label: payload.correct_label,
            created_at: stamp.created_at,
        },
        tool_trace: out.trace,
        retry_count: out.repairs,
    })
}

pub fn validate_question(
    q: &GeneratedQuestion,
    context: &ContextBundle,
    client: &dyn ChatClient,
    settings: &AgentSettings,
) -> Result<Validated, AgentError> {
    check_question(q).map_err(AgentError::SchemaViolation)?;
    let p = &settings.prompts;
    let schema = super::schema::report_schema_json().trim_end();
    let conv = Conversation {
        client,
        settings,
        role: AgentRole::Validator,
        model: settings.validator_model.clone(),
        system: render("validator.system", &p.validator_system, &[("schema", schema)])?,
        declared: &[ARITH_EVAL, RUN_CODE],
    };
    let ctx = render_context(context);
    let question = serde_json::to_string_pretty(&q.payload()).expect("serializable");
    let user = render(
        "validator.user",
        &p.validator_user,
        &[("topic", &q.topic), ("context", &ctx), ("question", &question)],
    )?;
    let has_code = q.code.is_some();
    let out = conv.run(user, |text, trace| {
        let payload = parse_report_payload(text).map_err(Rejection::Schema)?;
        if !has_code && payload.dimensions[&DimensionKey::CodeValidity].classification != "yes" {
            return Err(Rejection::Schema(vec![Violation {
                path: "dimensions.code_validity.classification".into(),
                reason: "must be \"yes\" when the question has no code".into(),
            }]));
        }
        if has_code && !trace.iter().any(|t| t.tool == RUN_CODE) {
            return Err(Rejection::NeedsTool);
        }
        Ok(payload)
    })?;
    let dimensions = out.value.dimensions;
    let inconsistent = lint_inconsistent(q, &dimensions, &out.trace);
    Ok(Validated {
        report: ValidationReport {
            question_id: q.question_id.clone(),
            dimensions,
            tool_trace: out.trace,
            inconsistent,
        },
        retry_count: out.repairs,
    })
}

/// True when the correct-answer rationale quotes an executed output equal to
/// the designated answer's text while classifying the answer as invalid.
pub fn lint_inconsistent(
    q: &GeneratedQuestion,
    dimensions: &std::collections::BTreeMap<DimensionKey, DimensionEntry>,
    trace: &[ToolTraceEntry],
) -> bool {
    let Some(entry) = dimensions.get(&DimensionKey::CorrectAnswerValidity) else { return false };
    if entry.classification != "no" {
        return false;
    }
    let Some(answer) = q.option(q.correct_label) else { return false };
    let answer = answer.text.trim();
    trace
        .iter()
        .filter(|t| t.tool == RUN_CODE)
        .filter_map(|t| t.result.get("stdout").and_then(Value::as_str))
        .map(str::trim)
        .any(|out| !out.is_empty() && out == answer && entry.rationale.contains(out))
}
