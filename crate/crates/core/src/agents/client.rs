use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::http::{post_json, HttpFailure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Generator,
    Validator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub name: String,
    pub arguments: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum ChatMessage {
    User {
        content: String,
    },
    Assistant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        content: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        tool_calls: Vec<ToolCall>,
    },
    Tool {
        tool_call_id: String,
        content: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDeclaration {
    pub name: String,
    pub description: String,
    pub parameters: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub role: AgentRole,
    pub model: String,
    pub system: String,
    pub messages: Vec<ChatMessage>,
    pub tools: Vec<ToolDeclaration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatResponse {
    Text(String),
    ToolCalls(Vec<ToolCall>),
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("chat provider request failed: {0}")]
    Transport(#[from] HttpFailure),
    #[error("chat provider returned an unexpected body: {0}")]
    MalformedResponse(String),
    #[error("scripted transcript is exhausted")]
    ScriptExhausted,
    #[error("scripted turn {turn} expects the {expected:?} agent but the {actual:?} agent asked")]
    ScriptMismatch { turn: usize, expected: AgentRole, actual: AgentRole },
    #[error("cannot load transcript: {0}")]
    Transcript(String),
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError>;
}

/// Client for an OpenAI-style chat-completions endpoint.
#[derive(Debug, Clone)]
pub struct RemoteChatClient {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_retries: u32,
}

impl RemoteChatClient {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        Self { endpoint: endpoint.into(), api_key, timeout: Duration::from_secs(120), max_retries: 2 }
    }

    fn body(request: &ChatRequest) -> Value {
        let mut messages = vec![json!({"role": "system", "content": request.system})];
        for m in &request.messages {
            messages.push(match m {
                ChatMessage::User { content } => json!({"role": "user", "content": content}),
                ChatMessage::Assistant { content, tool_calls } => {
                    let mut msg = json!({"role": "assistant", "content": content});
                    if !tool_calls.is_empty() {
                        msg["tool_calls"] = tool_calls
                            .iter()
                            .map(|c| {
                                json!({
                                    "id": c.id,
                                    "type": "function",
                                    "function": {"name": c.name, "arguments": c.arguments.to_string()},
                                })
                            })
                            .collect();
                    }
                    msg
                }
                ChatMessage::Tool { tool_call_id, content } => {
                    json!({"role": "tool", "tool_call_id": tool_call_id, "content": content})
                }
            });
        }
        let mut body = json!({"model": request.model, "messages": messages});
        if !request.tools.is_empty() {
            body["tools"] = request
                .tools
                .iter()
                .map(|t| {
                    json!({
                        "type": "function",
                        "function": {"name": t.name, "description": t.description, "parameters": t.parameters},
                    })
                })
                .collect();
        }
        body
    }

    fn decode(body: &Value) -> Result<ChatResponse, ClientError> {
        let msg = body
            .pointer("/choices/0/message")
            .ok_or_else(|| ClientError::MalformedResponse("missing choices[0].message".into()))?;
        if let Some(calls) = msg.get("tool_calls").and_then(Value::as_array) {
            if !calls.is_empty() {
                let mut out = Vec::with_capacity(calls.len());
                for c in calls {
                    let name = c
                        .pointer("/function/name")
                        .and_then(Value::as_str)
                        .ok_or_else(|| ClientError::MalformedResponse("tool call without a name".into()))?;
                    let args = c.pointer("/function/arguments");
                    // Arguments arrive as a JSON string; anything unparsable is
                    // passed through as a string so the tool reports it.
                    let arguments = match args {
                        Some(Value::String(s)) => serde_json::from_str(s).unwrap_or(Value::String(s.clone())),
                        Some(v) => v.clone(),
                        None => Value::Null,
                    };
                    out.push(ToolCall {
                        id: c.get("id").and_then(Value::as_str).unwrap_or_default().to_string(),
                        name: name.to_string(),
                        arguments,
                    });
                }
                return Ok(ChatResponse::ToolCalls(out));
            }
        }
        match msg.get("content") {
            Some(Value::String(s)) => Ok(ChatResponse::Text(s.clone())),
            _ => Err(ClientError::MalformedResponse("message has neither content nor tool calls".into())),
        }
    }
}

impl ChatClient for RemoteChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError> {
        let body = Self::body(request);
        let mut attempt = 0;
        loop {
            match post_json(&self.endpoint, self.api_key.as_deref(), &body, self.timeout) {
                Ok(v) => return Self::decode(&v),
                Err(e) if e.retryable() && attempt < self.max_retries => {
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(500 * u64::from(attempt)));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub role: AgentRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Convenience for structured replies; serialized compactly as text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub turns: Vec<TranscriptTurn>,
}

/// Replays a recorded transcript, one turn per request, in order.
#[derive(Debug)]
pub struct ScriptedClient {
    turns: Mutex<VecDeque<(usize, TranscriptTurn)>>,
}

impl ScriptedClient {
    pub fn new(transcript: Transcript) -> Self {
        Self { turns: Mutex::new(transcript.turns.into_iter().enumerate().collect()) }
    }

    pub fn from_json(text: &str) -> Result<Self, ClientError> {
        let t: Transcript = serde_json::from_str(text).map_err(|e| ClientError::Transcript(e.to_string()))?;
        Ok(Self::new(t))
    }

    pub fn from_file(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClientError::Transcript(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn remaining(&self) -> usize {
        self.turns.lock().expect("transcript lock").len()
    }
}

impl ChatClient for ScriptedClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError> {
        let mut turns = self.turns.lock().expect("transcript lock");
        let (index, turn) = turns.front().cloned().ok_or(ClientError::ScriptExhausted)?;
        if turn.role != request.role {
            return Err(ClientError::ScriptMismatch { turn: index, expected: turn.role, actual: request.role });
        }
        turns.pop_front();
        if !turn.tool_calls.is_empty() {
            return Ok(ChatResponse::ToolCalls(turn.tool_calls));
        }
        match (turn.text, turn.json) {
            (Some(t), _) => Ok(ChatResponse::Text(t)),
            (None, Some(v)) => Ok(ChatResponse::Text(v.to_string())),
            (None, None) => Ok(ChatResponse::Text(String::new())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(role: AgentRole) -> ChatRequest {
        ChatRequest { role, model: "m".into(), system: "s".into(), messages: vec![], tools: vec![] }
    }

    #[test]
    fn scripted_client_replays_in_order() {
        let c = ScriptedClient::from_json(
            r#"{"turns":[{"role":"generator","json":{"a":1}},{"role":"validator","text":"hi"}]}"#,
        )
        .unwrap();
        assert!(matches!(
            c.complete(&request(AgentRole::Validator)),
            Err(ClientError::ScriptMismatch { turn: 0, .. })
        ));
        assert_eq!(c.complete(&request(AgentRole::Generator)).unwrap(), ChatResponse::Text("{\"a\":1}".into()));
        assert_eq!(c.complete(&request(AgentRole::Validator)).unwrap(), ChatResponse::Text("hi".into()));
        assert!(matches!(c.complete(&request(AgentRole::Validator)), Err(ClientError::ScriptExhausted)));
    }

    #[test]
    fn remote_body_uses_function_calling_shape() {
        let mut r = request(AgentRole::Generator);
        r.messages.push(ChatMessage::Assistant {
            content: None,
            tool_calls: vec![ToolCall { id: "c1".into(), name: "arith_eval".into(), arguments: json!({"expression": "1+1"}) }],
        });
        r.messages.push(ChatMessage::Tool { tool_call_id: "c1".into(), content: "{\"value\":\"2\"}".into() });
        let body = RemoteChatClient::body(&r);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["tool_calls"][0]["function"]["arguments"], "{\"expression\":\"1+1\"}");
        assert_eq!(body["messages"][2]["tool_call_id"], "c1");
    }

    #[test]
    fn remote_decode_parses_tool_calls() {
        let body = json!({"choices": [{"message": {"content": null, "tool_calls": [
            {"id": "x", "type": "function", "function": {"name": "run_code", "arguments": "{\"source\":\"print(1)\"}"}}
        ]}}]});
        let ChatResponse::ToolCalls(calls) = RemoteChatClient::decode(&body).unwrap() else { panic!() };
        assert_eq!(calls[0].arguments, json!({"source": "print(1)"}));
        let text = json!({"choices": [{"message": {"content": "done"}}]});
        assert_eq!(RemoteChatClient::decode(&text).unwrap(), ChatResponse::Text("done".into()));
    }
}
