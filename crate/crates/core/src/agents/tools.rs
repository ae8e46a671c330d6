//! Tool dispatch for agent function calls. Tool failures come back as JSON
//! data so the model can see and react to them.

use serde_json::{json, Value};

use super::ToolDeclaration;
use crate::arith::evaluate_expression;
use crate::sandbox::{run_code, ResourceLimits};

pub const ARITH_EVAL: &str = "arith_eval";
pub const RUN_CODE: &str = "run_code";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ToolError {
    #[error("unknown tool {0:?}")]
    UnknownTool(String),
}

pub fn tool_declarations(names: &[&str]) -> Vec<ToolDeclaration> {
    names
        .iter()
        .filter_map(|n| match *n {
            ARITH_EVAL => Some(ToolDeclaration {
                name: ARITH_EVAL.into(),
                description: "Evaluate an arithmetic expression with + - * / // % ** and parentheses. \
                              Integers are exact; / always yields a real number."
                    .into(),
                parameters: json!({
                    "type": "object",
                    "properties": {"expression": {"type": "string"}},
                    "required": ["expression"],
                    "additionalProperties": false
                }),
            }),
            RUN_CODE => Some(ToolDeclaration {
                name: RUN_CODE.into(),
                description: "Run a short Python program in a restricted sandbox and return its \
                              status, stdout, final top-level variables and error."
                    .into(),
                parameters: json!({
                    "type": "object",
                    "properties": {"source": {"type": "string"}},
                    "required": ["source"],
                    "additionalProperties": false
                }),
            }),
            _ => None,
        })
        .collect()
}

fn string_arg<'a>(args: &'a Value, key: &str) -> Result<&'a str, Value> {
    args.get(key).and_then(Value::as_str).ok_or_else(|| {
        json!({"error": "InvalidArguments", "message": format!("expected a string field \"{key}\"")})
    })
}

pub fn run_tool_call(name: &str, arguments: &Value, limits: &ResourceLimits) -> Result<Value, ToolError> {
    match name {
        ARITH_EVAL => Ok(match string_arg(arguments, "expression") {
            Err(e) => e,
            Ok(expr) => match evaluate_expression(expr) {
                Ok(n) => json!({"value": n.to_string(), "is_exact": n.is_exact()}),
                Err(e) => json!({"error": e.kind()}),
            },
        }),
        RUN_CODE => Ok(match string_arg(arguments, "source") {
            Err(e) => e,
            Ok(src) => serde_json::to_value(run_code(src, limits)).expect("serializable"),
        }),
        other => Err(ToolError::UnknownTool(other.to_string())),
    }
}
