//! Restricted interpreter for a small Python subset.
//!
//! Programs are parsed up front; anything outside the subset is rejected
//! with [`ParseError::Unsupported`]. Execution is deterministic and bounded
//! by [`ResourceLimits`]. Nothing touches the filesystem, network, clock or
//! environment.

mod ast;
mod builtins;
mod interp;
mod lexer;
mod parser;
mod value;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use interp::{BUILTINS, MAX_CALL_DEPTH};
pub use parser::{DICT_METHODS, LIST_METHODS, STR_METHODS};

const STACK_BYTES: usize = 256 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unsupported construct: {construct}")]
    Unsupported { line: usize, construct: String },
}

impl ParseError {
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "SyntaxError",
            ParseError::Unsupported { .. } => "UnsupportedConstruct",
        }
    }

    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Unsupported { line, .. } => *line,
        }
    }
}

/// A parsed program, ready to execute any number of times.
#[derive(Debug, Clone)]
pub struct Program {
    source: String,
    body: Vec<ast::Stmt>,
}

impl Program {
    pub fn source(&self) -> &str {
        &self.source
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResourceLimits {
    pub max_steps: u64,
    pub max_output_bytes: usize,
    pub max_collection_len: usize,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        Self { max_steps: 100_000, max_output_bytes: 65_536, max_collection_len: 10_000 }
    }
}

impl ResourceLimits {
    /// Strings are capped in bytes at the larger of the output and
    /// collection limits.
    pub fn max_string_len(&self) -> usize {
        self.max_output_bytes.max(self.max_collection_len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionStatus {
    Ok,
    RuntimeError,
    LimitExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionError {
    pub kind: String,
    pub message: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: ExecutionStatus,
    pub stdout: String,
    /// Final top-level variables rendered with `repr`; functions excluded.
    pub bindings: BTreeMap<String, String>,
    #[serde(default)]
    pub error: Option<ExecutionError>,
}

fn on_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(STACK_BYTES)
            .spawn_scoped(s, f)
            .expect("spawn sandbox thread")
            .join()
            .expect("sandbox thread panicked")
    })
}

pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let source = source.to_string();
    on_big_stack(move || {
        let body = parser::parse(&source)?;
        Ok(Program { source, body })
    })
}

pub fn execute(program: &Program, limits: &ResourceLimits) -> ExecutionResult {
    let limits = *limits;
    on_big_stack(move || interp::Interp::new(limits).run(&program.body))
}

/// Parses and executes in one step; parse failures become runtime errors.
pub fn run_code(source: &str, limits: &ResourceLimits) -> ExecutionResult {
    match parse_program(source) {
        Ok(p) => execute(&p, limits),
        Err(e) => ExecutionResult {
            status: ExecutionStatus::RuntimeError,
            stdout: String::new(),
            bindings: BTreeMap::new(),
            error: Some(ExecutionError {
                kind: e.kind().to_string(),
                message: e.to_string(),
                line: e.line(),
            }),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str) -> ExecutionResult {
        run_code(src, &ResourceLimits::default())
    }

    #[test]
    fn prints_and_binds() {
        let r = run("x = [1, 2]\nx.append(3)\nprint(x, len(x))\ny = x[1:]\n");
        assert_eq!(r.status, ExecutionStatus::Ok);
        assert_eq!(r.stdout, "[1, 2, 3] 3\n");
        assert_eq!(r.bindings["y"], "[2, 3]");
    }

    #[test]
    fn runtime_error_has_kind_and_line() {
        let r = run("a = 1\nb = a / 0\n");
        assert_eq!(r.status, ExecutionStatus::RuntimeError);
        let e = r.error.unwrap();
        assert_eq!((e.kind.as_str(), e.line), ("ZeroDivisionError", 2));
        assert_eq!(r.bindings["a"], "1");
    }

    #[test]
    fn infinite_loop_hits_step_limit() {
        let r = run("while True:\n    pass\n");
        assert_eq!(r.status, ExecutionStatus::LimitExceeded);
        assert_eq!(r.error.unwrap().kind, "StepLimitExceeded");
    }

    #[test]
    fn deep_recursion_is_a_limit() {
        let r = run("def f(n):\n    return f(n + 1)\nf(0)\n");
        assert_eq!(r.status, ExecutionStatus::LimitExceeded);
        assert_eq!(r.error.unwrap().kind, "RecursionLimitExceeded");
    }

    #[test]
    fn output_is_truncated_at_limit() {
        let limits = ResourceLimits { max_output_bytes: 10, ..Default::default() };
        let r = run_code("for i in range(100):\n    print(i)\n", &limits);
        assert_eq!(r.status, ExecutionStatus::LimitExceeded);
        assert_eq!(r.stdout.len(), 10);
    }

    #[test]
    fn collection_growth_is_bounded() {
        let r = run("x = []\nwhile True:\n    x.append(0)\n");
        assert_eq!(r.status, ExecutionStatus::LimitExceeded);
        assert_eq!(r.error.unwrap().kind, "CollectionLimitExceeded");
        let r = run("s = 'ab' * 100000000\n");
        assert_eq!(r.error.unwrap().kind, "CollectionLimitExceeded");
    }

    #[test]
    fn imports_are_unsupported() {
        let r = run("import os\n");
        assert_eq!(r.error.unwrap().kind, "UnsupportedConstruct");
        assert!(matches!(parse_program("open('x')"), Err(ParseError::Unsupported { .. })));
    }

    #[test]
    fn unbound_local() {
        let r = run("x = 1\ndef f():\n    print(x)\n    x = 2\nf()\n");
        assert_eq!(r.error.unwrap().kind, "UnboundLocalError");
    }

    #[test]
    fn sort_with_key_and_reverse() {
        let r = run("w = ['bb', 'a', 'ccc']\nw.sort(key=len, reverse=True)\nprint(sorted([3, 1, 2]), w)\n");
        assert_eq!(r.stdout, "[1, 2, 3] ['ccc', 'bb', 'a']\n");
    }

    #[test]
    fn mixed_sort_is_type_error() {
        let r = run("sorted([1, 'a'])\n");
        assert_eq!(r.error.unwrap().kind, "TypeError");
    }

    #[test]
    fn loop_sees_appends() {
        let r = run("x = [1]\nfor v in x:\n    if v < 4:\n        x.append(v + 1)\nprint(x)\n");
        assert_eq!(r.stdout, "[1, 2, 3, 4]\n");
    }

    #[test]
    fn blank_line_ends_function_body() {
        let r = run("def f():\n    return 1\n\nx = f()\n");
        assert_eq!(r.bindings["x"], "1");
    }

    #[test]
    fn program_is_reusable() {
        let p = parse_program("print(2 ** 10)").unwrap();
        let a = execute(&p, &ResourceLimits::default());
        let b = execute(&p, &ResourceLimits::default());
        assert_eq!(a, b);
        assert_eq!(a.stdout, "1024\n");
    }
}
