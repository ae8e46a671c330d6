//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 1 on a domain error, 2 on a usage error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::agents::{GeneratedQuestion, ValidationReport};
use crate::analytics::{build_report, render_table};
use crate::arith::evaluate_expression;
use crate::config::{Config, ConfigError, Overrides};
use crate::review::{AppState, ReviewItem};
use crate::sandbox::run_code;
use crate::workspace::{IngestSummary, MaterialUpload, PipelineError, Workspace};

#[derive(Debug, Parser)]
#[command(name = "codegen", version, about = "Generate, validate and review code-comprehension questions")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "CODEGEN_CONFIG")]
    pub config: Option<PathBuf>,
    /// Print machine-readable JSON on standard output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Directory holding the knowledge base and review log.
    #[arg(long, global = true, env = "CODEGEN_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: OverrideArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OverrideArgs {
    #[arg(long, global = true)]
    pub generator_model: Option<String>,
    #[arg(long, global = true)]
    pub validator_model: Option<String>,
    #[arg(long, global = true)]
    pub chat_endpoint: Option<String>,
    #[arg(long, global = true)]
    pub embed_endpoint: Option<String>,
    /// Number of chunks retrieved per topic.
    #[arg(long = "k", global = true)]
    pub retrieval_k: Option<usize>,
    #[arg(long, global = true)]
    pub max_tool_rounds: Option<usize>,
    #[arg(long, global = true)]
    pub max_steps: Option<u64>,
    #[arg(long, global = true)]
    pub max_output_bytes: Option<usize>,
    #[arg(long, global = true)]
    pub max_collection_len: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, chunk, embed and index course materials.
    Ingest {
        /// Topic for every file; defaults to each file's stem.
        #[arg(long)]
        topic: Option<String>,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Generate, validate and store questions for a topic.
    Generate {
        #[arg(long)]
        topic: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// SME the new items are assigned to.
        #[arg(long)]
        sme: Option<String>,
    },
    /// Run the Validator on a question stored as JSON.
    Validate {
        #[arg(long)]
        question: PathBuf,
    },
    /// Start the review HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Print the quality report.
    Report,
    /// Invoke the agent tools directly.
    #[command(subcommand)]
    Tool(ToolCommand),
}

#[derive(Debug, Subcommand)]
pub enum ToolCommand {
    /// Evaluate an arithmetic expression.
    Arith { expression: String },
    /// Execute a program in the sandbox and print the result as JSON.
    Run { file: PathBuf },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Domain(String),
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

impl OverrideArgs {
    fn to_overrides(&self, data_dir: Option<PathBuf>, bind: Option<String>) -> Overrides {
        Overrides {
            data_dir,
            generator_model: self.generator_model.clone(),
            validator_model: self.validator_model.clone(),
            chat_endpoint: self.chat_endpoint.clone(),
            embed_endpoint: self.embed_endpoint.clone(),
            retrieval_k: self.retrieval_k,
            max_tool_rounds: self.max_tool_rounds,
            max_steps: self.max_steps,
            max_output_bytes: self.max_output_bytes,
            max_collection_len: self.max_collection_len,
            bind,
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    writeln!(out, "{text}").map_err(|e| CliError::Io { path: "<stdout>".into(), message: e.to_string() })
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io { path: "<stdout>".into(), message: e.to_string() })
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    if let Command::Tool(tool) = &cli.command {
        return run_tool(tool, cli, out);
    }
    let bind = match &cli.command {
        Command::Serve { bind } => bind.clone(),
        _ => None,
    };
    let cfg = Config::resolve(cli.config.as_deref(), &cli.overrides.to_overrides(cli.data_dir.clone(), bind))?;
    match &cli.command {
        Command::Ingest { topic, files } => ingest(&cfg, topic.as_deref(), files, cli.json, out),
        Command::Generate { topic, count, sme } => generate(&cfg, topic, *count, sme.clone(), cli.json, out),
        Command::Validate { question } => validate(&cfg, question, cli.json, out),
        Command::Serve { .. } => serve(&cfg, out),
        Command::Report => {
            let ws = Workspace::open(&cfg.data_dir, cfg.embedding.dim)?;
            let report = build_report(&ws.store.snapshot(), cfg.clock().now());
            if cli.json {
                emit(out, &report)
            } else {
                say(out, &render_table(&report))
            }
        }
        Command::Tool(_) => unreachable!("handled above"),
    }
}

fn run_tool(tool: &ToolCommand, cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match tool {
        ToolCommand::Arith { expression } => {
            let value = evaluate_expression(expression).map_err(|e| CliError::Domain(format!("{}: {e}", e.kind())))?;
            if cli.json {
                emit(out, &json!({"value": value.to_string(), "is_exact": value.is_exact()}))
            } else {
                say(out, &format!("{value}\n"))
            }
        }
        ToolCommand::Run { file } => {
            let cfg = Config::resolve(cli.config.as_deref(), &cli.overrides.to_overrides(None, None))?;
            let bytes = read_file(file)?;
            let source = String::from_utf8(bytes)
                .map_err(|_| CliError::Domain(format!("{}: not valid UTF-8", file.display())))?;
            emit(out, &run_code(&source, &cfg.limits()))
        }
    }
}

fn doc_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "material".into())
}

fn ingest(cfg: &Config, topic: Option<&str>, files: &[PathBuf], json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let mut uploads = Vec::with_capacity(files.len());
    for f in files {
        let id = doc_id(f);
        uploads.push(MaterialUpload { topic: topic.map_or_else(|| id.clone(), str::to_string), doc_id: id, bytes: read_file(f)? });
    }
    let ws = Workspace::open(&cfg.data_dir, cfg.embedding.dim)?;
    let summary: IngestSummary = ws.ingest(&uploads, cfg.embedder().as_ref())?;
    if json {
        emit(out, &summary)
    } else {
        say(
            out,
            &format!(
                "ingested {} documents: {} new chunks, {} total\n",
                summary.documents, summary.chunks_added, summary.total_chunks
            ),
        )
    }
}

fn generate(
    cfg: &Config,
    topic: &str,
    count: usize,
    sme: Option<String>,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if count == 0 {
        return Err(CliError::Domain("count must be at least 1".into()));
    }
    let ws = Workspace::open(&cfg.data_dir, cfg.embedding.dim)?;
    let items: Vec<ReviewItem> = ws.generate(topic, count, sme, &cfg.pipeline()?)?;
    if json {
        return emit(out, &items);
    }
    let mut text = String::new();
    for i in &items {
        text.push_str(i.question_id());
        if i.report.inconsistent {
            text.push_str("  inconsistent");
        }
        text.push('\n');
    }
    say(out, &text)
}

fn validate(cfg: &Config, path: &Path, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let bytes = read_file(path)?;
    let question: GeneratedQuestion = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Domain(format!("{}: not a question: {e}", path.display())))?;
    let ws = Workspace::open(&cfg.data_dir, cfg.embedding.dim)?;
    let report: ValidationReport = ws.validate_external(&question, &cfg.pipeline()?)?;
    if json {
        return emit(out, &report);
    }
    let mut text = String::new();
    for (dim, entry) in &report.dimensions {
        text.push_str(&format!("{:<28} {}\n", dim.as_str(), entry.classification));
    }
    if report.inconsistent {
        text.push_str("warning: classifications are inconsistent with the feedback\n");
    }
    say(out, &text)
}

fn serve(cfg: &Config, out: &mut dyn Write) -> Result<(), CliError> {
    let ws = Workspace::open(&cfg.data_dir, cfg.embedding.dim)?;
    let state = AppState {
        workspace: Arc::new(ws),
        pipeline: cfg.pipeline()?,
        tokens: Arc::new(cfg.sme_tokens()?),
    };
    let io = |e: std::io::Error| CliError::Io { path: cfg.service.bind.clone(), message: e.to_string() };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(io)?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&cfg.service.bind).await.map_err(io)?;
        let addr = listener.local_addr().map_err(io)?;
        say(out, &format!("listening on {addr}\n"))?;
        out.flush().map_err(io)?;
        crate::review::serve(listener, state).await.map_err(io)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("codegen").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn arith_prints_value() {
        assert_eq!(call(&["tool", "arith", "2 + 3 * (4**2) - 8 / 2"]), (0, "46.0\n".into(), String::new()));
        assert_eq!(call(&["tool", "arith", "7 // 2"]).1, "3\n");
    }

    #[test]
    fn arith_error_is_domain_error() {
        let (code, _, err) = call(&["tool", "arith", "1/0"]);
        assert_eq!(code, 1);
        assert!(err.contains("DivisionByZero"), "{err}");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["generate"]).0, 2);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn missing_program_file() {
        let (code, _, err) = call(&["tool", "run", "/nonexistent/missing.py"]);
        assert_eq!(code, 1);
        assert!(err.contains("missing.py"), "{err}");
    }

    #[test]
    fn empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap();
        let (code, out, _) = call(&["--json", "--data-dir", d, "report"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["totals"], json!({"questions": 0, "pairs": 0, "disagreement_rationales": 0}));
    }
}
