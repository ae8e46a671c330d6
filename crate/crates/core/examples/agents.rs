// Generate and validate questions with a scripted chat client that
// replays a recorded transcript, including tool calls.

use std::path::Path;

use chrono::{TimeZone, Utc};
use codegen::agents::{generate_question, validate_question, AgentSettings, ScriptedClient, Stamp};
use codegen::ingestion::{chunk_document, parse_materials};
use codegen::retrieval::{retrieve_context, KnowledgeBase, OfflineEmbedder};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/e2e");
    let doc = parse_materials(&std::fs::read_to_string(fixtures.join("loops.md"))?, "loops", "loops")?;
    let embedder = OfflineEmbedder::default();
    let kb = KnowledgeBase::empty(256)?.with_chunks(chunk_document(&doc), &embedder)?;
    let context = retrieve_context("loops", &kb, &embedder, 4)?;

    let client = ScriptedClient::from_file(&fixtures.join("transcript.json"))?;
    let settings = AgentSettings::default();
    let created_at = Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap();
    for seq in 0..3 {
        let g = generate_question("loops", &context, &client, &settings, Stamp { seq, created_at })?;
        let v = validate_question(&g.question, &context, &client, &settings)?;
        println!("{} {}", g.question.question_id, g.question.stem);
        for t in g.tool_trace.iter().chain(&v.report.tool_trace) {
            println!("    {} -> {}", t.tool, t.result);
        }
        for (dim, entry) in &v.report.dimensions {
            println!("    {:<28} {}", dim.as_str(), entry.classification);
        }
        let ran_code = v.report.tool_trace.iter().any(|t| t.tool == "run_code");
        assert_eq!(ran_code, g.question.code.is_some());
    }
    assert_eq!(client.remaining(), 0);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
