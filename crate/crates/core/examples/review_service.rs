// Drive the review HTTP API: upload materials, generate, judge, report.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use codegen::config::{Config, Overrides};
use codegen::review::{serve, AppState};
use codegen::workspace::Workspace;
use serde_json::{json, Value};

fn multipart(field_topic: &str, file_name: &str, body: &[u8]) -> (String, Vec<u8>) {
    let boundary = "codegen-example-boundary";
    let mut out = Vec::new();
    out.extend_from_slice(
        format!("--{boundary}\r\nContent-Disposition: form-data; name=\"topic\"\r\n\r\n{field_topic}\r\n").as_bytes(),
    );
    out.extend_from_slice(
        format!(
            "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{file_name}\"\r\n\
             Content-Type: text/markdown\r\n\r\n"
        )
        .as_bytes(),
    );
    out.extend_from_slice(body);
    out.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    (format!("multipart/form-data; boundary={boundary}"), out)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/e2e");
    let data = tempfile::tempdir()?;
    let overrides = Overrides { data_dir: Some(data.path().to_path_buf()), ..Default::default() };
    let cfg = Config::resolve(Some(&fixtures.join("config.toml")), &overrides)?;
    let tokens = HashMap::from([("token-1".to_string(), "sme-1".to_string())]);
    let state = AppState {
        workspace: Arc::new(Workspace::open(&cfg.data_dir, cfg.embedding.dim)?),
        pipeline: cfg.pipeline()?,
        tokens: Arc::new(tokens),
    };

    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}", listener.local_addr()?);
    rt.spawn(serve(listener, state));

    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let auth = "Bearer token-1";

    let health: Value = agent.get(format!("{base}/healthz")).call()?.body_mut().read_json()?;
    println!("healthz {health}");

    let denied = agent.get(format!("{base}/items")).call()?;
    println!("no token -> {}", denied.status());
    assert_eq!(denied.status(), 401);

    let (ctype, body) = multipart("loops", "loops.md", &std::fs::read(fixtures.join("loops.md"))?);
    let ingested: Value = agent
        .post(format!("{base}/materials"))
        .header("Authorization", auth)
        .header("Content-Type", &ctype)
        .send(&body[..])?
        .body_mut()
        .read_json()?;
    println!("materials {ingested}");

    let items: Vec<Value> = agent
        .post(format!("{base}/generate"))
        .header("Authorization", auth)
        .send_json(json!({"topic": "loops", "count": 3}))?
        .body_mut()
        .read_json()?;
    let id = items[0]["question"]["question_id"].as_str().unwrap_or_default().to_string();
    println!("generated {} items, first {id}", items.len());

    let mut resp = agent
        .post(format!("{base}/items/{id}/judgments"))
        .header("Authorization", auth)
        .send_json(json!({"sme_id": "sme-1", "dimension": "distractor_quality", "verdict": "disagree"}))?;
    println!("disagree without rationale -> {} {}", resp.status(), resp.body_mut().read_to_string()?);
    assert_eq!(resp.status(), 422);

    for dim in ["stem_clarity", "code_validity", "concept_alignment", "correct_answer_validity",
                "distractor_quality", "correct_feedback_quality", "distractor_feedback_quality"] {
        let resp = agent
            .post(format!("{base}/items/{id}/judgments"))
            .header("Authorization", auth)
            .send_json(json!({"sme_id": "sme-1", "dimension": dim, "verdict": "agree"}))?;
        assert_eq!(resp.status(), 200);
    }
    let item: Value = agent.get(format!("{base}/items/{id}")).header("Authorization", auth).call()?.body_mut().read_json()?;
    println!("status {}", item["status"]);
    assert_eq!(item["status"], "fully_judged");

    let report: Value = agent.get(format!("{base}/report")).header("Authorization", auth).call()?.body_mut().read_json()?;
    println!("report totals {}", report["totals"]);
    assert_eq!(report["totals"]["pairs"], 7);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
