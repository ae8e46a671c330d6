use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use codegen::agents::{parse_question_payload, GeneratedQuestion, Transcript};
use codegen::config::{Config, Overrides};
use codegen::review::{serve, AppState};
use codegen::workspace::Workspace;
use serde_json::{json, Value};

struct Service {
    base: String,
    _rt: tokio::runtime::Runtime,
    _dir: tempfile::TempDir,
}

fn start(tokens: &[(&str, &str)]) -> Service {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/e2e");
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides { data_dir: Some(dir.path().to_path_buf()), ..Default::default() };
    let cfg = Config::resolve(Some(&fixtures.join("config.toml")), &overrides).unwrap();
    let state = AppState {
        workspace: Arc::new(Workspace::open(&cfg.data_dir, cfg.embedding.dim).unwrap()),
        pipeline: cfg.pipeline().unwrap(),
        tokens: Arc::new(tokens.iter().map(|(t, s)| (t.to_string(), s.to_string())).collect::<HashMap<_, _>>()),
    };
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    rt.spawn(serve(listener, state));
    Service { base, _rt: rt, _dir: dir }
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

impl Service {
    fn get(&self, path: &str, token: Option<&str>) -> (u16, Value) {
        let mut req = agent().get(format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = req.call().unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    fn post(&self, path: &str, token: Option<&str>, body: Value) -> (u16, Value) {
        let mut req = agent().post(format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = req.send_json(body).unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    fn upload(&self, token: Option<&str>, parts: &[(&str, Option<&str>, &[u8])]) -> (u16, Value) {
        let boundary = "test-boundary-7f3a";
        let mut body = Vec::new();
        for (name, file, bytes) in parts {
            let disposition = match file {
                Some(f) => format!("form-data; name=\"{name}\"; filename=\"{f}\""),
                None => format!("form-data; name=\"{name}\""),
            };
            body.extend_from_slice(format!("--{boundary}\r\nContent-Disposition: {disposition}\r\n\r\n").as_bytes());
            body.extend_from_slice(bytes);
            body.extend_from_slice(b"\r\n");
        }
        body.extend_from_slice(format!("--{boundary}--\r\n").as_bytes());
        let mut req = agent()
            .post(format!("{}/materials", self.base))
            .header("Content-Type", format!("multipart/form-data; boundary={boundary}"));
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = req.send(&body[..]).unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    fn seed(&self, token: Option<&str>) -> Vec<Value> {
        let materials = std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/e2e/loops.md")).unwrap();
        let (code, _) = self.upload(token, &[("topic", None, b"loops"), ("file", Some("loops.md"), &materials)]);
        assert_eq!(code, 200);
        let (code, items) = self.post("/generate", token, json!({"topic": "loops", "count": 3}));
        assert_eq!(code, 200, "{items}");
        items.as_array().unwrap().clone()
    }
}

fn judgment(sme: &str, dim: &str, verdict: &str, rationale: Option<&str>) -> Value {
    json!({"sme_id": sme, "dimension": dim, "verdict": verdict, "rationale": rationale})
}

#[test]
fn healthz_needs_no_token() {
    let s = start(&[("t1", "sme-1")]);
    assert_eq!(s.get("/healthz", None), (200, json!({"status": "ok"})));
}

#[test]
fn tokens_gate_every_data_endpoint() {
    let s = start(&[("t1", "sme-1")]);
    for path in ["/items", "/report", "/items/q-x"] {
        let (code, body) = s.get(path, None);
        assert_eq!(code, 401, "{path}");
        assert_eq!(body["error"], "Unauthorized");
        assert_eq!(s.get(path, Some("wrong")).0, 401);
    }
    assert_eq!(s.post("/generate", None, json!({"topic": "loops"})).0, 401);
}

#[test]
fn generate_needs_materials() {
    let s = start(&[]);
    let (code, body) = s.post("/generate", None, json!({"topic": "loops", "count": 1}));
    assert_eq!((code, body["error"].as_str()), (409, Some("NoMaterials")));
    let (code, body) = s.post("/generate", None, json!({"topic": "loops", "count": 0}));
    assert_eq!((code, body["error"].as_str()), (422, Some("InvalidRequest")));
    let (code, body) = s.upload(None, &[("topic", None, b"loops")]);
    assert_eq!((code, body["error"].as_str()), (400, Some("NoFiles")));
}

#[test]
fn generated_items_are_assigned_to_the_caller() {
    let s = start(&[("t1", "sme-1"), ("t2", "sme-2")]);
    let items = s.seed(Some("t1"));
    assert!(items.iter().all(|i| i["assigned_sme"] == "sme-1"));
    let id = items[0]["question"]["question_id"].as_str().unwrap();

    // Another SME may not judge it, with or without naming themselves.
    let (code, body) = s.post(&format!("/items/{id}/judgments"), Some("t2"), judgment("sme-2", "stem_clarity", "agree", None));
    assert_eq!((code, body["error"].as_str()), (403, Some("NotAssigned")));
    let (code, _) = s.post(&format!("/items/{id}/judgments"), Some("t2"), judgment("sme-1", "stem_clarity", "agree", None));
    assert_eq!(code, 403);

    let (code, listed) = s.get("/items?sme_id=sme-2", Some("t1"));
    assert_eq!((code, listed), (200, json!([])));
}

#[test]
fn judgment_errors_map_to_statuses() {
    let s = start(&[]);
    let items = s.seed(None);
    let id = items[0]["question"]["question_id"].as_str().unwrap();
    let path = format!("/items/{id}/judgments");

    let (code, body) = s.post("/items/q-missing/judgments", None, judgment("sme-1", "stem_clarity", "agree", None));
    assert_eq!((code, body["error"].as_str()), (404, Some("UnknownQuestion")));
    let (code, body) = s.post(&path, None, judgment("sme-1", "readability", "agree", None));
    assert_eq!((code, body["error"].as_str()), (422, Some("UnknownDimension")));
    let (code, body) = s.post(&path, None, judgment("sme-1", "stem_clarity", "disagree", Some("  ")));
    assert_eq!((code, body["error"].as_str()), (422, Some("MissingRationale")));
    let (code, body) = s.post(&path, None, judgment("", "stem_clarity", "agree", None));
    assert_eq!((code, body["error"].as_str()), (422, Some("MissingSme")));
    let (code, _) = s.get("/items/q-missing", None);
    assert_eq!(code, 404);
}

#[test]
fn judging_every_dimension_completes_the_item() {
    let s = start(&[]);
    let items = s.seed(None);
    let id = items[1]["question"]["question_id"].as_str().unwrap();
    let dims = items[1]["report"]["dimensions"].as_object().unwrap().keys().cloned().collect::<Vec<_>>();
    assert_eq!(dims.len(), 7);
    for (n, d) in dims.iter().enumerate() {
        let (verdict, rationale) = if n == 0 { ("disagree", Some("Ambiguous stem.")) } else { ("agree", None) };
        let (code, item) = s.post(&format!("/items/{id}/judgments"), None, judgment("sme-1", d, verdict, rationale));
        assert_eq!(code, 200, "{item}");
        let want = if n == 6 { "fully_judged" } else { "partially_judged" };
        assert_eq!(item["status"], want);
    }
    // Re-judging replaces rather than adds.
    let (_, item) = s.post(&format!("/items/{id}/judgments"), None, judgment("sme-1", &dims[0], "agree", None));
    assert_eq!(item["judgments"].as_array().unwrap().len(), 7);

    let (_, pending) = s.get("/items?status=pending", None);
    assert_eq!(pending.as_array().unwrap().len(), 2);
    let (_, done) = s.get("/items?status=fully_judged&topic=loops", None);
    assert_eq!(done[0]["question_id"], id);
    assert_eq!(done[0]["judged"], 7);

    let (code, report) = s.get("/report", None);
    assert_eq!(code, 200);
    assert_eq!(report["totals"], json!({"questions": 1, "pairs": 7, "disagreement_rationales": 0}));
}

#[test]
fn stored_question_matches_the_accepted_payload() {
    let s = start(&[]);
    let items = s.seed(None);
    let transcript: Transcript =
        serde_json::from_str(&std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/e2e/transcript.json")).unwrap())
            .unwrap();
    let accepted: Vec<String> = transcript
        .turns
        .iter()
        .filter_map(|t| t.json.as_ref().filter(|j| j.get("stem").is_some()))
        .map(|j| serde_json::to_string(&parse_question_payload(&j.to_string()).unwrap()).unwrap())
        .collect();
    for (item, want) in items.iter().zip(&accepted) {
        let id = item["question"]["question_id"].as_str().unwrap();
        let (_, fetched) = s.get(&format!("/items/{id}"), None);
        let q: GeneratedQuestion = serde_json::from_value(fetched["question"].clone()).unwrap();
        assert_eq!(&serde_json::to_string(&q.payload()).unwrap(), want);
        assert_eq!(fetched["report"], item["report"]);
    }
}

#[test]
fn exhausted_script_is_a_bad_gateway() {
    let s = start(&[]);
    s.seed(None);
    let (code, body) = s.post("/generate", None, json!({"topic": "loops"}));
    assert_eq!((code, body["error"].as_str()), (502, Some("ClientError")));
}
