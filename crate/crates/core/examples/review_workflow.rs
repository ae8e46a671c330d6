// Full pipeline into the review store: ingest, generate three questions,
// record SME judgments, and print the quality report.

use std::path::Path;

use codegen::analytics::{build_report, render_table};
use codegen::config::{Config, Overrides};
use codegen::review::{ItemStatus, JudgmentSubmission, Verdict};
use codegen::workspace::{MaterialUpload, Workspace};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/e2e");
    let data = tempfile::tempdir()?;
    let overrides = Overrides { data_dir: Some(data.path().to_path_buf()), ..Default::default() };
    let cfg = Config::resolve(Some(&fixtures.join("config.toml")), &overrides)?;
    let pipeline = cfg.pipeline()?;

    let ws = Workspace::open(&cfg.data_dir, cfg.embedding.dim)?;
    let upload = MaterialUpload {
        doc_id: "loops".into(),
        topic: "loops".into(),
        bytes: std::fs::read(fixtures.join("loops.md"))?,
    };
    ws.ingest(&[upload], pipeline.embedder.as_ref())?;
    let items = ws.generate("loops", 3, Some("sme-1".into()), &pipeline)?;

    let now = pipeline.clock.now();
    for item in &items {
        for (dimension, entry) in &item.report.dimensions {
            // This SME disagrees with every "poor" call the Validator made.
            let disagree = !dimension.is_positive(&entry.classification).unwrap_or(true);
            let sub = JudgmentSubmission {
                sme_id: "sme-1".into(),
                dimension: dimension.as_str().into(),
                verdict: if disagree { Verdict::Disagree } else { Verdict::Agree },
                rationale: disagree.then(|| "Option D is a common off-by-one answer.".into()),
            };
            ws.store.submit_judgment(item.question_id(), sub, now)?;
        }
    }
    assert!(ws.store.snapshot().iter().all(|i| i.status == ItemStatus::FullyJudged));

    let report = build_report(&ws.store.snapshot(), now);
    print!("{}", render_table(&report));
    assert_eq!(report.totals.pairs, 21);
    assert_eq!(report.totals.disagreement_rationales, 1);

    // The log replays to the same state.
    let reopened = Workspace::open(&cfg.data_dir, cfg.embedding.dim)?;
    assert_eq!(reopened.store.snapshot(), ws.store.snapshot());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
