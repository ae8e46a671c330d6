mod common;

use std::collections::{BTreeSet, HashSet};

use chrono::{TimeZone, Utc};
use codegen::agents::{
    generate_question, parse_report_payload, AgentError, AgentRole, AgentSettings, DimensionKey, ScriptedClient,
    Stamp, ToolCall, Transcript, TranscriptTurn,
};
use codegen::analytics::{agreement_stats, build_report, classify_pair, dimension_rates, JudgedPair, PairCategory};
use codegen::arith::evaluate_expression;
use codegen::ingestion::{chunk_document, parse_materials};
use codegen::retrieval::{ContextBundle, EmbeddingVector, RetrievedChunk, VectorIndex};
use codegen::review::{JudgmentSubmission, ReviewStore, Verdict};
use codegen::sandbox::{run_code, ExecutionStatus, ResourceLimits};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::json;

// ---------------------------------------------------------------------------
// Ingestion

#[derive(Debug, Clone)]
enum Piece {
    Objective(String, Vec<String>),
    Question(String),
    Code(Vec<String>, bool),
    Prose(String),
}

fn piece() -> impl Strategy<Value = Piece> {
    let words = "[a-z]{1,8}( [a-z]{1,8}){0,5}";
    prop_oneof![
        (words, proptest::collection::vec(words, 0..3)).prop_map(|(h, rest)| Piece::Objective(h, rest)),
        words.prop_map(Piece::Question),
        (proptest::collection::vec("(x|y) = [0-9]{1,2}|print\\((x|y)\\)|    pass", 0..4), any::<bool>())
            .prop_map(|(lines, doc)| Piece::Code(lines, doc)),
        words.prop_map(Piece::Prose),
    ]
}

/// Renders pieces and records which line numbers are fence delimiters.
fn render_materials(pieces: &[Piece]) -> (String, HashSet<usize>) {
    let mut lines: Vec<String> = Vec::new();
    let mut fences = HashSet::new();
    for p in pieces {
        match p {
            Piece::Objective(h, rest) => {
                lines.push(format!("OBJECTIVE: {h}"));
                lines.extend(rest.iter().cloned());
            }
            Piece::Question(stem) => {
                lines.push(format!("QUESTION: {stem}?"));
                lines.extend(["A) 1", "B) 2", "C) 3", "D) 4", "ANSWER: A", "FEEDBACK: one"].map(String::from));
            }
            Piece::Code(body, docstring) => {
                lines.push("```python".into());
                fences.insert(lines.len());
                if *docstring {
                    // A fence marker inside a docstring is ordinary text.
                    lines.extend(["\"\"\"", "Example:", "```", "\"\"\""].map(String::from));
                }
                lines.extend(body.iter().cloned());
                lines.push("```".into());
                fences.insert(lines.len());
            }
            Piece::Prose(t) => lines.push(t.clone()),
        }
        lines.push(String::new());
    }
    (lines.join("\n"), fences)
}

proptest! {
    #[test]
    fn chunks_point_back_at_their_source(pieces in proptest::collection::vec(piece(), 1..8)) {
        let (raw, fences) = render_materials(&pieces);
        prop_assume!(!raw.trim().is_empty());
        let doc = parse_materials(&raw, "doc", "topic").unwrap();
        let chunks = chunk_document(&doc);
        let lines: Vec<&str> = raw.lines().collect();
        for c in &chunks {
            let want: Vec<&str> = (c.source.start_line..=c.source.end_line)
                .filter(|n| !fences.contains(n))
                .map(|n| lines[n - 1])
                .collect();
            let joined = want.join("\n");
            prop_assert_eq!(joined.trim_end(), c.text.as_str());
        }
        prop_assert!(chunks.len() <= doc.blocks.len());
        let block_kinds: BTreeSet<_> = doc.blocks.iter().map(|b| b.kind.as_str()).collect();
        prop_assert!(chunks.iter().all(|c| block_kinds.contains(c.kind.as_str())));

        let again = parse_materials(&raw, "doc", "topic").unwrap();
        prop_assert_eq!(chunk_document(&again), chunks);
    }
}

// ---------------------------------------------------------------------------
// Retrieval

fn vectors(n: std::ops::Range<usize>, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, dim), n)
}

fn index_of(vs: &[Vec<f64>]) -> VectorIndex {
    let items = vs.iter().enumerate().map(|(i, v)| (format!("e{i}"), EmbeddingVector::new(v.clone()).unwrap())).collect();
    VectorIndex::build(items, 8).unwrap()
}

proptest! {
    #[test]
    fn neighbours_are_sorted_and_non_negative(vs in vectors(1..60, 8), q in proptest::collection::vec(-10.0f64..10.0, 8), k in 1usize..70) {
        let got = index_of(&vs).query_knn(&EmbeddingVector::new(q).unwrap(), k).unwrap();
        prop_assert_eq!(got.len(), k.min(vs.len()));
        prop_assert!(got.iter().all(|n| n.squared_distance >= 0.0));
        prop_assert!(got.windows(2).all(|w| w[0].squared_distance <= w[1].squared_distance));
    }

    #[test]
    fn adding_an_entry_keeps_surviving_order(
        vs in vectors(1..40, 8),
        extra in proptest::collection::vec(-10.0f64..10.0, 8),
        q in proptest::collection::vec(-10.0f64..10.0, 8),
        k in 1usize..12,
    ) {
        let index = index_of(&vs);
        let qv = EmbeddingVector::new(q).unwrap();
        let before: Vec<String> = index.query_knn(&qv, k).unwrap().into_iter().map(|n| n.chunk_id).collect();
        let grown = index.with_entries(vec![("new".into(), EmbeddingVector::new(extra).unwrap())]).unwrap();
        let after: Vec<String> = grown.query_knn(&qv, k).unwrap().into_iter().map(|n| n.chunk_id).collect();
        let survivors: Vec<&String> = after.iter().filter(|id| before.contains(id)).collect();
        let expected: Vec<&String> = before.iter().filter(|id| after.contains(id)).collect();
        prop_assert_eq!(survivors, expected);
    }
}

// ---------------------------------------------------------------------------
// Arithmetic

proptest! {
    #[test]
    fn redundant_parentheses_change_nothing(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let tree = common::random_expr(&mut rng, 4);
        let plain = common::render(&tree, &mut rng);
        let a = evaluate_expression(&plain).map(|n| n.to_string()).map_err(|e| e.kind());
        prop_assert_eq!(evaluate_expression(&format!("(({plain}))")).map(|n| n.to_string()).map_err(|e| e.kind()), a.clone());
        prop_assert_eq!(evaluate_expression(&format!("0 + ({plain})")).map(|n| n.to_string()).map_err(|e| e.kind()),
            a.map(|s| if s == "-0.0" { "0.0".to_string() } else { s }));
    }

    #[test]
    fn subtraction_is_left_and_power_right_associative(a in -100i64..=100, b in -100i64..=100, c in -100i64..=100, x in 1i64..=5, y in 0i64..=2, z in 0i64..=2) {
        let e = |s: String| evaluate_expression(&s).unwrap().to_string();
        prop_assert_eq!(e(format!("{a} - {b} - {c}")), e(format!("({a} - {b}) - {c}")));
        prop_assert_eq!(e(format!("{x} ** {y} ** {z}")), e(format!("{x} ** ({y} ** {z})")));
        prop_assert_eq!(e(format!("{x} ^ {y} ^ {z}")), e(format!("{x} ** ({y} ** {z})")));
    }
}

// ---------------------------------------------------------------------------
// Sandbox

fn program() -> impl Strategy<Value = String> {
    let stmt = prop_oneof![
        (0i64..20).prop_map(|v| format!("x = x + {v}")),
        (1i64..5).prop_map(|v| format!("x = x - {v}")),
        Just("items.append(x)".to_string()),
        Just("print(x, len(items))".to_string()),
        (0i64..30).prop_map(|v| format!("while x < {v}:\n    x = x + 1")),
        (0i64..5).prop_map(|v| format!("while x != {v}:\n    x = x + 2")),
        (0i64..50).prop_map(|v| format!("for i in range({v}):\n    items.append(i)")),
        Just("s = str(items)".to_string()),
    ];
    proptest::collection::vec(stmt, 0..8).prop_map(|body| format!("x = 0\nitems = []\n{}\n", body.join("\n")))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn execution_halts_and_repeats(src in program(), steps in 1u64..3000) {
        let limits = ResourceLimits { max_steps: steps, max_output_bytes: 4096, max_collection_len: 500 };
        let first = run_code(&src, &limits);
        prop_assert_eq!(&run_code(&src, &limits), &first);
        if first.status == ExecutionStatus::LimitExceeded {
            let kind = first.error.as_ref().unwrap().kind.as_str();
            prop_assert!(["StepLimitExceeded", "OutputLimitExceeded", "CollectionLimitExceeded"].contains(&kind), "{}", kind);
        }
    }
}

// ---------------------------------------------------------------------------
// Agents

fn context() -> ContextBundle {
    let doc = parse_materials("OBJECTIVE: count with while loops\n", "doc", "loops").unwrap();
    let chunks = chunk_document(&doc).into_iter().map(|chunk| RetrievedChunk { chunk, squared_distance: 0.0 }).collect();
    ContextBundle { topic: "loops".into(), chunks }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn tool_rounds_are_bounded(cap in 1usize..6, calls in 0usize..10) {
        let mut turns: Vec<TranscriptTurn> = (0..calls)
            .map(|i| TranscriptTurn {
                role: AgentRole::Generator,
                text: None,
                json: None,
                tool_calls: vec![ToolCall { id: format!("c{i}"), name: "arith_eval".into(), arguments: json!({"expression": "1+1"}) }],
            })
            .collect();
        let question = common::question("unused", "loops").payload();
        turns.push(TranscriptTurn { role: AgentRole::Generator, text: None, json: Some(serde_json::to_value(question).unwrap()), tool_calls: vec![] });
        let client = ScriptedClient::new(Transcript { turns });
        let settings = AgentSettings { max_tool_rounds: cap, ..AgentSettings::default() };
        let stamp = Stamp { seq: 0, created_at: Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap() };
        match generate_question("loops", &context(), &client, &settings, stamp) {
            Ok(g) => {
                prop_assert!(calls <= cap);
                prop_assert_eq!(g.tool_trace.len(), calls);
            }
            Err(AgentError::ToolLoopExceeded(n)) => {
                prop_assert!(calls > cap);
                prop_assert_eq!(n, cap);
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn accepted_reports_cover_every_dimension(picks in proptest::collection::vec((0usize..3, "[a-z ]{0,6}"), 7)) {
        let mut dims = serde_json::Map::new();
        for (d, (pick, rationale)) in DimensionKey::ALL.iter().zip(&picks) {
            let [pos, neg] = d.vocabulary();
            let classification = [pos, neg, "maybe"][*pick];
            dims.insert(d.as_str().into(), json!({"classification": classification, "rationale": rationale}));
        }
        if let Ok(r) = parse_report_payload(&json!({"dimensions": dims}).to_string()) {
            prop_assert_eq!(r.dimensions.len(), 7);
            for (d, e) in &r.dimensions {
                prop_assert!(d.is_positive(&e.classification).is_some());
                prop_assert!(!e.rationale.trim().is_empty());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Review store

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn state_is_a_fold_over_the_log(ops in proptest::collection::vec((0usize..3, 0usize..7, any::<bool>(), 0usize..3), 1..25)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let store = ReviewStore::open(&path).unwrap();
        let ids: Vec<String> = (0..3).map(|i| format!("q-{i:016x}")).collect();
        for id in &ids {
            store.store_item(common::question(id, "loops"), common::report_with(id, |_| true), None).unwrap();
        }
        let now = Utc.with_ymd_and_hms(2026, 1, 2, 0, 0, 0).unwrap();
        let mut last_len = store.event_count();
        for (item, dim, agree, sme) in ops {
            let sub = JudgmentSubmission {
                sme_id: format!("sme-{sme}"),
                dimension: DimensionKey::ALL[dim].as_str().into(),
                verdict: if agree { Verdict::Agree } else { Verdict::Disagree },
                rationale: (!agree).then(|| "why".to_string()),
            };
            store.submit_judgment(&ids[item], sub, now).unwrap();
            let log = store.audit_log().unwrap();
            prop_assert!(log.len() > last_len);
            last_len = log.len();
        }
        let replayed = ReviewStore::open(&path).unwrap();
        prop_assert_eq!(replayed.snapshot(), store.snapshot());
        prop_assert_eq!(replayed.event_count(), store.event_count());
        let report = build_report(&store.snapshot(), now);
        prop_assert_eq!(build_report(&replayed.snapshot(), now), report);
    }
}

// ---------------------------------------------------------------------------
// Analytics

fn category() -> impl Strategy<Value = PairCategory> {
    prop_oneof![Just(PairCategory::TP), Just(PairCategory::FP), Just(PairCategory::TN), Just(PairCategory::FN)]
}

proptest! {
    #[test]
    fn rates_partition_the_pairs(cats in proptest::collection::vec(category(), 1..400)) {
        let r = dimension_rates(DimensionKey::DistractorQuality, &cats);
        let c = r.counts;
        prop_assert_eq!(c.tp + c.fp + c.tn + c.fn_, r.n_pairs);
        let sum = r.success_rate + r.failure_rate + r.safeguarding_rate + r.inefficiency_rate;
        prop_assert!((sum - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn agreement_is_success_plus_safeguarding(pairs in proptest::collection::vec((0usize..4, 0usize..7, category()), 1..300)) {
        let pairs: Vec<JudgedPair> = pairs
            .into_iter()
            .map(|(s, d, category)| JudgedPair { sme_id: format!("sme-{s}"), dimension: DimensionKey::ALL[d], category })
            .collect();
        for summary in agreement_stats(&pairs) {
            for (sme, rate) in &summary.per_sme_rates {
                let own: Vec<PairCategory> = pairs
                    .iter()
                    .filter(|p| &p.sme_id == sme && p.dimension == summary.dimension)
                    .map(|p| p.category)
                    .collect();
                let r = dimension_rates(summary.dimension, &own);
                prop_assert!((rate - (r.success_rate + r.safeguarding_rate)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn classification_covers_all_four_rows() {
    for d in DimensionKey::ALL {
        let [pos, neg] = d.vocabulary();
        assert_eq!(classify_pair(pos, d, Verdict::Agree), Ok(PairCategory::TP));
        assert_eq!(classify_pair(pos, d, Verdict::Disagree), Ok(PairCategory::FP));
        assert_eq!(classify_pair(neg, d, Verdict::Agree), Ok(PairCategory::TN));
        assert_eq!(classify_pair(neg, d, Verdict::Disagree), Ok(PairCategory::FN));
    }
}

#[test]
fn study_fixture_agreement_is_reproducible() {
    let a = build_report(&common::study_fixture(&mut StdRng::seed_from_u64(288)), Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap());
    let b = build_report(&common::study_fixture(&mut StdRng::seed_from_u64(288)), Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap());
    assert_eq!(a, b);
    for s in &a.agreement {
        assert_eq!(s.per_sme_rates.len(), 6);
    }
}
