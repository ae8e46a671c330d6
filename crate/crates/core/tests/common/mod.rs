//! Independent oracles and fixture builders shared by the integration
//! tests. Nothing here calls into the library's evaluators or indexes.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use codegen::agents::{AnswerOption, DimensionEntry, DimensionKey, GeneratedQuestion, Label, ValidationReport};
use codegen::analytics::PairCategory;
use codegen::review::{ItemStatus, JudgmentRecord, ReviewItem, Verdict};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// Arithmetic: random expression trees and a shunting-yard evaluator.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
}

#[derive(Debug, Clone)]
pub enum Expr {
    Lit(u32),
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
}

fn prec_of(e: &Expr) -> u8 {
    match e {
        Expr::Lit(_) => 5,
        Expr::Neg(_) => 3,
        Expr::Bin(op, ..) => op_prec(*op),
    }
}

fn op_prec(op: Op) -> u8 {
    match op {
        Op::Add | Op::Sub => 1,
        Op::Mul | Op::Div | Op::FloorDiv | Op::Mod => 2,
        Op::Pow => 4,
    }
}

/// Exponents are small literals so magnitudes stay well inside f64 range
/// at depth 6.
pub fn random_expr(rng: &mut StdRng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return Expr::Lit(rng.gen_range(0..=100));
    }
    if rng.gen_bool(0.12) {
        return Expr::Neg(Box::new(random_expr(rng, depth - 1)));
    }
    let op = *[Op::Add, Op::Sub, Op::Mul, Op::Div, Op::FloorDiv, Op::Mod, Op::Pow].choose(rng).unwrap();
    let left = random_expr(rng, depth - 1);
    let right = if op == Op::Pow {
        match rng.gen_range(0..5) {
            0 => Expr::Neg(Box::new(Expr::Lit(rng.gen_range(1..=2)))),
            _ => Expr::Lit(rng.gen_range(0..=2)),
        }
    } else {
        random_expr(rng, depth - 1)
    };
    Expr::Bin(op, Box::new(left), Box::new(right))
}

fn space(rng: &mut StdRng) -> &'static str {
    if rng.gen_bool(0.5) {
        " "
    } else {
        ""
    }
}

/// Renders with the fewest parentheses the grammar needs, plus random
/// redundant ones.
pub fn render(e: &Expr, rng: &mut StdRng) -> String {
    let inner = match e {
        Expr::Lit(v) => v.to_string(),
        Expr::Neg(x) => {
            let s = render(x, rng);
            if prec_of(x) < 3 {
                format!("-({s})")
            } else {
                format!("-{s}")
            }
        }
        Expr::Bin(op, l, r) => {
            let p = op_prec(*op);
            let ls = render(l, rng);
            let rs = render(r, rng);
            let lp = if *op == Op::Pow { prec_of(l) <= 4 } else { prec_of(l) < p };
            let rp = match op {
                Op::Pow => !matches!(**r, Expr::Lit(_) | Expr::Neg(_)),
                _ => prec_of(r) <= p,
            };
            let sym = match op {
                Op::Add => "+",
                Op::Sub => "-",
                Op::Mul => "*",
                Op::Div => "/",
                Op::FloorDiv => "//",
                Op::Mod => "%",
                Op::Pow => {
                    if rng.gen_bool(0.3) {
                        "^"
                    } else {
                        "**"
                    }
                }
            };
            let wrap = |s: String, yes: bool| if yes { format!("({s})") } else { s };
            let (a, b) = (space(rng), space(rng));
            format!("{}{a}{sym}{b}{}", wrap(ls, lp), wrap(rs, rp))
        }
    };
    if rng.gen_bool(0.1) {
        format!("({inner})")
    } else {
        inner
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleValue {
    Int(BigInt),
    Real(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleError {
    DivisionByZero,
    Overflow,
    Syntax,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Op(Op),
    Minus,
    Plus,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<Tok>, OracleError> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        let two = |t: u8| b.get(i + 1) == Some(&t);
        match c {
            b' ' => i += 1,
            b'0'..=b'9' => {
                let start = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                out.push(Tok::Num(s[start..i].parse().unwrap()));
            }
            b'*' if two(b'*') => {
                out.push(Tok::Op(Op::Pow));
                i += 2;
            }
            b'/' if two(b'/') => {
                out.push(Tok::Op(Op::FloorDiv));
                i += 2;
            }
            b'^' => {
                out.push(Tok::Op(Op::Pow));
                i += 1;
            }
            b'*' | b'/' | b'%' | b'+' | b'-' | b'(' | b')' => {
                out.push(match c {
                    b'*' => Tok::Op(Op::Mul),
                    b'/' => Tok::Op(Op::Div),
                    b'%' => Tok::Op(Op::Mod),
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'(' => Tok::LParen,
                    _ => Tok::RParen,
                });
                i += 1;
            }
            _ => return Err(OracleError::Syntax),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum StackOp {
    Bin(Op),
    Neg,
    Pos,
    Paren,
}

fn stack_prec(s: StackOp) -> u8 {
    match s {
        StackOp::Bin(op) => op_prec(op),
        StackOp::Neg | StackOp::Pos => 3,
        StackOp::Paren => 0,
    }
}

fn to_f64(v: &OracleValue) -> Result<f64, OracleError> {
    match v {
        OracleValue::Int(i) => {
            let f = i.to_f64().ok_or(OracleError::Overflow)?;
            if f.is_finite() {
                Ok(f)
            } else {
                Err(OracleError::Overflow)
            }
        }
        OracleValue::Real(r) => Ok(*r),
    }
}

fn real(f: f64) -> Result<OracleValue, OracleError> {
    if f.is_finite() {
        Ok(OracleValue::Real(f))
    } else {
        Err(OracleError::Overflow)
    }
}

/// The reference language's float floor-division and modulo.
fn float_divmod(x: f64, y: f64) -> (f64, f64) {
    let mut m = x % y;
    let mut div = (x - m) / y;
    if m != 0.0 {
        if (y < 0.0) != (m < 0.0) {
            m += y;
            div -= 1.0;
        }
    } else {
        m = 0.0f64.copysign(y);
    }
    let floordiv = if div != 0.0 {
        let mut f = div.floor();
        if div - f > 0.5 {
            f += 1.0;
        }
        f
    } else {
        0.0f64.copysign(x / y)
    };
    (floordiv, m)
}

fn apply(op: Op, a: OracleValue, b: OracleValue) -> Result<OracleValue, OracleError> {
    use OracleValue::*;
    match (op, a, b) {
        (Op::Add, Int(x), Int(y)) => Ok(Int(x + y)),
        (Op::Sub, Int(x), Int(y)) => Ok(Int(x - y)),
        (Op::Mul, Int(x), Int(y)) => Ok(Int(x * y)),
        (Op::FloorDiv | Op::Mod, Int(_), Int(y)) if y.is_zero() => Err(OracleError::DivisionByZero),
        (Op::FloorDiv, Int(x), Int(y)) => Ok(Int(x.div_floor(&y))),
        (Op::Mod, Int(x), Int(y)) => Ok(Int(x.mod_floor(&y))),
        (Op::Pow, Int(x), Int(y)) if !y.is_negative() => Ok(Int(num_traits::pow(x, y.to_usize().unwrap()))),
        (op, a, b) => {
            let (x, y) = (to_f64(&a)?, to_f64(&b)?);
            match op {
                Op::Add => real(x + y),
                Op::Sub => real(x - y),
                Op::Mul => real(x * y),
                Op::Div | Op::FloorDiv | Op::Mod if y == 0.0 => Err(OracleError::DivisionByZero),
                Op::Div => real(x / y),
                Op::FloorDiv => real(float_divmod(x, y).0),
                Op::Mod => real(float_divmod(x, y).1),
                Op::Pow if x == 0.0 && y < 0.0 => Err(OracleError::DivisionByZero),
                Op::Pow => real(x.powf(y)),
            }
        }
    }
}

fn reduce(ops: &mut Vec<StackOp>, vals: &mut Vec<OracleValue>) -> Result<(), OracleError> {
    let op = ops.pop().ok_or(OracleError::Syntax)?;
    match op {
        StackOp::Neg | StackOp::Pos => {
            let v = vals.pop().ok_or(OracleError::Syntax)?;
            vals.push(match (op, v) {
                (StackOp::Pos, v) => v,
                (_, OracleValue::Int(i)) => OracleValue::Int(-i),
                (_, OracleValue::Real(r)) => OracleValue::Real(-r),
            });
        }
        StackOp::Bin(b) => {
            let rhs = vals.pop().ok_or(OracleError::Syntax)?;
            let lhs = vals.pop().ok_or(OracleError::Syntax)?;
            vals.push(apply(b, lhs, rhs)?);
        }
        StackOp::Paren => return Err(OracleError::Syntax),
    }
    Ok(())
}

/// Operator-precedence evaluation with explicit operator and value stacks.
pub fn shunting_yard(s: &str) -> Result<OracleValue, OracleError> {
    let toks = lex(s)?;
    let mut ops: Vec<StackOp> = Vec::new();
    let mut vals: Vec<OracleValue> = Vec::new();
    let mut expect_operand = true;
    for t in toks {
        match t {
            Tok::Num(n) if expect_operand => {
                vals.push(OracleValue::Int(n));
                expect_operand = false;
            }
            Tok::Minus if expect_operand => ops.push(StackOp::Neg),
            Tok::Plus if expect_operand => ops.push(StackOp::Pos),
            Tok::LParen if expect_operand => ops.push(StackOp::Paren),
            Tok::RParen if !expect_operand => {
                while *ops.last().ok_or(OracleError::Syntax)? != StackOp::Paren {
                    reduce(&mut ops, &mut vals)?;
                }
                ops.pop();
            }
            Tok::Op(_) | Tok::Minus | Tok::Plus if !expect_operand => {
                let op = match t {
                    Tok::Op(o) => o,
                    Tok::Minus => Op::Sub,
                    _ => Op::Add,
                };
                let p = op_prec(op);
                let right_assoc = op == Op::Pow;
                while let Some(&top) = ops.last() {
                    let tp = stack_prec(top);
                    if top != StackOp::Paren && (tp > p || (tp == p && !right_assoc)) {
                        reduce(&mut ops, &mut vals)?;
                    } else {
                        break;
                    }
                }
                ops.push(StackOp::Bin(op));
                expect_operand = true;
            }
            _ => return Err(OracleError::Syntax),
        }
    }
    if expect_operand {
        return Err(OracleError::Syntax);
    }
    while !ops.is_empty() {
        reduce(&mut ops, &mut vals)?;
    }
    match (vals.pop(), vals.is_empty()) {
        (Some(v), true) => Ok(v),
        _ => Err(OracleError::Syntax),
    }
}

pub fn within_rel(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

// ---------------------------------------------------------------------------
// Nearest neighbours by exhaustive scan.

pub fn brute_force_knn(entries: &[(String, Vec<f64>)], q: &[f64], k: usize) -> Vec<(String, f64)> {
    let mut scored: Vec<(usize, f64)> = entries
        .iter()
        .enumerate()
        .map(|(i, (_, v))| (i, v.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()))
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    scored.into_iter().take(k).map(|(i, d)| (entries[i].0.clone(), d)).collect()
}

// ---------------------------------------------------------------------------
// Review fixtures.

pub fn question(id: &str, topic: &str) -> GeneratedQuestion {
    let opt = |label, text: &str| AnswerOption { label, text: text.into(), feedback: format!("Feedback for {text}.") };
    GeneratedQuestion {
        question_id: id.into(),
        topic: topic.into(),
        stem: "What does the program print?".into(),
        code: Some("x = 1\nprint(x + 1)\n".into()),
        options: vec![opt(Label::A, "2"), opt(Label::B, "1"), opt(Label::C, "11"), opt(Label::D, "x + 1")],
        correct_label: Label::A,
        created_at: Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap(),
    }
}

pub fn report_with(question_id: &str, classify: impl Fn(DimensionKey) -> bool) -> ValidationReport {
    let dimensions: BTreeMap<DimensionKey, DimensionEntry> = DimensionKey::ALL
        .iter()
        .map(|&d| {
            let [pos, neg] = d.vocabulary();
            let c = if classify(d) { pos } else { neg };
            (d, DimensionEntry { classification: c.into(), rationale: format!("Assessed {}.", d.as_str()) })
        })
        .collect();
    ValidationReport { question_id: question_id.into(), dimensions, tool_trace: vec![], inconsistent: false }
}

/// Per-dimension (TP, FP, TN, FN) counts of the 288-question study fixture.
pub const STUDY_COUNTS: [(DimensionKey, [usize; 4]); 7] = [
    (DimensionKey::StemClarity, [282, 6, 0, 0]),
    (DimensionKey::CodeValidity, [275, 9, 0, 4]),
    (DimensionKey::ConceptAlignment, [284, 1, 0, 3]),
    (DimensionKey::CorrectAnswerValidity, [265, 4, 8, 11]),
    (DimensionKey::DistractorQuality, [230, 45, 7, 6]),
    (DimensionKey::CorrectFeedbackQuality, [266, 6, 9, 7]),
    (DimensionKey::DistractorFeedbackQuality, [248, 27, 11, 2]),
];

pub const STUDY_QUESTIONS: usize = 288;
pub const STUDY_SMES: usize = 6;

/// 288 fully judged items, 48 per SME, with each dimension's categories
/// spread over the questions by a seeded shuffle.
pub fn study_fixture(rng: &mut StdRng) -> Vec<ReviewItem> {
    let mut per_dim: BTreeMap<DimensionKey, Vec<PairCategory>> = BTreeMap::new();
    for (d, [tp, fp, tn, fn_]) in STUDY_COUNTS {
        let mut cats: Vec<PairCategory> = std::iter::repeat_n(PairCategory::TP, tp)
            .chain(std::iter::repeat_n(PairCategory::FP, fp))
            .chain(std::iter::repeat_n(PairCategory::TN, tn))
            .chain(std::iter::repeat_n(PairCategory::FN, fn_))
            .collect();
        assert_eq!(cats.len(), STUDY_QUESTIONS);
        cats.shuffle(rng);
        per_dim.insert(d, cats);
    }
    let per_sme = STUDY_QUESTIONS / STUDY_SMES;
    let created_at = Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap();
    (0..STUDY_QUESTIONS)
        .map(|i| {
            let id = format!("q-{i:016x}");
            let sme = format!("sme-{}", i / per_sme + 1);
            let cat = |d: DimensionKey| per_dim[&d][i];
            let report = report_with(&id, |d| matches!(cat(d), PairCategory::TP | PairCategory::FP));
            let judgments = DimensionKey::ALL
                .iter()
                .enumerate()
                .map(|(n, &d)| {
                    let disagree = matches!(cat(d), PairCategory::FP | PairCategory::FN);
                    JudgmentRecord {
                        judgment_id: format!("j-{:06}", i * 7 + n),
                        question_id: id.clone(),
                        sme_id: sme.clone(),
                        dimension: d,
                        verdict: if disagree { Verdict::Disagree } else { Verdict::Agree },
                        rationale: disagree.then(|| format!("Disagree on {}.", d.as_str())),
                        created_at,
                    }
                })
                .collect();
            ReviewItem {
                question: question(&id, "loops"),
                report,
                assigned_sme: Some(sme),
                judgments,
                status: ItemStatus::FullyJudged,
            }
        })
        .collect()
}
