//! SME-Validator pair classification, per-dimension rates, and per-SME
//! agreement statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::agents::DimensionKey;
use crate::review::{ReviewItem, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairCategory {
    TP,
    FP,
    TN,
    FN,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("classification {classification:?} is not in the vocabulary of {dimension}")]
    VocabularyMismatch { classification: String, dimension: DimensionKey },
}

pub fn classify_pair(
    classification: &str,
    dimension: DimensionKey,
    verdict: Verdict,
) -> Result<PairCategory, AnalyticsError> {
    let positive = dimension.is_positive(classification).ok_or_else(|| {
        AnalyticsError::VocabularyMismatch { classification: classification.to_string(), dimension }
    })?;
    Ok(match (positive, verdict) {
        (true, Verdict::Agree) => PairCategory::TP,
        (true, Verdict::Disagree) => PairCategory::FP,
        (false, Verdict::Agree) => PairCategory::TN,
        (false, Verdict::Disagree) => PairCategory::FN,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl CategoryCounts {
    pub fn from_categories(cats: &[PairCategory]) -> Self {
        let mut c = Self::default();
        for cat in cats {
            match cat {
                PairCategory::TP => c.tp += 1,
                PairCategory::FP => c.fp += 1,
                PairCategory::TN => c.tn += 1,
                PairCategory::FN => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub dimension: DimensionKey,
    pub n_pairs: usize,
    pub counts: CategoryCounts,
    pub success_rate: f64,
    pub failure_rate: f64,
    pub safeguarding_rate: f64,
    pub inefficiency_rate: f64,
}

fn fraction(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        count as f64 / n as f64
    }
}

pub fn dimension_rates(dimension: DimensionKey, categories: &[PairCategory]) -> RateSummary {
    let counts = CategoryCounts::from_categories(categories);
    let n = counts.total();
    RateSummary {
        dimension,
        n_pairs: n,
        counts,
        success_rate: fraction(counts.tp, n),
        failure_rate: fraction(counts.fp, n),
        safeguarding_rate: fraction(counts.tn, n),
        inefficiency_rate: fraction(counts.fn_, n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub dimension: DimensionKey,
    pub per_sme_rates: BTreeMap<String, f64>,
    pub mean: f64,
    pub sd: f64,
}

/// One judged (question, dimension) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedPair {
    pub sme_id: String,
    pub dimension: DimensionKey,
    pub category: PairCategory,
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two
/// values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn agreement_stats(pairs: &[JudgedPair]) -> Vec<AgreementSummary> {
    DimensionKey::ALL
        .iter()
        .map(|&dimension| {
            let mut by_sme: BTreeMap<&str, Vec<PairCategory>> = BTreeMap::new();
            for p in pairs.iter().filter(|p| p.dimension == dimension) {
                by_sme.entry(&p.sme_id).or_default().push(p.category);
            }
            let per_sme_rates: BTreeMap<String, f64> = by_sme
                .into_iter()
                .map(|(sme, cats)| {
                    let c = CategoryCounts::from_categories(&cats);
                    (sme.to_string(), fraction(c.tp + c.tn, c.total()))
                })
                .collect();
            let rates: Vec<f64> = per_sme_rates.values().copied().collect();
            let mean = if rates.is_empty() { 0.0 } else { rates.iter().sum::<f64>() / rates.len() as f64 };
            AgreementSummary { dimension, per_sme_rates, mean, sd: sample_sd(&rates) }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub questions: usize,
    pub pairs: usize,
    pub disagreement_rationales: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub generated_at: DateTime<Utc>,
    pub rates: Vec<RateSummary>,
    pub agreement: Vec<AgreementSummary>,
    pub totals: Totals,
}

/// Pairs from every judged dimension of every item. Judgments whose
/// classification is outside the vocabulary are skipped.
pub fn judged_pairs(items: &[ReviewItem]) -> Vec<JudgedPair> {
    let mut out = Vec::new();
    for item in items {
        for j in &item.judgments {
            let Some(entry) = item.report.dimensions.get(&j.dimension) else { continue };
            if let Ok(category) = classify_pair(&entry.classification, j.dimension, j.verdict) {
                out.push(JudgedPair { sme_id: j.sme_id.clone(), dimension: j.dimension, category });
            }
        }
    }
    out
}

pub fn build_report(items: &[ReviewItem], generated_at: DateTime<Utc>) -> QualityReport {
    let pairs = judged_pairs(items);
    let rates: Vec<RateSummary> = DimensionKey::ALL
        .iter()
        .map(|&d| {
            let cats: Vec<PairCategory> = pairs.iter().filter(|p| p.dimension == d).map(|p| p.category).collect();
            dimension_rates(d, &cats)
        })
        .collect();
    let totals = Totals {
        questions: items.iter().filter(|i| !i.judgments.is_empty()).count(),
        pairs: rates.iter().map(|r| r.n_pairs).sum(),
        disagreement_rationales: items
            .iter()
            .flat_map(|i| &i.judgments)
            .filter(|j| j.verdict == Verdict::Disagree && j.rationale.as_deref().is_some_and(|r| !r.trim().is_empty()))
            .count(),
    };
    QualityReport { generated_at, rates, agreement: agreement_stats(&pairs), totals }
}

/// `count / n` as a percentage with one decimal, rounding exact ties to
/// even in integer arithmetic.
pub fn percent_one_decimal(count: usize, n: usize) -> String {
    if n == 0 {
        return "0.0".into();
    }
    let num = count as u128 * 1000;
    let den = n as u128;
    let (q, r) = (num / den, num % den);
    let tenths = match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q % 2),
    };
    format!("{}.{}", tenths / 10, tenths % 10)
}

/// A fraction in [0, 1] as a one-decimal percentage.
pub fn fraction_percent(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

pub fn render_table(report: &QualityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:>6} {:>8} {:>8} {:>13} {:>13} {:>10} {:>7}",
        "Dimension", "Pairs", "Success", "Failure", "Safeguarding", "Inefficiency", "Agreement", "SD"
    );
    for (r, a) in report.rates.iter().zip(&report.agreement) {
        let n = r.n_pairs;
        let _ = writeln!(
            out,
            "{:<28} {:>6} {:>8} {:>8} {:>13} {:>13} {:>10} {:>7}",
            r.dimension.as_str(),
            n,
            percent_one_decimal(r.counts.tp, n),
            percent_one_decimal(r.counts.fp, n),
            percent_one_decimal(r.counts.tn, n),
            percent_one_decimal(r.counts.fn_, n),
            fraction_percent(a.mean),
            fraction_percent(a.sd),
        );
    }
    let t = report.totals;
    let _ = writeln!(
        out,
        "questions {}  pairs {}  disagreement rationales {}",
        t.questions, t.pairs, t.disagreement_rationales
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_table() {
        use DimensionKey::*;
        assert_eq!(classify_pair("yes", StemClarity, Verdict::Agree), Ok(PairCategory::TP));
        assert_eq!(classify_pair("yes", StemClarity, Verdict::Disagree), Ok(PairCategory::FP));
        assert_eq!(classify_pair("no", StemClarity, Verdict::Agree), Ok(PairCategory::TN));
        assert_eq!(classify_pair("poor", DistractorQuality, Verdict::Disagree), Ok(PairCategory::FN));
        assert!(classify_pair("good", StemClarity, Verdict::Agree).is_err());
    }

    #[test]
    fn empty_rates_are_zero() {
        let r = dimension_rates(DimensionKey::StemClarity, &[]);
        assert_eq!((r.n_pairs, r.success_rate, r.inefficiency_rate), (0, 0.0, 0.0));
    }

    #[test]
    fn two_sme_sample_sd() {
        let sd = sample_sd(&[0.9, 1.0]);
        assert!((sd - 0.5f64.sqrt() / 10.0).abs() < 1e-12);
        assert_eq!(sample_sd(&[0.7]), 0.0);
    }

    #[test]
    fn percent_rounds_ties_to_even() {
        assert_eq!(percent_one_decimal(284, 288), "98.6");
        assert_eq!(percent_one_decimal(45, 288), "15.6");
        assert_eq!(percent_one_decimal(1, 8), "12.5");
        assert_eq!(percent_one_decimal(1, 16), "6.2");
        assert_eq!(percent_one_decimal(3, 16), "18.8");
        assert_eq!(percent_one_decimal(0, 0), "0.0");
    }

    #[test]
    fn empty_report_has_zero_totals() {
        let r = build_report(&[], Utc::now());
        assert_eq!(r.totals, Totals::default());
        assert_eq!(r.rates.len(), 7);
        assert!(render_table(&r).contains("pairs 0"));
    }
}
