//! Answer scoring.
//!
//! Exact match is all-or-nothing and delegates to the same comparison the
//! executor uses for search, so "correct" means the same thing everywhere.
//! F1 is graded only for text answers: single spans score their word-bag
//! overlap, span lists score the best one-to-one alignment between
//! predicted and gold pieces. Numbers stay binary.

mod assignment;

pub use assignment::max_sum_assignment;

use crate::answer::{Answer, AnswerKind, AnswerSource};
use crate::executor::answers_match;
use crate::text::bag_f1;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub em: f64,
    pub f1: f64,
}

/// Score one prediction against gold. `tol` is the absolute slack allowed
/// between numeric values after rounding to four decimals.
pub fn score_instance(pred: &Answer, gold: &Answer, tol: f64) -> InstanceScore {
    if answers_match(pred, gold, tol) {
        return InstanceScore { em: 1.0, f1: 1.0 };
    }
    InstanceScore { em: 0.0, f1: graded_f1(pred, gold) }
}

fn graded_f1(pred: &Answer, gold: &Answer) -> f64 {
    if let (Some(a), Some(b)) = (pred.scale, gold.scale) {
        if a != b {
            return 0.0;
        }
    }
    match (pred.as_texts(), gold.as_texts()) {
        (Some(p), Some(g)) if !p.is_empty() && !g.is_empty() => aligned_f1(p, g),
        _ => 0.0,
    }
}

/// Best one-to-one alignment of predicted to gold pieces under bag-of-words
/// F1, normalised by the larger list so extra or missing pieces cost.
fn aligned_f1(pred: &[String], gold: &[String]) -> f64 {
    let weights: Vec<Vec<f64>> =
        pred.iter().map(|p| gold.iter().map(|g| bag_f1(p, g)).collect()).collect();
    let (total, _) = max_sum_assignment(&weights);
    total / pred.len().max(gold.len()) as f64
}

/// One scored prediction; `source` feeds the by-source breakdown when the
/// dataset records where its answers come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRow {
    pub pred: Answer,
    pub gold: Answer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<AnswerSource>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub em: f64,
    pub f1: f64,
}

impl Aggregate {
    fn push(&mut self, s: InstanceScore) {
        self.count += 1;
        self.em += s.em;
        self.f1 += s.f1;
    }

    fn finish(&mut self) {
        if self.count > 0 {
            self.em /= self.count as f64;
            self.f1 /= self.count as f64;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetScores {
    pub overall: Aggregate,
    pub by_kind: BTreeMap<AnswerKind, Aggregate>,
    pub by_source: BTreeMap<AnswerSource, Aggregate>,
}

/// Mean EM/F1 overall and broken down by gold answer kind and source.
pub fn score_dataset(rows: &[ScoreRow], tol: f64) -> DatasetScores {
    let mut out = DatasetScores::default();
    for row in rows {
        let s = score_instance(&row.pred, &row.gold, tol);
        out.overall.push(s);
        out.by_kind.entry(row.gold.kind).or_default().push(s);
        if let Some(src) = row.source {
            out.by_source.entry(src).or_default().push(s);
        }
    }
    out.overall.finish();
    out.by_kind.values_mut().for_each(Aggregate::finish);
    out.by_source.values_mut().for_each(Aggregate::finish);
    out
}
