//! Exact-Match / Fuzzy-Match scoring, gold corrections and run comparison.

mod metrics;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerValue;

pub use metrics::{exact_match, fuzzy_match, normalize_answer, normalize_scalar, scalars_match};
pub use report::{CorrectionImpact, EvalReport, RunRates};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no gold answer for id {0:?}")]
    MissingGold(String),
    #[error("runs cover different ids (e.g. {0:?})")]
    IdMismatch(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Em,
    #[default]
    Fm,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "em" => Ok(Metric::Em),
            "fm" => Ok(Metric::Fm),
            other => Err(format!("unknown metric {other:?} (expected em or fm)")),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Em => "em",
            Metric::Fm => "fm",
        })
    }
}

pub type AnswerMap = BTreeMap<String, AnswerValue>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub prediction: AnswerValue,
    pub gold: AnswerValue,
    pub em: bool,
    pub fm: bool,
}

impl EvalRecord {
    pub fn score(id: impl Into<String>, prediction: AnswerValue, gold: AnswerValue) -> Self {
        let em = exact_match(&prediction, &gold);
        let fm = fuzzy_match(&prediction, &gold);
        EvalRecord {
            id: id.into(),
            prediction,
            gold,
            em,
            fm,
        }
    }

    pub fn correct(&self, metric: Metric) -> bool {
        match metric {
            Metric::Em => self.em,
            Metric::Fm => self.fm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub em_rate: f64,
    pub fm_rate: f64,
    pub records: Vec<EvalRecord>,
    pub warnings: Vec<String>,
}

/// Corrected gold answers keyed by example id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrectionsOverlay(pub AnswerMap);

/// Replaces golds by id. Overlay ids without a gold are returned instead of
/// being applied.
pub fn apply_corrections(golds: &AnswerMap, overlay: &CorrectionsOverlay) -> (AnswerMap, Vec<String>) {
    let mut out = golds.clone();
    let mut unknown = Vec::new();
    for (id, corrected) in &overlay.0 {
        match out.get_mut(id) {
            Some(slot) => *slot = corrected.clone(),
            None => unknown.push(id.clone()),
        }
    }
    (out, unknown)
}

/// Scores one run. There is one record per gold id; a gold without a
/// prediction scores 0 on both metrics. A prediction whose id has no gold is
/// an error.
pub fn evaluate_run(preds: &AnswerMap, golds: &AnswerMap) -> Result<EvalSummary, EvalError> {
    if let Some(id) = preds.keys().find(|id| !golds.contains_key(*id)) {
        return Err(EvalError::MissingGold(id.clone()));
    }
    let mut warnings = Vec::new();
    if preds.is_empty() {
        warnings.push("no predictions to evaluate".to_owned());
    }
    let missing = golds.keys().filter(|id| !preds.contains_key(*id)).count();
    if missing > 0 && !preds.is_empty() {
        warnings.push(format!("{missing} gold ids have no prediction and score 0"));
    }
    let records: Vec<EvalRecord> = golds
        .iter()
        .map(|(id, gold)| match preds.get(id) {
            Some(p) => EvalRecord::score(id, p.clone(), gold.clone()),
            None => EvalRecord {
                id: id.clone(),
                prediction: AnswerValue::default(),
                gold: gold.clone(),
                em: false,
                fm: false,
            },
        })
        .collect();
    let rate = |bit: fn(&EvalRecord) -> bool| {
        if records.is_empty() {
            0.0
        } else {
            records.iter().filter(|r| bit(r)).count() as f64 / records.len() as f64
        }
    };
    Ok(EvalSummary {
        em_rate: rate(|r| r.em),
        fm_rate: rate(|r| r.fm),
        records,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownCell {
    BothCorrect,
    OnlyA,
    OnlyB,
    BothWrong,
}

/// Two-run agreement table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakdownReport {
    pub both_correct: usize,
    pub only_a: usize,
    pub only_b: usize,
    pub both_wrong: usize,
    pub assignment: BTreeMap<String, BreakdownCell>,
}

impl BreakdownReport {
    pub fn total(&self) -> usize {
        self.both_correct + self.only_a + self.only_b + self.both_wrong
    }
}

/// Partitions ids by FM correctness in the two runs.
pub fn breakdown(run_a: &[EvalRecord], run_b: &[EvalRecord]) -> Result<BreakdownReport, EvalError> {
    breakdown_by(run_a, run_b, Metric::Fm)
}

pub fn breakdown_by(
    run_a: &[EvalRecord],
    run_b: &[EvalRecord],
    metric: Metric,
) -> Result<BreakdownReport, EvalError> {
    let a: BTreeMap<&str, bool> = run_a.iter().map(|r| (r.id.as_str(), r.correct(metric))).collect();
    let b: BTreeMap<&str, bool> = run_b.iter().map(|r| (r.id.as_str(), r.correct(metric))).collect();
    let ids_a: BTreeSet<&str> = a.keys().copied().collect();
    let ids_b: BTreeSet<&str> = b.keys().copied().collect();
    if let Some(id) = ids_a.symmetric_difference(&ids_b).next() {
        return Err(EvalError::IdMismatch((*id).to_owned()));
    }
    let mut report = BreakdownReport::default();
    for (id, ok_a) in a {
        let cell = match (ok_a, b[id]) {
            (true, true) => {
                report.both_correct += 1;
                BreakdownCell::BothCorrect
            }
            (true, false) => {
                report.only_a += 1;
                BreakdownCell::OnlyA
            }
            (false, true) => {
                report.only_b += 1;
                BreakdownCell::OnlyB
            }
            (false, false) => {
                report.both_wrong += 1;
                BreakdownCell::BothWrong
            }
        };
        report.assignment.insert(id.to_owned(), cell);
    }
    Ok(report)
}
