//! Choosing between the answer of an executed program and the answer of an
//! end-to-end model.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerValue;
use crate::eval::{fuzzy_match, AnswerMap, EvalError};
use crate::generation::{LlmClient, LlmError};
use crate::table::{serialize_for_prompt, Table};

/// Published rates at which a selector overrode a correct code answer with
/// a wrong end-to-end answer, and the reverse, in percent.
pub const REFERENCE_OVERRIDE_CODE_CORRECT_PCT: f64 = 2.03;
pub const REFERENCE_OVERRIDE_E2E_CORRECT_PCT: f64 = 1.20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub id: String,
    #[serde(default)]
    pub question: String,
    #[serde(default)]
    pub table_ref: String,
    pub code_answer: AnswerValue,
    pub e2e_answer: AnswerValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2e_trace: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Code,
    E2e,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    #[serde(flatten)]
    pub pair: CandidatePair,
    pub label: Label,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorDataset {
    pub items: Vec<LabeledPair>,
    pub dropped_ids: Vec<String>,
}

impl SelectorDataset {
    pub fn dropped(&self) -> usize {
        self.dropped_ids.len()
    }
}

/// Labels each pair by which candidates fuzzy-match the gold. Pairs where
/// neither does are dropped.
pub fn build_selector_dataset(pairs: &[CandidatePair], golds: &AnswerMap) -> Result<SelectorDataset, EvalError> {
    let mut out = SelectorDataset::default();
    for p in pairs {
        let gold = golds.get(&p.id).ok_or_else(|| EvalError::MissingGold(p.id.clone()))?;
        let label = match (fuzzy_match(&p.code_answer, gold), fuzzy_match(&p.e2e_answer, gold)) {
            (true, true) => Label::Both,
            (true, false) => Label::Code,
            (false, true) => Label::E2e,
            (false, false) => {
                out.dropped_ids.push(p.id.clone());
                continue;
            }
        };
        out.items.push(LabeledPair { pair: p.clone(), label });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preference {
    Code,
    E2e,
    Tie,
}

pub struct ScorerInput<'a> {
    pub table: Option<&'a Table>,
    pub question: &'a str,
    pub code_answer: &'a AnswerValue,
    pub e2e_answer: &'a AnswerValue,
    pub e2e_trace: Option<&'a str>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScorerError {
    #[error("scorer transport failed: {0}")]
    Transport(#[from] LlmError),
    #[error("scorer reply not understood: {0:?}")]
    BadReply(String),
}

pub trait SelectorScorer: Send + Sync {
    fn prefer(&self, input: &ScorerInput<'_>) -> Result<Preference, ScorerError>;
}

/// Always returns the same preference.
pub struct FixedScorer(pub Preference);

impl SelectorScorer for FixedScorer {
    fn prefer(&self, _: &ScorerInput<'_>) -> Result<Preference, ScorerError> {
        Ok(self.0)
    }
}

/// Prefers a non-empty answer over an empty one, else ties.
pub struct HeuristicScorer;

impl SelectorScorer for HeuristicScorer {
    fn prefer(&self, i: &ScorerInput<'_>) -> Result<Preference, ScorerError> {
        Ok(match (i.code_answer.is_empty(), i.e2e_answer.is_empty()) {
            (false, true) => Preference::Code,
            (true, false) => Preference::E2e,
            _ => Preference::Tie,
        })
    }
}

/// Asks an LLM which of two labelled candidates answers the question, and
/// expects a reply starting with `A` or `B`.
pub struct PromptedScorer<C> {
    pub client: C,
    pub max_table_rows: usize,
}

impl<C: LlmClient> PromptedScorer<C> {
    pub fn new(client: C) -> Self {
        PromptedScorer {
            client,
            max_table_rows: 30,
        }
    }

    pub fn prompt(&self, i: &ScorerInput<'_>) -> String {
        let mut out = String::from(
            "Two systems answered the question below. Reply with the single letter of the \
correct answer, A or B.\n\n",
        );
        if let Some(t) = i.table {
            let _ = write!(out, "## Table\n{}\n\n", serialize_for_prompt(t, self.max_table_rows));
        }
        let _ = write!(out, "## Question\n{}\n\n", i.question.trim());
        let _ = write!(out, "A: {}\nB: {}\n", i.code_answer, i.e2e_answer);
        if let Some(trace) = i.e2e_trace {
            let _ = write!(out, "\nReasoning behind B:\n{}\n", trace.trim());
        }
        out
    }
}

impl<C: LlmClient> SelectorScorer for PromptedScorer<C> {
    fn prefer(&self, i: &ScorerInput<'_>) -> Result<Preference, ScorerError> {
        let reply = self.client.complete(&self.prompt(i))?;
        let first = reply
            .trim_start_matches(|c: char| !c.is_alphanumeric())
            .chars()
            .next()
            .map(|c| c.to_ascii_uppercase());
        match first {
            Some('A') => Ok(Preference::Code),
            Some('B') => Ok(Preference::E2e),
            _ => Err(ScorerError::BadReply(reply)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Code,
    E2e,
    Agreement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub id: String,
    pub chosen: AnswerValue,
    pub source: Source,
    pub scorer_invoked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorer_error: Option<String>,
}

/// Picks one of the two candidates. Candidates that fuzzy-match each other
/// are returned as `agreement` without asking the scorer. Ties and scorer
/// failures fall back to the code answer; failures are logged and recorded
/// in `scorer_error`.
pub fn select_answer(scorer: &dyn SelectorScorer, pair: &CandidatePair, table: Option<&Table>) -> SelectionResult {
    let result = |chosen: &AnswerValue, source, scorer_invoked, scorer_error| SelectionResult {
        id: pair.id.clone(),
        chosen: chosen.clone(),
        source,
        scorer_invoked,
        scorer_error,
    };
    if fuzzy_match(&pair.code_answer, &pair.e2e_answer) {
        return result(&pair.code_answer, Source::Agreement, false, None);
    }
    let input = ScorerInput {
        table,
        question: &pair.question,
        code_answer: &pair.code_answer,
        e2e_answer: &pair.e2e_answer,
        e2e_trace: pair.e2e_trace.as_deref(),
    };
    match scorer.prefer(&input) {
        Ok(Preference::E2e) => result(&pair.e2e_answer, Source::E2e, true, None),
        Ok(_) => result(&pair.code_answer, Source::Code, true, None),
        Err(e) => {
            log::warn!("selector scorer failed for {}: {e}; keeping the code answer", pair.id);
            result(&pair.code_answer, Source::Code, true, Some(e.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub examples: usize,
    /// Share of examples, in percent, where the code answer was correct, the
    /// end-to-end answer was not, and the end-to-end answer was chosen.
    pub override_code_correct_pct: f64,
    /// The reverse case.
    pub override_e2e_correct_pct: f64,
    pub final_fm: f64,
    pub reference_override_code_correct_pct: f64,
    pub reference_override_e2e_correct_pct: f64,
}

impl SelectionStats {
    pub fn to_markdown(&self) -> String {
        format!(
            "## Answer selection\n\n\
| statistic | this run | reference |\n|---|---:|---:|\n\
| correct code answer overridden | {:.2}% | {:.2}% |\n\
| correct end-to-end answer overridden | {:.2}% | {:.2}% |\n\
| final FM | {:.2}% | |\n\nExamples: {}\n",
            self.override_code_correct_pct,
            self.reference_override_code_correct_pct,
            self.override_e2e_correct_pct,
            self.reference_override_e2e_correct_pct,
            self.final_fm * 100.0,
            self.examples
        )
    }
}

pub fn selection_error_report(
    selections: &[SelectionResult],
    pairs: &[CandidatePair],
    golds: &AnswerMap,
) -> Result<SelectionStats, EvalError> {
    let by_id: BTreeMap<&str, &CandidatePair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    if by_id.len() != selections.len() || by_id.len() != pairs.len() {
        let odd = selections
            .iter()
            .map(|s| s.id.as_str())
            .find(|id| !by_id.contains_key(id))
            .or_else(|| pairs.iter().map(|p| p.id.as_str()).find(|id| !selections.iter().any(|s| s.id == *id)))
            .unwrap_or_default();
        return Err(EvalError::IdMismatch(odd.to_owned()));
    }
    let (mut code_lost, mut e2e_lost, mut final_ok) = (0usize, 0usize, 0usize);
    for s in selections {
        let pair = by_id.get(s.id.as_str()).ok_or_else(|| EvalError::IdMismatch(s.id.clone()))?;
        let gold = golds.get(&s.id).ok_or_else(|| EvalError::MissingGold(s.id.clone()))?;
        let code_ok = fuzzy_match(&pair.code_answer, gold);
        let e2e_ok = fuzzy_match(&pair.e2e_answer, gold);
        let chose_e2e = s.chosen == pair.e2e_answer && s.chosen != pair.code_answer;
        let chose_code = s.chosen == pair.code_answer && s.chosen != pair.e2e_answer;
        if code_ok && !e2e_ok && chose_e2e {
            code_lost += 1;
        }
        if e2e_ok && !code_ok && chose_code {
            e2e_lost += 1;
        }
        if fuzzy_match(&s.chosen, gold) {
            final_ok += 1;
        }
    }
    let n = selections.len();
    let share = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Ok(SelectionStats {
        examples: n,
        override_code_correct_pct: 100.0 * share(code_lost),
        override_e2e_correct_pct: 100.0 * share(e2e_lost),
        final_fm: share(final_ok),
        reference_override_code_correct_pct: REFERENCE_OVERRIDE_CODE_CORRECT_PCT,
        reference_override_e2e_correct_pct: REFERENCE_OVERRIDE_E2E_CORRECT_PCT,
    })
}
