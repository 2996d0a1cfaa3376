use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    apply_corrections, evaluate_run, AnswerMap, BreakdownReport, CorrectionsOverlay, EvalError, EvalSummary, Metric,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRates {
    pub examples: usize,
    pub em_correct: usize,
    pub fm_correct: usize,
    pub em_rate: f64,
    pub fm_rate: f64,
}

impl From<&EvalSummary> for RunRates {
    fn from(s: &EvalSummary) -> Self {
        RunRates {
            examples: s.records.len(),
            em_correct: s.records.iter().filter(|r| r.em).count(),
            fm_correct: s.records.iter().filter(|r| r.fm).count(),
            em_rate: s.em_rate,
            fm_rate: s.fm_rate,
        }
    }
}

/// How a corrections overlay moves the scores of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionImpact {
    pub applied: usize,
    pub unknown_ids: Vec<String>,
    pub before: RunRates,
    pub after: RunRates,
    pub fm_fixed: Vec<String>,
    pub fm_broken: Vec<String>,
}

impl CorrectionImpact {
    /// Scores `preds` against the original and the corrected golds. Returns
    /// the impact and the corrected summary.
    pub fn measure(
        preds: &AnswerMap,
        golds: &AnswerMap,
        overlay: &CorrectionsOverlay,
    ) -> Result<(Self, EvalSummary), EvalError> {
        let before = evaluate_run(preds, golds)?;
        let (fixed, unknown_ids) = apply_corrections(golds, overlay);
        let after = evaluate_run(preds, &fixed)?;
        let mut fm_fixed = Vec::new();
        let mut fm_broken = Vec::new();
        for (b, a) in before.records.iter().zip(&after.records) {
            match (b.fm, a.fm) {
                (false, true) => fm_fixed.push(a.id.clone()),
                (true, false) => fm_broken.push(a.id.clone()),
                _ => {}
            }
        }
        let impact = CorrectionImpact {
            applied: overlay.0.len() - unknown_ids.len(),
            unknown_ids,
            before: RunRates::from(&before),
            after: RunRates::from(&after),
            fm_fixed,
            fm_broken,
        };
        Ok((impact, after))
    }
}

/// Everything `evaluate` reports, serializable as JSON or rendered as a
/// markdown table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: Metric,
    pub primary: RunRates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrections: Option<CorrectionImpact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<RunRates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<BreakdownReport>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

fn pct(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "## Evaluation\n");
        let _ = writeln!(out, "| run | examples | EM | FM |");
        let _ = writeln!(out, "|---|---:|---:|---:|");
        let row = |out: &mut String, name: &str, r: &RunRates| {
            let _ = writeln!(
                out,
                "| {name} | {} | {} | {} |",
                r.examples,
                pct(r.em_rate),
                pct(r.fm_rate)
            );
        };
        match &self.corrections {
            Some(c) => {
                row(&mut out, "primary (original gold)", &c.before);
                row(&mut out, "primary (corrected gold)", &c.after);
            }
            None => row(&mut out, "primary", &self.primary),
        }
        if let Some(s) = &self.secondary {
            row(&mut out, "secondary", s);
        }
        if let Some(c) = &self.corrections {
            let _ = writeln!(
                out,
                "\nCorrections applied: {} ({} unknown ids). FM fixed: {}, FM broken: {}.",
                c.applied,
                c.unknown_ids.len(),
                c.fm_fixed.len(),
                c.fm_broken.len()
            );
        }
        if let Some(b) = &self.breakdown {
            let total = b.total().max(1) as f64;
            let share = |n: usize| pct(n as f64 / total);
            let _ = writeln!(out, "\n### Breakdown ({})\n", self.metric.to_string().to_uppercase());
            let _ = writeln!(out, "| cell | count | share |");
            let _ = writeln!(out, "|---|---:|---:|");
            for (name, n) in [
                ("both correct", b.both_correct),
                ("only primary", b.only_a),
                ("only secondary", b.only_b),
                ("both wrong", b.both_wrong),
            ] {
                let _ = writeln!(out, "| {name} | {n} | {} |", share(n));
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "\n> warning: {w}");
        }
        out
    }
}
