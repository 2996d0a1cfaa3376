use serde::{Deserialize, Serialize};

use super::{
    generate_program, is_trivial_copy, refine_program, Feedback, GenerationError, InstructionConfig, LlmClient,
    RefinementContext,
};
use crate::answer::AnswerValue;
use crate::dataset::ExampleRecord;
use crate::eval::fuzzy_match;
use crate::parallel::parallel_map;
use crate::program::{execute, render_program};
use crate::table::Table;

const TRIVIAL_FEEDBACK: &str =
    "the program wrote the expected answer as a literal instead of computing it from the table";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub max_refine_rounds: usize,
    /// Upper bound on examples processed at once, and so on requests in flight.
    pub concurrency: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_refine_rounds: 1,
            concurrency: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProducedBy {
    FirstPass,
    Refined,
}

/// A verified program: re-executing `program_text` on the referenced table
/// gives `answer`, which fuzzy-matches the gold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub id: String,
    pub question: String,
    pub table_ref: String,
    pub program_text: String,
    pub produced_by: ProducedBy,
    pub answer: AnswerValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Wrong,
    TrivialCopy,
    ExecutionError,
    Unparseable,
    Transport,
}

/// One completion and what became of it. Round 0 is the first pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub round: usize,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<AnswerValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleStatus {
    FirstPassCorrect,
    RefinedCorrect,
    /// Every gold-matching program was a literal copy of the gold.
    DiscardedTrivial,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleOutcome {
    pub id: String,
    pub status: ExampleStatus,
    /// Answer of the accepted program, else of the last program that ran.
    pub final_answer: AnswerValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program_text: Option<String>,
    pub attempts: Vec<Attempt>,
}

/// Per-run counters. `trivial_rejections` counts every rejected literal
/// copy, including ones later followed by a correct refinement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunLog {
    pub first_pass_correct: usize,
    pub refined_correct: usize,
    pub discarded_trivial: usize,
    pub failed: usize,
    pub trivial_rejections: usize,
    pub completions: usize,
}

impl RunLog {
    pub fn of(outcome: &ExampleOutcome) -> Self {
        let mut log = RunLog {
            completions: outcome.attempts.len(),
            trivial_rejections: outcome
                .attempts
                .iter()
                .filter(|a| a.verdict == Verdict::TrivialCopy)
                .count(),
            ..Default::default()
        };
        match outcome.status {
            ExampleStatus::FirstPassCorrect => log.first_pass_correct = 1,
            ExampleStatus::RefinedCorrect => log.refined_correct = 1,
            ExampleStatus::DiscardedTrivial => log.discarded_trivial = 1,
            ExampleStatus::Failed => log.failed = 1,
        }
        log
    }

    pub fn merge(self, o: RunLog) -> RunLog {
        RunLog {
            first_pass_correct: self.first_pass_correct + o.first_pass_correct,
            refined_correct: self.refined_correct + o.refined_correct,
            discarded_trivial: self.discarded_trivial + o.discarded_trivial,
            failed: self.failed + o.failed,
            trivial_rejections: self.trivial_rejections + o.trivial_rejections,
            completions: self.completions + o.completions,
        }
    }

    pub fn examples(&self) -> usize {
        self.first_pass_correct + self.refined_correct + self.discarded_trivial + self.failed
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRun {
    pub records: Vec<TrainingRecord>,
    pub outcomes: Vec<ExampleOutcome>,
    pub log: RunLog,
}

/// Generates, executes and, up to `max_refine_rounds` times, repairs a
/// program for one example. Issues at most `1 + max_refine_rounds`
/// completions.
pub fn process_example(
    ex: &ExampleRecord,
    table: &Table,
    client: &dyn LlmClient,
    cfg: &InstructionConfig,
    max_refine_rounds: usize,
) -> (ExampleOutcome, Option<TrainingRecord>) {
    let mut attempts = Vec::new();
    let mut last_answer = AnswerValue::default();
    let mut saw_trivial = false;
    let mut result = generate_program(client, table, &ex.question, cfg);
    let mut round = 0;
    loop {
        let (failed_text, feedback) = match result {
            Err(GenerationError::Transport(e)) => {
                attempts.push(Attempt {
                    round,
                    verdict: Verdict::Transport,
                    raw: None,
                    answer: None,
                    error: Some(e.to_string()),
                });
                break;
            }
            Err(e) => {
                let msg = format!("the reply could not be parsed: {e}");
                let raw = e.raw().unwrap_or_default().to_owned();
                attempts.push(Attempt {
                    round,
                    verdict: Verdict::Unparseable,
                    raw: Some(raw.clone()),
                    answer: None,
                    error: Some(msg.clone()),
                });
                (raw, Feedback::Error(msg))
            }
            Ok(g) => {
                let text = render_program(&g.program);
                match execute(&g.program, table) {
                    Err(e) => {
                        attempts.push(Attempt {
                            round,
                            verdict: Verdict::ExecutionError,
                            raw: Some(g.raw),
                            answer: None,
                            error: Some(e.to_string()),
                        });
                        (text, Feedback::Error(e.to_string()))
                    }
                    Ok(r) => {
                        last_answer = r.answer.clone();
                        let correct = fuzzy_match(&r.answer, &ex.gold);
                        let trivial = correct && is_trivial_copy(&g.program, &ex.gold);
                        let verdict = match (correct, trivial) {
                            (true, false) => Verdict::Correct,
                            (true, true) => Verdict::TrivialCopy,
                            _ => Verdict::Wrong,
                        };
                        attempts.push(Attempt {
                            round,
                            verdict,
                            raw: Some(g.raw),
                            answer: Some(r.answer.clone()),
                            error: None,
                        });
                        if verdict == Verdict::Correct {
                            let produced_by = if round == 0 { ProducedBy::FirstPass } else { ProducedBy::Refined };
                            let record = TrainingRecord {
                                id: ex.id.clone(),
                                question: ex.question.clone(),
                                table_ref: ex.table_ref.clone(),
                                program_text: text.clone(),
                                produced_by,
                                answer: r.answer.clone(),
                            };
                            let outcome = ExampleOutcome {
                                id: ex.id.clone(),
                                status: match produced_by {
                                    ProducedBy::FirstPass => ExampleStatus::FirstPassCorrect,
                                    ProducedBy::Refined => ExampleStatus::RefinedCorrect,
                                },
                                final_answer: r.answer,
                                program_text: Some(text),
                                attempts,
                            };
                            return (outcome, Some(record));
                        }
                        if trivial {
                            saw_trivial = true;
                            (text, Feedback::Error(TRIVIAL_FEEDBACK.to_owned()))
                        } else {
                            (text, Feedback::Answer(r.answer))
                        }
                    }
                }
            }
        };
        if round == max_refine_rounds {
            break;
        }
        round += 1;
        let ctx = RefinementContext {
            table,
            question: &ex.question,
            failed_program: &failed_text,
            execution_output: feedback,
            gold: &ex.gold,
        };
        result = refine_program(client, &ctx, cfg);
    }
    let outcome = ExampleOutcome {
        id: ex.id.clone(),
        status: if saw_trivial {
            ExampleStatus::DiscardedTrivial
        } else {
            ExampleStatus::Failed
        },
        final_answer: last_answer,
        program_text: None,
        attempts,
    };
    (outcome, None)
}

/// Runs [`process_example`] over a dataset. Per-example failures end up in
/// the outcomes and the log; the batch itself never fails.
pub fn build_training_set(
    examples: &[(ExampleRecord, Table)],
    client: &dyn LlmClient,
    cfg: &InstructionConfig,
    opts: &BuildOptions,
) -> TrainingRun {
    let results = parallel_map(examples, opts.concurrency, |(ex, t)| {
        process_example(ex, t, client, cfg, opts.max_refine_rounds)
    });
    let mut run = TrainingRun::default();
    for (outcome, record) in results {
        run.log = run.log.merge(RunLog::of(&outcome));
        run.outcomes.push(outcome);
        run.records.extend(record);
    }
    run
}
