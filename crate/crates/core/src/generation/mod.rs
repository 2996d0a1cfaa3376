//! Prompting an LLM for step programs, repairing wrong ones with execution
//! feedback, and assembling verified training records.

mod client;
mod pipeline;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerValue;
use crate::eval::fuzzy_match;
use crate::program::{parse_program, AnswerSource, ParseError, ProgramErrorKind, StepProgram};
use crate::table::{serialize_for_prompt, Table};

pub use client::{
    HttpChatClient, HttpChatConfig, LlmClient, LlmError, RetryPolicy, RetryingClient, ScriptedClient,
};
pub use pipeline::{
    build_training_set, process_example, Attempt, BuildOptions, ExampleOutcome, ExampleStatus, ProducedBy, RunLog, TrainingRecord,
    TrainingRun, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub table: String,
    pub question: String,
    pub program: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstructionConfig {
    pub max_table_rows: usize,
    pub include_robustness_rules: bool,
    pub include_constraint_rules: bool,
    pub few_shot_examples: Vec<FewShotExample>,
}

impl Default for InstructionConfig {
    fn default() -> Self {
        InstructionConfig {
            max_table_rows: 30,
            include_robustness_rules: true,
            include_constraint_rules: true,
            few_shot_examples: Vec::new(),
        }
    }
}

const TASK: &str = "\
## Task
Write a step program that answers the question about the table below. \
The program runs on the table exactly as shown, one step at a time.
";

const GRAMMAR: &str = "\
## Program language
A program is a list of steps. Each step is a tag line `# TAG: comment` \
followed by exactly one operation line.
Tags: PLAN, FILTER, PARSING, AGGREGATE, SELECT, SORT, LIMIT, COMPUTE, GROUP, ANSWER.
Operations (COL is a column name; put names with spaces in double quotes):
  filter COL eq|ne|lt|le|gt|ge LITERAL
  filter COL contains \"text\"
  filter COL is-missing | not-missing
  parse_numeric COL            (cells that are not numbers become missing)
  parse_date COL               (cells that are not dates become missing)
  aggregate sum|mean|min|max|count|count-distinct COL
  select COL [COL ...]
  sort COL asc|desc
  limit N [from_start|from_end]
  compute NEW = COL +|-|*|/ COL_OR_NUMBER
  group KEY sum|mean|min|max|count|count-distinct VALUE
  answer COL | answer scalar
Literals: \"text\", 42, -3.5, @2004-03-05.
Text comparisons with lt/le/gt/ge are by character codes, so parse numbers first.
`answer scalar` returns the result of the last aggregate.
";

const PLAN_RULE: &str = "\
## Planning
The first line must be `# PLAN: ` followed by a one-line plan for the whole program. \
The PLAN line has no operation. The last step is `# ANSWER:` with an `answer` line.
";

const ROBUSTNESS: &str = "\
## Robustness
- Parse numbers and dates with parse_numeric / parse_date before comparing or aggregating them.
- Handle missing values; unparseable cells become missing and are skipped by aggregates.
- Exclude summary rows such as totals or averages before aggregating.
";

const CONSTRAINTS: &str = "\
## Output constraints
- Return exactly as many values as the question asks for, in the order it implies.
- The answer is always a list; a single value is a list of one.
- Derive the answer from the table. Do not write the answer as a literal.
- Reply with the program only, without explanations.
";

fn table_and_question(out: &mut String, t: &Table, q: &str, max_rows: usize) {
    let _ = write!(out, "## Table\n{}\n\n## Question\n{}\n", serialize_for_prompt(t, max_rows), q.trim());
}

/// The generation prompt. Sections appear in a fixed order: task, grammar,
/// plan requirement, robustness rules, output constraints, few-shot
/// examples, table, question. Pure.
pub fn build_instruction(t: &Table, q: &str, cfg: &InstructionConfig) -> String {
    let mut out = String::new();
    for section in [Some(TASK), Some(GRAMMAR), Some(PLAN_RULE)]
        .into_iter()
        .chain([
            cfg.include_robustness_rules.then_some(ROBUSTNESS),
            cfg.include_constraint_rules.then_some(CONSTRAINTS),
        ])
        .flatten()
    {
        out.push_str(section);
        out.push('\n');
    }
    if !cfg.few_shot_examples.is_empty() {
        out.push_str("## Examples\n");
        for ex in &cfg.few_shot_examples {
            let _ = write!(
                out,
                "Table:\n{}\nQuestion: {}\nProgram:\n{}\n\n",
                ex.table.trim_end(),
                ex.question.trim(),
                ex.program.trim_end()
            );
        }
    }
    table_and_question(&mut out, t, q, cfg.max_table_rows);
    out
}

/// What running the failed program produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    Answer(AnswerValue),
    Error(String),
}

#[derive(Debug, Clone)]
pub struct RefinementContext<'a> {
    pub table: &'a Table,
    pub question: &'a str,
    pub failed_program: &'a str,
    pub execution_output: Feedback,
    pub gold: &'a AnswerValue,
}

/// The repair prompt: same grammar and PLAN rule as generation, plus the
/// failed program, what it produced and the expected answer.
pub fn build_refinement_prompt(ctx: &RefinementContext<'_>, cfg: &InstructionConfig) -> String {
    let mut out = String::from(
        "## Task\nThe program below gives the wrong result for the question. \
Write a corrected program in the same commented format.\n\n",
    );
    out.push_str(GRAMMAR);
    out.push('\n');
    out.push_str(PLAN_RULE);
    out.push('\n');
    if cfg.include_robustness_rules {
        out.push_str(ROBUSTNESS);
        out.push('\n');
    }
    if cfg.include_constraint_rules {
        out.push_str(CONSTRAINTS);
        out.push('\n');
    }
    table_and_question(&mut out, ctx.table, ctx.question, cfg.max_table_rows);
    let _ = write!(out, "\n## Previous program\n{}\n", ctx.failed_program.trim_end());
    match &ctx.execution_output {
        Feedback::Answer(a) => {
            let _ = write!(out, "\n## Its result\n{a}\n");
        }
        Feedback::Error(e) => {
            let _ = write!(out, "\n## Its error\n{e}\n");
        }
    }
    let _ = write!(
        out,
        "\n## Expected answer\n{}\n\nThe corrected program must compute this answer from the table.\n",
        ctx.gold
    );
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerationError {
    #[error("{0}")]
    Transport(#[from] LlmError),
    #[error("reply is not a step program ({error})")]
    Unparseable { raw: String, error: ParseError },
    #[error("reply has no leading # PLAN line")]
    MissingPlan { raw: String },
}

impl GenerationError {
    pub fn raw(&self) -> Option<&str> {
        match self {
            GenerationError::Transport(_) => None,
            GenerationError::Unparseable { raw, .. } | GenerationError::MissingPlan { raw } => Some(raw),
        }
    }
}

/// A parsed completion together with the text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub program: StepProgram,
    pub raw: String,
}

/// Pulls the program out of a completion: the body of the first fenced code
/// block if there is one, otherwise the whole text.
pub fn extract_program_text(raw: &str) -> &str {
    let Some(start) = raw.find("```") else {
        return raw;
    };
    let after = &raw[start + 3..];
    let body = after.split_once('\n').map_or("", |(_, rest)| rest);
    match body.find("```") {
        Some(end) => &body[..end],
        None => body,
    }
}

pub fn parse_completion(raw: String) -> Result<Generated, GenerationError> {
    match parse_program(extract_program_text(&raw)) {
        Ok(program) => Ok(Generated { program, raw }),
        Err(e) if e.kind == ProgramErrorKind::MissingPlan => Err(GenerationError::MissingPlan { raw }),
        Err(error) => Err(GenerationError::Unparseable { raw, error }),
    }
}

pub fn generate_program(
    client: &dyn LlmClient,
    t: &Table,
    q: &str,
    cfg: &InstructionConfig,
) -> Result<Generated, GenerationError> {
    let raw = client.complete(&build_instruction(t, q, cfg))?;
    parse_completion(raw)
}

pub fn refine_program(
    client: &dyn LlmClient,
    ctx: &RefinementContext<'_>,
    cfg: &InstructionConfig,
) -> Result<Generated, GenerationError> {
    let raw = client.complete(&build_refinement_prompt(ctx, cfg))?;
    parse_completion(raw)
}

/// True when the program answers with literals that already match `gold`,
/// so nothing was derived from the table.
pub fn is_trivial_copy(p: &StepProgram, gold: &AnswerValue) -> bool {
    match p.answer_source() {
        AnswerSource::Literals(lits) => fuzzy_match(&lits.iter().map(|l| l.render()).collect(), gold),
        _ => false,
    }
}
