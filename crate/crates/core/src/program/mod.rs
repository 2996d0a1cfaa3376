//! Commented step programs.
//!
//! A program is an ordered list of steps. Every step carries a tag and a short
//! reasoning comment; every step except the leading `PLAN` also carries one
//! table operation. The last step is always the `ANSWER` step.
//!
//! ```text
//! # PLAN: Filter GameStorm 10-15 and average the attendance.
//! # FILTER: Keep the relevant iterations.
//! filter Iteration ge "GameStorm 10"
//! # FILTER: Upper bound.
//! filter Iteration le "GameStorm 15"
//! # PARSING: Attendance as numbers.
//! parse_numeric Attendance
//! # AGGREGATE: Mean attendance.
//! aggregate mean Attendance
//! # ANSWER:
//! answer scalar
//! ```

mod exec;
mod syntax;
mod validate;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;

use crate::table::{render_date, Number};

pub use exec::{execute, ExecErrorKind, ExecutionError, ExecutionResult, TraceEntry};
pub use syntax::{parse_program, render_operation, render_program, ParseError};
pub use validate::{validate_against_schema, Diagnostic, DiagnosticKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagKind {
    Plan,
    Filter,
    Parsing,
    Aggregate,
    Select,
    Sort,
    Limit,
    Compute,
    Group,
    Answer,
}

impl TagKind {
    pub const ALL: [TagKind; 10] = [
        TagKind::Plan,
        TagKind::Filter,
        TagKind::Parsing,
        TagKind::Aggregate,
        TagKind::Select,
        TagKind::Sort,
        TagKind::Limit,
        TagKind::Compute,
        TagKind::Group,
        TagKind::Answer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TagKind::Plan => "PLAN",
            TagKind::Filter => "FILTER",
            TagKind::Parsing => "PARSING",
            TagKind::Aggregate => "AGGREGATE",
            TagKind::Select => "SELECT",
            TagKind::Sort => "SORT",
            TagKind::Limit => "LIMIT",
            TagKind::Compute => "COMPUTE",
            TagKind::Group => "GROUP",
            TagKind::Answer => "ANSWER",
        }
    }
}

impl fmt::Display for TagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TagKind {
    type Err = ();

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self, ()> {
        TagKind::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $kw:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $kw),+ }
            }
        }

        impl FromStr for $name {
            type Err = ();
            fn from_str(s: &str) -> Result<Self, ()> {
                match s { $($kw => Ok($name::$variant),)+ _ => Err(()) }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(Comparator {
    Eq => "eq",
    Ne => "ne",
    Lt => "lt",
    Le => "le",
    Gt => "gt",
    Ge => "ge",
    Contains => "contains",
    IsMissing => "is-missing",
    NotMissing => "not-missing",
});

keyword_enum!(AggFn {
    Sum => "sum",
    Mean => "mean",
    Min => "min",
    Max => "max",
    Count => "count",
    CountDistinct => "count-distinct",
});

keyword_enum!(SortOrder {
    Asc => "asc",
    Desc => "desc",
});

keyword_enum!(LimitFrom {
    Start => "from_start",
    End => "from_end",
});

keyword_enum!(ArithOp {
    Add => "+",
    Sub => "-",
    Mul => "*",
    Div => "/",
});

impl Comparator {
    pub fn takes_literal(self) -> bool {
        !matches!(self, Comparator::IsMissing | Comparator::NotMissing)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Text(String),
    Number(Number),
    Date(NaiveDate),
}

impl Literal {
    /// The value as it appears in an answer.
    pub fn render(&self) -> String {
        match self {
            Literal::Text(s) => s.clone(),
            Literal::Number(n) => n.to_string(),
            Literal::Date(d) => render_date(*d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Column(String),
    Number(Number),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AnswerSource {
    /// Non-missing values of a column, top to bottom.
    Column(String),
    /// The result of the most recent `aggregate` step.
    Scalar,
    /// Values written directly into the program.
    Literals(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operation {
    Filter {
        column: String,
        cmp: Comparator,
        literal: Option<Literal>,
    },
    ParseNumeric {
        column: String,
    },
    ParseDate {
        column: String,
    },
    Aggregate {
        func: AggFn,
        column: String,
    },
    Select {
        columns: Vec<String>,
    },
    Sort {
        column: String,
        order: SortOrder,
    },
    Limit {
        n: usize,
        from: LimitFrom,
    },
    Compute {
        target: String,
        left: String,
        op: ArithOp,
        right: Operand,
    },
    GroupAggregate {
        key: String,
        func: AggFn,
        value: String,
    },
    Answer(AnswerSource),
}

impl Operation {
    /// Column names this operation reads.
    pub fn referenced_columns(&self) -> Vec<&str> {
        match self {
            Operation::Filter { column, .. }
            | Operation::ParseNumeric { column }
            | Operation::ParseDate { column }
            | Operation::Aggregate { column, .. }
            | Operation::Sort { column, .. } => vec![column],
            Operation::Select { columns } => columns.iter().map(String::as_str).collect(),
            Operation::Limit { .. } => vec![],
            Operation::Compute { left, right, .. } => match right {
                Operand::Column(r) => vec![left, r],
                Operand::Number(_) => vec![left],
            },
            Operation::GroupAggregate { key, value, .. } => vec![key, value],
            Operation::Answer(AnswerSource::Column(c)) => vec![c],
            Operation::Answer(_) => vec![],
        }
    }

    pub(crate) fn check(&self) -> Result<(), ProgramErrorKind> {
        let arity = |msg: &str| Err(ProgramErrorKind::ArityError(msg.to_owned()));
        for c in self.referenced_columns() {
            if c.is_empty() {
                return arity("column name is empty");
            }
        }
        match self {
            Operation::Filter { cmp, literal, .. } => match (cmp.takes_literal(), literal) {
                (true, None) => arity(&format!("comparator {cmp} needs a literal")),
                (false, Some(_)) => arity(&format!("comparator {cmp} takes no literal")),
                (_, Some(lit)) if *cmp == Comparator::Contains && !matches!(lit, Literal::Text(_)) => {
                    Err(ProgramErrorKind::InvalidLiteral(
                        "contains needs a quoted text literal".into(),
                    ))
                }
                _ => Ok(()),
            },
            Operation::Select { columns } => {
                if columns.is_empty() {
                    return arity("select needs at least one column");
                }
                for (i, c) in columns.iter().enumerate() {
                    if columns[..i].contains(c) {
                        return arity(&format!("column {c:?} selected twice"));
                    }
                }
                Ok(())
            }
            Operation::Compute { target, .. } if target.is_empty() => arity("compute target is empty"),
            Operation::Answer(AnswerSource::Literals(lits)) if lits.is_empty() => {
                arity("answer needs a source")
            }
            _ => Ok(()),
        }
    }

    pub fn is_answer(&self) -> bool {
        matches!(self, Operation::Answer(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub tag: TagKind,
    pub comment: String,
    pub op: Option<Operation>,
}

impl Step {
    pub fn plan(comment: impl Into<String>) -> Self {
        Step {
            tag: TagKind::Plan,
            comment: comment.into(),
            op: None,
        }
    }

    pub fn new(tag: TagKind, comment: impl Into<String>, op: Operation) -> Self {
        Step {
            tag,
            comment: comment.into(),
            op: Some(op),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramErrorKind {
    #[error("program must start with a `# PLAN:` line")]
    MissingPlan,
    #[error("the PLAN comment is empty")]
    EmptyPlan,
    #[error("PLAN appears more than once")]
    DuplicatePlan,
    #[error("unknown step tag {0:?}")]
    UnknownTag(String),
    #[error("unknown operation {0:?}")]
    UnknownOperation(String),
    #[error("wrong arguments: {0}")]
    ArityError(String),
    #[error("invalid literal: {0}")]
    InvalidLiteral(String),
    #[error("step has no operation line")]
    MissingOperation,
    #[error("more than one operation line under a single tag")]
    ExtraOperation,
    #[error("the PLAN step cannot carry an operation")]
    PlanWithOperation,
    #[error("`answer` must appear exactly once, under the ANSWER tag")]
    MisplacedAnswer,
    #[error("program has no ANSWER step")]
    MissingAnswer,
    #[error("content after the ANSWER step")]
    TrailingGarbage,
    #[error("comments must be a single line")]
    MultilineComment,
}

/// A validated program: PLAN first with a non-empty comment, exactly one
/// ANSWER step and it is last, one operation on every other step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepProgram {
    steps: Vec<Step>,
}

impl StepProgram {
    /// Validates `steps`. Comments are trimmed. On failure, returns the index
    /// of the offending step with the reason.
    pub fn new(mut steps: Vec<Step>) -> Result<Self, (usize, ProgramErrorKind)> {
        for s in steps.iter_mut() {
            let trimmed = s.comment.trim();
            if trimmed.len() != s.comment.len() {
                s.comment = trimmed.to_owned();
            }
        }
        let Some(first) = steps.first() else {
            return Err((0, ProgramErrorKind::MissingPlan));
        };
        if first.tag != TagKind::Plan {
            return Err((0, ProgramErrorKind::MissingPlan));
        }
        if first.comment.is_empty() {
            return Err((0, ProgramErrorKind::EmptyPlan));
        }
        let mut answer_at = None;
        for (i, step) in steps.iter().enumerate() {
            if step.comment.contains(['\n', '\r']) {
                return Err((i, ProgramErrorKind::MultilineComment));
            }
            if answer_at.is_some() {
                return Err((i, ProgramErrorKind::TrailingGarbage));
            }
            match (step.tag, &step.op) {
                (TagKind::Plan, _) if i > 0 => return Err((i, ProgramErrorKind::DuplicatePlan)),
                (TagKind::Plan, Some(_)) => return Err((i, ProgramErrorKind::PlanWithOperation)),
                (TagKind::Plan, None) => {}
                (_, None) => return Err((i, ProgramErrorKind::MissingOperation)),
                (tag, Some(op)) => {
                    if (tag == TagKind::Answer) != op.is_answer() {
                        return Err((i, ProgramErrorKind::MisplacedAnswer));
                    }
                    op.check().map_err(|e| (i, e))?;
                    if tag == TagKind::Answer {
                        answer_at = Some(i);
                    }
                }
            }
        }
        if answer_at.is_none() {
            return Err((steps.len(), ProgramErrorKind::MissingAnswer));
        }
        Ok(StepProgram { steps })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn plan(&self) -> &str {
        &self.steps[0].comment
    }

    /// Number of operation-bearing steps (every step except PLAN).
    pub fn operation_count(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn operations(&self) -> impl Iterator<Item = (usize, &Step, &Operation)> {
        self.steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.op.as_ref().map(|op| (i, s, op)))
    }

    pub fn answer_source(&self) -> &AnswerSource {
        match self.steps.last().and_then(|s| s.op.as_ref()) {
            Some(Operation::Answer(src)) => src,
            _ => unreachable!("validated program ends with an answer step"),
        }
    }
}

impl fmt::Display for StepProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_program(self))
    }
}

impl FromStr for StepProgram {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_program(s)
    }
}
