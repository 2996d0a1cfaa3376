//! Line-oriented program text.
//!
//! Tag lines look like `# TAG: comment` (the colon and comment are optional
//! when reading). Every tag except PLAN is followed by one operation line.
//! An `answer` line with no tag line of its own opens an ANSWER step with an
//! empty comment.
//! Tokens on an operation line are bare words, `"double-quoted"` strings or
//! `` `backtick-quoted` `` names, with `\\`, `\"`, `` \` ``, `\n`, `\r` and
//! `\t` escapes inside quotes.
//!
//! In positions that only accept a column, any token is a column name. In
//! `answer` and on the right-hand side of `compute`, a double-quoted token is
//! a text literal, a bare number is a number literal, `@YYYY-MM-DD` is a date
//! literal, a backtick token is a column, and a bare word is a column (except
//! `scalar` in `answer`).

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::LazyLock;

use chrono::NaiveDate;
use regex::Regex;
use thiserror::Error;

use super::{
    AnswerSource, Comparator, LimitFrom, Literal, Operand, Operation, ProgramErrorKind, Step,
    StepProgram, TagKind,
};
use crate::table::{parse_number, Number};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based line number; 0 when the error concerns the program as a whole.
    pub line: usize,
    pub kind: ProgramErrorKind,
}

static TAG_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^#\s*([A-Za-z][A-Za-z_-]*)\s*(?::(.*))?$").unwrap());
static PLAIN_NAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-Za-z_][A-Za-z0-9_.\-]*$").unwrap());
static NUMBER_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[+-]?(?:\d+(?:\.\d+)?|\.\d+)$").unwrap());

const KEYWORDS: &[&str] = &[
    "filter",
    "parse_numeric",
    "parse_date",
    "aggregate",
    "select",
    "sort",
    "limit",
    "compute",
    "group",
    "answer",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Bare(String),
    Quoted(String),
    Backtick(String),
}

impl Token {
    fn text(&self) -> &str {
        match self {
            Token::Bare(s) | Token::Quoted(s) | Token::Backtick(s) => s,
        }
    }

    fn describe(&self) -> String {
        match self {
            Token::Bare(s) => s.clone(),
            Token::Quoted(s) => format!("{s:?}"),
            Token::Backtick(s) => format!("`{s}`"),
        }
    }
}

fn tokenize(line: &str) -> Result<Vec<Token>, ProgramErrorKind> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '"' || c == '`' {
            chars.next();
            let mut s = String::new();
            let mut closed = false;
            while let Some(ch) = chars.next() {
                match ch {
                    '\\' => match chars.next() {
                        Some('n') => s.push('\n'),
                        Some('r') => s.push('\r'),
                        Some('t') => s.push('\t'),
                        Some(other) => s.push(other),
                        None => break,
                    },
                    ch if ch == c => {
                        closed = true;
                        break;
                    }
                    ch => s.push(ch),
                }
            }
            if !closed {
                return Err(ProgramErrorKind::InvalidLiteral(format!(
                    "unterminated {c} quote"
                )));
            }
            tokens.push(if c == '"' {
                Token::Quoted(s)
            } else {
                Token::Backtick(s)
            });
        } else {
            let mut s = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || ch == '"' || ch == '`' {
                    break;
                }
                s.push(ch);
                chars.next();
            }
            tokens.push(Token::Bare(s));
        }
    }
    Ok(tokens)
}

fn number_literal(s: &str) -> Option<Number> {
    if NUMBER_TOKEN.is_match(s) {
        parse_number(s).and_then(Number::new)
    } else {
        None
    }
}

fn date_literal(s: &str) -> Option<NaiveDate> {
    s.strip_prefix('@')
        .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
}

fn literal(tok: &Token) -> Result<Literal, ProgramErrorKind> {
    match tok {
        Token::Quoted(s) => Ok(Literal::Text(s.clone())),
        Token::Bare(s) => number_literal(s)
            .map(Literal::Number)
            .or_else(|| date_literal(s).map(Literal::Date))
            .ok_or_else(|| {
                ProgramErrorKind::InvalidLiteral(format!(
                    "{s:?}: quote text literals, write dates as @YYYY-MM-DD"
                ))
            }),
        Token::Backtick(s) => Err(ProgramErrorKind::InvalidLiteral(format!(
            "`{s}` is a column reference, not a literal"
        ))),
    }
}

fn keyword<T: FromStr>(tok: &Token, what: &str) -> Result<T, ProgramErrorKind> {
    match tok {
        Token::Bare(s) => s.parse().map_err(|_| {
            ProgramErrorKind::ArityError(format!("expected {what}, found {s:?}"))
        }),
        other => Err(ProgramErrorKind::ArityError(format!(
            "expected {what}, found {}",
            other.describe()
        ))),
    }
}

fn expect_len(tokens: &[Token], n: usize, usage: &str) -> Result<(), ProgramErrorKind> {
    if tokens.len() == n {
        Ok(())
    } else {
        Err(ProgramErrorKind::ArityError(format!("usage: {usage}")))
    }
}

fn parse_operation(line: &str) -> Result<Operation, ProgramErrorKind> {
    let tokens = tokenize(line)?;
    let Some((Token::Bare(head), args)) = tokens.split_first() else {
        return Err(ProgramErrorKind::UnknownOperation(line.trim().to_owned()));
    };
    let col = |t: &Token| t.text().to_owned();
    match head.as_str() {
        "filter" => {
            if args.len() < 2 {
                return Err(ProgramErrorKind::ArityError(
                    "usage: filter COLUMN COMPARATOR [LITERAL]".into(),
                ));
            }
            let cmp: Comparator = keyword(&args[1], "a comparator")?;
            let literal = match &args[2..] {
                [] => None,
                [lit] => Some(literal(lit)?),
                _ => {
                    return Err(ProgramErrorKind::ArityError(
                        "filter takes at most one literal".into(),
                    ))
                }
            };
            Ok(Operation::Filter {
                column: col(&args[0]),
                cmp,
                literal,
            })
        }
        "parse_numeric" => {
            expect_len(args, 1, "parse_numeric COLUMN")?;
            Ok(Operation::ParseNumeric { column: col(&args[0]) })
        }
        "parse_date" => {
            expect_len(args, 1, "parse_date COLUMN")?;
            Ok(Operation::ParseDate { column: col(&args[0]) })
        }
        "aggregate" => {
            expect_len(args, 2, "aggregate FUNCTION COLUMN")?;
            Ok(Operation::Aggregate {
                func: keyword(&args[0], "an aggregate function")?,
                column: col(&args[1]),
            })
        }
        "select" => Ok(Operation::Select {
            columns: args.iter().map(col).collect(),
        }),
        "sort" => {
            expect_len(args, 2, "sort COLUMN asc|desc")?;
            Ok(Operation::Sort {
                column: col(&args[0]),
                order: keyword(&args[1], "asc or desc")?,
            })
        }
        "limit" => {
            if args.is_empty() || args.len() > 2 {
                return Err(ProgramErrorKind::ArityError(
                    "usage: limit N [from_start|from_end]".into(),
                ));
            }
            let n = match &args[0] {
                Token::Bare(s) => s.parse::<usize>().map_err(|_| {
                    ProgramErrorKind::InvalidLiteral(format!("{s:?} is not a row count"))
                })?,
                other => {
                    return Err(ProgramErrorKind::InvalidLiteral(format!(
                        "{} is not a row count",
                        other.describe()
                    )))
                }
            };
            let from = match args.get(1) {
                Some(t) => keyword(t, "from_start or from_end")?,
                None => LimitFrom::Start,
            };
            Ok(Operation::Limit { n, from })
        }
        "compute" => {
            expect_len(args, 5, "compute NEW = LEFT OP RIGHT")?;
            if args[1] != Token::Bare("=".into()) {
                return Err(ProgramErrorKind::ArityError(
                    "usage: compute NEW = LEFT OP RIGHT".into(),
                ));
            }
            let right = match &args[4] {
                Token::Quoted(s) => {
                    return Err(ProgramErrorKind::InvalidLiteral(format!(
                        "{s:?}: compute needs a number or a column"
                    )))
                }
                Token::Backtick(s) => Operand::Column(s.clone()),
                Token::Bare(s) => match number_literal(s) {
                    Some(n) => Operand::Number(n),
                    None if date_literal(s).is_some() => {
                        return Err(ProgramErrorKind::InvalidLiteral(format!(
                            "{s}: compute needs a number or a column"
                        )))
                    }
                    None => Operand::Column(s.clone()),
                },
            };
            Ok(Operation::Compute {
                target: col(&args[0]),
                left: col(&args[2]),
                op: keyword(&args[3], "one of + - * /")?,
                right,
            })
        }
        "group" => {
            expect_len(args, 3, "group KEY FUNCTION VALUE")?;
            Ok(Operation::GroupAggregate {
                key: col(&args[0]),
                func: keyword(&args[1], "an aggregate function")?,
                value: col(&args[2]),
            })
        }
        "answer" => {
            let source = match args {
                [] => return Err(ProgramErrorKind::ArityError("usage: answer SOURCE".into())),
                [Token::Bare(s)] if s == "scalar" => AnswerSource::Scalar,
                [Token::Backtick(s)] => AnswerSource::Column(s.clone()),
                [Token::Bare(s)] if number_literal(s).is_none() && date_literal(s).is_none() => {
                    AnswerSource::Column(s.clone())
                }
                lits => AnswerSource::Literals(lits.iter().map(literal).collect::<Result<_, _>>()?),
            };
            Ok(Operation::Answer(source))
        }
        other => Err(ProgramErrorKind::UnknownOperation(other.to_owned())),
    }
}

fn is_operation_line(line: &str) -> bool {
    let head = line.split_whitespace().next().unwrap_or("");
    KEYWORDS.contains(&head)
}

/// Parses program text into a validated [`StepProgram`].
pub fn parse_program(text: &str) -> Result<StepProgram, ParseError> {
    let mut steps: Vec<Step> = Vec::new();
    let mut step_lines: Vec<usize> = Vec::new();
    let mut saw_answer = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |kind| ParseError { line: line_no, kind };
        if saw_answer && steps.last().is_some_and(|s| s.op.is_some()) {
            return Err(err(ProgramErrorKind::TrailingGarbage));
        }
        if line.starts_with('#') {
            let caps = TAG_LINE
                .captures(line)
                .ok_or_else(|| err(ProgramErrorKind::UnknownTag(line.to_owned())))?;
            let tag: TagKind = caps[1]
                .parse()
                .map_err(|_| err(ProgramErrorKind::UnknownTag(caps[1].to_owned())))?;
            if steps.is_empty() && tag != TagKind::Plan {
                return Err(err(ProgramErrorKind::MissingPlan));
            }
            if let Some(prev) = steps.last() {
                if prev.tag != TagKind::Plan && prev.op.is_none() {
                    return Err(ParseError {
                        line: *step_lines.last().unwrap(),
                        kind: ProgramErrorKind::MissingOperation,
                    });
                }
            }
            saw_answer |= tag == TagKind::Answer;
            let comment = caps.get(2).map_or("", |m| m.as_str()).trim().to_owned();
            steps.push(Step { tag, comment, op: None });
            step_lines.push(line_no);
        } else {
            // An `answer` line may stand without its own tag line.
            if line.split_whitespace().next() == Some("answer")
                && steps
                    .last()
                    .is_some_and(|s| s.tag == TagKind::Plan || s.op.is_some())
            {
                saw_answer = true;
                steps.push(Step {
                    tag: TagKind::Answer,
                    comment: String::new(),
                    op: None,
                });
                step_lines.push(line_no);
            }
            let Some(step) = steps.last_mut() else {
                return Err(err(if is_operation_line(line) {
                    ProgramErrorKind::MissingPlan
                } else {
                    ProgramErrorKind::UnknownOperation(line.to_owned())
                }));
            };
            if step.tag == TagKind::Plan {
                return Err(err(ProgramErrorKind::PlanWithOperation));
            }
            if step.op.is_some() {
                return Err(err(ProgramErrorKind::ExtraOperation));
            }
            let op = parse_operation(line).map_err(err)?;
            op.check().map_err(err)?;
            step.op = Some(op);
        }
    }

    StepProgram::new(steps).map_err(|(i, kind)| ParseError {
        line: step_lines.get(i).copied().unwrap_or(0),
        kind,
    })
}

fn quote(s: &str, q: char) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push(q);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == q => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(q);
    out
}

/// Column in a column-only position.
fn column(name: &str) -> String {
    if PLAIN_NAME.is_match(name) {
        name.to_owned()
    } else {
        quote(name, '"')
    }
}

/// Column in a position that also accepts literals.
fn column_ref(name: &str) -> String {
    if PLAIN_NAME.is_match(name) && name != "scalar" {
        name.to_owned()
    } else {
        quote(name, '`')
    }
}

fn render_literal(lit: &Literal) -> String {
    match lit {
        Literal::Text(s) => quote(s, '"'),
        Literal::Number(n) => n.to_string(),
        Literal::Date(d) => format!("@{}", d.format("%Y-%m-%d")),
    }
}

/// Canonical single-line text of one operation.
pub fn render_operation(op: &Operation) -> String {
    match op {
        Operation::Filter {
            column: c,
            cmp,
            literal,
        } => match literal {
            Some(lit) => format!("filter {} {cmp} {}", column(c), render_literal(lit)),
            None => format!("filter {} {cmp}", column(c)),
        },
        Operation::ParseNumeric { column: c } => format!("parse_numeric {}", column(c)),
        Operation::ParseDate { column: c } => format!("parse_date {}", column(c)),
        Operation::Aggregate { func, column: c } => format!("aggregate {func} {}", column(c)),
        Operation::Select { columns } => {
            let mut s = String::from("select");
            for c in columns {
                let _ = write!(s, " {}", column(c));
            }
            s
        }
        Operation::Sort { column: c, order } => format!("sort {} {order}", column(c)),
        Operation::Limit { n, from } => format!("limit {n} {from}"),
        Operation::Compute {
            target,
            left,
            op,
            right,
        } => {
            let right = match right {
                Operand::Column(c) => column_ref(c),
                Operand::Number(n) => n.to_string(),
            };
            format!("compute {} = {} {op} {right}", column(target), column(left))
        }
        Operation::GroupAggregate { key, func, value } => {
            format!("group {} {func} {}", column(key), column(value))
        }
        Operation::Answer(AnswerSource::Scalar) => "answer scalar".to_owned(),
        Operation::Answer(AnswerSource::Column(c)) => format!("answer {}", column_ref(c)),
        Operation::Answer(AnswerSource::Literals(lits)) => {
            let mut s = String::from("answer");
            for lit in lits {
                let _ = write!(s, " {}", render_literal(lit));
            }
            s
        }
    }
}

/// Canonical program text, one line per tag and per operation, ending in a
/// newline. An ANSWER step without a comment is written as its bare `answer`
/// line. Deterministic.
pub fn render_program(p: &StepProgram) -> String {
    let mut out = String::new();
    for step in p.steps() {
        if step.tag == TagKind::Answer && step.comment.is_empty() {
            // implicit tag
        } else if step.comment.is_empty() {
            let _ = writeln!(out, "# {}:", step.tag);
        } else {
            let _ = writeln!(out, "# {}: {}", step.tag, step.comment);
        }
        if let Some(op) = &step.op {
            out.push_str(&render_operation(op));
            out.push('\n');
        }
    }
    out
}
