//! Deterministic execution of step programs over a working copy of a table.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use super::{
    render_operation, AggFn, AnswerSource, ArithOp, Comparator, LimitFrom, Literal, Operand,
    Operation, SortOrder, StepProgram, TagKind,
};
use crate::answer::AnswerValue;
use crate::table::{coerce_date, coerce_numeric, CellValue, Column, Number, Table};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecErrorKind {
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("{0} over zero non-missing values")]
    EmptyAggregate(AggFn),
    #[error("division by zero")]
    DivideByZero,
    #[error("limit {n} out of range for {rows} rows")]
    LimitOutOfRange { n: usize, rows: usize },
    #[error("`answer scalar` without a preceding aggregate step")]
    MissingScalar,
    #[error("arithmetic result is not a finite number")]
    NumericOverflow,
}

impl ExecErrorKind {
    /// Stable name of the error class.
    pub fn class(&self) -> &'static str {
        match self {
            ExecErrorKind::UnknownColumn(_) => "UnknownColumn",
            ExecErrorKind::TypeMismatch(_) => "TypeMismatch",
            ExecErrorKind::EmptyAggregate(_) => "EmptyAggregate",
            ExecErrorKind::DivideByZero => "DivideByZero",
            ExecErrorKind::LimitOutOfRange { .. } => "LimitOutOfRange",
            ExecErrorKind::MissingScalar => "MissingScalar",
            ExecErrorKind::NumericOverflow => "NumericOverflow",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("step {step_index} ({tag}): {kind}")]
pub struct ExecutionError {
    pub step_index: usize,
    pub tag: TagKind,
    pub kind: ExecErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub step_index: usize,
    pub tag: String,
    pub operation: String,
    pub rows_after: usize,
    pub cols_after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionResult {
    pub answer: AnswerValue,
    pub trace: Vec<TraceEntry>,
}

struct Frame {
    columns: Vec<Column>,
    rows: usize,
    scalar: Option<CellValue>,
}

type Exec<T> = Result<T, ExecErrorKind>;

impl Frame {
    fn index(&self, name: &str) -> Exec<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| ExecErrorKind::UnknownColumn(name.to_owned()))
    }

    fn keep_rows(&mut self, rows: &[usize]) {
        for col in self.columns.iter_mut() {
            col.cells = rows.iter().map(|&r| col.cells[r].clone()).collect();
        }
        self.rows = rows.len();
    }
}

fn mismatch(cell: &CellValue, wanted: &str) -> ExecErrorKind {
    ExecErrorKind::TypeMismatch(format!("{} value compared with {wanted}", cell.type_name()))
}

fn literal_type(lit: &Literal) -> &'static str {
    match lit {
        Literal::Text(_) => "text",
        Literal::Number(_) => "number",
        Literal::Date(_) => "date",
    }
}

/// Ordering between a non-missing cell and a literal of the same type.
/// Text compares by code point.
fn compare(cell: &CellValue, lit: &Literal) -> Exec<Ordering> {
    match (cell, lit) {
        (CellValue::Text(a), Literal::Text(b)) => Ok(a.as_str().cmp(b.as_str())),
        (CellValue::Number(a), Literal::Number(b)) => Ok(a.cmp(b)),
        (CellValue::Date(a), Literal::Date(b)) => Ok(a.cmp(b)),
        _ => Err(mismatch(cell, &format!("{} literal", literal_type(lit)))),
    }
}

fn filter_matches(cell: &CellValue, cmp: Comparator, lit: Option<&Literal>) -> Exec<bool> {
    match cmp {
        Comparator::IsMissing => return Ok(cell.is_missing()),
        Comparator::NotMissing => return Ok(!cell.is_missing()),
        _ => {}
    }
    if cell.is_missing() {
        return Ok(false);
    }
    let lit = lit.expect("validated comparator has a literal");
    if cmp == Comparator::Contains {
        return match (cell, lit) {
            (CellValue::Text(a), Literal::Text(b)) => Ok(a.contains(b.as_str())),
            _ => Err(mismatch(cell, "text literal")),
        };
    }
    let ord = compare(cell, lit)?;
    Ok(match cmp {
        Comparator::Eq => ord == Ordering::Equal,
        Comparator::Ne => ord != Ordering::Equal,
        Comparator::Lt => ord == Ordering::Less,
        Comparator::Le => ord != Ordering::Greater,
        Comparator::Gt => ord == Ordering::Greater,
        Comparator::Ge => ord != Ordering::Less,
        _ => unreachable!(),
    })
}

/// Orders two non-missing cells of the same type.
fn cell_cmp(a: &CellValue, b: &CellValue) -> Ordering {
    match (a, b) {
        (CellValue::Text(x), CellValue::Text(y)) => x.as_str().cmp(y.as_str()),
        (CellValue::Number(x), CellValue::Number(y)) => x.cmp(y),
        (CellValue::Date(x), CellValue::Date(y)) => x.cmp(y),
        _ => unreachable!("homogeneous values"),
    }
}

/// Fails unless every non-missing cell has the same type.
fn check_homogeneous<'a>(cells: impl IntoIterator<Item = &'a CellValue>) -> Exec<()> {
    let mut first: Option<&CellValue> = None;
    for c in cells.into_iter().filter(|c| !c.is_missing()) {
        match first {
            None => first = Some(c),
            Some(f) if std::mem::discriminant(f) != std::mem::discriminant(c) => {
                return Err(ExecErrorKind::TypeMismatch(format!(
                    "column mixes {} and {} values",
                    f.type_name(),
                    c.type_name()
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_numeric<'a>(cells: impl IntoIterator<Item = &'a CellValue>, func: AggFn) -> Exec<()> {
    for c in cells {
        if !matches!(c, CellValue::Number(_) | CellValue::Missing) {
            return Err(ExecErrorKind::TypeMismatch(format!(
                "{func} needs numbers, found a {} value (use parse_numeric first)",
                c.type_name()
            )));
        }
    }
    Ok(())
}

fn finite(v: f64) -> Exec<CellValue> {
    Number::new(v)
        .map(CellValue::Number)
        .ok_or(ExecErrorKind::NumericOverflow)
}

/// Type checks for `func` over a whole column.
fn check_aggregate(cells: &[CellValue], func: AggFn) -> Exec<()> {
    match func {
        AggFn::Sum | AggFn::Mean => check_numeric(cells, func),
        AggFn::Min | AggFn::Max => check_homogeneous(cells),
        AggFn::Count | AggFn::CountDistinct => Ok(()),
    }
}

/// Aggregates the non-missing values among `cells`, which must already have
/// passed [`check_aggregate`]. `None` means the function is undefined on zero
/// values.
fn aggregate<'a>(
    cells: impl IntoIterator<Item = &'a CellValue>,
    func: AggFn,
) -> Exec<Option<CellValue>> {
    let values: Vec<&CellValue> = cells.into_iter().filter(|c| !c.is_missing()).collect();
    let numbers = || {
        values.iter().map(|c| match c {
            CellValue::Number(n) => n.get(),
            _ => unreachable!("checked numeric"),
        })
    };
    Ok(match func {
        AggFn::Count => Some(finite(values.len() as f64)?),
        AggFn::CountDistinct => {
            let distinct: HashSet<&CellValue> = values.iter().copied().collect();
            Some(finite(distinct.len() as f64)?)
        }
        AggFn::Sum => Some(finite(numbers().sum())?),
        AggFn::Mean if values.is_empty() => None,
        AggFn::Mean => Some(finite(numbers().sum::<f64>() / values.len() as f64)?),
        AggFn::Min => values
            .iter()
            .copied()
            .reduce(|a, b| if cell_cmp(b, a) == Ordering::Less { b } else { a })
            .cloned(),
        AggFn::Max => values
            .iter()
            .copied()
            .reduce(|a, b| if cell_cmp(b, a) == Ordering::Greater { b } else { a })
            .cloned(),
    })
}

/// Name of the value column produced by `group KEY FUNC VALUE`.
pub(crate) fn group_output_name(key: &str, func: AggFn, value: &str) -> String {
    let mut name = format!("{func}_{value}");
    while name == key {
        name.push('_');
    }
    name
}

fn arith(l: f64, op: ArithOp, r: f64) -> Exec<CellValue> {
    let v = match op {
        ArithOp::Add => l + r,
        ArithOp::Sub => l - r,
        ArithOp::Mul => l * r,
        ArithOp::Div if r == 0.0 => return Err(ExecErrorKind::DivideByZero),
        ArithOp::Div => l / r,
    };
    finite(v)
}

fn apply(frame: &mut Frame, op: &Operation) -> Exec<Option<AnswerValue>> {
    match op {
        Operation::Filter {
            column,
            cmp,
            literal,
        } => {
            let idx = frame.index(column)?;
            let mut keep = Vec::new();
            for (row, cell) in frame.columns[idx].cells.iter().enumerate() {
                if filter_matches(cell, *cmp, literal.as_ref())? {
                    keep.push(row);
                }
            }
            frame.keep_rows(&keep);
        }
        Operation::ParseNumeric { column } => {
            let idx = frame.index(column)?;
            let col = &mut frame.columns[idx];
            col.cells = col.cells.iter().map(coerce_numeric).collect();
        }
        Operation::ParseDate { column } => {
            let idx = frame.index(column)?;
            let col = &mut frame.columns[idx];
            col.cells = col.cells.iter().map(coerce_date).collect();
        }
        Operation::Aggregate { func, column } => {
            let idx = frame.index(column)?;
            let cells = &frame.columns[idx].cells;
            check_aggregate(cells, *func)?;
            let value = aggregate(cells, *func)?.ok_or(ExecErrorKind::EmptyAggregate(*func))?;
            frame.scalar = Some(value);
        }
        Operation::Select { columns } => {
            let picked = columns
                .iter()
                .map(|c| frame.index(c).map(|i| frame.columns[i].clone()))
                .collect::<Exec<Vec<_>>>()?;
            frame.columns = picked;
        }
        Operation::Sort { column, order } => {
            let idx = frame.index(column)?;
            let cells = &frame.columns[idx].cells;
            check_homogeneous(cells)?;
            let mut rows: Vec<usize> = (0..frame.rows).collect();
            // Missing sorts last in both directions.
            rows.sort_by(|&a, &b| match (&cells[a], &cells[b]) {
                (CellValue::Missing, CellValue::Missing) => Ordering::Equal,
                (CellValue::Missing, _) => Ordering::Greater,
                (_, CellValue::Missing) => Ordering::Less,
                (x, y) => match order {
                    SortOrder::Asc => cell_cmp(x, y),
                    SortOrder::Desc => cell_cmp(y, x),
                },
            });
            frame.keep_rows(&rows);
        }
        Operation::Limit { n, from } => {
            if *n == 0 || *n > frame.rows {
                return Err(ExecErrorKind::LimitOutOfRange {
                    n: *n,
                    rows: frame.rows,
                });
            }
            let rows: Vec<usize> = match from {
                LimitFrom::Start => (0..*n).collect(),
                LimitFrom::End => (frame.rows - n..frame.rows).collect(),
            };
            frame.keep_rows(&rows);
        }
        Operation::Compute {
            target,
            left,
            op,
            right,
        } => {
            let li = frame.index(left)?;
            let ri = match right {
                Operand::Column(c) => Some(frame.index(c)?),
                Operand::Number(_) => None,
            };
            let mut out = Vec::with_capacity(frame.rows);
            for row in 0..frame.rows {
                let l = &frame.columns[li].cells[row];
                let r = match (ri, right) {
                    (Some(i), _) => frame.columns[i].cells[row].clone(),
                    (None, Operand::Number(n)) => CellValue::Number(*n),
                    (None, Operand::Column(_)) => unreachable!(),
                };
                out.push(match (l, &r) {
                    (CellValue::Missing, _) | (_, CellValue::Missing) => CellValue::Missing,
                    (CellValue::Number(a), CellValue::Number(b)) => arith(a.get(), *op, b.get())?,
                    (CellValue::Number(_), other) | (other, _) => {
                        return Err(ExecErrorKind::TypeMismatch(format!(
                            "compute needs numbers, found a {} value",
                            other.type_name()
                        )))
                    }
                });
            }
            match frame.columns.iter_mut().find(|c| &c.name == target) {
                Some(col) => col.cells = out,
                None => frame.columns.push(Column::new(target.clone(), out)),
            }
        }
        Operation::GroupAggregate { key, func, value } => {
            let ki = frame.index(key)?;
            let vi = frame.index(value)?;
            let values = &frame.columns[vi].cells;
            check_aggregate(values, *func)?;
            let mut order: Vec<&CellValue> = Vec::new();
            let mut groups: HashMap<&CellValue, Vec<&CellValue>> = HashMap::new();
            for (k, v) in frame.columns[ki].cells.iter().zip(values) {
                groups
                    .entry(k)
                    .or_insert_with(|| {
                        order.push(k);
                        Vec::new()
                    })
                    .push(v);
            }
            let mut keys = Vec::with_capacity(order.len());
            let mut results = Vec::with_capacity(order.len());
            for k in order {
                let agg = aggregate(groups[k].iter().copied(), *func)?;
                keys.push(k.clone());
                results.push(agg.unwrap_or(CellValue::Missing));
            }
            let rows = keys.len();
            frame.columns = vec![
                Column::new(key.clone(), keys),
                Column::new(group_output_name(key, *func, value), results),
            ];
            frame.rows = rows;
        }
        Operation::Answer(source) => {
            let answer = match source {
                AnswerSource::Column(c) => {
                    let idx = frame.index(c)?;
                    frame.columns[idx]
                        .cells
                        .iter()
                        .filter(|c| !c.is_missing())
                        .map(CellValue::render)
                        .collect()
                }
                AnswerSource::Scalar => {
                    let s = frame.scalar.as_ref().ok_or(ExecErrorKind::MissingScalar)?;
                    AnswerValue::single(s.render())
                }
                AnswerSource::Literals(lits) => lits.iter().map(Literal::render).collect(),
            };
            return Ok(Some(answer));
        }
    }
    Ok(None)
}

/// Runs `p` against a private copy of `t`; `t` itself is never modified.
///
/// Filters keep matching rows in their original order, `sort` is stable with
/// missing values last, aggregates skip missing values, and `answer COLUMN`
/// returns the column's non-missing values top to bottom.
pub fn execute(p: &StepProgram, t: &Table) -> Result<ExecutionResult, ExecutionError> {
    let mut frame = Frame {
        columns: t.columns().to_vec(),
        rows: t.row_count(),
        scalar: None,
    };
    let mut trace = Vec::with_capacity(p.operation_count());
    for (step_index, step, op) in p.operations() {
        let answer = apply(&mut frame, op).map_err(|kind| ExecutionError {
            step_index,
            tag: step.tag,
            kind,
        })?;
        trace.push(TraceEntry {
            step_index,
            tag: step.tag.to_string(),
            operation: render_operation(op),
            rows_after: frame.rows,
            cols_after: frame.columns.len(),
        });
        if let Some(answer) = answer {
            return Ok(ExecutionResult { answer, trace });
        }
    }
    unreachable!("validated program ends with an answer step")
}
