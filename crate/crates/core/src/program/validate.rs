use serde::Serialize;

use super::exec::group_output_name;
use super::{Operation, StepProgram};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    UnknownColumn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub step_index: usize,
    pub column: String,
    pub kind: DiagnosticKind,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            DiagnosticKind::UnknownColumn => write!(f, "step {}: unknown column {:?}", self.step_index, self.column),
        }
    }
}

/// Checks every column reference against the columns that exist at that
/// step, following the schema changes made by `select`, `compute` and
/// `group`. Returns one diagnostic per unknown reference.
pub fn validate_against_schema(p: &StepProgram, t: &Table) -> Vec<Diagnostic> {
    let mut columns: Vec<String> = t.column_names().map(str::to_owned).collect();
    let mut out = Vec::new();
    for (step_index, _, op) in p.operations() {
        for c in op.referenced_columns() {
            if !columns.iter().any(|k| k == c) {
                out.push(Diagnostic {
                    step_index,
                    column: c.to_owned(),
                    kind: DiagnosticKind::UnknownColumn,
                });
            }
        }
        match op {
            Operation::Select { columns: picked } => columns = picked.clone(),
            Operation::Compute { target, .. } => {
                if !columns.contains(target) {
                    columns.push(target.clone());
                }
            }
            Operation::GroupAggregate { key, func, value } => {
                columns = vec![key.clone(), group_output_name(key, *func, value)];
            }
            _ => {}
        }
    }
    out
}
