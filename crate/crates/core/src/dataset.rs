//! WikiTQ-style example files: tab-separated `id`, `utterance`, table path,
//! `targetValue`, with `\n`, `\p` (pipe) and `\\` escapes and `|` between
//! the values of a multi-value target.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerValue;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub question: String,
    pub table_ref: String,
    pub gold: AnswerValue,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatasetError {
    #[error("line {line}: expected 4 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
}

pub fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('p') => out.push('|'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Parses a dataset file. A first line starting with `id<TAB>` is treated
/// as a header and skipped; blank lines are ignored.
pub fn parse_dataset_tsv(text: &str) -> Result<Vec<ExampleRecord>, DatasetError> {
    let mut out: Vec<ExampleRecord> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || (i == 0 && line.starts_with("id\t")) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, question, table_ref, target] = fields[..] else {
            return Err(DatasetError::FieldCount {
                line: i + 1,
                found: fields.len(),
            });
        };
        if !seen.insert(id.to_owned()) {
            return Err(DatasetError::DuplicateId {
                line: i + 1,
                id: id.to_owned(),
            });
        }
        out.push(ExampleRecord {
            id: id.to_owned(),
            question: unescape(question),
            table_ref: unescape(table_ref),
            gold: target.split('|').map(unescape).collect(),
        });
    }
    Ok(out)
}
