//! File formats: line-delimited JSON records, answer files, table files, and
//! atomic writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerValue;
use crate::table::{normalize_table, parse_table, NormalizationConfig, Table, TableError, TableFormat};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Record { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Table { path: PathBuf, source: TableError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes via a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| IoError::Io {
        path: path.to_owned(),
        source: e.error,
    })?;
    Ok(())
}

/// One JSON value per non-blank line.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<T>, IoError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| IoError::Record {
                path: path.to_owned(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    parse_jsonl(&read_text(path)?, path)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IoError> {
    write_atomic(path, to_jsonl(items).as_bytes())
}

/// `{id, values, trace?}`: predictions, golds, corrections and end-to-end
/// answers all use this shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerLine {
    pub id: String,
    pub values: AnswerValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

/// Reads an answer file into a map. Duplicate ids are an error.
pub fn read_answers(path: &Path) -> Result<BTreeMap<String, AnswerLine>, IoError> {
    let lines: Vec<AnswerLine> = read_jsonl(path)?;
    let mut out = BTreeMap::new();
    for (i, l) in lines.into_iter().enumerate() {
        let id = l.id.clone();
        if out.insert(id.clone(), l).is_some() {
            return Err(IoError::Record {
                path: path.to_owned(),
                line: i + 1,
                message: format!("duplicate id {id:?}"),
            });
        }
    }
    Ok(out)
}

pub fn read_answer_map(path: &Path) -> Result<BTreeMap<String, AnswerValue>, IoError> {
    Ok(read_answers(path)?.into_iter().map(|(k, v)| (k, v.values)).collect())
}

/// Reads a table file (format from the extension, `.csv` / `.tsv`, anything
/// else is pipe-separated) and normalizes it.
pub fn load_table(path: &Path, cfg: &NormalizationConfig) -> Result<Table, IoError> {
    let raw = read_text(path)?;
    let t = parse_table(&raw, TableFormat::from_path(path)).map_err(|source| IoError::Table {
        path: path.to_owned(),
        source,
    })?;
    Ok(normalize_table(&t, cfg))
}
