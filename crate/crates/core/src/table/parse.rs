use std::path::Path;
use std::str::FromStr;

use super::normalize::standardize_name;
use super::{CellValue, Column, Table, TableError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Tsv,
    /// `|`-delimited, no quoting.
    Pipe,
}

impl TableFormat {
    /// `.csv` and `.tsv` map to their formats; any other extension is read as
    /// pipe-delimited.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("csv") => TableFormat::Csv,
            Some("tsv") => TableFormat::Tsv,
            _ => TableFormat::Pipe,
        }
    }
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "tsv" => Ok(TableFormat::Tsv),
            "pipe" | "psv" => Ok(TableFormat::Pipe),
            other => Err(format!("unknown table format {other:?}")),
        }
    }
}

/// Reads a delimited table. The first record is the header; header names are
/// trimmed with inner whitespace collapsed, and blank header fields are named
/// `column{N}` (1-based). Short rows are padded with `Missing` and empty fields
/// become `Missing`; every other cell is `Text`.
pub fn parse_table(raw: &str, format: TableFormat) -> Result<Table, TableError> {
    let records = match format {
        TableFormat::Csv => delimited_records(raw, b',')?,
        TableFormat::Tsv => delimited_records(raw, b'\t')?,
        TableFormat::Pipe => pipe_records(raw),
    };
    let mut records = records.into_iter();
    let (_, header) = records.next().ok_or(TableError::EmptyInput)?;

    let names: Vec<String> = header
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let name = standardize_name(h);
            if name.is_empty() {
                format!("column{}", i + 1)
            } else {
                name
            }
        })
        .collect();

    let width = names.len();
    let mut columns: Vec<Column> = names.into_iter().map(|n| Column::new(n, Vec::new())).collect();
    let mut row_count = 0;
    for (line, mut fields) in records {
        if fields.len() > width {
            if fields[width..].iter().all(|f| f.is_empty()) {
                fields.truncate(width);
            } else {
                return Err(TableError::RowTooLong {
                    line,
                    found: fields.len(),
                    expected: width,
                });
            }
        }
        let mut fields = fields.into_iter();
        for col in columns.iter_mut() {
            let cell = match fields.next() {
                Some(f) if !f.is_empty() => CellValue::Text(f),
                _ => CellValue::Missing,
            };
            col.cells.push(cell);
        }
        row_count += 1;
    }
    Table::with_row_count(columns, row_count)
}

type Record = (usize, Vec<String>);

fn delimited_records(raw: &str, delimiter: u8) -> Result<Vec<Record>, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_reader(raw.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| TableError::Malformed(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        out.push((line, record.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

fn pipe_records(raw: &str) -> Vec<Record> {
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split('|').map(str::to_owned).collect()))
        .collect()
}
