//! Typed in-memory tables.
//!
//! A [`Table`] is column-major: an ordered list of named columns, each holding
//! one [`CellValue`] per row. Tables are immutable once built; every operation
//! in this module returns a new table.

mod coerce;
mod normalize;
mod parse;
mod serialize;

use std::collections::HashSet;
use std::fmt;

use chrono::NaiveDate;
use thiserror::Error;

pub use coerce::{coerce_date, coerce_numeric, parse_date, parse_number};
pub use normalize::{normalize_table, standardize_name, NormalizationConfig};
pub use parse::{parse_table, TableFormat};
pub use serialize::{serialize_for_prompt, truncation_marker, write_table};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("table input is empty")]
    EmptyInput,
    #[error("duplicate column name {0:?}")]
    DuplicateHeader(String),
    #[error("column name is empty")]
    EmptyColumnName,
    #[error("column {name:?} has {found} cells, expected {expected}")]
    RaggedColumn {
        name: String,
        found: usize,
        expected: usize,
    },
    #[error("line {line}: {found} fields but header has {expected}")]
    RowTooLong {
        line: usize,
        found: usize,
        expected: usize,
    },
    #[error("malformed delimited input: {0}")]
    Malformed(String),
}

/// A finite decimal value. NaN and infinities cannot be constructed, and
/// negative zero is folded into zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Number(f64);

impl Number {
    pub fn new(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        Some(Number(if value == 0.0 { 0.0 } else { value }))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Eq for Number {}

impl Ord for Number {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::hash::Hash for Number {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

/// Integral values print without a fractional part; everything else uses the
/// shortest decimal that round-trips.
impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CellValue {
    Text(String),
    Number(Number),
    Date(NaiveDate),
    Missing,
}

impl CellValue {
    pub fn text(s: impl Into<String>) -> Self {
        CellValue::Text(s.into())
    }

    /// Panics if `v` is not finite.
    pub fn number(v: f64) -> Self {
        CellValue::Number(Number::new(v).expect("finite number"))
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, CellValue::Missing)
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            CellValue::Text(_) => "text",
            CellValue::Number(_) => "number",
            CellValue::Date(_) => "date",
            CellValue::Missing => "missing",
        }
    }

    /// Canonical rendering. Missing renders as the empty string.
    pub fn render(&self) -> String {
        match self {
            CellValue::Text(s) => s.clone(),
            CellValue::Number(n) => n.to_string(),
            CellValue::Date(d) => render_date(*d),
            CellValue::Missing => String::new(),
        }
    }
}

pub fn render_date(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub cells: Vec<CellValue>,
}

impl Column {
    pub fn new(name: impl Into<String>, cells: Vec<CellValue>) -> Self {
        Column {
            name: name.into(),
            cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    columns: Vec<Column>,
    row_count: usize,
}

impl Table {
    /// Builds a table, checking that all columns have the same length and
    /// that names are non-empty and unique.
    pub fn new(columns: Vec<Column>) -> Result<Self, TableError> {
        let row_count = columns.first().map_or(0, |c| c.cells.len());
        Self::with_row_count(columns, row_count)
    }

    pub(crate) fn with_row_count(
        columns: Vec<Column>,
        row_count: usize,
    ) -> Result<Self, TableError> {
        let mut seen = HashSet::new();
        for col in &columns {
            if col.name.is_empty() {
                return Err(TableError::EmptyColumnName);
            }
            if !seen.insert(col.name.as_str()) {
                return Err(TableError::DuplicateHeader(col.name.clone()));
            }
            if col.cells.len() != row_count {
                return Err(TableError::RaggedColumn {
                    name: col.name.clone(),
                    found: col.cells.len(),
                    expected: row_count,
                });
            }
        }
        Ok(Table { columns, row_count })
    }

    /// Row-major convenience constructor. Empty strings become `Missing`,
    /// everything else `Text`.
    pub fn from_text_rows<N: AsRef<str>, S: AsRef<str>>(
        names: &[N],
        rows: &[Vec<S>],
    ) -> Result<Self, TableError> {
        let mut columns: Vec<Column> = names
            .iter()
            .map(|n| Column::new(n.as_ref(), Vec::with_capacity(rows.len())))
            .collect();
        for row in rows {
            for (i, col) in columns.iter_mut().enumerate() {
                let cell = match row.get(i).map(|s| s.as_ref()) {
                    None | Some("") => CellValue::Missing,
                    Some(s) => CellValue::text(s),
                };
                col.cells.push(cell);
            }
        }
        Self::with_row_count(columns, rows.len())
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Column> {
        self.columns
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&CellValue> {
        self.columns.get(col).and_then(|c| c.cells.get(row))
    }
}
