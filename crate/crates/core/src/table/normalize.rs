use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::{CellValue, Column, Table};

/// Rule switches for [`normalize_table`]. Every rule is on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    /// `1,188` becomes `1188`.
    pub strip_thousands: bool,
    /// NFKC compatibility normalization, unicode minus to ASCII, inner
    /// whitespace collapsed.
    pub normalize_unicode: bool,
    /// Column names trimmed with inner whitespace collapsed.
    pub standardize_column_names: bool,
    /// `922 (est.)` becomes `922`.
    pub extract_leading_number: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            strip_thousands: true,
            normalize_unicode: true,
            standardize_column_names: true,
            extract_leading_number: true,
        }
    }
}

static GROUPED_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[+-]?\d{1,3}(?:,\d{3})+(?:\.\d+)?$").unwrap());

// A decimal token followed only by a bracketed note or footnote symbols.
static ANNOTATED_NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^([+-]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?)\s*(?:[(\[].*|[*†‡§]+)$").unwrap()
});

/// Trims and collapses runs of whitespace into single spaces.
pub fn standardize_name(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn unicode_clean(s: &str) -> String {
    s.nfkc().map(|c| if c == '\u{2212}' { '-' } else { c }).collect()
}

pub(crate) fn strip_thousands(s: &str) -> Option<String> {
    GROUPED_NUMBER.is_match(s).then(|| s.replace(',', ""))
}

fn normalize_cell(cell: &CellValue, cfg: &NormalizationConfig) -> CellValue {
    let CellValue::Text(raw) = cell else {
        return cell.clone();
    };
    let mut s = if cfg.normalize_unicode {
        standardize_name(&unicode_clean(raw))
    } else {
        raw.trim().to_owned()
    };
    if cfg.extract_leading_number {
        if let Some(caps) = ANNOTATED_NUMBER.captures(&s) {
            s = caps[1].to_owned();
        }
    }
    if cfg.strip_thousands {
        if let Some(stripped) = strip_thousands(&s) {
            s = stripped;
        }
    }
    if s.is_empty() {
        CellValue::Missing
    } else {
        CellValue::Text(s)
    }
}

fn normalize_name(name: &str, cfg: &NormalizationConfig) -> String {
    let mut s = if cfg.normalize_unicode {
        unicode_clean(name)
    } else {
        name.to_owned()
    };
    if cfg.standardize_column_names {
        s = standardize_name(&s);
    }
    s
}

/// Applies the rule-based cleanup in `cfg` to column names and text cells.
///
/// Text cells are always trimmed, and a cell left empty becomes `Missing`.
/// When two columns would end up with the same name (or an empty one), both
/// keep their original names so the result is still a valid table.
/// Idempotent for every configuration.
pub fn normalize_table(t: &Table, cfg: &NormalizationConfig) -> Table {
    let candidates: Vec<String> = t.column_names().map(|n| normalize_name(n, cfg)).collect();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for c in &candidates {
        *counts.entry(c.as_str()).or_default() += 1;
    }
    let columns = t
        .columns()
        .iter()
        .zip(&candidates)
        .map(|(col, candidate)| {
            let name = if candidate.is_empty() || counts[candidate.as_str()] > 1 {
                col.name.clone()
            } else {
                candidate.clone()
            };
            let cells = col.cells.iter().map(|c| normalize_cell(c, cfg)).collect();
            Column { name, cells }
        })
        .collect();
    Table::with_row_count(columns, t.row_count()).expect("normalization preserves table shape")
}
