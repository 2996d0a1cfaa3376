use std::sync::LazyLock;

use chrono::NaiveDate;
use regex::Regex;

use super::normalize::strip_thousands;
use super::{CellValue, Number};

static DECIMAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[+-]?(?:\d+(?:\.\d+)?|\.\d+)$").unwrap());

/// Accepted date layouts, tried in order. Slashed dates are month-first.
const DATE_FORMATS: &[&str] = &[
    "%Y-%m-%d",
    "%B %d, %Y",
    "%b %d, %Y",
    "%B %d %Y",
    "%d %B %Y",
    "%d %b %Y",
    "%m/%d/%Y",
];

/// Parses a plain decimal such as `750`, `-3.25`, `1,188` or `(5)`.
///
/// Parentheses around a number are treated as an annotation, not as a
/// negative sign. Exponents, `inf` and `nan` are rejected.
pub fn parse_number(s: &str) -> Option<f64> {
    let mut s = s.trim();
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        s = inner.trim();
    }
    let replaced;
    if s.starts_with('\u{2212}') {
        replaced = s.replacen('\u{2212}', "-", 1);
        s = &replaced;
    }
    let plain = strip_thousands(s).unwrap_or_else(|| s.to_owned());
    if !DECIMAL.is_match(&plain) {
        return None;
    }
    plain.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    DATE_FORMATS
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(s, f).ok())
}

/// Safe numeric parse: numbers pass through, parseable text becomes a
/// `Number`, everything else (dates included) becomes `Missing`.
pub fn coerce_numeric(v: &CellValue) -> CellValue {
    match v {
        CellValue::Number(_) => v.clone(),
        CellValue::Text(s) => parse_number(s)
            .and_then(Number::new)
            .map_or(CellValue::Missing, CellValue::Number),
        CellValue::Date(_) | CellValue::Missing => CellValue::Missing,
    }
}

/// Safe date parse: dates pass through, parseable text becomes a `Date`,
/// everything else becomes `Missing`.
pub fn coerce_date(v: &CellValue) -> CellValue {
    match v {
        CellValue::Date(_) => v.clone(),
        CellValue::Text(s) => parse_date(s).map_or(CellValue::Missing, CellValue::Date),
        CellValue::Number(_) | CellValue::Missing => CellValue::Missing,
    }
}
