use std::sync::LazyLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

use crate::answer::AnswerValue;
use crate::table::{parse_date, parse_number};

static TRAILING_QUALIFIER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(.*\S)\s+\([^()]*\)$").unwrap());
static GROUPED_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[+-]?\d{1,3}(?:,\d{3})+(?:\.\d+)?$").unwrap());
static INTEGRAL_DECIMAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([+-]?\d+)\.0+$").unwrap());

const NUMERIC_TOLERANCE: f64 = 1e-9;

fn fold(s: &str) -> String {
    let lowered: String = s
        .nfkc()
        .map(|c| if c == '\u{2212}' { '-' } else { c })
        .collect::<String>()
        .to_lowercase();
    lowered
        .nfkc()
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonical comparison form of one answer scalar: NFKC, case-folded,
/// whitespace collapsed, trailing `(…)` qualifiers removed, thousands
/// separators removed, and `.0…0` dropped from integral decimals.
pub fn normalize_scalar(s: &str) -> String {
    let mut s = fold(s);
    while let Some(caps) = TRAILING_QUALIFIER.captures(&s) {
        s = caps[1].to_owned();
    }
    if GROUPED_NUMBER.is_match(&s) {
        s = s.replace(',', "");
    }
    if let Some(caps) = INTEGRAL_DECIMAL.captures(&s) {
        s = caps[1].to_owned();
    }
    s
}

/// Applies [`normalize_scalar`] to every value. Idempotent.
pub fn normalize_answer(v: &AnswerValue) -> AnswerValue {
    v.values().iter().map(|s| normalize_scalar(s)).collect()
}

/// Surface-strict match: same length and pairwise equal after trimming,
/// in order.
pub fn exact_match(pred: &AnswerValue, gold: &AnswerValue) -> bool {
    pred.len() == gold.len()
        && pred
            .values()
            .iter()
            .zip(gold.values())
            .all(|(p, g)| p.trim() == g.trim())
}

/// Two normalized scalars match when the strings are equal, when both are
/// numbers within 1e-9 of each other, or when both are dates on the same day.
pub fn scalars_match(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    if let (Some(x), Some(y)) = (parse_number(a), parse_number(b)) {
        return (x - y).abs() <= NUMERIC_TOLERANCE;
    }
    matches!((parse_date(a), parse_date(b)), (Some(x), Some(y)) if x == y)
}

/// Order-insensitive semantic match: after normalization, every predicted
/// value must pair off with a distinct gold value under [`scalars_match`].
pub fn fuzzy_match(pred: &AnswerValue, gold: &AnswerValue) -> bool {
    if pred.len() != gold.len() {
        return false;
    }
    let p = normalize_answer(pred);
    let g = normalize_answer(gold);
    let adjacency: Vec<Vec<usize>> = p
        .values()
        .iter()
        .map(|a| {
            g.values()
                .iter()
                .enumerate()
                .filter(|(_, b)| scalars_match(a, b))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    perfect_matching(&adjacency, g.len())
}

/// Kuhn's augmenting-path bipartite matching.
fn perfect_matching(adjacency: &[Vec<usize>], right: usize) -> bool {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; right];
    (0..adjacency.len()).all(|u| {
        let mut seen = vec![false; right];
        augment(u, adjacency, &mut seen, &mut owner)
    })
}
