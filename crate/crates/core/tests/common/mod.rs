//! Test support shared by the integration targets: fixture paths, random
//! generators, and a reference interpreter written against the documented
//! executor semantics over a plain row-major representation.

#![allow(dead_code)]

use std::path::PathBuf;

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::Rng;
use tqa_core::program::{
    AggFn, AnswerSource, ArithOp, Comparator, LimitFrom, Literal, Operand, Operation, SortOrder, Step, StepProgram,
    TagKind,
};
use tqa_core::{AnswerValue, Number, Table};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

// ---------------------------------------------------------------------------
// Reference interpreter

#[derive(Debug, Clone, PartialEq)]
pub enum V {
    T(String),
    N(f64),
    D(NaiveDate),
    M,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Answer(Vec<String>),
    Error { step: usize, class: &'static str },
}

fn render(v: &V) -> String {
    match v {
        V::T(s) => s.clone(),
        V::N(x) => format!("{}", if *x == 0.0 { 0.0 } else { *x }),
        V::D(d) => d.format("%Y-%m-%d").to_string(),
        V::M => String::new(),
    }
}

fn to_number(s: &str) -> Option<f64> {
    let mut s = s.trim().to_owned();
    if s.starts_with('(') && s.ends_with(')') && s.len() >= 2 {
        s = s[1..s.len() - 1].trim().to_owned();
    }
    let body = s.strip_prefix(['-', '+']).unwrap_or(&s);
    let int_part = body.split('.').next().unwrap_or("");
    if int_part.contains(',') {
        let groups: Vec<&str> = int_part.split(',').collect();
        let ok = !groups[0].is_empty()
            && groups[0].len() <= 3
            && groups[1..].iter().all(|g| g.len() == 3)
            && groups.iter().all(|g| g.chars().all(|c| c.is_ascii_digit()));
        if !ok {
            return None;
        }
        s = s.replace(',', "");
    }
    let body = s.strip_prefix(['-', '+']).unwrap_or(&s);
    let (int, frac) = body.split_once('.').map_or((body, None), |(a, b)| (a, Some(b)));
    let digits = |x: &str| !x.is_empty() && x.chars().all(|c| c.is_ascii_digit());
    let valid = match frac {
        None => digits(int),
        Some(f) => digits(f) && (int.is_empty() || digits(int)),
    };
    if !valid {
        return None;
    }
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn to_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    ["%Y-%m-%d", "%B %d, %Y"]
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(s, f).ok())
}

fn same_kind(a: &V, b: &V) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

fn order(a: &V, b: &V) -> std::cmp::Ordering {
    match (a, b) {
        (V::T(x), V::T(y)) => x.cmp(y),
        (V::N(x), V::N(y)) => x.partial_cmp(y).unwrap(),
        (V::D(x), V::D(y)) => x.cmp(y),
        _ => panic!("mixed kinds"),
    }
}

fn lit(l: &Literal) -> V {
    match l {
        Literal::Text(s) => V::T(s.clone()),
        Literal::Number(n) => V::N(n.get()),
        Literal::Date(d) => V::D(*d),
    }
}

type R<T> = Result<T, &'static str>;

/// Aggregate over the non-missing values of `cells`. `Ok(None)` when the
/// function has no value on an empty input.
fn agg(cells: &[V], func: AggFn) -> R<Option<V>> {
    let vals: Vec<&V> = cells.iter().filter(|v| **v != V::M).collect();
    match func {
        AggFn::Sum | AggFn::Mean if vals.iter().any(|v| !matches!(v, V::N(_))) => return Err("TypeMismatch"),
        AggFn::Min | AggFn::Max if vals.windows(2).any(|w| !same_kind(w[0], w[1])) => return Err("TypeMismatch"),
        _ => {}
    }
    let nums: Vec<f64> = vals
        .iter()
        .filter_map(|v| if let V::N(x) = v { Some(*x) } else { None })
        .collect();
    let fin = |x: f64| if x.is_finite() { Ok(Some(V::N(x))) } else { Err("NumericOverflow") };
    match func {
        AggFn::Count => Ok(Some(V::N(vals.len() as f64))),
        AggFn::CountDistinct => {
            let mut seen: Vec<&V> = Vec::new();
            for v in &vals {
                if !seen.contains(v) {
                    seen.push(v);
                }
            }
            Ok(Some(V::N(seen.len() as f64)))
        }
        AggFn::Sum => fin(nums.iter().fold(0.0, |a, b| a + b)),
        AggFn::Mean if nums.is_empty() => Ok(None),
        AggFn::Mean => fin(nums.iter().fold(0.0, |a, b| a + b) / nums.len() as f64),
        AggFn::Min | AggFn::Max => {
            let mut best: Option<&V> = None;
            for v in &vals {
                let better = match best {
                    None => true,
                    Some(b) if func == AggFn::Min => order(v, b).is_lt(),
                    Some(b) => order(v, b).is_gt(),
                };
                if better {
                    best = Some(v);
                }
            }
            Ok(best.cloned())
        }
    }
}

struct Grid {
    names: Vec<String>,
    rows: Vec<Vec<V>>,
    scalar: Option<V>,
}

impl Grid {
    fn col(&self, name: &str) -> R<usize> {
        self.names.iter().position(|n| n == name).ok_or("UnknownColumn")
    }

    fn column(&self, i: usize) -> Vec<V> {
        self.rows.iter().map(|r| r[i].clone()).collect()
    }
}

fn step(g: &mut Grid, op: &Operation) -> R<Option<Vec<String>>> {
    match op {
        Operation::Filter { column, cmp, literal } => {
            let c = g.col(column)?;
            let mut kept = Vec::new();
            for row in g.rows.drain(..) {
                let cell = &row[c];
                let keep = match cmp {
                    Comparator::IsMissing => *cell == V::M,
                    Comparator::NotMissing => *cell != V::M,
                    _ if *cell == V::M => false,
                    Comparator::Contains => match (cell, literal) {
                        (V::T(a), Some(Literal::Text(b))) => a.contains(b.as_str()),
                        _ => return Err("TypeMismatch"),
                    },
                    _ => {
                        let l = lit(literal.as_ref().unwrap());
                        if !same_kind(cell, &l) {
                            return Err("TypeMismatch");
                        }
                        let o = order(cell, &l);
                        match cmp {
                            Comparator::Eq => o.is_eq(),
                            Comparator::Ne => o.is_ne(),
                            Comparator::Lt => o.is_lt(),
                            Comparator::Le => o.is_le(),
                            Comparator::Gt => o.is_gt(),
                            Comparator::Ge => o.is_ge(),
                            _ => unreachable!(),
                        }
                    }
                };
                if keep {
                    kept.push(row);
                }
            }
            g.rows = kept;
        }
        Operation::ParseNumeric { column } => {
            let c = g.col(column)?;
            for r in &mut g.rows {
                r[c] = match &r[c] {
                    V::N(x) => V::N(*x),
                    V::T(s) => to_number(s).map_or(V::M, V::N),
                    _ => V::M,
                };
            }
        }
        Operation::ParseDate { column } => {
            let c = g.col(column)?;
            for r in &mut g.rows {
                r[c] = match &r[c] {
                    V::D(d) => V::D(*d),
                    V::T(s) => to_date(s).map_or(V::M, V::D),
                    _ => V::M,
                };
            }
        }
        Operation::Aggregate { func, column } => {
            let c = g.col(column)?;
            g.scalar = Some(agg(&g.column(c), *func)?.ok_or("EmptyAggregate")?);
        }
        Operation::Select { columns } => {
            let idx: Vec<usize> = columns.iter().map(|c| g.col(c)).collect::<R<_>>()?;
            g.rows = g.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect();
            g.names = columns.clone();
        }
        Operation::Sort { column, order: dir } => {
            let c = g.col(column)?;
            let present: Vec<V> = g.column(c).into_iter().filter(|v| *v != V::M).collect();
            if present.windows(2).any(|w| !same_kind(&w[0], &w[1])) {
                return Err("TypeMismatch");
            }
            let (mut have, missing): (Vec<Vec<V>>, Vec<Vec<V>>) = g.rows.drain(..).partition(|r| r[c] != V::M);
            // insertion sort keeps equal rows in input order
            let mut sorted: Vec<Vec<V>> = Vec::new();
            for row in have.drain(..) {
                let pos = sorted
                    .iter()
                    .position(|s| {
                        let o = order(&row[c], &s[c]);
                        if *dir == SortOrder::Asc { o.is_lt() } else { o.is_gt() }
                    })
                    .unwrap_or(sorted.len());
                sorted.insert(pos, row);
            }
            sorted.extend(missing);
            g.rows = sorted;
        }
        Operation::Limit { n, from } => {
            let len = g.rows.len();
            if *n == 0 || *n > len {
                return Err("LimitOutOfRange");
            }
            g.rows = match from {
                LimitFrom::Start => g.rows[..*n].to_vec(),
                LimitFrom::End => g.rows[len - n..].to_vec(),
            };
        }
        Operation::Compute { target, left, op, right } => {
            let l = g.col(left)?;
            let r = match right {
                Operand::Column(c) => Some(g.col(c)?),
                Operand::Number(_) => None,
            };
            let mut out = Vec::new();
            for row in &g.rows {
                let a = row[l].clone();
                let b = match (r, right) {
                    (Some(i), _) => row[i].clone(),
                    (None, Operand::Number(n)) => V::N(n.get()),
                    _ => unreachable!(),
                };
                out.push(match (a, b) {
                    (V::M, _) | (_, V::M) => V::M,
                    (V::N(x), V::N(y)) => {
                        let v = match op {
                            ArithOp::Add => x + y,
                            ArithOp::Sub => x - y,
                            ArithOp::Mul => x * y,
                            ArithOp::Div => {
                                if y == 0.0 {
                                    return Err("DivideByZero");
                                }
                                x / y
                            }
                        };
                        if !v.is_finite() {
                            return Err("NumericOverflow");
                        }
                        V::N(v)
                    }
                    _ => return Err("TypeMismatch"),
                });
            }
            match g.names.iter().position(|n| n == target) {
                Some(i) => {
                    for (row, v) in g.rows.iter_mut().zip(out) {
                        row[i] = v;
                    }
                }
                None => {
                    g.names.push(target.clone());
                    for (row, v) in g.rows.iter_mut().zip(out) {
                        row.push(v);
                    }
                }
            }
        }
        Operation::GroupAggregate { key, func, value } => {
            let k = g.col(key)?;
            let v = g.col(value)?;
            agg(&g.column(v), *func)?;
            let mut keys: Vec<V> = Vec::new();
            let mut members: Vec<Vec<V>> = Vec::new();
            for row in &g.rows {
                match keys.iter().position(|x| *x == row[k]) {
                    Some(i) => members[i].push(row[v].clone()),
                    None => {
                        keys.push(row[k].clone());
                        members.push(vec![row[v].clone()]);
                    }
                }
            }
            let mut rows = Vec::new();
            for (kv, m) in keys.into_iter().zip(members) {
                rows.push(vec![kv, agg(&m, *func)?.unwrap_or(V::M)]);
            }
            let mut out_name = format!("{}_{}", func.as_str(), value);
            while out_name == *key {
                out_name.push('_');
            }
            g.names = vec![key.clone(), out_name];
            g.rows = rows;
        }
        Operation::Answer(src) => {
            return Ok(Some(match src {
                AnswerSource::Column(c) => {
                    let i = g.col(c)?;
                    g.rows.iter().filter(|r| r[i] != V::M).map(|r| render(&r[i])).collect()
                }
                AnswerSource::Scalar => vec![render(g.scalar.as_ref().ok_or("MissingScalar")?)],
                AnswerSource::Literals(ls) => ls.iter().map(|l| render(&lit(l))).collect(),
            }))
        }
    }
    Ok(None)
}

/// Runs `p` over a text grid in which empty strings are missing cells.
pub fn reference_run(p: &StepProgram, names: &[String], rows: &[Vec<String>]) -> Outcome {
    let mut g = Grid {
        names: names.to_vec(),
        rows: rows
            .iter()
            .map(|r| r.iter().map(|s| if s.is_empty() { V::M } else { V::T(s.clone()) }).collect())
            .collect(),
        scalar: None,
    };
    for (i, s) in p.steps().iter().enumerate() {
        let Some(op) = &s.op else { continue };
        match step(&mut g, op) {
            Ok(Some(ans)) => return Outcome::Answer(ans),
            Ok(None) => {}
            Err(class) => return Outcome::Error { step: i, class },
        }
    }
    panic!("program without answer")
}

pub fn library_run(p: &StepProgram, t: &Table) -> Outcome {
    match tqa_core::execute(p, t) {
        Ok(r) => Outcome::Answer(r.answer.0),
        Err(e) => Outcome::Error {
            step: e.step_index,
            class: e.kind.class(),
        },
    }
}

// ---------------------------------------------------------------------------
// Random tables and programs for differential testing

pub const CELLS: &[&str] = &[
    "", "", "12", "7", "-3", "2.5", "0", "1,234", "(5)", "alpha", "beta", "Gamma", "beta gamma", "12abc", "2004-03-05",
    "March 5, 2004", "1999-12-31", "GameStorm 10", "GameStorm 2",
];
pub const NAMES: &[&str] = &["a", "b", "Year", "Total Points", "c d", "n"];

pub fn random_grid(rng: &mut impl Rng) -> (Vec<String>, Vec<Vec<String>>) {
    let ncols = rng.random_range(1..=6);
    let mut names: Vec<String> = NAMES.iter().map(|s| s.to_string()).collect();
    names.truncate(NAMES.len());
    let mut picked = Vec::new();
    while picked.len() < ncols {
        let n = names.choose(rng).unwrap().clone();
        if !picked.contains(&n) {
            picked.push(n);
        }
    }
    let nrows = rng.random_range(0..=8);
    // columns lean towards one kind of content so typed operations succeed
    let col_pools: Vec<&[&str]> = (0..ncols)
        .map(|_| -> &[&str] {
            match rng.random_range(0..4) {
                0 => &["12", "7", "-3", "2.5", "0", "1,234", "(5)", ""],
                1 => &["2004-03-05", "March 5, 2004", "1999-12-31", ""],
                2 => &["alpha", "beta", "Gamma", "GameStorm 10", "GameStorm 2", ""],
                _ => CELLS,
            }
        })
        .collect();
    let rows = (0..nrows)
        .map(|_| col_pools.iter().map(|p| p.choose(rng).unwrap().to_string()).collect())
        .collect();
    (picked, rows)
}

fn random_literal(rng: &mut impl Rng) -> Literal {
    match rng.random_range(0..3) {
        0 => Literal::Text(["alpha", "beta", "12", "a", "Gamma", "", "GameStorm 10"].choose(rng).unwrap().to_string()),
        1 => Literal::Number(Number::new(*[0.0, 1.0, 2.5, -3.0, 7.0, 12.0, 1234.0].choose(rng).unwrap()).unwrap()),
        _ => Literal::Date(
            *[
                NaiveDate::from_ymd_opt(2004, 3, 5).unwrap(),
                NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            ]
            .choose(rng)
            .unwrap(),
        ),
    }
}

fn pick_col(rng: &mut impl Rng, cols: &[String]) -> String {
    if cols.is_empty() || rng.random_bool(0.08) {
        "bogus".to_owned()
    } else {
        cols.choose(rng).unwrap().clone()
    }
}

fn random_op(rng: &mut impl Rng, cols: &mut Vec<String>) -> Operation {
    let agg_fns = AggFn::ALL;
    match rng.random_range(0..9) {
        0 | 1 => {
            let cmp = *Comparator::ALL.choose(rng).unwrap();
            let literal = match cmp {
                Comparator::IsMissing | Comparator::NotMissing => None,
                Comparator::Contains => {
                    Some(Literal::Text(["a", "Game", "12", " "].choose(rng).unwrap().to_string()))
                }
                _ => Some(random_literal(rng)),
            };
            Operation::Filter {
                column: pick_col(rng, cols),
                cmp,
                literal,
            }
        }
        2 => Operation::ParseNumeric {
            column: pick_col(rng, cols),
        },
        3 => Operation::ParseDate {
            column: pick_col(rng, cols),
        },
        4 => Operation::Aggregate {
            func: *agg_fns.choose(rng).unwrap(),
            column: pick_col(rng, cols),
        },
        5 => {
            let mut columns: Vec<String> = Vec::new();
            for _ in 0..rng.random_range(1..=3) {
                let c = pick_col(rng, cols);
                if !columns.contains(&c) {
                    columns.push(c);
                }
            }
            *cols = columns.clone();
            Operation::Select { columns }
        }
        6 => {
            if rng.random_bool(0.5) {
                Operation::Sort {
                    column: pick_col(rng, cols),
                    order: *SortOrder::ALL.choose(rng).unwrap(),
                }
            } else {
                Operation::Limit {
                    n: rng.random_range(0..=9),
                    from: *LimitFrom::ALL.choose(rng).unwrap(),
                }
            }
        }
        7 => {
            let target = if rng.random_bool(0.7) || cols.is_empty() {
                "new".to_owned()
            } else {
                cols.choose(rng).unwrap().clone()
            };
            let right = if rng.random_bool(0.5) {
                Operand::Column(pick_col(rng, cols))
            } else {
                Operand::Number(Number::new(*[0.0, 1.0, 2.0, -3.0, 0.5].choose(rng).unwrap()).unwrap())
            };
            let op = Operation::Compute {
                left: pick_col(rng, cols),
                op: *ArithOp::ALL.choose(rng).unwrap(),
                right,
                target: target.clone(),
            };
            if !cols.contains(&target) {
                cols.push(target);
            }
            op
        }
        _ => {
            let key = pick_col(rng, cols);
            let func = *agg_fns.choose(rng).unwrap();
            let value = pick_col(rng, cols);
            let mut out = format!("{}_{}", func.as_str(), value);
            while out == key {
                out.push('_');
            }
            *cols = vec![key.clone(), out];
            Operation::GroupAggregate { key, func, value }
        }
    }
}

/// A valid program of 1 to `max_ops` operation steps over a table with
/// columns `names`, ending in an answer step.
pub fn random_program(rng: &mut impl Rng, names: &[String], max_ops: usize) -> StepProgram {
    let mut cols = names.to_vec();
    let mut steps = vec![Step::plan("random program")];
    let body_tags = &TagKind::ALL[1..TagKind::ALL.len() - 1];
    for _ in 0..rng.random_range(0..max_ops) {
        let op = random_op(rng, &mut cols);
        steps.push(Step::new(*body_tags.choose(rng).unwrap(), "", op));
    }
    let source = match rng.random_range(0..10) {
        0..=6 => AnswerSource::Column(pick_col(rng, &cols)),
        7 | 8 => AnswerSource::Scalar,
        _ => AnswerSource::Literals(vec![random_literal(rng), random_literal(rng)]),
    };
    steps.push(Step::new(TagKind::Answer, "", Operation::Answer(source)));
    StepProgram::new(steps).expect("generator builds valid programs")
}

// ---------------------------------------------------------------------------
// Random answers for metric laws

pub const ANSWER_POOL: &[&str] = &[
    "922", "922.0", "918.67", "1,234", "1234", "1234.00", "Paris", "paris (France)", " Paris ", "PARIS", "March 5, 2004",
    "2004-03-05", "École", "école", "x (a) (b)", "x", "1977–1978", "1988–1989", "−5", "-5", "(5)", "5", "", "ｆｕｌｌ",
    "full", "1e3", "1000",
];

pub fn random_answer(rng: &mut impl Rng) -> AnswerValue {
    let n = rng.random_range(0..=3);
    (0..n).map(|_| ANSWER_POOL.choose(rng).unwrap().to_string()).collect()
}

// ---------------------------------------------------------------------------
// Random syntax trees for the grammar round trip

const EXOTIC_NAMES: &[&str] = &[
    "a", "Attendance", "Total Points", "scalar", "answer", "filter", "eq", "=", "+", "-", "12", "3.5", "@2004-03-05",
    "x\"y", "back`tick", "back\\slash", "tab\there", "line\nbreak", "Année", "名前", "# hash", "a.b-c_d", "_", " padded ",
];
const EXOTIC_TEXT: &[&str] = &["", "GameStorm 10", "say \"hi\"", "a|b", "\\", "`", "#", "multi\nline", "ü", "  "];
const COMMENTS: &[&str] = &[
    "", "keep rows", "# nested # hashes", "ratio: a / b", "  padded  ", "100% of `x`", "TAG: not a tag", "é",
];

fn exotic_name(rng: &mut impl Rng) -> String {
    EXOTIC_NAMES.choose(rng).unwrap().to_string()
}

fn exotic_literal(rng: &mut impl Rng) -> Literal {
    match rng.random_range(0..3) {
        0 => Literal::Text(EXOTIC_TEXT.choose(rng).unwrap().to_string()),
        1 => {
            let v = match rng.random_range(0..4) {
                0 => rng.random_range(-1000..1000) as f64,
                1 => rng.random_range(-1e6..1e6),
                2 => rng.random_range(0.0..1e-6),
                _ => *[0.0, -0.0, 1e21, 123456789.125].choose(rng).unwrap(),
            };
            Literal::Number(Number::new(v).unwrap())
        }
        _ => Literal::Date(
            NaiveDate::from_ymd_opt(rng.random_range(1..9999), rng.random_range(1..=12), rng.random_range(1..=28))
                .unwrap(),
        ),
    }
}

fn exotic_op(rng: &mut impl Rng) -> Operation {
    let name = |rng: &mut _| exotic_name(rng);
    match rng.random_range(0..9) {
        0 => {
            let cmp = *Comparator::ALL.choose(rng).unwrap();
            let literal = match cmp {
                Comparator::IsMissing | Comparator::NotMissing => None,
                Comparator::Contains => Some(Literal::Text(EXOTIC_TEXT.choose(rng).unwrap().to_string())),
                _ => Some(exotic_literal(rng)),
            };
            Operation::Filter { column: name(rng), cmp, literal }
        }
        1 => Operation::ParseNumeric { column: name(rng) },
        2 => Operation::ParseDate { column: name(rng) },
        3 => Operation::Aggregate {
            func: *AggFn::ALL.choose(rng).unwrap(),
            column: name(rng),
        },
        4 => {
            let mut columns = Vec::new();
            for _ in 0..rng.random_range(1..=4) {
                let c = name(rng);
                if !columns.contains(&c) {
                    columns.push(c);
                }
            }
            Operation::Select { columns }
        }
        5 => Operation::Sort {
            column: name(rng),
            order: *SortOrder::ALL.choose(rng).unwrap(),
        },
        6 => Operation::Limit {
            n: rng.random_range(0..100_000),
            from: *LimitFrom::ALL.choose(rng).unwrap(),
        },
        7 => Operation::Compute {
            target: name(rng),
            left: name(rng),
            op: *ArithOp::ALL.choose(rng).unwrap(),
            right: if rng.random_bool(0.5) {
                Operand::Column(name(rng))
            } else {
                match exotic_literal(rng) {
                    Literal::Number(n) => Operand::Number(n),
                    _ => Operand::Number(Number::new(2.0).unwrap()),
                }
            },
        },
        _ => Operation::GroupAggregate {
            key: name(rng),
            func: *AggFn::ALL.choose(rng).unwrap(),
            value: name(rng),
        },
    }
}

/// A syntactically valid program with no regard for any table schema.
pub fn random_ast(rng: &mut impl Rng) -> StepProgram {
    let plan = loop {
        let c = COMMENTS.choose(rng).unwrap().trim();
        if !c.is_empty() {
            break c.to_owned();
        }
    };
    let mut steps = vec![Step::plan(plan)];
    for _ in 0..rng.random_range(0..8) {
        let tag = *TagKind::ALL[1..TagKind::ALL.len() - 1].choose(rng).unwrap();
        steps.push(Step::new(tag, *COMMENTS.choose(rng).unwrap(), exotic_op(rng)));
    }
    let source = match rng.random_range(0..3) {
        0 => AnswerSource::Column(exotic_name(rng)),
        1 => AnswerSource::Scalar,
        _ => AnswerSource::Literals((0..rng.random_range(1..4)).map(|_| exotic_literal(rng)).collect()),
    };
    let comment = if rng.random_bool(0.5) { "" } else { COMMENTS.choose(rng).unwrap() };
    steps.push(Step::new(TagKind::Answer, comment, Operation::Answer(source)));
    StepProgram::new(steps).expect("random syntax tree is valid")
}
