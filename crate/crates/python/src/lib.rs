//! Python module `tqa_py`: tables, step programs, execution, answer metrics
//! and answer selection from `tqa-core`.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use tqa_core::eval::{self, AnswerMap};
use tqa_core::selector::{self, CandidatePair, HeuristicScorer};
use tqa_core::table::{self as core_table, NormalizationConfig, TableFormat};
use tqa_core::AnswerValue;

create_exception!(tqa_py, TableError, PyValueError);
create_exception!(tqa_py, ProgramError, PyValueError);
create_exception!(tqa_py, ExecutionError, PyException);

fn format_of(name: &str) -> PyResult<TableFormat> {
    name.parse().map_err(PyValueError::new_err)
}

/// A typed table. Cells come back as strings; missing cells as `None`.
#[pyclass(name = "Table", module = "tqa_py", frozen)]
struct PyTable(tqa_core::Table);

#[pymethods]
impl PyTable {
    /// Parse delimited text (`csv`, `tsv` or `pipe`).
    #[staticmethod]
    #[pyo3(signature = (text, format = "csv"))]
    fn parse(text: &str, format: &str) -> PyResult<Self> {
        core_table::parse_table(text, format_of(format)?)
            .map(PyTable)
            .map_err(|e| TableError::new_err(e.to_string()))
    }

    /// Build from column names and rows of strings; `""` is a missing cell.
    #[staticmethod]
    fn from_rows(names: Vec<String>, rows: Vec<Vec<String>>) -> PyResult<Self> {
        tqa_core::Table::from_text_rows(&names, &rows)
            .map(PyTable)
            .map_err(|e| TableError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        tqa_core::io::load_table(&path, &NormalizationConfig::default())
            .map(PyTable)
            .map_err(|e| TableError::new_err(e.to_string()))
    }

    #[pyo3(signature = (strip_thousands = true, normalize_unicode = true, standardize_column_names = true, extract_leading_number = true))]
    fn normalize(
        &self,
        strip_thousands: bool,
        normalize_unicode: bool,
        standardize_column_names: bool,
        extract_leading_number: bool,
    ) -> Self {
        let cfg = NormalizationConfig {
            strip_thousands,
            normalize_unicode,
            standardize_column_names,
            extract_leading_number,
        };
        PyTable(core_table::normalize_table(&self.0, &cfg))
    }

    /// The pipe-separated text used in prompts.
    #[pyo3(signature = (max_rows = 30))]
    fn serialize(&self, max_rows: usize) -> String {
        core_table::serialize_for_prompt(&self.0, max_rows)
    }

    #[pyo3(signature = (format = "csv"))]
    fn write(&self, format: &str) -> PyResult<String> {
        Ok(core_table::write_table(&self.0, format_of(format)?))
    }

    #[getter]
    fn column_names(&self) -> Vec<String> {
        self.0.column_names().map(str::to_owned).collect()
    }

    #[getter]
    fn row_count(&self) -> usize {
        self.0.row_count()
    }

    fn rows(&self) -> Vec<Vec<Option<String>>> {
        (0..self.0.row_count())
            .map(|r| {
                self.0
                    .columns()
                    .iter()
                    .map(|c| match &c.cells[r] {
                        tqa_core::CellValue::Missing => None,
                        v => Some(v.render()),
                    })
                    .collect()
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.0.row_count()
    }

    fn __repr__(&self) -> String {
        format!("Table({} rows x {} columns)", self.0.row_count(), self.0.column_count())
    }
}

/// A parsed step program.
#[pyclass(name = "Program", module = "tqa_py", frozen)]
struct PyProgram(tqa_core::StepProgram);

#[pymethods]
impl PyProgram {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        tqa_core::parse_program(text)
            .map(PyProgram)
            .map_err(|e| ProgramError::new_err(e.to_string()))
    }

    /// Canonical program text.
    fn render(&self) -> String {
        tqa_core::render_program(&self.0)
    }

    #[getter]
    fn plan(&self) -> String {
        self.0.plan().to_owned()
    }

    /// `(tag, comment, operation text or None)` per step.
    fn steps(&self) -> Vec<(String, String, Option<String>)> {
        self.0
            .steps()
            .iter()
            .map(|s| {
                (
                    s.tag.as_str().to_owned(),
                    s.comment.clone(),
                    s.op.as_ref().map(tqa_core::program::render_operation),
                )
            })
            .collect()
    }

    /// Schema problems against `table`, as strings. Empty means none found.
    fn validate(&self, table: &PyTable) -> Vec<String> {
        tqa_core::program::validate_against_schema(&self.0, &table.0)
            .iter()
            .map(|d| d.to_string())
            .collect()
    }

    /// Run over `table` and return the answer values.
    fn execute(&self, table: &PyTable) -> PyResult<Vec<String>> {
        tqa_core::execute(&self.0, &table.0)
            .map(|r| r.answer.0)
            .map_err(|e| ExecutionError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Program({:?}, {} steps)", self.0.plan(), self.0.steps().len())
    }
}

#[pyfunction]
fn parse_program(text: &str) -> PyResult<PyProgram> {
    PyProgram::new(text)
}

#[pyfunction]
fn execute(program: &PyProgram, table: &PyTable) -> PyResult<Vec<String>> {
    program.execute(table)
}

#[pyfunction]
fn normalize_answer(values: Vec<String>) -> Vec<String> {
    eval::normalize_answer(&AnswerValue(values)).0
}

#[pyfunction]
fn exact_match(pred: Vec<String>, gold: Vec<String>) -> bool {
    eval::exact_match(&AnswerValue(pred), &AnswerValue(gold))
}

#[pyfunction]
fn fuzzy_match(pred: Vec<String>, gold: Vec<String>) -> bool {
    eval::fuzzy_match(&AnswerValue(pred), &AnswerValue(gold))
}

fn answer_map(m: BTreeMap<String, Vec<String>>) -> AnswerMap {
    m.into_iter().map(|(k, v)| (k, AnswerValue(v))).collect()
}

/// Scores `{id: values}` predictions against golds, with an optional
/// corrections overlay. Returns `{"em_rate", "fm_rate", "examples", "warnings"}`.
#[pyfunction]
#[pyo3(signature = (preds, golds, corrections = None))]
fn evaluate(
    py: Python<'_>,
    preds: BTreeMap<String, Vec<String>>,
    golds: BTreeMap<String, Vec<String>>,
    corrections: Option<BTreeMap<String, Vec<String>>>,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let mut golds = answer_map(golds);
    if let Some(c) = corrections {
        golds = eval::apply_corrections(&golds, &eval::CorrectionsOverlay(answer_map(c))).0;
    }
    let s = eval::evaluate_run(&answer_map(preds), &golds).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("em_rate", s.em_rate)?;
    d.set_item("fm_rate", s.fm_rate)?;
    d.set_item("examples", s.records.len())?;
    d.set_item("warnings", s.warnings)?;
    Ok(d.unbind())
}

/// Chooses between a code answer and an end-to-end answer with the
/// built-in heuristic scorer. Returns `(chosen, source)` where source is
/// `"code"`, `"e2e"` or `"agreement"`.
#[pyfunction]
fn select_answer(code_answer: Vec<String>, e2e_answer: Vec<String>) -> (Vec<String>, String) {
    let pair = CandidatePair {
        id: String::new(),
        question: String::new(),
        table_ref: String::new(),
        code_answer: AnswerValue(code_answer),
        e2e_answer: AnswerValue(e2e_answer),
        e2e_trace: None,
    };
    let r = selector::select_answer(&HeuristicScorer, &pair, None);
    let source = match r.source {
        selector::Source::Code => "code",
        selector::Source::E2e => "e2e",
        selector::Source::Agreement => "agreement",
    };
    (r.chosen.0, source.to_owned())
}

#[pymodule]
fn tqa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTable>()?;
    m.add_class::<PyProgram>()?;
    m.add("TableError", m.py().get_type::<TableError>())?;
    m.add("ProgramError", m.py().get_type::<ProgramError>())?;
    m.add("ExecutionError", m.py().get_type::<ExecutionError>())?;
    for f in [
        wrap_pyfunction!(parse_program, m)?,
        wrap_pyfunction!(execute, m)?,
        wrap_pyfunction!(normalize_answer, m)?,
        wrap_pyfunction!(exact_match, m)?,
        wrap_pyfunction!(fuzzy_match, m)?,
        wrap_pyfunction!(evaluate, m)?,
        wrap_pyfunction!(select_answer, m)?,
    ] {
        m.add_function(f)?;
    }
    Ok(())
}
