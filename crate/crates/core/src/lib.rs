//! Table question answering with commented step programs.
//!
//! Tables are parsed and normalized ([`table`]), answered by small
//! line-oriented programs ([`program`]), generated and repaired through an
//! LLM ([`generation`]), scored ([`eval`]) and arbitrated against an
//! end-to-end answer ([`selector`]).

pub mod answer;
pub mod dataset;
pub mod eval;
pub mod generation;
pub mod io;
pub mod parallel;
pub mod program;
pub mod selector;
pub mod table;

pub use answer::AnswerValue;
pub use dataset::ExampleRecord;
pub use program::{execute, parse_program, render_program, StepProgram};
pub use table::{CellValue, Column, Number, Table, TableError};
