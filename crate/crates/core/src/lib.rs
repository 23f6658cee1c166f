//! Test-driven development for spreadsheets.
//!
//! A workbook model with a formula engine, plus a harness that substitutes
//! input cells, recalculates, checks expected outputs and restores the
//! workbook, reporting each test as green or red.

pub mod engine;
pub mod error;
pub mod formula;
pub mod grid;
pub mod runner;
pub mod testspec;

pub use error::{FormulaError, GridError, RefError, RunError, TestSpecError};
pub use grid::{CellRef, CellValue, ErrorKind, RangeRef, Workbook};
