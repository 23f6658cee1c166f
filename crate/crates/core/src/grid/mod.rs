//! Cell addresses, values, the multi-sheet workbook and its `.grid` file format.

mod cellref;
mod format;
mod value;
mod workbook;

pub use cellref::{
    col_to_letters, letters_to_col, parse_cellref, parse_range, CellRef, RangeRef, DEFAULT_SHEET,
    MAX_COLS, MAX_ROWS,
};
pub(crate) use cellref::{parse_a1, write_sheet_prefix};
pub use format::{parse_workbook, serialize_workbook};
pub use value::{
    format_number, parse_decimal, parse_literal, parse_quoted, render_literal,
    render_literal_quoted, CellValue, ErrorKind,
};
pub(crate) use value::take_quoted;
pub use workbook::{Cell, CellPos, Formula, Sheet, Workbook};
pub(crate) use workbook::check_literal;
