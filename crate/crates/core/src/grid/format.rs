//! The line-oriented `.grid` workbook format.
//!
//! ```text
//! # comment
//! [sheet Sheet1]
//! A1 Mark
//! A2 20.5
//! B2 =IF(A2<40,"FAIL","PASS")
//! ```

use std::fmt::Write as _;

use crate::error::GridError;

use super::cellref::{parse_a1, DEFAULT_SHEET};
use super::value::{parse_literal, render_literal};
use super::workbook::{Cell, CellPos, Formula, Workbook};

pub fn parse_workbook(input: &str) -> Result<Workbook, GridError> {
    let mut wb = Workbook::empty();
    let mut current: Option<usize> = None;

    for (idx, raw) in input.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let header = rest.trim_end().strip_suffix(']').ok_or_else(|| GridError::Syntax {
                line: line_no,
                message: "unterminated sheet header".into(),
            })?;
            let name = header
                .strip_prefix("sheet ")
                .map(str::trim)
                .ok_or_else(|| GridError::Syntax {
                    line: line_no,
                    message: "expected `[sheet <name>]`".into(),
                })?;
            current = Some(wb.add_sheet(name).map_err(|e| match e {
                GridError::SheetExists(name) => GridError::DuplicateSheet {
                    line: line_no,
                    name,
                },
                GridError::BadSheetName(n) => GridError::Syntax {
                    line: line_no,
                    message: format!("invalid sheet name `{n}`"),
                },
                other => other,
            })?);
            continue;
        }

        let sheet = match current {
            Some(s) => s,
            None => {
                let s = wb.add_sheet(DEFAULT_SHEET).map_err(|e| GridError::Syntax {
                    line: line_no,
                    message: e.to_string(),
                })?;
                current = Some(s);
                s
            }
        };

        let (addr, content) = match trimmed.split_once([' ', '\t']) {
            Some((a, c)) => (a, c.trim_start_matches([' ', '\t'])),
            None => (trimmed, ""),
        };
        let r = parse_a1(addr, 0, addr).map_err(|e| GridError::BadRef {
            line: line_no,
            source: e,
        })?;
        if r.col_abs || r.row_abs {
            return Err(GridError::Syntax {
                line: line_no,
                message: format!("cell address {addr} must not contain `$`"),
            });
        }
        if content.is_empty() {
            return Err(GridError::Syntax {
                line: line_no,
                message: format!("cell {addr} has no content"),
            });
        }
        let pos = CellPos {
            sheet,
            row: r.row,
            col: r.col,
        };
        let cell_name = || wb.cell_ref(pos).to_string();
        if wb.cell(pos).is_some() {
            return Err(GridError::DuplicateCell {
                line: line_no,
                cell: cell_name(),
            });
        }
        let cell = match content.strip_prefix('=') {
            Some(src) => Cell::Formula(Formula::parse(src).map_err(|e| GridError::Formula {
                line: line_no,
                cell: cell_name(),
                source: e,
            })?),
            None => Cell::Literal(parse_literal(content)),
        };
        wb.put(pos, Some(cell));
    }

    if wb.sheets().is_empty() {
        return Ok(Workbook::new());
    }
    Ok(wb)
}

/// Canonical text: sheets in order, cells row-major, formulas verbatim.
pub fn serialize_workbook(wb: &Workbook) -> String {
    let mut out = String::new();
    for (i, sheet) in wb.sheets().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[sheet {}]", sheet.name);
        for (row, col, cell) in sheet.cells() {
            let addr = super::CellRef::new(col, row).a1();
            match cell {
                Cell::Formula(f) => {
                    let _ = writeln!(out, "{addr} ={}", f.source);
                }
                Cell::Literal(v) => {
                    let _ = writeln!(out, "{addr} {}", render_literal(v));
                }
            }
        }
    }
    out
}
