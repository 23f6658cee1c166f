//! A1-style cell addresses.

use std::fmt;

use crate::error::RefError;

/// Largest row number a reference may name.
pub const MAX_ROWS: u32 = 1_048_576;
/// Largest column number a reference may name (column `XFD`).
pub const MAX_COLS: u32 = 16_384;

/// The sheet assumed when a reference carries no `Sheet!` prefix and no
/// other context applies.
pub const DEFAULT_SHEET: &str = "Sheet1";

/// A cell address with per-axis absolute flags.
///
/// `sheet` is `None` only inside formulas, where an unprefixed reference
/// means "the sheet holding this formula". References produced by
/// [`parse_cellref`] always carry a sheet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellRef {
    pub sheet: Option<String>,
    pub col: u32,
    pub row: u32,
    pub col_abs: bool,
    pub row_abs: bool,
}

impl CellRef {
    /// A relative reference without a sheet.
    pub fn new(col: u32, row: u32) -> Self {
        CellRef {
            sheet: None,
            col,
            row,
            col_abs: false,
            row_abs: false,
        }
    }

    pub fn on_sheet(mut self, sheet: impl Into<String>) -> Self {
        self.sheet = Some(sheet.into());
        self
    }

    pub fn with_abs(mut self, col_abs: bool, row_abs: bool) -> Self {
        self.col_abs = col_abs;
        self.row_abs = row_abs;
        self
    }

    /// The address without its sheet prefix, e.g. `$A2`.
    pub fn a1(&self) -> String {
        format!(
            "{}{}{}{}",
            if self.col_abs { "$" } else { "" },
            col_to_letters(self.col),
            if self.row_abs { "$" } else { "" },
            self.row
        )
    }

    /// True when both references name the same cell, ignoring `$` flags and
    /// comparing sheet names case-insensitively.
    pub fn same_cell(&self, other: &CellRef) -> bool {
        self.col == other.col
            && self.row == other.row
            && match (&self.sheet, &other.sheet) {
                (Some(a), Some(b)) => a.to_lowercase() == b.to_lowercase(),
                (None, None) => true,
                _ => false,
            }
    }

    /// Shift the relative axes by `(drow, dcol)`; absolute axes stay put.
    pub fn shifted(&self, drow: i64, dcol: i64) -> Result<CellRef, RefError> {
        let row = if self.row_abs {
            self.row as i64
        } else {
            self.row as i64 + drow
        };
        let col = if self.col_abs {
            self.col as i64
        } else {
            self.col as i64 + dcol
        };
        if row < 1 || row > MAX_ROWS as i64 || col < 1 || col > MAX_COLS as i64 {
            return Err(RefError::OutOfBounds {
                reference: self.to_string(),
                drow,
                dcol,
            });
        }
        Ok(CellRef {
            row: row as u32,
            col: col as u32,
            ..self.clone()
        })
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(sheet) = &self.sheet {
            write_sheet_prefix(f, sheet)?;
        }
        f.write_str(&self.a1())
    }
}

pub(crate) fn write_sheet_prefix(f: &mut impl fmt::Write, sheet: &str) -> fmt::Result {
    if sheet_needs_quotes(sheet) {
        write!(f, "'{}'!", sheet.replace('\'', "''"))
    } else {
        write!(f, "{sheet}!")
    }
}

fn sheet_needs_quotes(name: &str) -> bool {
    name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Column number to letters: 1 → `A`, 27 → `AA`.
pub fn col_to_letters(mut col: u32) -> String {
    let mut out = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        out.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Column letters to number, case-insensitive. `None` if empty, non-alphabetic
/// or past [`MAX_COLS`].
pub fn letters_to_col(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    let mut col: u32 = 0;
    for b in letters.bytes() {
        if !b.is_ascii_alphabetic() {
            return None;
        }
        col = col * 26 + (b.to_ascii_uppercase() - b'A') as u32 + 1;
    }
    (col <= MAX_COLS).then_some(col)
}

/// Parse an A1 reference such as `B2`, `$A$1` or `Tracking!AA10`.
///
/// Without a `Sheet!` prefix the result is placed on `default_sheet`.
pub fn parse_cellref(input: &str, default_sheet: &str) -> Result<CellRef, RefError> {
    let (sheet, body, offset) = split_sheet_prefix(input)?;
    let mut r = parse_a1(body, offset, input)?;
    r.sheet = Some(sheet.unwrap_or_else(|| default_sheet.to_string()));
    Ok(r)
}

/// Split an optional `Sheet!` or `'Sheet name'!` prefix from a reference.
/// Returns the sheet, the remainder and the remainder's byte offset.
pub(crate) fn split_sheet_prefix(input: &str) -> Result<(Option<String>, &str, usize), RefError> {
    let bad = |pos: usize, reason: &str| RefError::Malformed {
        input: input.to_string(),
        pos,
        reason: reason.to_string(),
    };
    if input.is_empty() {
        return Err(bad(0, "empty reference"));
    }
    if let Some(rest) = input.strip_prefix('\'') {
        let mut name = String::new();
        let mut chars = rest.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if c == '\'' {
                if matches!(chars.peek(), Some((_, '\''))) {
                    chars.next();
                    name.push('\'');
                    continue;
                }
                let after = &rest[i + 1..];
                return match after.strip_prefix('!') {
                    Some(body) => Ok((Some(name), body, input.len() - body.len())),
                    None => Err(bad(i + 2, "expected `!` after quoted sheet name")),
                };
            }
            name.push(c);
        }
        return Err(bad(input.len(), "unterminated quoted sheet name"));
    }
    match input.rfind('!') {
        Some(0) => Err(bad(0, "empty sheet name")),
        Some(i) => Ok((Some(input[..i].to_string()), &input[i + 1..], i + 1)),
        None => Ok((None, input, 0)),
    }
}

/// Parse the `$?LETTERS$?DIGITS` part of a reference. `offset` is where
/// `body` starts inside `full`, for error positions.
pub(crate) fn parse_a1(body: &str, offset: usize, full: &str) -> Result<CellRef, RefError> {
    let bad = |pos: usize, reason: &str| RefError::Malformed {
        input: full.to_string(),
        pos: offset + pos,
        reason: reason.to_string(),
    };
    let bytes = body.as_bytes();
    let mut i = 0;
    let col_abs = bytes.first() == Some(&b'$');
    if col_abs {
        i += 1;
    }
    let col_start = i;
    while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
        i += 1;
    }
    if i == col_start {
        return Err(bad(i, "missing column letters"));
    }
    let col = letters_to_col(&body[col_start..i]).ok_or_else(|| bad(col_start, "column out of range"))?;
    let row_abs = bytes.get(i) == Some(&b'$');
    if row_abs {
        i += 1;
    }
    let row_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i == row_start {
        return Err(bad(i, "missing row number"));
    }
    if i != bytes.len() {
        return Err(bad(i, "unexpected character"));
    }
    let row: u64 = body[row_start..i]
        .parse()
        .map_err(|_| bad(row_start, "row out of range"))?;
    if row == 0 || row > MAX_ROWS as u64 {
        return Err(bad(row_start, "row out of range"));
    }
    Ok(CellRef {
        sheet: None,
        col,
        row: row as u32,
        col_abs,
        row_abs,
    })
}

/// A rectangular block of cells on one sheet, stored top-left first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RangeRef {
    pub start: CellRef,
    pub end: CellRef,
}

impl RangeRef {
    /// Build a range, reordering corners so `start` is top-left. Each axis
    /// keeps the absolute flag that travelled with its coordinate; on a tie
    /// the relative one comes first, so shifting and shifting back is exact.
    pub fn normalized(a: CellRef, b: CellRef) -> Self {
        let (c1, c1_abs, c2, c2_abs) = if (a.col, a.col_abs) <= (b.col, b.col_abs) {
            (a.col, a.col_abs, b.col, b.col_abs)
        } else {
            (b.col, b.col_abs, a.col, a.col_abs)
        };
        let (r1, r1_abs, r2, r2_abs) = if (a.row, a.row_abs) <= (b.row, b.row_abs) {
            (a.row, a.row_abs, b.row, b.row_abs)
        } else {
            (b.row, b.row_abs, a.row, a.row_abs)
        };
        let sheet = a.sheet.clone();
        RangeRef {
            start: CellRef {
                sheet: sheet.clone(),
                col: c1,
                row: r1,
                col_abs: c1_abs,
                row_abs: r1_abs,
            },
            end: CellRef {
                sheet,
                col: c2,
                row: r2,
                col_abs: c2_abs,
                row_abs: r2_abs,
            },
        }
    }

    pub fn single(cell: CellRef) -> Self {
        RangeRef {
            start: cell.clone(),
            end: cell,
        }
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        (self.start.row..=self.end.row).contains(&row) && (self.start.col..=self.end.col).contains(&col)
    }

    pub fn len(&self) -> usize {
        (self.end.row - self.start.row + 1) as usize * (self.end.col - self.start.col + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Member cells in row-major order, as relative references on the
    /// range's sheet.
    pub fn cells(&self) -> impl Iterator<Item = CellRef> + '_ {
        (self.start.row..=self.end.row).flat_map(move |row| {
            (self.start.col..=self.end.col).map(move |col| CellRef {
                sheet: self.start.sheet.clone(),
                col,
                row,
                col_abs: false,
                row_abs: false,
            })
        })
    }
}

impl fmt::Display for RangeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(sheet) = &self.start.sheet {
            write_sheet_prefix(f, sheet)?;
        }
        write!(f, "{}:{}", self.start.a1(), self.end.a1())
    }
}

/// Parse `B3:B4`, `Sheet2!A1:C3` or a single cell (a 1×1 range).
pub fn parse_range(input: &str, default_sheet: &str) -> Result<RangeRef, RefError> {
    let Some(colon) = input.rfind(':') else {
        return parse_cellref(input, default_sheet).map(RangeRef::single);
    };
    let start = parse_cellref(&input[..colon], default_sheet)?;
    let home = start.sheet.clone().unwrap_or_default();
    let end = parse_cellref(&input[colon + 1..], &home).map_err(|e| e.offset_by(colon + 1, input))?;
    let (a, b) = (start.sheet.as_deref(), end.sheet.as_deref());
    if a.map(str::to_lowercase) != b.map(str::to_lowercase) {
        return Err(RefError::Malformed {
            input: input.to_string(),
            pos: colon + 1,
            reason: "range endpoints on different sheets".into(),
        });
    }
    Ok(RangeRef::normalized(start, end))
}
