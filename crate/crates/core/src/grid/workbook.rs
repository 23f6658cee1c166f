use std::collections::BTreeMap;

use crate::error::GridError;
use crate::formula::{parse_formula, Expr};

use super::cellref::{CellRef, DEFAULT_SHEET};
use super::value::CellValue;

/// A resolved cell position: sheet index plus 1-based row and column.
///
/// Orders by sheet, then row, then column (sheet order, row-major).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellPos {
    pub sheet: usize,
    pub row: u32,
    pub col: u32,
}

/// A formula cell's source text (without the leading `=`) and its parse.
#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub source: String,
    pub ast: Expr,
}

impl Formula {
    pub fn parse(source: &str) -> Result<Formula, crate::error::FormulaError> {
        Ok(Formula {
            source: source.to_string(),
            ast: parse_formula(source)?,
        })
    }

    /// Build from an AST, using its canonical printed form as source.
    pub fn from_ast(ast: Expr) -> Formula {
        Formula {
            source: crate::formula::print_formula(&ast),
            ast,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Number, text or boolean. Never blank, never an error.
    Literal(CellValue),
    Formula(Formula),
}

impl Cell {
    pub fn as_formula(&self) -> Option<&Formula> {
        match self {
            Cell::Formula(f) => Some(f),
            Cell::Literal(_) => None,
        }
    }

    pub fn is_formula(&self) -> bool {
        matches!(self, Cell::Formula(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sheet {
    pub name: String,
    cells: BTreeMap<(u32, u32), Cell>,
}

impl Sheet {
    fn new(name: String) -> Self {
        Sheet {
            name,
            cells: BTreeMap::new(),
        }
    }

    /// Stored cells in row-major order as `(row, col, cell)`.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32, &Cell)> {
        self.cells.iter().map(|(&(r, c), cell)| (r, c, cell))
    }

    /// Stored cells inside a row/column window, row-major.
    pub fn cells_in(
        &self,
        rows: (u32, u32),
        cols: (u32, u32),
    ) -> impl Iterator<Item = (u32, u32, &Cell)> {
        self.cells
            .range((rows.0, 0)..=(rows.1, u32::MAX))
            .filter(move |(&(_, c), _)| c >= cols.0 && c <= cols.1)
            .map(|(&(r, c), cell)| (r, c, cell))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// An ordered set of uniquely named sheets, each a sparse map of cells.
/// Unset cells read as blank.
#[derive(Debug, Clone, PartialEq)]
pub struct Workbook {
    sheets: Vec<Sheet>,
}

impl Default for Workbook {
    fn default() -> Self {
        Workbook::new()
    }
}

fn valid_sheet_name(name: &str) -> bool {
    !name.is_empty()
        && name.trim() == name
        && !name.contains([']', '[', '\n', '\r', '!', '\''])
}

impl Workbook {
    /// A workbook with a single empty `Sheet1`.
    pub fn new() -> Self {
        Workbook {
            sheets: vec![Sheet::new(DEFAULT_SHEET.to_string())],
        }
    }

    pub(crate) fn empty() -> Self {
        Workbook { sheets: Vec::new() }
    }

    pub fn with_sheets<I, S>(names: I) -> Result<Self, GridError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut wb = Workbook::empty();
        for n in names {
            wb.add_sheet(n)?;
        }
        if wb.sheets.is_empty() {
            return Ok(Workbook::new());
        }
        Ok(wb)
    }

    pub fn add_sheet(&mut self, name: impl Into<String>) -> Result<usize, GridError> {
        let name = name.into();
        if !valid_sheet_name(&name) {
            return Err(GridError::BadSheetName(name));
        }
        if self.sheet_index(&name).is_some() {
            return Err(GridError::SheetExists(name));
        }
        self.sheets.push(Sheet::new(name));
        Ok(self.sheets.len() - 1)
    }

    pub fn sheets(&self) -> &[Sheet] {
        &self.sheets
    }

    /// Case-insensitive sheet lookup.
    pub fn sheet_index(&self, name: &str) -> Option<usize> {
        let lower = name.to_lowercase();
        self.sheets
            .iter()
            .position(|s| s.name == name || s.name.to_lowercase() == lower)
    }

    /// Resolve a reference; an unprefixed one lands on sheet `home`.
    /// `None` when the named sheet does not exist.
    pub fn resolve(&self, r: &CellRef, home: usize) -> Option<CellPos> {
        let sheet = match &r.sheet {
            Some(name) => self.sheet_index(name)?,
            None => home,
        };
        Some(CellPos {
            sheet,
            row: r.row,
            col: r.col,
        })
    }

    /// Resolve a reference whose missing sheet means [`DEFAULT_SHEET`].
    pub fn locate(&self, r: &CellRef) -> Result<CellPos, GridError> {
        let name = r.sheet.as_deref().unwrap_or(DEFAULT_SHEET);
        let sheet = self
            .sheet_index(name)
            .ok_or_else(|| GridError::UnknownSheet(name.to_string()))?;
        Ok(CellPos {
            sheet,
            row: r.row,
            col: r.col,
        })
    }

    /// The canonical (sheet-qualified, relative) reference for a position.
    pub fn cell_ref(&self, pos: CellPos) -> CellRef {
        CellRef::new(pos.col, pos.row).on_sheet(self.sheets[pos.sheet].name.clone())
    }

    pub fn cell(&self, pos: CellPos) -> Option<&Cell> {
        self.sheets.get(pos.sheet)?.cells.get(&(pos.row, pos.col))
    }

    pub fn get(&self, r: &CellRef) -> Option<&Cell> {
        self.cell(self.locate(r).ok()?)
    }

    /// Stored literal value at a position, blank for empty cells. Formula
    /// cells yield `None`.
    pub fn literal(&self, pos: CellPos) -> Option<CellValue> {
        match self.cell(pos) {
            None => Some(CellValue::Blank),
            Some(Cell::Literal(v)) => Some(v.clone()),
            Some(Cell::Formula(_)) => None,
        }
    }

    /// Replace the content at `pos` (or clear it with `None`), returning the
    /// previous content. This is the raw primitive behind substitution and
    /// restore; it performs no checks.
    pub fn put(&mut self, pos: CellPos, cell: Option<Cell>) -> Option<Cell> {
        let cells = &mut self.sheets[pos.sheet].cells;
        match cell {
            Some(c) => cells.insert((pos.row, pos.col), c),
            None => cells.remove(&(pos.row, pos.col)),
        }
    }

    /// Write a number, text or boolean into a cell and hand back whatever
    /// was there, so the caller can restore it.
    ///
    /// Refuses to overwrite a formula unless `force` is set.
    pub fn set_literal(
        &mut self,
        r: &CellRef,
        v: CellValue,
        force: bool,
    ) -> Result<Option<Cell>, GridError> {
        check_literal(&v)?;
        let pos = self.locate(r)?;
        if !force && self.cell(pos).is_some_and(Cell::is_formula) {
            return Err(GridError::FormulaTarget(self.cell_ref(pos).to_string()));
        }
        Ok(self.put(pos, Some(Cell::Literal(v))))
    }

    /// Store a formula given its source text (without `=`).
    pub fn set_formula(&mut self, r: &CellRef, source: &str) -> Result<Option<Cell>, GridError> {
        let pos = self.locate(r)?;
        let formula = Formula::parse(source).map_err(|e| GridError::FormulaParse {
            cell: self.cell_ref(pos).to_string(),
            source: e,
        })?;
        Ok(self.put(pos, Some(Cell::Formula(formula))))
    }

    pub fn clear(&mut self, r: &CellRef) -> Result<Option<Cell>, GridError> {
        let pos = self.locate(r)?;
        Ok(self.put(pos, None))
    }

    /// All stored cells: sheet order, then row-major.
    pub fn cells(&self) -> impl Iterator<Item = (CellPos, &Cell)> {
        self.sheets.iter().enumerate().flat_map(|(sheet, s)| {
            s.cells
                .iter()
                .map(move |(&(row, col), c)| (CellPos { sheet, row, col }, c))
        })
    }

    pub fn formulas(&self) -> impl Iterator<Item = (CellPos, &Formula)> {
        self.cells().filter_map(|(p, c)| c.as_formula().map(|f| (p, f)))
    }

    pub fn formula_count(&self) -> usize {
        self.formulas().count()
    }
}

pub(crate) fn check_literal(v: &CellValue) -> Result<(), GridError> {
    match v {
        CellValue::Number(n) if n.is_finite() => Ok(()),
        CellValue::Number(_) => Err(GridError::InvalidLiteral("non-finite number".into())),
        CellValue::Text(s) if s.contains(['\n', '\r']) => {
            Err(GridError::InvalidLiteral("text contains a line break".into()))
        }
        CellValue::Text(_) | CellValue::Bool(_) => Ok(()),
        CellValue::Blank => Err(GridError::InvalidLiteral("blank is not a literal".into())),
        CellValue::Error(k) => Err(GridError::InvalidLiteral(format!("{k} is not a literal"))),
    }
}
