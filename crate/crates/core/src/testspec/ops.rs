//! Deriving tests: copy a test along with its formula, capture one from a
//! live workbook, or propose boundary inputs.

use std::collections::BTreeMap;

use crate::engine::ValueMap;
use crate::error::{GridError, TestSpecError};
use crate::formula::{Expr, UnaryOp};
use crate::grid::{Cell, CellPos, CellRef, CellValue, Workbook, DEFAULT_SHEET};

use super::{Expectation, Lock, Substitution, TestCase};

/// Shift every relative axis in `t` by `target - anchor`, where `anchor` is
/// one of the test's expectation targets. The copy is named
/// `<name>@<target>`. `target` must be on the anchor's sheet.
pub fn translate_test(t: &TestCase, anchor: &CellRef, target: &CellRef) -> Result<TestCase, TestSpecError> {
    translate(t, anchor, target, false)
}

/// Like [`translate_test`] but `target` may sit on another sheet; references
/// on the anchor's sheet move there, others keep their sheet.
pub fn translate_test_across(
    t: &TestCase,
    anchor: &CellRef,
    target: &CellRef,
) -> Result<TestCase, TestSpecError> {
    translate(t, anchor, target, true)
}

fn sheet_of(r: &CellRef) -> &str {
    r.sheet.as_deref().unwrap_or(DEFAULT_SHEET)
}

fn translate(t: &TestCase, anchor: &CellRef, target: &CellRef, across: bool) -> Result<TestCase, TestSpecError> {
    let anchor = with_default_sheet(anchor);
    let target = with_default_sheet(target);
    if !t.expects.iter().any(|e| with_default_sheet(&e.target).same_cell(&anchor)) {
        return Err(TestSpecError::AnchorNotTarget(anchor.to_string()));
    }
    let from_sheet = sheet_of(&anchor).to_lowercase();
    let moved = sheet_of(&target).to_lowercase() != from_sheet;
    if moved && !across {
        return Err(TestSpecError::CrossSheet {
            anchor: anchor.to_string(),
            target: target.to_string(),
        });
    }
    let drow = target.row as i64 - anchor.row as i64;
    let dcol = target.col as i64 - anchor.col as i64;
    let shift = |r: &CellRef| -> Result<CellRef, TestSpecError> {
        let mut out = r.shifted(drow, dcol)?;
        if moved && sheet_of(r).to_lowercase() == from_sheet {
            out.sheet = target.sheet.clone();
        }
        Ok(out)
    };

    let label = CellRef::new(target.col, target.row);
    let label = if moved {
        label.on_sheet(sheet_of(&target)).to_string()
    } else {
        label.a1()
    };
    Ok(TestCase {
        name: format!("{}@{}", t.name, label),
        sets: t
            .sets
            .iter()
            .map(|s| {
                Ok(Substitution {
                    target: shift(&s.target)?,
                    value: s.value.clone(),
                })
            })
            .collect::<Result<_, TestSpecError>>()?,
        expects: t
            .expects
            .iter()
            .map(|e| {
                Ok(Expectation {
                    target: shift(&e.target)?,
                    ..e.clone()
                })
            })
            .collect::<Result<_, TestSpecError>>()?,
        locks: t
            .locks
            .iter()
            .map(|l| {
                Ok(Lock {
                    target: shift(&l.target)?,
                    expected: l.expected.clone(),
                })
            })
            .collect::<Result<_, TestSpecError>>()?,
    })
}

fn with_default_sheet(r: &CellRef) -> CellRef {
    match r.sheet {
        Some(_) => r.clone(),
        None => r.clone().on_sheet(DEFAULT_SHEET),
    }
}

/// A captured test and any notes about values that were filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Captured {
    pub test: TestCase,
    pub warnings: Vec<String>,
}

/// Pin the current behaviour of `output`: its inputs' stored values become
/// substitutions and its computed value (from `values`) the expectation.
/// A blank input is captured as 0, with a warning.
pub fn capture_test(
    wb: &Workbook,
    values: &ValueMap,
    inputs: &[CellRef],
    output: &CellRef,
    name: &str,
) -> Result<Captured, TestSpecError> {
    let out_pos = wb.locate(output)?;
    if !wb.cell(out_pos).is_some_and(Cell::is_formula) {
        return Err(GridError::NotAFormula(wb.cell_ref(out_pos).to_string()).into());
    }
    let mut test = TestCase::new(name);
    let mut warnings = Vec::new();
    let mut seen: Vec<CellPos> = Vec::new();
    for input in inputs {
        let pos = wb.locate(input)?;
        if seen.contains(&pos) {
            continue;
        }
        seen.push(pos);
        let r = wb.cell_ref(pos);
        let value = match wb.cell(pos) {
            Some(Cell::Formula(_)) => return Err(TestSpecError::FormulaInput(r.to_string())),
            Some(Cell::Literal(v)) => v.clone(),
            None => {
                warnings.push(format!("{r} is blank; captured as 0"));
                CellValue::Number(0.0)
            }
        };
        test.sets.push(Substitution { target: r, value });
    }
    test.expects.push(Expectation::new(wb.cell_ref(out_pos), values.at(out_pos)));
    Ok(Captured { test, warnings })
}

/// Boundary inputs for the formula in `cell`: for each comparison between a
/// single reference and a numeric constant `c`, the values `c - delta`, `c`
/// and `c + delta` for that reference. Sorted by cell, then value.
pub fn suggest_boundaries(
    wb: &Workbook,
    cell: &CellRef,
    delta: f64,
) -> Result<Vec<(CellRef, CellValue)>, TestSpecError> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(TestSpecError::InvalidArgument(format!(
            "delta must be a positive number, got {delta}"
        )));
    }
    let pos = wb.locate(cell)?;
    let Some(Cell::Formula(f)) = wb.cell(pos) else {
        return Err(GridError::NotAFormula(wb.cell_ref(pos).to_string()).into());
    };
    let mut found: Vec<(CellPos, f64)> = Vec::new();
    walk(&f.ast, &mut |r, c| {
        if let Some(p) = wb.resolve(r, pos.sheet) {
            found.push((p, c));
        }
    });

    let mut out: BTreeMap<CellPos, Vec<f64>> = BTreeMap::new();
    for (p, c) in found {
        let xs = out.entry(p).or_default();
        for x in [c - delta, c, c + delta] {
            if let CellValue::Number(x) = CellValue::number(x) {
                xs.push(x);
            }
        }
    }
    Ok(out
        .into_iter()
        .flat_map(|(p, mut xs)| {
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let r = wb.cell_ref(p);
            xs.into_iter().map(move |x| (r.clone(), CellValue::Number(x)))
        })
        .collect())
}

fn walk(e: &Expr, hit: &mut impl FnMut(&CellRef, f64)) {
    match e {
        Expr::Binary(op, l, r) => {
            if op.is_comparison() {
                match (&**l, &**r) {
                    (Expr::Ref(a), b) | (b, Expr::Ref(a)) => {
                        if let Some(c) = constant(b) {
                            hit(a, c);
                        }
                    }
                    _ => {}
                }
            }
            walk(l, hit);
            walk(r, hit);
        }
        Expr::Unary(_, x) => walk(x, hit),
        Expr::Call(_, args) => args.iter().for_each(|a| walk(a, hit)),
        _ => {}
    }
}

fn constant(e: &Expr) -> Option<f64> {
    match e {
        Expr::Number(n) => Some(*n),
        Expr::Unary(UnaryOp::Negate, x) => constant(x).map(|c| -c),
        Expr::Unary(UnaryOp::Percent, x) => constant(x).map(|c| c / 100.0),
        _ => None,
    }
}
