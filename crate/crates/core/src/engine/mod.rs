//! Recalculation: dependency graph, full and incremental evaluation, fill.
//!
//! `RAND()` draws from a ChaCha8 stream seeded with
//! [`EngineConfig::rand_seed`] (via `rand_chacha`'s `seed_from_u64`). Draws
//! are consumed in evaluation order, so equal seeds over equal workbooks give
//! identical values.

mod builtins;
mod eval;
mod graph;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GridError;
use crate::formula::{collect_refs, translate_refs};
use crate::grid::{Cell, CellPos, CellRef, CellValue, ErrorKind, Formula, RangeRef, Workbook};

pub use builtins::{call_builtin, Arg};
pub use eval::{compare, compare_values, eval_formula, to_bool, to_number, to_text, EvalContext, RangeValues};
pub use graph::{build_dep_graph, DepGraph};

pub(crate) use eval::fold_text;
use graph::{resolve_reads, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EngineConfig {
    pub rand_seed: u64,
}

impl EngineConfig {
    pub fn with_seed(rand_seed: u64) -> Self {
        EngineConfig { rand_seed }
    }
}

/// Computed value of every non-blank cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValueMap {
    values: BTreeMap<CellPos, CellValue>,
    sheets: Vec<String>,
}

impl ValueMap {
    pub fn at(&self, pos: CellPos) -> CellValue {
        self.values.get(&pos).cloned().unwrap_or(CellValue::Blank)
    }

    /// Look up by reference; a missing sheet name means `Sheet1`, an
    /// unknown sheet reads as `#REF!`.
    pub fn get(&self, r: &CellRef) -> CellValue {
        let name = r.sheet.as_deref().unwrap_or(crate::grid::DEFAULT_SHEET).to_lowercase();
        match self.sheets.iter().position(|s| s.to_lowercase() == name) {
            Some(sheet) => self.at(CellPos {
                sheet,
                row: r.row,
                col: r.col,
            }),
            None => CellValue::Error(ErrorKind::Ref),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellPos, &CellValue)> {
        self.values.iter().map(|(p, v)| (*p, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

struct Ctx<'a> {
    wb: &'a Workbook,
    values: &'a BTreeMap<CellPos, CellValue>,
    home: usize,
    rng: &'a mut ChaCha8Rng,
}

impl EvalContext for Ctx<'_> {
    fn cell(&self, r: &CellRef) -> CellValue {
        match self.wb.resolve(r, self.home) {
            Some(p) => self.values.get(&p).cloned().unwrap_or(CellValue::Blank),
            None => CellValue::Error(ErrorKind::Ref),
        }
    }

    fn range(&self, r: &RangeRef) -> RangeValues {
        let Some(p) = self.wb.resolve(&r.start, self.home) else {
            return RangeValues {
                values: vec![CellValue::Error(ErrorKind::Ref)],
                blanks: 0,
            };
        };
        let lo = CellPos {
            sheet: p.sheet,
            row: r.start.row,
            col: 0,
        };
        let hi = CellPos {
            sheet: p.sheet,
            row: r.end.row,
            col: u32::MAX,
        };
        let values: Vec<CellValue> = self
            .values
            .range(lo..=hi)
            .filter(|(q, _)| q.col >= r.start.col && q.col <= r.end.col)
            .map(|(_, v)| v.clone())
            .collect();
        let blanks = r.len() as u64 - values.len() as u64;
        RangeValues { values, blanks }
    }

    fn rand(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// A dependency graph plus reverse indexes, built once per workbook shape.
///
/// Stays valid while only literal cells change; replacing, adding or
/// removing a formula needs a fresh `Engine`.
pub struct Engine {
    cfg: EngineConfig,
    graph: DepGraph,
    single_readers: HashMap<CellPos, Vec<CellPos>>,
    window_readers: Vec<(Window, CellPos)>,
    uses_rand: bool,
}

impl Engine {
    pub fn new(wb: &Workbook, cfg: EngineConfig) -> Engine {
        let graph = build_dep_graph(wb);
        let mut single_readers: HashMap<CellPos, Vec<CellPos>> = HashMap::new();
        let mut window_readers = Vec::new();
        let mut uses_rand = false;
        for (pos, f) in wb.formulas() {
            uses_rand |= f.ast.calls("RAND");
            let reads = resolve_reads(wb, pos, &collect_refs(&f.ast));
            for p in reads.cells {
                single_readers.entry(p).or_default().push(pos);
            }
            window_readers.extend(reads.windows.into_iter().map(|w| (w, pos)));
        }
        Engine {
            cfg,
            graph,
            single_readers,
            window_readers,
            uses_rand,
        }
    }

    pub fn graph(&self) -> &DepGraph {
        &self.graph
    }

    pub fn uses_rand(&self) -> bool {
        self.uses_rand
    }

    pub fn recalc(&self, wb: &Workbook) -> ValueMap {
        let mut values = BTreeMap::new();
        for (pos, cell) in wb.cells() {
            if let Cell::Literal(v) = cell {
                values.insert(pos, v.clone());
            }
        }
        for &p in &self.graph.cyclic {
            values.insert(p, CellValue::Error(ErrorKind::Cycle));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.rand_seed);
        self.evaluate(wb, &mut values, &mut rng, |_| true);
        ValueMap {
            values,
            sheets: wb.sheets().iter().map(|s| s.name.clone()).collect(),
        }
    }

    fn evaluate(
        &self,
        wb: &Workbook,
        values: &mut BTreeMap<CellPos, CellValue>,
        rng: &mut ChaCha8Rng,
        selected: impl Fn(CellPos) -> bool,
    ) {
        for &pos in &self.graph.topo_order {
            if !selected(pos) {
                continue;
            }
            let Some(Cell::Formula(f)) = wb.cell(pos) else {
                continue;
            };
            let v = {
                let mut ctx = Ctx {
                    wb,
                    values,
                    home: pos.sheet,
                    rng,
                };
                eval_formula(&f.ast, &mut ctx)
            };
            values.insert(pos, v);
        }
    }

    /// Formula cells that read, directly or transitively, from any of
    /// `changed`.
    pub fn dependents(&self, changed: &[CellPos]) -> BTreeSet<CellPos> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<CellPos> = changed.to_vec();
        while let Some(p) = stack.pop() {
            let singles = self.single_readers.get(&p).into_iter().flatten().copied();
            let windows = self
                .window_readers
                .iter()
                .filter(|(w, _)| w.contains(p))
                .map(|&(_, f)| f);
            for f in singles.chain(windows) {
                if seen.insert(f) {
                    stack.push(f);
                }
            }
        }
        seen
    }

    /// Recompute only what `changed` can reach. `prev` must be this
    /// engine's result for the workbook before the literal edits.
    ///
    /// Falls back to a full recalculation when the workbook draws random
    /// numbers (the stream order must not depend on what changed) or when a
    /// changed cell is or was a formula.
    pub fn recalc_dirty(&self, wb: &Workbook, changed: &[CellPos], prev: &ValueMap) -> ValueMap {
        let shape_changed = changed.iter().any(|p| {
            self.graph.edges.contains_key(p) || wb.cell(*p).is_some_and(Cell::is_formula)
        });
        if shape_changed {
            return Engine::new(wb, self.cfg).recalc(wb);
        }
        if self.uses_rand {
            return self.recalc(wb);
        }
        let mut values = prev.values.clone();
        for &p in changed {
            match wb.cell(p) {
                Some(Cell::Literal(v)) => {
                    values.insert(p, v.clone());
                }
                _ => {
                    values.remove(&p);
                }
            }
        }
        let dirty = self.dependents(changed);
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.rand_seed);
        self.evaluate(wb, &mut values, &mut rng, |p| dirty.contains(&p));
        ValueMap {
            values,
            sheets: prev.sheets.clone(),
        }
    }
}

/// Evaluate every cell of the workbook.
pub fn recalc(wb: &Workbook, cfg: EngineConfig) -> ValueMap {
    Engine::new(wb, cfg).recalc(wb)
}

/// Incremental recalculation after literal edits to `changed`.
pub fn recalc_dirty(wb: &Workbook, changed: &[CellRef], prev: &ValueMap, cfg: EngineConfig) -> ValueMap {
    let positions: Vec<CellPos> = changed.iter().filter_map(|r| wb.locate(r).ok()).collect();
    Engine::new(wb, cfg).recalc_dirty(wb, &positions, prev)
}

/// Copy the formula in `src` into every cell of `dst`, shifting relative
/// references by each destination's offset from `src`. `src` itself is left
/// alone if it lies inside `dst`. All-or-nothing: on error the workbook is
/// untouched. Returns the number of cells written.
pub fn fill_formula(wb: &mut Workbook, src: &CellRef, dst: &RangeRef) -> Result<usize, GridError> {
    let src_pos = wb.locate(src)?;
    let Some(Cell::Formula(f)) = wb.cell(src_pos) else {
        return Err(GridError::NotAFormula(wb.cell_ref(src_pos).to_string()));
    };
    let ast = f.ast.clone();
    let dst_sheet = wb.locate(&dst.start)?.sheet;
    let mut writes = Vec::with_capacity(dst.len());
    for cell in dst.cells() {
        let pos = CellPos {
            sheet: dst_sheet,
            row: cell.row,
            col: cell.col,
        };
        if pos == src_pos {
            continue;
        }
        let drow = cell.row as i64 - src_pos.row as i64;
        let dcol = cell.col as i64 - src_pos.col as i64;
        let moved = translate_refs(&ast, drow, dcol)?;
        writes.push((pos, Formula::from_ast(moved)));
    }
    let n = writes.len();
    for (pos, f) in writes {
        wb.put(pos, Some(Cell::Formula(f)));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{parse_cellref, parse_range, parse_workbook, serialize_workbook};

    const FINAL: &str = r#"IF(AND(A2<40,A2>=0),"FAIL",IF(AND(A2>=40,A2<70),"PASS",IF(AND(A2>=70,A2<=100),"HONOR","NOT VALID")))"#;

    fn r(s: &str) -> CellRef {
        parse_cellref(s, "Sheet1").unwrap()
    }

    #[test]
    fn final_grade_fails_low_mark() {
        let wb = parse_workbook(&format!("A2 20.5\nB2 ={FINAL}\n")).unwrap();
        let v = recalc(&wb, EngineConfig::default());
        assert_eq!(v.get(&r("B2")), CellValue::text("FAIL"));
    }

    #[test]
    fn literal_only_workbook() {
        let wb = parse_workbook("A1 1\nB1 x\nC1 TRUE\n").unwrap();
        let v = recalc(&wb, EngineConfig::default());
        assert_eq!(v.len(), 3);
        assert_eq!(v.get(&r("B1")), CellValue::text("x"));
        assert_eq!(v.get(&r("D1")), CellValue::Blank);
    }

    #[test]
    fn cycles_become_cycle_errors() {
        let wb = parse_workbook("A1 =B1\nB1 =A1\nC1 =A1+1\nD1 =2\n").unwrap();
        let v = recalc(&wb, EngineConfig::default());
        for c in ["A1", "B1", "C1"] {
            assert_eq!(v.get(&r(c)), CellValue::Error(ErrorKind::Cycle), "{c}");
        }
        assert_eq!(v.get(&r("D1")), CellValue::Number(2.0));
    }

    #[test]
    fn cross_sheet_reference() {
        let wb = parse_workbook("[sheet Data]\nA1 4\nA2 6\n\n[sheet Sheet1]\nB1 =SUM(Data!A1:A2)*Data!A1\nB2 =Missing!A1\n").unwrap();
        let v = recalc(&wb, EngineConfig::default());
        // (4 + 6) * 4
        assert_eq!(v.get(&r("B1")), CellValue::Number(40.0));
        assert_eq!(v.get(&r("B2")), CellValue::Error(ErrorKind::Ref));
        assert_eq!(v.get(&r("DATA!A2")), CellValue::Number(6.0));
    }

    #[test]
    fn incremental_single_edge() {
        let mut wb = parse_workbook(&format!("A2 20.5\nB2 ={FINAL}\nC5 =1+1\n")).unwrap();
        let engine = Engine::new(&wb, EngineConfig::default());
        let before = engine.recalc(&wb);
        wb.set_literal(&r("A2"), CellValue::Number(78.85), false).unwrap();
        let a2 = wb.locate(&r("A2")).unwrap();
        let deps = engine.dependents(&[a2]);
        assert_eq!(deps.into_iter().collect::<Vec<_>>(), vec![wb.locate(&r("B2")).unwrap()]);
        let after = engine.recalc_dirty(&wb, &[a2], &before);
        assert_eq!(after.get(&r("B2")), CellValue::text("HONOR"));
        assert_eq!(after, recalc(&wb, EngineConfig::default()));
    }

    #[test]
    fn incremental_without_dependents() {
        let mut wb = parse_workbook("A1 1\nB1 =A1*2\n").unwrap();
        let prev = recalc(&wb, EngineConfig::default());
        wb.set_literal(&r("Z9"), CellValue::Number(7.0), false).unwrap();
        let next = recalc_dirty(&wb, &[r("Z9")], &prev, EngineConfig::default());
        assert_eq!(next.get(&r("Z9")), CellValue::Number(7.0));
        assert_eq!(next.get(&r("B1")), prev.get(&r("B1")));
        assert_eq!(next.len(), prev.len() + 1);
    }

    #[test]
    fn incremental_sees_range_members_appearing() {
        let mut wb = parse_workbook("A1 1\nB1 =SUM(A1:A5)\nC1 =B1+1\n").unwrap();
        let prev = recalc(&wb, EngineConfig::default());
        wb.set_literal(&r("A4"), CellValue::Number(10.0), false).unwrap();
        let next = recalc_dirty(&wb, &[r("A4")], &prev, EngineConfig::default());
        assert_eq!(next.get(&r("C1")), CellValue::Number(12.0));
        wb.clear(&r("A4")).unwrap();
        let back = recalc_dirty(&wb, &[r("A4")], &next, EngineConfig::default());
        assert_eq!(back, prev);
    }

    #[test]
    fn seeded_rand_is_reproducible() {
        let wb = parse_workbook("A1 =RAND()\nA2 =RAND()\nA3 =A1<1\n").unwrap();
        let a = recalc(&wb, EngineConfig::with_seed(7));
        let b = recalc(&wb, EngineConfig::with_seed(7));
        let c = recalc(&wb, EngineConfig::with_seed(8));
        assert_eq!(a, b);
        assert_ne!(a.get(&r("A1")), c.get(&r("A1")));
        assert_ne!(a.get(&r("A1")), a.get(&r("A2")));
        for cell in ["A1", "A2"] {
            let CellValue::Number(x) = a.get(&r(cell)) else { panic!() };
            assert!((0.0..1.0).contains(&x));
        }
        assert_eq!(a.get(&r("A3")), CellValue::Bool(true));
    }

    #[test]
    fn rand_workbook_falls_back_to_full_recalc() {
        let mut wb = parse_workbook("A1 1\nB1 =RAND()+A1\nC1 =RAND()\n").unwrap();
        let cfg = EngineConfig::with_seed(3);
        let prev = recalc(&wb, cfg);
        wb.set_literal(&r("A1"), CellValue::Number(2.0), false).unwrap();
        assert_eq!(recalc_dirty(&wb, &[r("A1")], &prev, cfg), recalc(&wb, cfg));
    }

    #[test]
    fn fill_down_shifts_relative_refs() {
        let mut wb = parse_workbook("B2 =IF(A2<40,\"FAIL\",\"PASS\")\n").unwrap();
        let n = fill_formula(&mut wb, &r("B2"), &parse_range("B3:B4", "Sheet1").unwrap()).unwrap();
        assert_eq!(n, 2);
        assert_eq!(wb.get(&r("B3")).unwrap().as_formula().unwrap().source, "IF(A3<40,\"FAIL\",\"PASS\")");
        assert_eq!(wb.get(&r("B4")).unwrap().as_formula().unwrap().source, "IF(A4<40,\"FAIL\",\"PASS\")");
    }

    #[test]
    fn fill_across_keeps_anchor() {
        let mut wb = parse_workbook("B1 =$A$1*B2\n").unwrap();
        let before = serialize_workbook(&wb);
        fill_formula(&mut wb, &r("B1"), &parse_range("C1:E1", "Sheet1").unwrap()).unwrap();
        assert_ne!(serialize_workbook(&wb), before);
        for (cell, want) in [("C1", "$A$1*C2"), ("D1", "$A$1*D2"), ("E1", "$A$1*E2")] {
            assert_eq!(wb.get(&r(cell)).unwrap().as_formula().unwrap().source, want);
        }
    }

    #[test]
    fn fill_is_all_or_nothing() {
        let mut wb = parse_workbook("B2 =A1\n").unwrap();
        let before = wb.clone();
        // Row 1 would need A0.
        assert!(fill_formula(&mut wb, &r("B2"), &parse_range("C1:C5", "Sheet1").unwrap()).is_err());
        assert_eq!(wb, before);
        assert!(matches!(
            fill_formula(&mut wb, &r("A9"), &parse_range("C1:C5", "Sheet1").unwrap()),
            Err(GridError::NotAFormula(_))
        ));
    }

    #[test]
    fn fill_to_scale() {
        let mut wb = parse_workbook("A1 =Data!B1*$C$1\n[sheet Data]\n").unwrap();
        let n = fill_formula(&mut wb, &r("A1"), &parse_range("A2:A246", "Sheet1").unwrap()).unwrap();
        assert_eq!(n, 245);
        assert_eq!(wb.formula_count(), 246);
    }
}
