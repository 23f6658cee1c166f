//! Dependency graph over formula cells.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::formula::{collect_refs, RefItem};
use crate::grid::{CellPos, Workbook};

/// Precedent edges, evaluation order and cycle membership.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DepGraph {
    /// Formula cell → cells it reads. Single references are recorded even
    /// when the target is empty; ranges expand to their stored members.
    pub edges: BTreeMap<CellPos, BTreeSet<CellPos>>,
    /// Acyclic formula cells, precedents first. Among cells that are ready
    /// at the same time the lowest position (sheet, row, column) goes first.
    pub topo_order: Vec<CellPos>,
    /// Formula cells on a cycle or reading (transitively) from one.
    pub cyclic: BTreeSet<CellPos>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Window {
    pub sheet: usize,
    pub rows: (u32, u32),
    pub cols: (u32, u32),
}

impl Window {
    pub fn contains(&self, p: CellPos) -> bool {
        p.sheet == self.sheet
            && (self.rows.0..=self.rows.1).contains(&p.row)
            && (self.cols.0..=self.cols.1).contains(&p.col)
    }
}

/// Where each formula reads from, resolved against the workbook's sheets.
pub(crate) struct Reads {
    pub cells: Vec<CellPos>,
    pub windows: Vec<Window>,
}

pub(crate) fn resolve_reads(wb: &Workbook, at: CellPos, refs: &[RefItem]) -> Reads {
    let mut reads = Reads {
        cells: Vec::new(),
        windows: Vec::new(),
    };
    for item in refs {
        match item {
            RefItem::Cell(r) => {
                if let Some(p) = wb.resolve(r, at.sheet) {
                    reads.cells.push(p);
                }
            }
            RefItem::Range(rr) => {
                if let Some(p) = wb.resolve(&rr.start, at.sheet) {
                    reads.windows.push(Window {
                        sheet: p.sheet,
                        rows: (rr.start.row, rr.end.row),
                        cols: (rr.start.col, rr.end.col),
                    });
                }
            }
        }
    }
    reads
}

pub fn build_dep_graph(wb: &Workbook) -> DepGraph {
    let mut edges: BTreeMap<CellPos, BTreeSet<CellPos>> = BTreeMap::new();
    for (pos, f) in wb.formulas() {
        let reads = resolve_reads(wb, pos, &collect_refs(&f.ast));
        let mut set: BTreeSet<CellPos> = reads.cells.into_iter().collect();
        for w in reads.windows {
            let sheet = &wb.sheets()[w.sheet];
            set.extend(sheet.cells_in(w.rows, w.cols).map(|(row, col, _)| CellPos {
                sheet: w.sheet,
                row,
                col,
            }));
        }
        edges.insert(pos, set);
    }

    // Kahn's algorithm over formula cells; whatever never becomes ready is on
    // or downstream of a cycle.
    let mut indegree: HashMap<CellPos, usize> = HashMap::new();
    let mut dependents: HashMap<CellPos, Vec<CellPos>> = HashMap::new();
    for (&f, precedents) in &edges {
        let formula_precedents = precedents.iter().filter(|p| edges.contains_key(p));
        let mut n = 0;
        for &p in formula_precedents {
            dependents.entry(p).or_default().push(f);
            n += 1;
        }
        indegree.insert(f, n);
    }
    let mut ready: BTreeSet<CellPos> = indegree
        .iter()
        .filter(|(_, &n)| n == 0)
        .map(|(&p, _)| p)
        .collect();
    let mut topo_order = Vec::with_capacity(edges.len());
    while let Some(p) = ready.pop_first() {
        topo_order.push(p);
        for d in dependents.get(&p).into_iter().flatten() {
            let n = indegree.get_mut(d).expect("dependent is a formula");
            *n -= 1;
            if *n == 0 {
                ready.insert(*d);
            }
        }
    }
    let ordered: BTreeSet<CellPos> = topo_order.iter().copied().collect();
    let cyclic = edges.keys().filter(|p| !ordered.contains(p)).copied().collect();

    DepGraph {
        edges,
        topo_order,
        cyclic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_workbook;

    fn pos(row: u32, col: u32) -> CellPos {
        CellPos { sheet: 0, row, col }
    }

    #[test]
    fn grade_layout() {
        let wb = parse_workbook("A2 20.5\nB2 =IF(A2<40,\"FAIL\",\"PASS\")\n").unwrap();
        let g = build_dep_graph(&wb);
        assert_eq!(g.edges[&pos(2, 2)], BTreeSet::from([pos(2, 1)]));
        assert_eq!(g.topo_order, vec![pos(2, 2)]);
        assert!(g.cyclic.is_empty());
    }

    #[test]
    fn empty_workbook() {
        assert_eq!(build_dep_graph(&Workbook::new()), DepGraph::default());
    }

    #[test]
    fn two_cell_cycle_and_downstream() {
        let wb = parse_workbook("A1 =B1\nB1 =A1\nC1 =A1+1\nD1 =5\n").unwrap();
        let g = build_dep_graph(&wb);
        assert_eq!(g.cyclic, BTreeSet::from([pos(1, 1), pos(1, 2), pos(1, 3)]));
        assert_eq!(g.topo_order, vec![pos(1, 4)]);
    }

    #[test]
    fn self_reference_is_cyclic() {
        let wb = parse_workbook("A1 =A1\n").unwrap();
        assert_eq!(build_dep_graph(&wb).cyclic, BTreeSet::from([pos(1, 1)]));
    }

    #[test]
    fn ranges_expand_to_stored_members_and_order_precedents_first() {
        let wb = parse_workbook("A1 =SUM(A2:A9)\nA2 1\nA3 =A2*2\nA5 =A3+1\n").unwrap();
        let g = build_dep_graph(&wb);
        assert_eq!(g.edges[&pos(1, 1)], BTreeSet::from([pos(2, 1), pos(3, 1), pos(5, 1)]));
        assert_eq!(g.topo_order, vec![pos(3, 1), pos(5, 1), pos(1, 1)]);
    }

    #[test]
    fn references_to_missing_sheets_add_no_edges() {
        let wb = parse_workbook("A1 =Nope!B1\n").unwrap();
        let g = build_dep_graph(&wb);
        assert!(g.edges[&pos(1, 1)].is_empty());
    }
}
