//! Generators and oracles for the property tests. Shared with the
//! acceptance suite in the cli crate through `#[path]`.
#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::select;
use proptest::test_runner::TestCaseError;

use gridtdd::engine::{eval_formula, recalc, Engine, EngineConfig, EvalContext, RangeValues};
use gridtdd::formula::{BinaryOp, Expr, UnaryOp};
use gridtdd::grid::{Cell, CellPos, CellRef, CellValue, ErrorKind, Formula, RangeRef, Workbook};
use gridtdd::testspec::{Expectation, Lock, Substitution, TestCase, TestSuite};

/// Second sheet; the space forces quoting in printed references.
pub const DATA: &str = "Data Sheet";
/// Columns A..E hold literals and formulas, F..G literals only.
pub const MAIN_COLS: u32 = 5;
pub const BLOCK_COLS: (u32, u32) = (6, 7);

const BINOPS: [BinaryOp; 12] = [
    BinaryOp::Add,
    BinaryOp::Sub,
    BinaryOp::Mul,
    BinaryOp::Div,
    BinaryOp::Pow,
    BinaryOp::Concat,
    BinaryOp::Eq,
    BinaryOp::Ne,
    BinaryOp::Lt,
    BinaryOp::Le,
    BinaryOp::Gt,
    BinaryOp::Ge,
];

pub fn arb_number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..=100).prop_map(f64::from),
        (0u32..100_000).prop_map(|x| f64::from(x) / 1000.0),
        Just(0.1),
        Just(1e-7),
        Just(40.0),
    ]
}

/// Text without line breaks, biased toward awkward characters.
pub fn arb_text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z]{0,5}",
        "[ -~]{0,8}",
        select(vec!["TRUE", "false", "12", "-3.5", "#REF!", "\"", " x ", "a tol 5", "=A1", ""])
            .prop_map(String::from),
    ]
}

pub fn arb_literal() -> impl Strategy<Value = CellValue> {
    prop_oneof![
        3 => (arb_number(), any::<bool>()).prop_map(|(x, neg)| CellValue::number(if neg { -x } else { x })),
        2 => arb_text().prop_map(CellValue::Text),
        1 => any::<bool>().prop_map(CellValue::Bool),
    ]
}

fn with_flags(sheet: Option<&str>, row: u32, col: u32) -> impl Strategy<Value = CellRef> {
    let sheet = sheet.map(String::from);
    (any::<bool>(), any::<bool>()).prop_map(move |(ca, ra)| CellRef {
        sheet: sheet.clone(),
        col,
        row,
        col_abs: ca,
        row_abs: ra,
    })
}

/// A reference to one of `cells` on the formula's own sheet.
fn ref_among(cells: Vec<(u32, u32)>) -> BoxedStrategy<CellRef> {
    select(cells)
        .prop_flat_map(|(row, col)| with_flags(None, row, col))
        .boxed()
}

/// References that can never close a loop: the literal block, the data
/// sheet, or an empty column.
fn safe_ref(rows: u32) -> BoxedStrategy<CellRef> {
    prop_oneof![
        (1..=rows, BLOCK_COLS.0..=BLOCK_COLS.1).prop_flat_map(|(r, c)| with_flags(None, r, c)),
        (1..=rows, 1..=3u32).prop_flat_map(|(r, c)| with_flags(Some(DATA), r, c)),
        (1..=rows).prop_flat_map(|r| with_flags(None, r, 9)),
    ]
    .boxed()
}

fn range_in(sheet: Option<&'static str>, rows: u32, cols: (u32, u32)) -> BoxedStrategy<RangeRef> {
    (1..=rows, 1..=rows, cols.0..=cols.1, cols.0..=cols.1)
        .prop_flat_map(move |(r1, r2, c1, c2)| (with_flags(sheet, r1, c1), with_flags(sheet, r2, c2)))
        .prop_map(|(a, b)| RangeRef::normalized(a, b))
        .boxed()
}

fn safe_range(rows: u32) -> BoxedStrategy<RangeRef> {
    prop_oneof![range_in(None, rows, BLOCK_COLS), range_in(Some(DATA), rows, (1, 3))].boxed()
}

fn call(name: &str, args: Vec<Expr>) -> Expr {
    Expr::call(name, args)
}

/// Formula trees over the given reference and range strategies.
pub fn arb_expr(cell: BoxedStrategy<CellRef>, range: BoxedStrategy<RangeRef>, rand: bool) -> BoxedStrategy<Expr> {
    let plain = prop_oneof![
        3 => arb_number().prop_map(Expr::Number),
        1 => "[a-zA-Z0-9 \"#<>=.]{0,4}".prop_map(Expr::Text),
        1 => any::<bool>().prop_map(Expr::Bool),
        5 => cell.prop_map(Expr::Ref),
    ];
    let leaf = if rand {
        prop_oneof![8 => plain, 1 => Just(call("RAND", vec![]))].boxed()
    } else {
        plain.boxed()
    };
    leaf.prop_recursive(3, 24, 3, move |inner| {
        let arg = prop_oneof![3 => inner.clone(), 1 => range.clone().prop_map(Expr::Range)];
        prop_oneof![
            1 => inner.clone().prop_map(|e| Expr::unary(UnaryOp::Negate, e)),
            1 => inner.clone().prop_map(|e| Expr::unary(UnaryOp::Percent, e)),
            4 => (select(BINOPS.to_vec()), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            2 => (select(vec!["SUM", "MIN", "MAX", "AVERAGE", "COUNT", "AND", "OR"]), vec(arg, 1..=3))
                .prop_map(|(n, a)| call(n, a)),
            2 => vec(inner.clone(), 2..=3).prop_map(|a| call("IF", a)),
            1 => (select(vec!["NOT", "ABS"]), inner.clone()).prop_map(|(n, e)| call(n, vec![e])),
            1 => (inner.clone(), 0u32..3).prop_map(|(e, d)| call("ROUND", vec![e, Expr::Number(f64::from(d))])),
            1 => (range.clone(), select(vec![">1", "<=0.5", "a", "=TRUE", "", "<>b"]))
                .prop_map(|(r, c)| call("COUNTIF", vec![Expr::Range(r), Expr::Text(c.into())])),
        ]
    })
    .boxed()
}

fn base_workbook() -> Workbook {
    Workbook::with_sheets(["Sheet1", DATA]).unwrap()
}

/// Literal block (F..G) and data-sheet (A..C) contents for `rows` rows.
fn arb_inputs(rows: u32) -> impl Strategy<Value = Vec<(CellPos, Option<CellValue>)>> {
    let mut slots = Vec::new();
    for row in 1..=rows {
        for col in BLOCK_COLS.0..=BLOCK_COLS.1 {
            slots.push(CellPos { sheet: 0, row, col });
        }
        for col in 1..=3 {
            slots.push(CellPos { sheet: 1, row, col });
        }
    }
    let n = slots.len();
    vec(proptest::option::weighted(0.8, arb_literal()), n)
        .prop_map(move |vals| slots.iter().copied().zip(vals).collect())
}

fn place(wb: &mut Workbook, pos: CellPos, v: Option<CellValue>) {
    wb.put(pos, v.map(Cell::Literal));
}

fn main_grid(rows: u32) -> Vec<(u32, u32)> {
    (1..=rows)
        .flat_map(|r| (1..=MAIN_COLS).map(move |c| (r, c)))
        .collect()
}

/// Content for one main-grid cell: empty, literal or formula.
fn arb_content(expr: BoxedStrategy<Expr>) -> BoxedStrategy<Option<Cell>> {
    prop_oneof![
        1 => Just(None),
        2 => arb_literal().prop_map(|v| Some(Cell::Literal(v))),
        3 => expr.prop_map(|e| Some(Cell::Formula(Formula::from_ast(e)))),
    ]
    .boxed()
}

/// At most 50 cells, no cycles, no RAND. Formula cells are visited in a
/// random order and may only read cells earlier in it, plus the literal
/// block and data sheet.
pub fn arb_acyclic_workbook() -> impl Strategy<Value = Workbook> {
    (2u32..=5)
        .prop_flat_map(|rows| {
            let order = Just(main_grid(rows)).prop_shuffle();
            (Just(rows), order, arb_inputs(rows))
        })
        .prop_flat_map(|(rows, order, inputs)| {
            let contents: Vec<BoxedStrategy<Option<Cell>>> = (0..order.len())
                .map(|k| {
                    let cell = if k == 0 {
                        safe_ref(rows)
                    } else {
                        prop_oneof![2 => ref_among(order[..k].to_vec()), 1 => safe_ref(rows)].boxed()
                    };
                    arb_content(arb_expr(cell, safe_range(rows), false))
                })
                .collect();
            (Just(order), Just(inputs), contents)
        })
        .prop_map(|(order, inputs, contents)| {
            let mut wb = base_workbook();
            for (p, v) in inputs {
                place(&mut wb, p, v);
            }
            for ((row, col), c) in order.into_iter().zip(contents) {
                wb.put(CellPos { sheet: 0, row, col }, c);
            }
            wb
        })
}

/// Anything goes: references and ranges anywhere, so cycles happen, and
/// sometimes RAND.
pub fn arb_workbook() -> impl Strategy<Value = Workbook> {
    (2u32..=6, proptest::bool::weighted(0.15))
        .prop_flat_map(|(rows, rand)| {
            let anywhere = prop_oneof![
                3 => (1..=rows, 1..=MAIN_COLS).prop_flat_map(|(r, c)| with_flags(None, r, c)),
                1 => safe_ref(rows),
            ]
            .boxed();
            let ranges = prop_oneof![range_in(None, rows, (1, BLOCK_COLS.1)), safe_range(rows)].boxed();
            let n = (rows * MAIN_COLS) as usize;
            (
                Just(rows),
                arb_inputs(rows),
                vec(arb_content(arb_expr(anywhere, ranges, rand)), n),
            )
        })
        .prop_map(|(rows, inputs, contents)| {
            let mut wb = base_workbook();
            for (p, v) in inputs {
                place(&mut wb, p, v);
            }
            for ((row, col), c) in main_grid(rows).into_iter().zip(contents) {
                wb.put(CellPos { sheet: 0, row, col }, c);
            }
            wb
        })
}

/// Edits for an incremental recalculation: mostly literal writes and
/// clears, occasionally a new formula.
pub fn arb_changes() -> impl Strategy<Value = Vec<(CellPos, Option<Cell>)>> {
    let pos = prop_oneof![
        (1u32..=6, 1..=BLOCK_COLS.1).prop_map(|(row, col)| CellPos { sheet: 0, row, col }),
        (1u32..=6, 1u32..=3).prop_map(|(row, col)| CellPos { sheet: 1, row, col }),
    ];
    let formula = arb_expr(
        (1u32..=6, 1..=MAIN_COLS)
            .prop_flat_map(|(r, c)| with_flags(None, r, c))
            .boxed(),
        range_in(None, 6, (1, 7)),
        false,
    );
    let content = prop_oneof![
        6 => arb_literal().prop_map(|v| Some(Cell::Literal(v))),
        2 => Just(None),
        1 => formula.prop_map(|e| Some(Cell::Formula(Formula::from_ast(e)))),
    ];
    vec((pos, content), 1..=4)
}

pub fn check_incremental(wb: &Workbook, changes: &[(CellPos, Option<Cell>)], seed: u64) -> Result<(), TestCaseError> {
    let cfg = EngineConfig::with_seed(seed);
    let engine = Engine::new(wb, cfg);
    let prev = engine.recalc(wb);
    let mut after = wb.clone();
    for (p, c) in changes {
        after.put(*p, c.clone());
    }
    let changed: Vec<CellPos> = changes.iter().map(|(p, _)| *p).collect();
    let incremental = engine.recalc_dirty(&after, &changed, &prev);
    prop_assert_eq!(incremental, recalc(&after, cfg));
    Ok(())
}

struct Oracle<'a> {
    wb: &'a Workbook,
    values: &'a BTreeMap<CellPos, CellValue>,
    home: usize,
}

impl EvalContext for Oracle<'_> {
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
        let mut out = RangeValues::default();
        for row in r.start.row..=r.end.row {
            for col in r.start.col..=r.end.col {
                match self.values.get(&CellPos { sheet: p.sheet, row, col }) {
                    Some(v) => out.values.push(v.clone()),
                    None => out.blanks += 1,
                }
            }
        }
        out
    }

    fn rand(&mut self) -> f64 {
        panic!("the fixpoint oracle does not support RAND")
    }
}

/// Evaluate every formula against the previous round's values until
/// nothing changes. Only meaningful for acyclic workbooks.
pub fn fixpoint(wb: &Workbook) -> BTreeMap<CellPos, CellValue> {
    let literals: BTreeMap<CellPos, CellValue> = wb
        .cells()
        .filter_map(|(p, c)| match c {
            Cell::Literal(v) => Some((p, v.clone())),
            Cell::Formula(_) => None,
        })
        .collect();
    let mut current = literals.clone();
    for _ in 0..=wb.formula_count() + 1 {
        let mut next = literals.clone();
        for (p, f) in wb.formulas() {
            let mut ctx = Oracle {
                wb,
                values: &current,
                home: p.sheet,
            };
            next.insert(p, eval_formula(&f.ast, &mut ctx));
        }
        if next == current {
            break;
        }
        current = next;
    }
    current
}

pub fn check_fixpoint(wb: &Workbook) -> Result<(), TestCaseError> {
    let engine: BTreeMap<CellPos, CellValue> = recalc(wb, EngineConfig::default())
        .iter()
        .map(|(p, v)| (p, v.clone()))
        .collect();
    prop_assert_eq!(engine, fixpoint(wb));
    Ok(())
}

fn arb_sheet_ref() -> impl Strategy<Value = CellRef> {
    (
        select(vec!["Sheet1", "sheet1", DATA, "x.y", "It's"]),
        1u32..=40,
        1u32..=30,
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(s, row, col, ca, ra)| CellRef::new(col, row).on_sheet(s).with_abs(ca, ra))
}

fn arb_expected() -> impl Strategy<Value = CellValue> {
    prop_oneof![
        4 => arb_literal(),
        1 => select(ErrorKind::ALL.to_vec()).prop_map(CellValue::Error),
    ]
}

fn arb_tol() -> impl Strategy<Value = f64> {
    select(vec![1e-9, 0.0, 0.5, 1e-6, 2.0])
}

pub fn arb_test_case(name: String) -> impl Strategy<Value = TestCase> {
    (
        vec((arb_sheet_ref(), arb_literal()), 0..4),
        vec((arb_sheet_ref(), arb_expected(), arb_tol(), select(vec![0.0, 0.01])), 0..3),
        vec((arb_sheet_ref(), arb_expected()), 0..2),
    )
        .prop_filter("needs an expect or a lock", |(_, e, l)| !e.is_empty() || !l.is_empty())
        .prop_map(move |(sets, expects, locks)| {
            let mut t = TestCase::new(name.clone());
            for (target, value) in sets {
                if !t.sets.iter().any(|s| s.target.same_cell(&target)) {
                    t.sets.push(Substitution { target, value });
                }
            }
            t.expects = expects
                .into_iter()
                .map(|(target, expected, atol, rtol)| Expectation {
                    target,
                    expected,
                    atol,
                    rtol,
                })
                .collect();
            t.locks = locks
                .into_iter()
                .map(|(target, expected)| Lock { target, expected })
                .collect();
            t
        })
}

fn unique(names: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out
}

pub fn arb_suites() -> impl Strategy<Value = Vec<TestSuite>> {
    vec("[ -~]{0,8}", 0..3)
        .prop_map(unique)
        .prop_flat_map(|names| {
            let suites: Vec<_> = names
                .into_iter()
                .map(|name| {
                    let tests = vec("[ -~]{0,8}", 1..4)
                        .prop_map(unique)
                        .prop_flat_map(|tn| tn.into_iter().map(arb_test_case).collect::<Vec<_>>());
                    (Just(name), arb_tol(), select(vec![0.0, 0.01]), tests)
                })
                .collect();
            suites
        })
        .prop_map(|suites| {
            suites
                .into_iter()
                .map(|(name, atol, rtol, tests)| {
                    let mut s = TestSuite::new(name);
                    s.atol = atol;
                    s.rtol = rtol;
                    s.tests = tests;
                    s
                })
                .collect()
        })
}

/// A formula cell in a small single-sheet workbook, for translation tests.
pub fn arb_sheet1_expr() -> BoxedStrategy<Expr> {
    let cell = (1u32..=8, 1u32..=8)
        .prop_flat_map(|(r, c)| with_flags(None, r, c))
        .boxed();
    arb_expr(cell, range_in(None, 8, (1, 8)), true)
}
