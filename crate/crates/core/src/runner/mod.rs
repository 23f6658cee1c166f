//! Running tests against a workbook: substitute inputs, recalculate, compare,
//! restore. Also coverage of formula cells and report rendering.

mod report;

pub use report::{render_coverage, render_report, OutputMode};

use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::engine::{fold_text, Engine, EngineConfig, ValueMap};
use crate::error::RunError;
use crate::grid::{Cell, CellPos, CellRef, CellValue, Workbook};
use crate::testspec::{TestCase, TestSuite, DEFAULT_ATOL, DEFAULT_RTOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AssertionKind {
    Expect,
    Lock,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssertionResult {
    #[serde(rename = "cell", serialize_with = "display")]
    pub target: CellRef,
    pub kind: AssertionKind,
    pub expected: CellValue,
    pub actual: CellValue,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestStatus {
    Green,
    Red,
    /// The test could not run: a reference did not resolve or a
    /// substitution targeted a formula.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub name: String,
    pub status: TestStatus,
    pub assertions: Vec<AssertionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub tests: Vec<TestResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub suites: Vec<SuiteResult>,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn tests(&self) -> impl Iterator<Item = (&str, &TestResult)> {
        self.suites
            .iter()
            .flat_map(|s| s.tests.iter().map(move |t| (s.name.as_str(), t)))
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary {
            passed: 0,
            failed: 0,
            errored: 0,
        };
        for (_, t) in self.tests() {
            match t.status {
                TestStatus::Green => s.passed += 1,
                TestStatus::Red => s.failed += 1,
                TestStatus::Error => s.errored += 1,
            }
        }
        s
    }

    pub fn total(&self) -> usize {
        self.tests().count()
    }

    /// 0 when everything is green, 1 for red tests only, 2 if any errored.
    pub fn exit_code(&self) -> i32 {
        let s = self.summary();
        if s.errored > 0 {
            2
        } else if s.failed > 0 {
            1
        } else {
            0
        }
    }
}

fn display<T: std::fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub engine: EngineConfig,
    /// Allow substituting over formula cells.
    pub force: bool,
}

/// Which suites and tests to run. Names must match exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Filter {
    pub suite: Option<String>,
    pub test: Option<String>,
}

/// Expectation comparison. Numbers within `atol + rtol * |expected|`, text
/// case-insensitively, errors by kind, everything else exactly. Values of
/// different types never match.
pub fn values_equal(expected: &CellValue, actual: &CellValue, atol: f64, rtol: f64) -> bool {
    match (expected, actual) {
        (CellValue::Number(e), CellValue::Number(a)) => (a - e).abs() <= atol + rtol * e.abs(),
        (CellValue::Text(e), CellValue::Text(a)) => e == a || fold_text(e) == fold_text(a),
        (CellValue::Bool(e), CellValue::Bool(a)) => e == a,
        (CellValue::Blank, CellValue::Blank) => true,
        (CellValue::Error(e), CellValue::Error(a)) => e == a,
        _ => false,
    }
}

/// Run one test. The workbook is modified during the run and restored
/// before returning. Locks use the default tolerance.
pub fn run_test(wb: &mut Workbook, t: &TestCase, opts: RunOptions) -> TestResult {
    let engine = Engine::new(wb, opts.engine);
    let base = engine.recalc(wb);
    run_case(wb, &engine, &base, t, (DEFAULT_ATOL, DEFAULT_RTOL), opts.force)
}

fn errored(t: &TestCase, message: String) -> TestResult {
    TestResult {
        name: t.name.clone(),
        status: TestStatus::Error,
        assertions: Vec::new(),
        error: Some(message),
    }
}

fn run_case(
    wb: &mut Workbook,
    engine: &Engine,
    base: &ValueMap,
    t: &TestCase,
    lock_tol: (f64, f64),
    force: bool,
) -> TestResult {
    let locate = |r: &CellRef| wb.locate(r).map_err(|e| e.to_string());
    let resolved = (|| -> Result<_, String> {
        let sets = t
            .sets
            .iter()
            .map(|s| Ok((locate(&s.target)?, &s.value)))
            .collect::<Result<Vec<_>, String>>()?;
        let expects = t
            .expects
            .iter()
            .map(|e| locate(&e.target))
            .collect::<Result<Vec<_>, String>>()?;
        let locks = t
            .locks
            .iter()
            .map(|l| locate(&l.target))
            .collect::<Result<Vec<_>, String>>()?;
        Ok((sets, expects, locks))
    })();
    let (sets, expects, locks) = match resolved {
        Ok(r) => r,
        Err(m) => return errored(t, m),
    };
    if !force {
        if let Some((p, _)) = sets.iter().find(|(p, _)| wb.cell(*p).is_some_and(Cell::is_formula)) {
            return errored(
                t,
                format!("{}: substituting over a formula cell (use --force)", wb.cell_ref(*p)),
            );
        }
    }

    let mut assertions = Vec::with_capacity(t.locks.len() + t.expects.len());
    for (l, &p) in t.locks.iter().zip(&locks) {
        let actual = base.at(p);
        assertions.push(AssertionResult {
            target: l.target.clone(),
            kind: AssertionKind::Lock,
            passed: values_equal(&l.expected, &actual, lock_tol.0, lock_tol.1),
            expected: l.expected.clone(),
            actual,
        });
    }

    let mut originals: Vec<(CellPos, Option<Cell>)> = Vec::with_capacity(sets.len());
    for &(p, v) in &sets {
        originals.push((p, wb.put(p, Some(Cell::Literal(v.clone())))));
    }
    let changed: Vec<CellPos> = sets.iter().map(|(p, _)| *p).collect();
    let recalculated;
    let values = if changed.is_empty() {
        base
    } else {
        recalculated = engine.recalc_dirty(wb, &changed, base);
        &recalculated
    };
    for (e, &p) in t.expects.iter().zip(&expects) {
        let actual = values.at(p);
        assertions.push(AssertionResult {
            target: e.target.clone(),
            kind: AssertionKind::Expect,
            passed: values_equal(&e.expected, &actual, e.atol, e.rtol),
            expected: e.expected.clone(),
            actual,
        });
    }
    for (p, old) in originals.into_iter().rev() {
        wb.put(p, old);
    }

    let green = assertions.iter().all(|a| a.passed);
    TestResult {
        name: t.name.clone(),
        status: if green { TestStatus::Green } else { TestStatus::Red },
        assertions,
        error: None,
    }
}

/// Run the selected tests in file order, each against the pristine
/// workbook.
pub fn run_suites(
    wb: &mut Workbook,
    suites: &[TestSuite],
    filter: &Filter,
    opts: RunOptions,
) -> Result<RunReport, RunError> {
    if let Some(name) = &filter.suite {
        if !suites.iter().any(|s| &s.name == name) {
            return Err(RunError::UnknownSuite(name.clone()));
        }
    }
    let wanted_suite = |s: &TestSuite| filter.suite.as_ref().is_none_or(|n| *n == s.name);
    if let Some(name) = &filter.test {
        if !suites.iter().filter(|s| wanted_suite(s)).any(|s| s.test(name).is_some()) {
            return Err(RunError::UnknownTest(name.clone()));
        }
    }

    let started = Instant::now();
    let engine = Engine::new(wb, opts.engine);
    let base = engine.recalc(wb);
    let mut out = Vec::new();
    for s in suites.iter().filter(|s| wanted_suite(s)) {
        let tests: Vec<TestResult> = s
            .tests
            .iter()
            .filter(|t| filter.test.as_ref().is_none_or(|n| *n == t.name))
            .map(|t| run_case(wb, &engine, &base, t, (s.atol, s.rtol), opts.force))
            .collect();
        if !tests.is_empty() {
            out.push(SuiteResult {
                name: s.name.clone(),
                tests,
            });
        }
    }
    Ok(RunReport {
        suites: out,
        elapsed: started.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageStatus {
    Green,
    Red,
    Untested,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageEntry {
    #[serde(serialize_with = "display")]
    pub cell: CellRef,
    pub status: CoverageStatus,
    /// Covering tests as `suite/test`.
    pub tests: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub cells: Vec<CoverageEntry>,
}

impl CoverageReport {
    pub fn count(&self, status: CoverageStatus) -> usize {
        self.cells.iter().filter(|c| c.status == status).count()
    }
}

/// Classify every formula cell by the outcome of the tests that expect a
/// value from it. A cell is red if any covering test is red or errored.
pub fn coverage(wb: &Workbook, suites: &[TestSuite], report: &RunReport) -> CoverageReport {
    let mut covering: std::collections::BTreeMap<CellPos, Vec<(String, TestStatus)>> =
        std::collections::BTreeMap::new();
    for s in suites {
        let Some(sr) = report.suites.iter().find(|r| r.name == s.name) else {
            continue;
        };
        for t in &s.tests {
            let Some(tr) = sr.tests.iter().find(|r| r.name == t.name) else {
                continue;
            };
            let mut hit: Vec<CellPos> = t.expects.iter().filter_map(|e| wb.locate(&e.target).ok()).collect();
            hit.sort();
            hit.dedup();
            for p in hit {
                covering
                    .entry(p)
                    .or_default()
                    .push((format!("{}/{}", s.name, t.name), tr.status));
            }
        }
    }
    let cells = wb
        .formulas()
        .map(|(p, _)| {
            let tests = covering.remove(&p).unwrap_or_default();
            let status = if tests.is_empty() {
                CoverageStatus::Untested
            } else if tests.iter().all(|(_, st)| *st == TestStatus::Green) {
                CoverageStatus::Green
            } else {
                CoverageStatus::Red
            };
            CoverageEntry {
                cell: wb.cell_ref(p),
                status,
                tests: tests.into_iter().map(|(n, _)| n).collect(),
            }
        })
        .collect();
    CoverageReport { cells }
}
