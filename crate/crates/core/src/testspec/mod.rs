//! Test suites: substitutions, expectations and static locks, plus the
//! `.sst` file format and helpers that derive tests from a workbook.

mod ops;
mod sst;

pub use ops::{capture_test, suggest_boundaries, translate_test, translate_test_across, Captured};
pub use sst::{parse_testfile, serialize_testfile};

use crate::grid::{CellRef, CellValue};

pub const DEFAULT_ATOL: f64 = 1e-9;
pub const DEFAULT_RTOL: f64 = 0.0;

/// An input cell and the value written into it for the duration of a test.
#[derive(Debug, Clone, PartialEq)]
pub struct Substitution {
    pub target: CellRef,
    pub value: CellValue,
}

/// Expected value of a cell after substitution and recalculation.
/// Tolerances only apply to numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub target: CellRef,
    pub expected: CellValue,
    pub atol: f64,
    pub rtol: f64,
}

impl Expectation {
    pub fn new(target: CellRef, expected: CellValue) -> Self {
        Expectation {
            target,
            expected,
            atol: DEFAULT_ATOL,
            rtol: DEFAULT_RTOL,
        }
    }
}

/// A static assertion, checked before any substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct Lock {
    pub target: CellRef,
    pub expected: CellValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub name: String,
    pub sets: Vec<Substitution>,
    pub expects: Vec<Expectation>,
    pub locks: Vec<Lock>,
}

impl TestCase {
    pub fn new(name: impl Into<String>) -> Self {
        TestCase {
            name: name.into(),
            sets: Vec::new(),
            expects: Vec::new(),
            locks: Vec::new(),
        }
    }

    pub fn set(mut self, target: CellRef, value: CellValue) -> Self {
        self.sets.push(Substitution { target, value });
        self
    }

    pub fn expect(mut self, target: CellRef, expected: CellValue) -> Self {
        self.expects.push(Expectation::new(target, expected));
        self
    }

    pub fn lock(mut self, target: CellRef, expected: CellValue) -> Self {
        self.locks.push(Lock { target, expected });
        self
    }

    /// Every cell reference the test mentions, in sets/expects/locks order.
    pub fn refs(&self) -> impl Iterator<Item = &CellRef> {
        self.sets
            .iter()
            .map(|s| &s.target)
            .chain(self.expects.iter().map(|e| &e.target))
            .chain(self.locks.iter().map(|l| &l.target))
    }

    /// Checks the structural rules: something to check, no cell set twice.
    pub fn validate(&self) -> Result<(), String> {
        if self.expects.is_empty() && self.locks.is_empty() {
            return Err(format!("test `{}` has no expect or assert lines", self.name));
        }
        for (i, s) in self.sets.iter().enumerate() {
            if self.sets[..i].iter().any(|o| o.target.same_cell(&s.target)) {
                return Err(format!("test `{}` sets {} twice", self.name, s.target));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSuite {
    pub name: String,
    /// Suite-wide defaults, applied to expectations without their own `tol`
    /// and to locks.
    pub atol: f64,
    pub rtol: f64,
    pub tests: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(name: impl Into<String>) -> Self {
        TestSuite {
            name: name.into(),
            atol: DEFAULT_ATOL,
            rtol: DEFAULT_RTOL,
            tests: Vec::new(),
        }
    }

    pub fn test(&self, name: &str) -> Option<&TestCase> {
        self.tests.iter().find(|t| t.name == name)
    }
}
