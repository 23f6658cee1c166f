//! Text, JSON and one-line renderings of run and coverage reports.
//!
//! JSON run reports look like
//! `{"suites":[{"name","tests":[{"name","status","assertions":[{"cell","kind","expected","actual","passed"}]}]}],"summary":{"passed","failed","errored"}}`
//! with `status` one of `green`, `red`, `error`. Errored tests also carry an
//! `error` message. Timing is left out so equal runs give equal bytes.

use std::fmt::Write as _;

use serde::Serialize;

use super::{AssertionKind, CoverageReport, CoverageStatus, RunReport, SuiteResult, Summary, TestStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputMode {
    #[default]
    Text,
    Json,
    /// Summary line only.
    Quiet,
}

const GREEN: &str = "\x1b[32m";
const RED: &str = "\x1b[31m";
const YELLOW: &str = "\x1b[33m";
const RESET: &str = "\x1b[0m";

fn paint(token: &str, code: &str, color: bool) -> String {
    if color {
        format!("{code}{token}{RESET}")
    } else {
        token.to_string()
    }
}

fn summary_line(s: Summary) -> String {
    format!("{} passed, {} failed, {} errored", s.passed, s.failed, s.errored)
}

#[derive(Serialize)]
struct JsonRun<'a> {
    suites: &'a [SuiteResult],
    summary: Summary,
}

pub fn render_report(r: &RunReport, mode: OutputMode, color: bool) -> String {
    match mode {
        OutputMode::Quiet => summary_line(r.summary()) + "\n",
        OutputMode::Json => {
            let doc = JsonRun {
                suites: &r.suites,
                summary: r.summary(),
            };
            serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
        }
        OutputMode::Text => {
            let mut out = String::new();
            for s in &r.suites {
                let _ = writeln!(out, "suite {}", s.name);
                for t in &s.tests {
                    let token = match t.status {
                        TestStatus::Green => paint("GREEN", GREEN, color),
                        TestStatus::Red => paint("RED  ", RED, color),
                        TestStatus::Error => paint("ERROR", YELLOW, color),
                    };
                    let _ = writeln!(out, "  {token} {}", t.name);
                    if let Some(e) = &t.error {
                        let _ = writeln!(out, "        {e}");
                    }
                    for a in t.assertions.iter().filter(|a| !a.passed) {
                        let lock = if a.kind == AssertionKind::Lock { " (lock)" } else { "" };
                        let _ = writeln!(
                            out,
                            "        {}{lock}: expected {}, got {}",
                            a.target, a.expected, a.actual
                        );
                    }
                }
            }
            out + &summary_line(r.summary()) + "\n"
        }
    }
}

#[derive(Serialize)]
struct JsonCoverage<'a> {
    cells: &'a [super::CoverageEntry],
    summary: CoverageSummary,
}

#[derive(Serialize)]
struct CoverageSummary {
    green: usize,
    red: usize,
    untested: usize,
}

pub fn render_coverage(c: &CoverageReport, mode: OutputMode, color: bool) -> String {
    let summary = CoverageSummary {
        green: c.count(CoverageStatus::Green),
        red: c.count(CoverageStatus::Red),
        untested: c.count(CoverageStatus::Untested),
    };
    let line = format!(
        "{} green, {} red, {} untested\n",
        summary.green, summary.red, summary.untested
    );
    match mode {
        OutputMode::Quiet => line,
        OutputMode::Json => {
            let doc = JsonCoverage {
                cells: &c.cells,
                summary,
            };
            serde_json::to_string_pretty(&doc).expect("coverage serializes") + "\n"
        }
        OutputMode::Text => {
            let width = c.cells.iter().map(|e| e.cell.to_string().len()).max().unwrap_or(0);
            let mut out = String::new();
            for e in &c.cells {
                let token = match e.status {
                    CoverageStatus::Green => paint("GREEN   ", GREEN, color),
                    CoverageStatus::Red => paint("RED     ", RED, color),
                    CoverageStatus::Untested => "UNTESTED".to_string(),
                };
                let cell = e.cell.to_string();
                let row = format!("{cell:<width$}  {token}  {}", e.tests.join(", "));
                out.push_str(row.trim_end());
                out.push('\n');
            }
            out + &line
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{coverage, run_suites, Filter, RunOptions};
    use crate::grid::parse_workbook;
    use crate::testspec::parse_testfile;

    const SST: &str = "suite \"g\"\ntest \"ok\"\nset A1 = 2\nexpect B1 = 4\nend\ntest \"bad\"\nset A1 = 2\nexpect B1 = 5\nend\ntest \"broken\"\nexpect Nope!B1 = 5\nend\nendsuite\n";

    fn report() -> (RunReport, CoverageReport) {
        let mut wb = parse_workbook("B1 =A1*2\nC1 =1\n").unwrap();
        let suites = parse_testfile(SST).unwrap();
        let r = run_suites(&mut wb, &suites, &Filter::default(), RunOptions::default()).unwrap();
        let c = coverage(&wb, &suites, &r);
        (r, c)
    }

    #[test]
    fn text_lines() {
        let (r, _) = report();
        let text = render_report(&r, OutputMode::Text, false);
        assert_eq!(
            text,
            "suite g\n  GREEN ok\n  RED   bad\n        Sheet1!B1: expected 5, got 4\n  ERROR broken\n        unknown sheet `Nope`\n1 passed, 1 failed, 1 errored\n"
        );
        assert!(!text.contains('\x1b'));
        assert!(render_report(&r, OutputMode::Text, true).contains("\x1b[32mGREEN\x1b[0m"));
    }

    #[test]
    fn empty_and_quiet() {
        let empty = RunReport {
            suites: vec![],
            elapsed: Default::default(),
        };
        assert_eq!(render_report(&empty, OutputMode::Quiet, true), "0 passed, 0 failed, 0 errored\n");
        assert_eq!(render_report(&empty, OutputMode::Text, false), "0 passed, 0 failed, 0 errored\n");
    }

    #[test]
    fn json_counts_match_text() {
        let (r, _) = report();
        let v: serde_json::Value = serde_json::from_str(&render_report(&r, OutputMode::Json, true)).unwrap();
        assert_eq!(v["summary"]["passed"], 1);
        assert_eq!(v["summary"]["failed"], 1);
        assert_eq!(v["summary"]["errored"], 1);
        let t = &v["suites"][0]["tests"][1];
        assert_eq!(t["status"], "red");
        assert_eq!(t["assertions"][0]["cell"], "Sheet1!B1");
        assert_eq!(t["assertions"][0]["kind"], "expect");
        assert_eq!(t["assertions"][0]["expected"], 5.0);
        assert_eq!(t["assertions"][0]["actual"], 4.0);
        assert_eq!(t["assertions"][0]["passed"], false);
        assert!(t.get("error").is_none());
        assert_eq!(v["suites"][0]["tests"][2]["status"], "error");
    }

    #[test]
    fn coverage_renderings() {
        let (_, c) = report();
        assert_eq!(
            render_coverage(&c, OutputMode::Text, false),
            "Sheet1!B1  RED       g/ok, g/bad\nSheet1!C1  UNTESTED\n0 green, 1 red, 1 untested\n"
        );
        let v: serde_json::Value = serde_json::from_str(&render_coverage(&c, OutputMode::Json, false)).unwrap();
        assert_eq!(v["summary"]["untested"], 1);
        assert_eq!(v["cells"][0]["status"], "red");
    }
}
