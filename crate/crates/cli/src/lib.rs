//! The `gridtdd` command line: argument definitions and the commands
//! themselves, written against `dyn Write` so they can run in-process.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, SystemTime};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gridtdd::engine::{build_dep_graph, fill_formula, recalc, EngineConfig};
use gridtdd::formula::relative_key;
use gridtdd::grid::{
    parse_cellref, parse_range, parse_workbook, render_literal, serialize_workbook, CellPos,
    CellRef, RangeRef, Workbook, DEFAULT_SHEET,
};
use gridtdd::runner::{
    coverage, render_coverage, render_report, run_suites, Filter, OutputMode, RunOptions,
};
use gridtdd::testspec::{
    capture_test, parse_testfile, serialize_testfile, suggest_boundaries, translate_test,
    translate_test_across, TestSuite,
};

#[derive(Debug, Parser)]
#[command(name = "gridtdd", version, about = "Test-driven development for spreadsheets")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for RAND().
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = ColorMode::Auto)]
    pub color: ColorMode,
    /// Machine-readable output.
    #[arg(long, global = true, conflicts_with = "quiet")]
    pub json: bool,
    /// Summary line only.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ColorMode {
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    pub workbook: PathBuf,
    pub tests: PathBuf,
    /// Only this suite.
    #[arg(long)]
    pub suite: Option<String>,
    /// Only this test.
    #[arg(long)]
    pub test: Option<String>,
    /// Allow `set` lines to overwrite formula cells.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run tests and report red/green.
    Run(RunArgs),
    /// Parse a workbook and report its formulas and cycles.
    Check { workbook: PathBuf },
    /// Run tests and show which formula cells they cover.
    Coverage(RunArgs),
    /// Copy a test across a range, the way fill copies a formula.
    CopyTest {
        tests: PathBuf,
        #[arg(long)]
        test: String,
        /// Suite holding the test, when the name is not unique.
        #[arg(long)]
        suite: Option<String>,
        /// Expectation target the copies are positioned relative to.
        #[arg(long)]
        anchor: String,
        #[arg(long)]
        to: String,
        /// Add the copies to the suite and rewrite the test file.
        #[arg(long)]
        append: bool,
        /// Allow a destination on another sheet.
        #[arg(long)]
        across_sheets: bool,
    },
    /// Print a test pinning a formula cell's current value.
    Capture {
        workbook: PathBuf,
        /// Input cells or ranges, comma separated.
        #[arg(long, value_delimiter = ',')]
        inputs: Vec<String>,
        #[arg(long)]
        output: String,
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "captured")]
        suite: String,
    },
    /// Suggest boundary inputs from a formula's comparisons.
    Suggest {
        workbook: PathBuf,
        #[arg(long)]
        cell: String,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Copy a formula over a range.
    Fill {
        workbook: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, required_unless_present = "in_place", conflicts_with = "in_place")]
        out: Option<PathBuf>,
        #[arg(long)]
        in_place: bool,
    },
    /// Re-run tests whenever the workbook or test file changes.
    Watch {
        #[command(flatten)]
        run: RunArgs,
        /// Polling interval in milliseconds.
        #[arg(long, default_value_t = 300)]
        interval: u64,
    },
}

/// Where output goes and whether standard output is a terminal.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub tty: bool,
}

impl GlobalOpts {
    fn mode(&self) -> OutputMode {
        if self.json {
            OutputMode::Json
        } else if self.quiet {
            OutputMode::Quiet
        } else {
            OutputMode::Text
        }
    }

    fn color(&self, tty: bool) -> bool {
        match self.color {
            ColorMode::Always => true,
            ColorMode::Never => false,
            ColorMode::Auto => tty && std::env::var_os("NO_COLOR").is_none(),
        }
    }

    fn engine(&self) -> EngineConfig {
        EngineConfig::with_seed(self.seed)
    }
}

/// Run a parsed command line and return the process exit status.
pub fn execute(cli: &Cli, io: &mut Io) -> i32 {
    let g = &cli.global;
    let result = match &cli.command {
        Command::Run(a) => cmd_run(g, a, io),
        Command::Check { workbook } => cmd_check(workbook, io),
        Command::Coverage(a) => cmd_coverage(g, a, io),
        Command::CopyTest {
            tests,
            test,
            suite,
            anchor,
            to,
            append,
            across_sheets,
        } => cmd_copy_test(tests, test, suite.as_deref(), anchor, to, *append, *across_sheets, io),
        Command::Capture {
            workbook,
            inputs,
            output,
            name,
            suite,
        } => cmd_capture(g, workbook, inputs, output, name, suite, io),
        Command::Suggest {
            workbook,
            cell,
            delta,
        } => cmd_suggest(workbook, cell, *delta, io),
        Command::Fill {
            workbook,
            from,
            to,
            out,
            in_place,
        } => cmd_fill(workbook, from, to, out.as_deref(), *in_place, io),
        Command::Watch { run, interval } => {
            cmd_watch(g, run, Duration::from_millis(*interval), None, io)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e:#}");
            2
        }
    }
}

pub fn load_workbook(path: &Path) -> Result<Workbook> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_workbook(&text).with_context(|| format!("in {}", path.display()))
}

pub fn load_tests(path: &Path) -> Result<Vec<TestSuite>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_testfile(&text).with_context(|| format!("in {}", path.display()))
}

fn cell_arg(s: &str) -> Result<CellRef> {
    parse_cellref(s.trim(), DEFAULT_SHEET).with_context(|| format!("bad cell `{s}`"))
}

fn range_arg(s: &str) -> Result<RangeRef> {
    parse_range(s.trim(), DEFAULT_SHEET).with_context(|| format!("bad range `{s}`"))
}

fn run_report(g: &GlobalOpts, a: &RunArgs) -> Result<(Workbook, Vec<TestSuite>, gridtdd::runner::RunReport)> {
    let mut wb = load_workbook(&a.workbook)?;
    let suites = load_tests(&a.tests)?;
    let filter = Filter {
        suite: a.suite.clone(),
        test: a.test.clone(),
    };
    let opts = RunOptions {
        engine: g.engine(),
        force: a.force,
    };
    let report = run_suites(&mut wb, &suites, &filter, opts)?;
    Ok((wb, suites, report))
}

pub fn cmd_run(g: &GlobalOpts, a: &RunArgs, io: &mut Io) -> Result<i32> {
    let (_, _, report) = run_report(g, a)?;
    write!(io.out, "{}", render_report(&report, g.mode(), g.color(io.tty)))?;
    Ok(report.exit_code())
}

pub fn cmd_coverage(g: &GlobalOpts, a: &RunArgs, io: &mut Io) -> Result<i32> {
    let (wb, suites, report) = run_report(g, a)?;
    let cov = coverage(&wb, &suites, &report);
    write!(io.out, "{}", render_coverage(&cov, g.mode(), g.color(io.tty)))?;
    Ok(report.exit_code())
}

fn plural(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

/// Formulas that are copies of one another (same shape relative to their
/// own cell) count once.
pub fn distinct_formulas(wb: &Workbook) -> usize {
    wb.formulas()
        .map(|(p, f)| relative_key(&f.ast, p.row, p.col))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Groups of formula cells that read from each other in a loop.
pub fn cycles(wb: &Workbook) -> Vec<Vec<CellPos>> {
    let g = build_dep_graph(wb);
    let reach = |from: CellPos| -> BTreeSet<CellPos> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(p) = stack.pop() {
            for &q in g.edges.get(&p).into_iter().flatten() {
                if g.cyclic.contains(&q) && seen.insert(q) {
                    stack.push(q);
                }
            }
        }
        seen
    };
    let reaches: BTreeMap<CellPos, BTreeSet<CellPos>> = g.cyclic.iter().map(|&p| (p, reach(p))).collect();
    let mut done = BTreeSet::new();
    let mut out = Vec::new();
    for (&p, r) in &reaches {
        if done.contains(&p) || !r.contains(&p) {
            continue;
        }
        let group: Vec<CellPos> = r.iter().copied().filter(|q| reaches[q].contains(&p)).collect();
        done.extend(group.iter().copied());
        out.push(group);
    }
    out
}

pub fn cmd_check(path: &Path, io: &mut Io) -> Result<i32> {
    let wb = load_workbook(path)?;
    for (i, s) in wb.sheets().iter().enumerate() {
        let formulas = wb.formulas().filter(|(p, _)| p.sheet == i).count();
        writeln!(
            io.out,
            "sheet {}: {}, {}",
            s.name,
            plural(s.len() - formulas, "literal cell", "literal cells"),
            plural(formulas, "formula cell", "formula cells")
        )?;
    }
    let n = wb.formula_count();
    let cyc = cycles(&wb);
    writeln!(
        io.out,
        "{}, {}",
        plural(n, "formula cell", "formula cells"),
        plural(cyc.len(), "cycle", "cycles")
    )?;
    writeln!(
        io.out,
        "{}, {}",
        plural(n, "formula cell", "formula cells"),
        plural(distinct_formulas(&wb), "distinct formula", "distinct formulas")
    )?;
    for group in &cyc {
        let names: Vec<String> = group.iter().map(|&p| wb.cell_ref(p).to_string()).collect();
        writeln!(io.out, "cycle: {}", names.join(", "))?;
    }
    Ok(if cyc.is_empty() { 0 } else { 2 })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_copy_test(
    path: &Path,
    test: &str,
    suite: Option<&str>,
    anchor: &str,
    to: &str,
    append: bool,
    across_sheets: bool,
    io: &mut Io,
) -> Result<i32> {
    let mut suites = load_tests(path)?;
    let anchor = cell_arg(anchor)?;
    let dest = range_arg(to)?;
    let holders: Vec<usize> = suites
        .iter()
        .enumerate()
        .filter(|(_, s)| suite.is_none_or(|n| s.name == n) && s.test(test).is_some())
        .map(|(i, _)| i)
        .collect();
    let si = match holders.as_slice() {
        [i] => *i,
        [] => bail!("no test named `{test}`"),
        _ => bail!("test `{test}` is in several suites; pick one with --suite"),
    };
    let original = suites[si].test(test).expect("found above").clone();

    let mut copies = Vec::new();
    for target in dest.cells() {
        if target.same_cell(&anchor) {
            continue;
        }
        let t = if across_sheets {
            translate_test_across(&original, &anchor, &target)?
        } else {
            translate_test(&original, &anchor, &target)?
        };
        copies.push(t);
    }

    if append {
        let s = &mut suites[si];
        for c in &copies {
            if s.test(&c.name).is_some() {
                bail!("suite `{}` already has a test named `{}`", s.name, c.name);
            }
        }
        s.tests.extend(copies.iter().cloned());
        fs::write(path, serialize_testfile(&suites))
            .with_context(|| format!("writing {}", path.display()))?;
        writeln!(io.err, "appended {} to {}", plural(copies.len(), "test", "tests"), path.display())?;
    } else {
        let mut out = TestSuite::new(suites[si].name.clone());
        out.atol = suites[si].atol;
        out.rtol = suites[si].rtol;
        out.tests = copies;
        write!(io.out, "{}", serialize_testfile(&[out]))?;
    }
    Ok(0)
}

fn expand_inputs(specs: &[String]) -> Result<Vec<CellRef>> {
    let mut out = Vec::new();
    for s in specs.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        if s.contains(':') {
            out.extend(range_arg(s)?.cells());
        } else {
            out.push(cell_arg(s)?);
        }
    }
    Ok(out)
}

pub fn cmd_capture(
    g: &GlobalOpts,
    path: &Path,
    inputs: &[String],
    output: &str,
    name: &str,
    suite: &str,
    io: &mut Io,
) -> Result<i32> {
    let wb = load_workbook(path)?;
    let inputs = expand_inputs(inputs)?;
    let output = cell_arg(output)?;
    let values = recalc(&wb, g.engine());
    let captured = capture_test(&wb, &values, &inputs, &output, name)?;
    for w in &captured.warnings {
        writeln!(io.err, "warning: {w}")?;
    }
    let mut s = TestSuite::new(suite);
    s.tests.push(captured.test);
    write!(io.out, "{}", serialize_testfile(&[s]))?;
    Ok(0)
}

pub fn cmd_suggest(path: &Path, cell: &str, delta: f64, io: &mut Io) -> Result<i32> {
    let wb = load_workbook(path)?;
    let cell = cell_arg(cell)?;
    let suggestions = suggest_boundaries(&wb, &cell, delta)?;
    writeln!(
        io.out,
        "# boundary inputs for {cell} (delta {delta}); supply the expected values yourself"
    )?;
    let mut last: Option<&CellRef> = None;
    for (r, v) in &suggestions {
        if last != Some(r) {
            writeln!(io.out, "# {r}")?;
            last = Some(r);
        }
        let shown = if r.sheet.as_deref() == Some(DEFAULT_SHEET) { r.a1() } else { r.to_string() };
        writeln!(io.out, "set {shown} = {}", render_literal(v))?;
    }
    Ok(0)
}

pub fn cmd_fill(
    path: &Path,
    from: &str,
    to: &str,
    out: Option<&Path>,
    in_place: bool,
    io: &mut Io,
) -> Result<i32> {
    let mut wb = load_workbook(path)?;
    let src = cell_arg(from)?;
    let dst = range_arg(to)?;
    let n = fill_formula(&mut wb, &src, &dst)?;
    let target = match (out, in_place) {
        (Some(p), _) => p,
        (None, true) => path,
        (None, false) => bail!("give --out PATH or --in-place"),
    };
    fs::write(target, serialize_workbook(&wb)).with_context(|| format!("writing {}", target.display()))?;
    writeln!(
        io.err,
        "filled {} from {src}; {} in {}",
        plural(n, "cell", "cells"),
        plural(wb.formula_count(), "formula cell", "formula cells"),
        target.display()
    )?;
    Ok(0)
}

type Stamp = Vec<Option<(SystemTime, u64)>>;

fn stamp(paths: &[PathBuf]) -> Stamp {
    paths
        .iter()
        .map(|p| fs::metadata(p).ok().map(|m| (m.modified().unwrap_or(SystemTime::UNIX_EPOCH), m.len())))
        .collect()
}

/// Run, then re-run after every change to either file. A background thread
/// polls modification times and sends a signal per change. Returns the last
/// run's exit status once `max_runs` runs have happened (never, if `None`).
pub fn cmd_watch(
    g: &GlobalOpts,
    a: &RunArgs,
    interval: Duration,
    max_runs: Option<usize>,
    io: &mut Io,
) -> Result<i32> {
    let paths = vec![a.workbook.clone(), a.tests.clone()];
    let (tx, rx) = mpsc::channel::<()>();
    let mut last = stamp(&paths);
    let watched = paths.clone();
    thread::spawn(move || loop {
        thread::sleep(interval);
        let now = stamp(&watched);
        if now != last {
            last = now;
            if tx.send(()).is_err() {
                break;
            }
        }
    });

    let mut runs = 0;
    let mut code;
    loop {
        let ts = chrono::Local::now().format("%Y-%m-%d %H:%M:%S");
        writeln!(io.out, "[{ts}] {} {}", a.workbook.display(), a.tests.display())?;
        code = match cmd_run(g, a, io) {
            Ok(c) => c,
            Err(e) => {
                writeln!(io.out, "error: {e:#}")?;
                2
            }
        };
        io.out.flush()?;
        runs += 1;
        if max_runs.is_some_and(|m| runs >= m) {
            return Ok(code);
        }
        if rx.recv().is_err() {
            return Ok(code);
        }
        // Editors often write in several steps; fold a burst into one run.
        while rx.recv_timeout(interval).is_ok() {}
    }
}
