//! The `.sst` test file format.
//!
//! ```text
//! suite "grades"
//!   tolerance atol=1e-6 rtol=0
//!   test "fail"
//!     set A2 = 20.5
//!     expect B2 = FAIL
//!   end
//!   test "reorder level"
//!     assert C10 = 2900
//!     expect G11 = 8100 tol 0.5
//!   end
//! endsuite
//! ```
//!
//! Values follow the `.grid` literal rules. `expect` and `assert` also take
//! the error tokens (`#DIV/0!`, `#VALUE!`, ...); quote them to mean text.
//! An `expect` line may end in `tol <atol>`, `rtol <rtol>` or both.

use std::fmt::Write as _;

use crate::error::TestSpecError;
use crate::grid::{
    check_literal, format_number, parse_cellref, parse_decimal, parse_literal, render_literal,
    render_literal_quoted, take_quoted, CellRef, CellValue, ErrorKind, DEFAULT_SHEET,
};

use super::{Expectation, Lock, Substitution, TestCase, TestSuite, DEFAULT_ATOL, DEFAULT_RTOL};

fn syntax(line: usize, message: impl Into<String>) -> TestSpecError {
    TestSpecError::Syntax {
        line,
        message: message.into(),
    }
}

pub fn parse_testfile(input: &str) -> Result<Vec<TestSuite>, TestSpecError> {
    let mut suites: Vec<TestSuite> = Vec::new();
    let mut suite: Option<TestSuite> = None;
    let mut test: Option<(TestCase, usize)> = None;
    let mut suite_start = 0;

    for (idx, raw) in input.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw).trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (keyword, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };

        match keyword {
            "suite" => {
                if suite.is_some() {
                    return Err(syntax(line_no, "`suite` inside a suite (missing `endsuite`?)"));
                }
                let name = parse_name(rest, line_no)?;
                if suites.iter().any(|s| s.name == name) {
                    return Err(TestSpecError::DuplicateSuite {
                        line: line_no,
                        name,
                    });
                }
                suite = Some(TestSuite::new(name));
                suite_start = line_no;
            }
            "endsuite" => {
                if test.is_some() {
                    return Err(syntax(line_no, "`endsuite` inside a test (missing `end`?)"));
                }
                expect_no_args(rest, keyword, line_no)?;
                let s = suite
                    .take()
                    .ok_or_else(|| syntax(line_no, "`endsuite` outside a suite"))?;
                suites.push(s);
            }
            "tolerance" => {
                let s = match (&mut suite, &test) {
                    (Some(s), None) => s,
                    _ => return Err(syntax(line_no, "`tolerance` belongs directly inside a suite")),
                };
                if !s.tests.is_empty() {
                    return Err(syntax(line_no, "`tolerance` must come before the suite's tests"));
                }
                parse_tolerance(rest, line_no, s)?;
            }
            "test" => {
                if test.is_some() {
                    return Err(syntax(line_no, "`test` inside a test (missing `end`?)"));
                }
                let s = suite
                    .as_ref()
                    .ok_or_else(|| syntax(line_no, "`test` outside a suite"))?;
                let name = parse_name(rest, line_no)?;
                if s.test(&name).is_some() {
                    return Err(TestSpecError::DuplicateTest {
                        line: line_no,
                        name,
                    });
                }
                test = Some((TestCase::new(name), line_no));
            }
            "end" => {
                expect_no_args(rest, keyword, line_no)?;
                let (t, start) = test
                    .take()
                    .ok_or_else(|| syntax(line_no, "`end` outside a test"))?;
                t.validate().map_err(|m| syntax(start, m))?;
                suite.as_mut().expect("tests only open inside suites").tests.push(t);
            }
            "set" | "expect" | "assert" => {
                let (t, _) = test
                    .as_mut()
                    .ok_or_else(|| syntax(line_no, format!("`{keyword}` outside a test")))?;
                let (target, value_text) = split_assignment(rest, line_no)?;
                match keyword {
                    "set" => {
                        if ErrorKind::from_token(value_text).is_some() {
                            return Err(syntax(
                                line_no,
                                "error values cannot be substituted (quote the token to mean text)",
                            ));
                        }
                        let value = parse_value(value_text, false, line_no)?;
                        check_literal(&value).map_err(|e| syntax(line_no, e.to_string()))?;
                        if t.sets.iter().any(|s| s.target.same_cell(&target)) {
                            return Err(syntax(line_no, format!("{target} is set twice")));
                        }
                        t.sets.push(Substitution { target, value });
                    }
                    "expect" => {
                        let s = suite.as_ref().expect("tests only open inside suites");
                        let (value_text, atol, rtol) = split_tolerance(value_text, line_no)?;
                        t.expects.push(Expectation {
                            target,
                            expected: parse_value(value_text, true, line_no)?,
                            atol: atol.unwrap_or(s.atol),
                            rtol: rtol.unwrap_or(s.rtol),
                        });
                    }
                    _ => t.locks.push(Lock {
                        target,
                        expected: parse_value(value_text, true, line_no)?,
                    }),
                }
            }
            other => return Err(syntax(line_no, format!("unknown keyword `{other}`"))),
        }
    }

    if let Some((t, start)) = test {
        return Err(syntax(start, format!("test `{}` is missing `end`", t.name)));
    }
    if let Some(s) = suite {
        return Err(syntax(suite_start, format!("suite `{}` is missing `endsuite`", s.name)));
    }
    Ok(suites)
}

fn expect_no_args(rest: &str, keyword: &str, line: usize) -> Result<(), TestSpecError> {
    if rest.is_empty() {
        Ok(())
    } else {
        Err(syntax(line, format!("unexpected text after `{keyword}`")))
    }
}

fn parse_name(rest: &str, line: usize) -> Result<String, TestSpecError> {
    match take_quoted(rest) {
        Some((name, tail)) if tail.trim().is_empty() => Ok(name),
        _ => Err(syntax(line, "expected a double-quoted name")),
    }
}

fn parse_tolerance(rest: &str, line: usize, s: &mut TestSuite) -> Result<(), TestSpecError> {
    let mut seen = (false, false);
    for item in rest.split_whitespace() {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("expected key=value, found `{item}`")))?;
        let x = parse_tol_number(value, line)?;
        match key {
            "atol" if !seen.0 => {
                seen.0 = true;
                s.atol = x;
            }
            "rtol" if !seen.1 => {
                seen.1 = true;
                s.rtol = x;
            }
            "atol" | "rtol" => return Err(syntax(line, format!("`{key}` given twice"))),
            _ => return Err(syntax(line, format!("unknown tolerance key `{key}`"))),
        }
    }
    if seen == (false, false) {
        return Err(syntax(line, "`tolerance` needs atol= and/or rtol="));
    }
    Ok(())
}

fn parse_tol_number(s: &str, line: usize) -> Result<f64, TestSpecError> {
    match parse_decimal(s) {
        Some(x) if x >= 0.0 => Ok(x),
        _ => Err(syntax(line, format!("tolerance must be a non-negative number, found `{s}`"))),
    }
}

/// `<ref> = <rest>`; the reference may carry a quoted sheet name.
fn split_assignment(rest: &str, line: usize) -> Result<(CellRef, &str), TestSpecError> {
    let mut end = 0;
    let bytes = rest.as_bytes();
    if bytes.first() == Some(&b'\'') {
        end = 1;
        loop {
            match bytes.get(end) {
                None => return Err(syntax(line, "unterminated quoted sheet name")),
                Some(b'\'') if bytes.get(end + 1) == Some(&b'\'') => end += 2,
                Some(b'\'') => {
                    end += 1;
                    break;
                }
                Some(_) => end += 1,
            }
        }
    }
    while end < bytes.len() && !bytes[end].is_ascii_whitespace() && bytes[end] != b'=' {
        end += 1;
    }
    let (ref_text, tail) = rest.split_at(end);
    if ref_text.is_empty() {
        return Err(syntax(line, "expected a cell reference"));
    }
    let target = parse_cellref(ref_text, DEFAULT_SHEET)
        .map_err(|source| TestSpecError::BadRef { line, source })?;
    let value = tail
        .trim_start()
        .strip_prefix('=')
        .ok_or_else(|| syntax(line, format!("expected `=` after {ref_text}")))?
        .trim();
    Ok((target, value))
}

/// Peel `tol <n>` / `rtol <n>` off the end of an expect value.
fn split_tolerance(text: &str, line: usize) -> Result<(&str, Option<f64>, Option<f64>), TestSpecError> {
    let (value, suffix) = if text.starts_with('"') {
        match take_quoted(text) {
            Some((_, tail)) => (&text[..text.len() - tail.len()], tail.trim()),
            None => return Err(syntax(line, "unterminated quoted string")),
        }
    } else {
        let words: Vec<(usize, &str)> = word_offsets(text);
        let n = words.len();
        let is_num = |w: &str| parse_decimal(w).is_some();
        let cut = if n > 4
            && words[n - 4].1 == "tol"
            && is_num(words[n - 3].1)
            && words[n - 2].1 == "rtol"
            && is_num(words[n - 1].1)
        {
            Some(words[n - 4].0)
        } else if n > 2 && matches!(words[n - 2].1, "tol" | "rtol") && is_num(words[n - 1].1) {
            Some(words[n - 2].0)
        } else {
            None
        };
        match cut {
            Some(at) => (text[..at].trim_end(), &text[at..]),
            None => (text, ""),
        }
    };

    let mut atol = None;
    let mut rtol = None;
    let mut words = suffix.split_whitespace();
    while let Some(key) = words.next() {
        let slot = match key {
            "tol" if atol.is_none() && rtol.is_none() => &mut atol,
            "rtol" if rtol.is_none() => &mut rtol,
            _ => return Err(syntax(line, format!("unexpected `{key}` after the expected value"))),
        };
        let n = words
            .next()
            .ok_or_else(|| syntax(line, format!("`{key}` needs a number")))?;
        *slot = Some(parse_tol_number(n, line)?);
    }
    Ok((value, atol, rtol))
}

fn word_offsets(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(st)) => {
                out.push((st, &s[st..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(st) = start {
        out.push((st, &s[st..]));
    }
    out
}

fn parse_value(text: &str, allow_error: bool, line: usize) -> Result<CellValue, TestSpecError> {
    if text.is_empty() {
        return Err(syntax(line, "missing value after `=`"));
    }
    if allow_error {
        if let Some(k) = ErrorKind::from_token(text) {
            return Ok(CellValue::Error(k));
        }
    }
    if text.starts_with('"') && take_quoted(text).is_some_and(|(_, tail)| !tail.is_empty()) {
        return Err(syntax(line, "unexpected text after quoted string"));
    }
    Ok(parse_literal(text))
}

pub fn serialize_testfile(suites: &[TestSuite]) -> String {
    let mut out = String::new();
    for (i, s) in suites.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "suite {}", quote(&s.name));
        if s.atol != DEFAULT_ATOL || s.rtol != DEFAULT_RTOL {
            let _ = writeln!(
                out,
                "  tolerance atol={} rtol={}",
                format_number(s.atol),
                format_number(s.rtol)
            );
        }
        for t in &s.tests {
            let _ = writeln!(out, "  test {}", quote(&t.name));
            for l in &t.locks {
                let _ = writeln!(out, "    assert {} = {}", ref_text(&l.target), value_text(&l.expected, false));
            }
            for st in &t.sets {
                let _ = writeln!(out, "    set {} = {}", ref_text(&st.target), value_text(&st.value, false));
            }
            for e in &t.expects {
                let _ = write!(out, "    expect {} = {}", ref_text(&e.target), value_text(&e.expected, true));
                if e.atol != s.atol {
                    let _ = write!(out, " tol {}", format_number(e.atol));
                }
                if e.rtol != s.rtol {
                    let _ = write!(out, " rtol {}", format_number(e.rtol));
                }
                out.push('\n');
            }
            out.push_str("  end\n");
        }
        out.push_str("endsuite\n");
    }
    out
}

fn quote(s: &str) -> String {
    render_literal_quoted(&CellValue::Text(s.to_string()))
}

fn ref_text(r: &CellRef) -> String {
    match r.sheet.as_deref() {
        None | Some(DEFAULT_SHEET) => r.a1(),
        Some(_) => r.to_string(),
    }
}

/// Blank has no literal form and is written as `""`, which reads back as
/// empty text.
fn value_text(v: &CellValue, expect_line: bool) -> String {
    match v {
        CellValue::Blank => "\"\"".to_string(),
        CellValue::Text(s)
            if expect_line && s.split_whitespace().any(|w| w == "tol" || w == "rtol") =>
        {
            render_literal_quoted(v)
        }
        _ => render_literal(v),
    }
}
