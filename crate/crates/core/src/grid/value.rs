//! Cell values and the literal syntax shared by `.grid` and `.sst` files.

use std::fmt;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorKind {
    Div0,
    Value,
    Name,
    Ref,
    Cycle,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 5] = [
        ErrorKind::Div0,
        ErrorKind::Value,
        ErrorKind::Name,
        ErrorKind::Ref,
        ErrorKind::Cycle,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ErrorKind::Div0 => "#DIV/0!",
            ErrorKind::Value => "#VALUE!",
            ErrorKind::Name => "#NAME?",
            ErrorKind::Ref => "#REF!",
            ErrorKind::Cycle => "#CYCLE!",
        }
    }

    pub fn from_token(s: &str) -> Option<ErrorKind> {
        ErrorKind::ALL
            .into_iter()
            .find(|k| k.token().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The result of evaluating a cell.
///
/// Numbers are always finite and never negative zero; build them through
/// [`CellValue::number`] to keep that true.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Number(f64),
    Text(String),
    Bool(bool),
    Blank,
    Error(ErrorKind),
}

impl CellValue {
    /// Wrap a float, mapping NaN and infinities to `#VALUE!`.
    pub fn number(x: f64) -> CellValue {
        if x.is_finite() {
            CellValue::Number(if x == 0.0 { 0.0 } else { x })
        } else {
            CellValue::Error(ErrorKind::Value)
        }
    }

    pub fn text(s: impl Into<String>) -> CellValue {
        CellValue::Text(s.into())
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, CellValue::Blank)
    }

    pub fn as_error(&self) -> Option<ErrorKind> {
        match self {
            CellValue::Error(k) => Some(*k),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            CellValue::Number(_) => "number",
            CellValue::Text(_) => "text",
            CellValue::Bool(_) => "boolean",
            CellValue::Blank => "blank",
            CellValue::Error(_) => "error",
        }
    }
}

/// Human-facing rendering: text is quoted, blanks show as `<blank>`.
impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Number(n) => f.write_str(&format_number(*n)),
            CellValue::Text(s) => write!(f, "{}", quote_text(s)),
            CellValue::Bool(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
            CellValue::Blank => f.write_str("<blank>"),
            CellValue::Error(k) => f.write_str(k.token()),
        }
    }
}

/// JSON form: numbers as numbers, text as strings, errors as their tokens,
/// blank as null.
impl Serialize for CellValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CellValue::Number(n) => s.serialize_f64(*n),
            CellValue::Text(t) => s.serialize_str(t),
            CellValue::Bool(b) => s.serialize_bool(*b),
            CellValue::Blank => s.serialize_none(),
            CellValue::Error(k) => s.serialize_str(k.token()),
        }
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x}")
}

fn quote_text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Strict decimal syntax: optional sign, digits with optional fraction (or a
/// bare fraction), optional exponent. Rejects `inf`, `NaN`, hex and the like.
pub fn parse_decimal(s: &str) -> Option<f64> {
    let b = s.as_bytes();
    let mut i = 0;
    if matches!(b.first(), Some(b'+' | b'-')) {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return None;
    }
    if i < b.len() && matches!(b[i], b'e' | b'E') {
        i += 1;
        if i < b.len() && matches!(b[i], b'+' | b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != b.len() {
        return None;
    }
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Classify literal cell content: number, then `TRUE`/`FALSE`
/// (case-insensitive), then a double-quoted string, then bare text.
///
/// An unterminated or malformed quoted string falls through to bare text.
pub fn parse_literal(content: &str) -> CellValue {
    if let Some(n) = parse_decimal(content) {
        return CellValue::number(n);
    }
    if content.eq_ignore_ascii_case("TRUE") {
        return CellValue::Bool(true);
    }
    if content.eq_ignore_ascii_case("FALSE") {
        return CellValue::Bool(false);
    }
    if let Some(s) = parse_quoted(content) {
        return CellValue::Text(s);
    }
    CellValue::Text(content.to_string())
}

/// Parse a complete `"..."` token with `""` escapes.
pub fn parse_quoted(content: &str) -> Option<String> {
    let (s, rest) = take_quoted(content)?;
    rest.is_empty().then_some(s)
}

/// Parse a leading `"..."` token, returning the string and what follows it.
pub(crate) fn take_quoted(content: &str) -> Option<(String, &str)> {
    let inner = content.strip_prefix('"')?;
    let mut out = String::new();
    let mut chars = inner.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '"' {
            if matches!(chars.peek(), Some((_, '"'))) {
                chars.next();
                out.push('"');
                continue;
            }
            return Some((out, &inner[i + 1..]));
        }
        out.push(c);
    }
    None
}

/// Render a literal so that [`parse_literal`] reads back the same value.
/// Text is written bare when that is unambiguous, quoted otherwise.
///
/// Blank and error values have no literal form and render as their display
/// tokens; callers filter them out beforehand.
pub fn render_literal(v: &CellValue) -> String {
    match v {
        CellValue::Number(n) => format_number(*n),
        CellValue::Bool(b) => (if *b { "TRUE" } else { "FALSE" }).to_string(),
        CellValue::Text(s) => {
            if text_is_bare_safe(s) {
                s.clone()
            } else {
                quote_text(s)
            }
        }
        CellValue::Blank => String::new(),
        CellValue::Error(k) => k.token().to_string(),
    }
}

fn text_is_bare_safe(s: &str) -> bool {
    !s.is_empty()
        && s.trim() == s
        && !s.starts_with('"')
        && !s.starts_with('=')
        && !s.starts_with('#')
        && !s.contains(['\n', '\r'])
        && !matches!(parse_literal(s), CellValue::Number(_) | CellValue::Bool(_))
}

/// Always-quoted rendering, used where bare text would be ambiguous.
pub fn render_literal_quoted(v: &CellValue) -> String {
    match v {
        CellValue::Text(s) => quote_text(s),
        other => render_literal(other),
    }
}
