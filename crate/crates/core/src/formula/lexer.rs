use crate::error::FormulaError;
use crate::grid::{parse_a1, CellRef};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Number(f64),
    Text(String),
    Bool(bool),
    Ident(String),
    Ref(CellRef),
    LParen,
    RParen,
    Comma,
    Colon,
    Amp,
    Percent,
    Caret,
    Star,
    Slash,
    Plus,
    Minus,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset of the token's first character.
    pub pos: usize,
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'$'
}

/// Split a formula body (without `=`) into tokens.
pub fn tokenize(src: &str) -> Result<Vec<Token>, FormulaError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            b',' => Some(TokenKind::Comma),
            b':' => Some(TokenKind::Colon),
            b'&' => Some(TokenKind::Amp),
            b'%' => Some(TokenKind::Percent),
            b'^' => Some(TokenKind::Caret),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'=' => Some(TokenKind::Eq),
            _ => None,
        };
        if let Some(kind) = simple {
            out.push(Token { kind, pos: start });
            i += 1;
            continue;
        }
        match c {
            b'<' => {
                let kind = match bytes.get(i + 1) {
                    Some(b'=') => {
                        i += 1;
                        TokenKind::Le
                    }
                    Some(b'>') => {
                        i += 1;
                        TokenKind::Ne
                    }
                    _ => TokenKind::Lt,
                };
                i += 1;
                out.push(Token { kind, pos: start });
            }
            b'>' => {
                let kind = if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    TokenKind::Ge
                } else {
                    TokenKind::Gt
                };
                i += 1;
                out.push(Token { kind, pos: start });
            }
            b'"' => {
                let (text, end) = lex_string(src, i)?;
                i = end;
                out.push(Token {
                    kind: TokenKind::Text(text),
                    pos: start,
                });
            }
            b'0'..=b'9' | b'.' => {
                let (n, end) = lex_number(src, i)?;
                i = end;
                out.push(Token {
                    kind: TokenKind::Number(n),
                    pos: start,
                });
            }
            b'\'' => {
                let (sheet, end) = lex_quoted_sheet(src, i)?;
                let (r, end) = lex_ref_after_bang(src, end, start)?;
                i = end;
                out.push(Token {
                    kind: TokenKind::Ref(r.on_sheet(sheet)),
                    pos: start,
                });
            }
            c if c.is_ascii_alphabetic() || c == b'_' || c == b'$' => {
                while i < bytes.len() && is_word_byte(bytes[i]) {
                    i += 1;
                }
                let word = &src[start..i];
                if bytes.get(i) == Some(&b'!') {
                    if word.contains('$') {
                        return Err(FormulaError::new(start, "invalid sheet name"));
                    }
                    let (r, end) = lex_ref_after_bang(src, i, start)?;
                    i = end;
                    out.push(Token {
                        kind: TokenKind::Ref(r.on_sheet(word)),
                        pos: start,
                    });
                    continue;
                }
                let next_is_paren = src[i..].trim_start().starts_with('(');
                let kind = if next_is_paren && !word.contains('$') {
                    TokenKind::Ident(word.to_ascii_uppercase())
                } else if let Ok(r) = parse_a1(word, start, src) {
                    TokenKind::Ref(r)
                } else if word.eq_ignore_ascii_case("TRUE") {
                    TokenKind::Bool(true)
                } else if word.eq_ignore_ascii_case("FALSE") {
                    TokenKind::Bool(false)
                } else if word.contains('$') {
                    return Err(FormulaError::new(start, format!("invalid reference `{word}`")));
                } else {
                    TokenKind::Ident(word.to_ascii_uppercase())
                };
                out.push(Token { kind, pos: start });
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(FormulaError::new(i, format!("illegal character `{ch}`")));
            }
        }
    }
    Ok(out)
}

fn lex_string(src: &str, start: usize) -> Result<(String, usize), FormulaError> {
    let mut out = String::new();
    let mut chars = src[start + 1..].char_indices().peekable();
    while let Some((off, ch)) = chars.next() {
        if ch == '"' {
            if matches!(chars.peek(), Some((_, '"'))) {
                chars.next();
                out.push('"');
                continue;
            }
            return Ok((out, start + 1 + off + 1));
        }
        out.push(ch);
    }
    Err(FormulaError::new(start, "unterminated string"))
}

fn lex_number(src: &str, start: usize) -> Result<(f64, usize), FormulaError> {
    let b = src.as_bytes();
    let mut i = start;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i < b.len() && b[i] == b'.' {
        i += 1;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < b.len() && matches!(b[i], b'e' | b'E') {
        let mut j = i + 1;
        if j < b.len() && matches!(b[j], b'+' | b'-') {
            j += 1;
        }
        let digits = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j > digits {
            i = j;
        }
    }
    let text = &src[start..i];
    if text == "." {
        return Err(FormulaError::new(start, "illegal character `.`"));
    }
    match text.parse::<f64>() {
        Ok(n) if n.is_finite() => Ok((n, i)),
        _ => Err(FormulaError::new(start, format!("invalid number `{text}`"))),
    }
}

fn lex_quoted_sheet(src: &str, start: usize) -> Result<(String, usize), FormulaError> {
    let mut name = String::new();
    let mut chars = src[start + 1..].char_indices().peekable();
    while let Some((off, ch)) = chars.next() {
        if ch == '\'' {
            if matches!(chars.peek(), Some((_, '\''))) {
                chars.next();
                name.push('\'');
                continue;
            }
            return Ok((name, start + 1 + off + 1));
        }
        name.push(ch);
    }
    Err(FormulaError::new(start, "unterminated sheet name"))
}

/// `at` points at the `!`; reads the following A1 address.
fn lex_ref_after_bang(src: &str, at: usize, tok_start: usize) -> Result<(CellRef, usize), FormulaError> {
    let b = src.as_bytes();
    if b.get(at) != Some(&b'!') {
        return Err(FormulaError::new(at, "expected `!` after sheet name"));
    }
    let begin = at + 1;
    let mut i = begin;
    while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'$') {
        i += 1;
    }
    let r = parse_a1(&src[begin..i], begin, src)
        .map_err(|_| FormulaError::new(tok_start, "invalid sheet reference"))?;
    Ok((r, i))
}
