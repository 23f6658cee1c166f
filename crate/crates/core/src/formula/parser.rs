//! Recursive-descent parser.
//!
//! Precedence, loosest first: comparisons (non-associative), `&`, `+ -`,
//! `* /`, unary minus, `^` (right-associative), postfix `%`, then atoms.
//! Unary minus binds looser than `^`, so `-2^2` is `-(2^2)`.

use crate::error::FormulaError;
use crate::grid::RangeRef;

use super::ast::{BinaryOp, Expr, UnaryOp};
use super::lexer::{tokenize, Token, TokenKind};

pub fn parse_formula(src: &str) -> Result<Expr, FormulaError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        idx: 0,
        end: src.len(),
    };
    if p.tokens.is_empty() {
        return Err(FormulaError::new(0, "empty formula"));
    }
    let expr = p.comparison()?;
    if let Some(t) = p.peek() {
        return Err(FormulaError::new(t.pos, "unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<(), FormulaError> {
        match self.peek_kind() {
            Some(k) if *k == kind => {
                self.idx += 1;
                Ok(())
            }
            _ => Err(FormulaError::new(self.pos(), format!("expected {what}"))),
        }
    }

    fn comparison_op(&self) -> Option<BinaryOp> {
        Some(match self.peek_kind()? {
            TokenKind::Eq => BinaryOp::Eq,
            TokenKind::Ne => BinaryOp::Ne,
            TokenKind::Lt => BinaryOp::Lt,
            TokenKind::Le => BinaryOp::Le,
            TokenKind::Gt => BinaryOp::Gt,
            TokenKind::Ge => BinaryOp::Ge,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> Result<Expr, FormulaError> {
        let left = self.concat()?;
        let Some(op) = self.comparison_op() else {
            return Ok(left);
        };
        self.idx += 1;
        let right = self.concat()?;
        if self.comparison_op().is_some() {
            return Err(FormulaError::new(self.pos(), "chained comparison"));
        }
        Ok(Expr::binary(op, left, right))
    }

    fn concat(&mut self) -> Result<Expr, FormulaError> {
        let mut left = self.additive()?;
        while self.peek_kind() == Some(&TokenKind::Amp) {
            self.idx += 1;
            let right = self.additive()?;
            left = Expr::binary(BinaryOp::Concat, left, right);
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<Expr, FormulaError> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => return Ok(left),
            };
            self.idx += 1;
            let right = self.multiplicative()?;
            left = Expr::binary(op, left, right);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, FormulaError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => return Ok(left),
            };
            self.idx += 1;
            let right = self.unary()?;
            left = Expr::binary(op, left, right);
        }
    }

    fn unary(&mut self) -> Result<Expr, FormulaError> {
        match self.peek_kind() {
            Some(TokenKind::Minus) => {
                self.idx += 1;
                Ok(Expr::unary(UnaryOp::Negate, self.unary()?))
            }
            Some(TokenKind::Plus) => {
                self.idx += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, FormulaError> {
        let base = self.postfix()?;
        if self.peek_kind() == Some(&TokenKind::Caret) {
            self.idx += 1;
            // Right operand may itself carry a sign and further `^`.
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, FormulaError> {
        let mut e = self.primary()?;
        while self.peek_kind() == Some(&TokenKind::Percent) {
            self.idx += 1;
            e = Expr::unary(UnaryOp::Percent, e);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, FormulaError> {
        let pos = self.pos();
        let Some(tok) = self.bump() else {
            return Err(FormulaError::new(pos, "unexpected end of formula"));
        };
        match tok.kind {
            TokenKind::Number(n) => Ok(Expr::Number(n)),
            TokenKind::Text(s) => Ok(Expr::Text(s)),
            TokenKind::Bool(b) => Ok(Expr::Bool(b)),
            TokenKind::LParen => {
                let e = self.comparison()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::Ref(start) => {
                if self.peek_kind() != Some(&TokenKind::Colon) {
                    return Ok(Expr::Ref(start));
                }
                self.idx += 1;
                let end_pos = self.pos();
                let Some(TokenKind::Ref(mut end)) = self.bump().map(|t| t.kind) else {
                    return Err(FormulaError::new(end_pos, "expected a cell reference after `:`"));
                };
                match (&start.sheet, &end.sheet) {
                    (Some(a), Some(b)) if a.to_lowercase() == b.to_lowercase() => {
                        end.sheet = start.sheet.clone();
                    }
                    (Some(_), None) => end.sheet = start.sheet.clone(),
                    (None, None) => {}
                    _ => {
                        return Err(FormulaError::new(
                            end_pos,
                            "range endpoints on different sheets",
                        ))
                    }
                }
                Ok(Expr::Range(RangeRef::normalized(start, end)))
            }
            TokenKind::Ident(name) => {
                if self.peek_kind() != Some(&TokenKind::LParen) {
                    return Err(FormulaError::new(tok.pos, format!("unknown name `{name}`")));
                }
                self.idx += 1;
                let mut args = Vec::new();
                if self.peek_kind() == Some(&TokenKind::RParen) {
                    self.idx += 1;
                    return Ok(Expr::Call(name, args));
                }
                loop {
                    args.push(self.comparison()?);
                    match self.peek_kind() {
                        Some(TokenKind::Comma) => self.idx += 1,
                        Some(TokenKind::RParen) => {
                            self.idx += 1;
                            return Ok(Expr::Call(name, args));
                        }
                        _ => {
                            return Err(FormulaError::new(self.pos(), "expected `,` or `)`"));
                        }
                    }
                }
            }
            _ => Err(FormulaError::new(tok.pos, "unexpected token")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellRef;

    fn a(col: u32, row: u32) -> Expr {
        Expr::Ref(CellRef::new(col, row))
    }

    fn n(x: f64) -> Expr {
        Expr::Number(x)
    }

    #[test]
    fn multiplication_binds_tighter() {
        assert_eq!(
            parse_formula("2+3*4").unwrap(),
            Expr::binary(BinaryOp::Add, n(2.0), Expr::binary(BinaryOp::Mul, n(3.0), n(4.0)))
        );
    }

    #[test]
    fn negation_is_looser_than_power() {
        assert_eq!(
            parse_formula("-2^2").unwrap(),
            Expr::unary(UnaryOp::Negate, Expr::binary(BinaryOp::Pow, n(2.0), n(2.0)))
        );
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(
            parse_formula("2^3^2").unwrap(),
            Expr::binary(BinaryOp::Pow, n(2.0), Expr::binary(BinaryOp::Pow, n(3.0), n(2.0)))
        );
        assert_eq!(
            parse_formula("2^-1").unwrap(),
            Expr::binary(BinaryOp::Pow, n(2.0), Expr::unary(UnaryOp::Negate, n(1.0)))
        );
    }

    #[test]
    fn percent_is_postfix_and_tightest() {
        assert_eq!(
            parse_formula("2^50%").unwrap(),
            Expr::binary(BinaryOp::Pow, n(2.0), Expr::unary(UnaryOp::Percent, n(50.0)))
        );
    }

    #[test]
    fn concat_sits_between_comparison_and_additive() {
        assert_eq!(
            parse_formula("1+2&3=\"33\"").unwrap(),
            Expr::binary(
                BinaryOp::Eq,
                Expr::binary(BinaryOp::Concat, Expr::binary(BinaryOp::Add, n(1.0), n(2.0)), n(3.0)),
                Expr::Text("33".into())
            )
        );
    }

    #[test]
    fn final_grade_formula_shape() {
        let src = r#"IF(AND(A2<40,A2>=0),"FAIL",IF(AND(A2>=40,A2<70),"PASS",IF(AND(A2>=70,A2<=100),"HONOR","NOT VALID")))"#;
        let Expr::Call(name, args) = parse_formula(src).unwrap() else {
            panic!("not a call");
        };
        assert_eq!(name, "IF");
        assert_eq!(args.len(), 3);
        assert_eq!(
            args[0],
            Expr::call(
                "AND",
                vec![
                    Expr::binary(BinaryOp::Lt, a(1, 2), n(40.0)),
                    Expr::binary(BinaryOp::Ge, a(1, 2), n(0.0)),
                ]
            )
        );
        assert_eq!(args[1], Expr::Text("FAIL".into()));
        assert!(matches!(&args[2], Expr::Call(n, inner) if n == "IF" && inner.len() == 3));
    }

    #[test]
    fn function_names_uppercased_and_ranges_normalized() {
        assert_eq!(
            parse_formula("sum(B3:b1)").unwrap(),
            Expr::call(
                "SUM",
                vec![Expr::Range(RangeRef::normalized(CellRef::new(2, 1), CellRef::new(2, 3)))]
            )
        );
        assert_eq!(parse_formula("rand()").unwrap(), Expr::call("RAND", vec![]));
    }

    #[test]
    fn whitespace_is_insignificant() {
        assert_eq!(parse_formula(" 1 +\t2 ").unwrap(), parse_formula("1+2").unwrap());
    }

    #[test]
    fn cross_sheet_ranges() {
        let e = parse_formula("SUM(Data!A1:Data!B2)").unwrap();
        let f = parse_formula("SUM(Data!A1:B2)").unwrap();
        assert_eq!(e, f);
        assert!(parse_formula("SUM(Data!A1:Other!B2)").is_err());
        assert!(parse_formula("SUM(A1:Other!B2)").is_err());
    }

    #[test]
    fn syntax_errors_report_positions() {
        let cases = [
            ("1<2<3", 3),
            ("1+", 2),
            ("(1", 2),
            ("1 2", 2),
            ("SUM(1,", 6),
            ("SUM(1;2)", 5),
            ("foo", 0),
            (")", 0),
            ("", 0),
            ("A1:", 3),
        ];
        for (src, pos) in cases {
            let err = parse_formula(src).unwrap_err();
            assert_eq!(err.pos, pos, "{src}: {err}");
        }
    }
}
