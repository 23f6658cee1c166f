use std::fmt::Write as _;

use crate::grid::{format_number, write_sheet_prefix, CellRef};

use super::ast::{Expr, UnaryOp, PREC_CMP, PREC_NEG, PREC_PERCENT, PREC_POW};
use super::BinaryOp;

/// Print an expression with the fewest parentheses that re-parse to the
/// same tree. No whitespace is emitted.
pub fn print_formula(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, &|r: &CellRef| r.a1());
    out
}

/// Print with cell addresses rendered relative to `(row, col)`: relative
/// axes as offsets `R[dr]C[dc]`, absolute axes as `R5C2`. Two formulas that
/// are copies of one another under fill print identically.
pub fn relative_key(e: &Expr, row: u32, col: u32) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, &|r: &CellRef| {
        let rpart = if r.row_abs {
            format!("R{}", r.row)
        } else {
            format!("R[{}]", r.row as i64 - row as i64)
        };
        let cpart = if r.col_abs {
            format!("C{}", r.col)
        } else {
            format!("C[{}]", r.col as i64 - col as i64)
        };
        rpart + &cpart
    });
    out
}

fn write_expr(out: &mut String, e: &Expr, addr: &dyn Fn(&CellRef) -> String) {
    match e {
        Expr::Number(n) => out.push_str(&format_number(*n)),
        Expr::Text(s) => {
            out.push('"');
            out.push_str(&s.replace('"', "\"\""));
            out.push('"');
        }
        Expr::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        Expr::Ref(r) => {
            if let Some(sheet) = &r.sheet {
                let _ = write_sheet_prefix(out, sheet);
            }
            out.push_str(&addr(r));
        }
        Expr::Range(rr) => {
            if let Some(sheet) = &rr.start.sheet {
                let _ = write_sheet_prefix(out, sheet);
            }
            let _ = write!(out, "{}:{}", addr(&rr.start), addr(&rr.end));
        }
        Expr::Unary(UnaryOp::Negate, child) => {
            out.push('-');
            write_child(out, child, child.precedence() < PREC_NEG, addr);
        }
        Expr::Unary(UnaryOp::Percent, child) => {
            write_child(out, child, child.precedence() < PREC_PERCENT, addr);
            out.push('%');
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let (left_paren, right_paren) = match op {
                BinaryOp::Pow => (l.precedence() <= PREC_POW, r.precedence() < PREC_NEG),
                _ if p == PREC_CMP => (l.precedence() <= p, r.precedence() <= p),
                _ => (l.precedence() < p, r.precedence() <= p),
            };
            write_child(out, l, left_paren, addr);
            out.push_str(op.symbol());
            write_child(out, r, right_paren, addr);
        }
        Expr::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_expr(out, a, addr);
            }
            out.push(')');
        }
    }
}

fn write_child(out: &mut String, e: &Expr, paren: bool, addr: &dyn Fn(&CellRef) -> String) {
    if paren {
        out.push('(');
        write_expr(out, e, addr);
        out.push(')');
    } else {
        write_expr(out, e, addr);
    }
}
