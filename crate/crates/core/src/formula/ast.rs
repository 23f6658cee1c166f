use crate::grid::{CellRef, RangeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Negate,
    Percent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Concat => "&",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge
        )
    }

    /// Binding strength; higher binds tighter.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                PREC_CMP
            }
            BinaryOp::Concat => PREC_CONCAT,
            BinaryOp::Add | BinaryOp::Sub => PREC_ADD,
            BinaryOp::Mul | BinaryOp::Div => PREC_MUL,
            BinaryOp::Pow => PREC_POW,
        }
    }
}

pub(crate) const PREC_CMP: u8 = 1;
pub(crate) const PREC_CONCAT: u8 = 2;
pub(crate) const PREC_ADD: u8 = 3;
pub(crate) const PREC_MUL: u8 = 4;
pub(crate) const PREC_NEG: u8 = 5;
pub(crate) const PREC_POW: u8 = 6;
pub(crate) const PREC_PERCENT: u8 = 7;
pub(crate) const PREC_ATOM: u8 = 8;

/// Formula expression tree.
///
/// Number literals produced by the parser are never negative; a leading
/// minus is a [`UnaryOp::Negate`] node. Function names are uppercase.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Text(String),
    Bool(bool),
    Ref(CellRef),
    Range(RangeRef),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn unary(op: UnaryOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(name.to_ascii_uppercase(), args)
    }

    pub(crate) fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(UnaryOp::Negate, _) => PREC_NEG,
            Expr::Unary(UnaryOp::Percent, _) => PREC_PERCENT,
            _ => PREC_ATOM,
        }
    }

    /// True if the tree contains a call to `name` (uppercase).
    pub fn calls(&self, name: &str) -> bool {
        match self {
            Expr::Call(n, args) => n == name || args.iter().any(|a| a.calls(name)),
            Expr::Unary(_, e) => e.calls(name),
            Expr::Binary(_, l, r) => l.calls(name) || r.calls(name),
            _ => false,
        }
    }
}

/// A reference occurring in a formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RefItem {
    Cell(CellRef),
    Range(RangeRef),
}
