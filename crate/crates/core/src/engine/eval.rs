//! Expression evaluation: coercion, comparison order and operators.

use std::cmp::Ordering;

use crate::formula::{BinaryOp, Expr, UnaryOp};
use crate::grid::{parse_decimal, CellRef, CellValue, ErrorKind, RangeRef};

use super::builtins::{call_builtin, Arg};

/// Values of the cells in a range: the stored ones in row-major order, plus
/// how many members are blank.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RangeValues {
    pub values: Vec<CellValue>,
    pub blanks: u64,
}

impl RangeValues {
    /// The value of a 1×1 range.
    pub fn single(&self) -> Option<CellValue> {
        match (self.values.len(), self.blanks) {
            (1, 0) => Some(self.values[0].clone()),
            (0, 1) => Some(CellValue::Blank),
            _ => None,
        }
    }
}

/// What a formula can see while it evaluates.
pub trait EvalContext {
    /// Current value of a cell; a reference to a missing sheet is `#REF!`.
    fn cell(&self, r: &CellRef) -> CellValue;
    /// Current values of a range; a missing sheet yields a single `#REF!`.
    fn range(&self, r: &RangeRef) -> RangeValues;
    /// Next draw in `[0, 1)` from the seeded stream.
    fn rand(&mut self) -> f64;
}

/// Evaluate a formula as a cell's content. A blank result (a formula that
/// just points at an empty cell) is stored as 0.
pub fn eval_formula(ast: &Expr, ctx: &mut dyn EvalContext) -> CellValue {
    match eval_scalar(ast, ctx) {
        CellValue::Blank => CellValue::Number(0.0),
        v => v,
    }
}

pub(crate) fn eval_scalar(e: &Expr, ctx: &mut dyn EvalContext) -> CellValue {
    match e {
        Expr::Number(n) => CellValue::number(*n),
        Expr::Text(s) => CellValue::Text(s.clone()),
        Expr::Bool(b) => CellValue::Bool(*b),
        Expr::Ref(r) => ctx.cell(r),
        Expr::Range(_) => CellValue::Error(ErrorKind::Value),
        Expr::Unary(op, child) => {
            let v = eval_scalar(child, ctx);
            match to_number(&v) {
                Err(k) => CellValue::Error(k),
                Ok(n) => match op {
                    UnaryOp::Negate => CellValue::number(-n),
                    UnaryOp::Percent => CellValue::number(n / 100.0),
                },
            }
        }
        Expr::Binary(op, l, r) => {
            let lv = eval_scalar(l, ctx);
            let rv = eval_scalar(r, ctx);
            binary(*op, &lv, &rv)
        }
        Expr::Call(name, args) if name == "IF" => eval_if(args, ctx),
        Expr::Call(name, args) => {
            if !super::builtins::is_known(name) {
                return CellValue::Error(ErrorKind::Name);
            }
            let args = args.iter().map(|a| eval_arg(a, ctx)).collect();
            call_builtin(name, args, ctx)
        }
    }
}

fn eval_arg(e: &Expr, ctx: &mut dyn EvalContext) -> Arg {
    match e {
        Expr::Ref(r) => Arg::Ref(ctx.cell(r)),
        Expr::Range(r) => Arg::Range(ctx.range(r)),
        other => Arg::Value(eval_scalar(other, ctx)),
    }
}

/// IF evaluates only the branch it takes.
fn eval_if(args: &[Expr], ctx: &mut dyn EvalContext) -> CellValue {
    if !(2..=3).contains(&args.len()) {
        return CellValue::Error(ErrorKind::Value);
    }
    let cond = eval_scalar(&args[0], ctx);
    match to_bool(&cond) {
        Err(k) => CellValue::Error(k),
        Ok(true) => eval_scalar(&args[1], ctx),
        Ok(false) => match args.get(2) {
            Some(e) => eval_scalar(e, ctx),
            None => CellValue::Bool(false),
        },
    }
}

fn binary(op: BinaryOp, l: &CellValue, r: &CellValue) -> CellValue {
    if op.is_comparison() {
        let ord = match compare(l, r) {
            Ok(o) => o,
            Err(k) => return CellValue::Error(k),
        };
        return CellValue::Bool(match op {
            BinaryOp::Eq => ord == Ordering::Equal,
            BinaryOp::Ne => ord != Ordering::Equal,
            BinaryOp::Lt => ord == Ordering::Less,
            BinaryOp::Le => ord != Ordering::Greater,
            BinaryOp::Gt => ord == Ordering::Greater,
            BinaryOp::Ge => ord != Ordering::Less,
            _ => unreachable!(),
        });
    }
    if op == BinaryOp::Concat {
        return match (to_text(l), to_text(r)) {
            (Ok(a), Ok(b)) => CellValue::Text(a + &b),
            (Err(k), _) | (_, Err(k)) => CellValue::Error(k),
        };
    }
    let (a, b) = match (to_number(l), to_number(r)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(k), _) | (_, Err(k)) => return CellValue::Error(k),
    };
    match op {
        BinaryOp::Add => CellValue::number(a + b),
        BinaryOp::Sub => CellValue::number(a - b),
        BinaryOp::Mul => CellValue::number(a * b),
        BinaryOp::Div if b == 0.0 => CellValue::Error(ErrorKind::Div0),
        BinaryOp::Div => CellValue::number(a / b),
        BinaryOp::Pow if a == 0.0 && b < 0.0 => CellValue::Error(ErrorKind::Div0),
        BinaryOp::Pow => CellValue::number(a.powf(b)),
        _ => unreachable!(),
    }
}

/// Arithmetic coercion: blank is 0, booleans are 1/0, numeric-looking text
/// is its number, other text is `#VALUE!`.
pub fn to_number(v: &CellValue) -> Result<f64, ErrorKind> {
    match v {
        CellValue::Number(n) => Ok(*n),
        CellValue::Bool(b) => Ok(if *b { 1.0 } else { 0.0 }),
        CellValue::Blank => Ok(0.0),
        CellValue::Text(s) => parse_decimal(s.trim()).ok_or(ErrorKind::Value),
        CellValue::Error(k) => Err(*k),
    }
}

pub fn to_text(v: &CellValue) -> Result<String, ErrorKind> {
    match v {
        CellValue::Number(n) => Ok(crate::grid::format_number(*n)),
        CellValue::Text(s) => Ok(s.clone()),
        CellValue::Bool(b) => Ok(if *b { "TRUE" } else { "FALSE" }.to_string()),
        CellValue::Blank => Ok(String::new()),
        CellValue::Error(k) => Err(*k),
    }
}

/// Condition coercion: nonzero numbers are true, text must spell TRUE or
/// FALSE, blank is false.
pub fn to_bool(v: &CellValue) -> Result<bool, ErrorKind> {
    match v {
        CellValue::Bool(b) => Ok(*b),
        CellValue::Number(n) => Ok(*n != 0.0),
        CellValue::Blank => Ok(false),
        CellValue::Text(s) if s.eq_ignore_ascii_case("TRUE") => Ok(true),
        CellValue::Text(s) if s.eq_ignore_ascii_case("FALSE") => Ok(false),
        CellValue::Text(_) => Err(ErrorKind::Value),
        CellValue::Error(k) => Err(*k),
    }
}

fn type_rank(v: &CellValue) -> u8 {
    match v {
        CellValue::Number(_) => 0,
        CellValue::Text(_) => 1,
        CellValue::Bool(_) => 2,
        CellValue::Blank | CellValue::Error(_) => 3,
    }
}

pub(crate) fn fold_text(s: &str) -> String {
    s.to_lowercase()
}

/// The comparison order used by `=`, `<` and friends: every number sorts
/// before every text, every text before FALSE, FALSE before TRUE. Text
/// compares case-insensitively. Blank stands in for 0, "" or FALSE
/// depending on the other side. Errors propagate (left operand first).
pub fn compare(a: &CellValue, b: &CellValue) -> Result<Ordering, ErrorKind> {
    if let CellValue::Error(k) = a {
        return Err(*k);
    }
    if let CellValue::Error(k) = b {
        return Err(*k);
    }
    let blank_like = |other: &CellValue| match other {
        CellValue::Text(_) => CellValue::Text(String::new()),
        CellValue::Bool(_) => CellValue::Bool(false),
        _ => CellValue::Number(0.0),
    };
    let (a, b) = match (a, b) {
        (CellValue::Blank, CellValue::Blank) => return Ok(Ordering::Equal),
        (CellValue::Blank, other) => (blank_like(other), other.clone()),
        (other, CellValue::Blank) => (other.clone(), blank_like(other)),
        (x, y) => (x.clone(), y.clone()),
    };
    Ok(match (&a, &b) {
        (CellValue::Number(x), CellValue::Number(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
        (CellValue::Text(x), CellValue::Text(y)) => fold_text(x).cmp(&fold_text(y)),
        (CellValue::Bool(x), CellValue::Bool(y)) => x.cmp(y),
        _ => type_rank(&a).cmp(&type_rank(&b)),
    })
}

/// [`compare`] without the error channel: `None` if either side is an error.
pub fn compare_values(a: &CellValue, b: &CellValue) -> Option<Ordering> {
    compare(a, b).ok()
}
