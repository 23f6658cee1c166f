//! Built-in functions.

use crate::grid::{parse_decimal, CellValue, ErrorKind};

use super::eval::{compare, fold_text, to_bool, to_number, EvalContext, RangeValues};

/// An evaluated function argument. References keep their identity because
/// aggregates treat values typed into the call differently from values
/// read out of cells.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    /// A literal or computed value.
    Value(CellValue),
    /// The value of a single-cell reference.
    Ref(CellValue),
    Range(RangeValues),
}

impl Arg {
    fn scalar(&self) -> CellValue {
        match self {
            Arg::Value(v) | Arg::Ref(v) => v.clone(),
            Arg::Range(_) => CellValue::Error(ErrorKind::Value),
        }
    }
}

const KNOWN: &[&str] = &[
    "IF", "AND", "OR", "NOT", "SUM", "AVERAGE", "MIN", "MAX", "COUNT", "ABS", "ROUND", "COUNTIF",
    "RAND",
];

pub fn is_known(name: &str) -> bool {
    KNOWN.contains(&name)
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(k) => return CellValue::Error(k),
        }
    };
}

/// Apply a built-in to already-evaluated arguments. `name` is uppercase.
///
/// Wrong arity is `#VALUE!`; an unknown name is `#NAME?`.
pub fn call_builtin(name: &str, args: Vec<Arg>, ctx: &mut dyn EvalContext) -> CellValue {
    let arity = |lo: usize, hi: usize| (lo..=hi).contains(&args.len());
    match name {
        "IF" => {
            if !arity(2, 3) {
                return CellValue::Error(ErrorKind::Value);
            }
            if tri!(to_bool(&args[0].scalar())) {
                args[1].scalar()
            } else {
                args.get(2).map_or(CellValue::Bool(false), Arg::scalar)
            }
        }
        "AND" | "OR" => {
            if args.is_empty() {
                return CellValue::Error(ErrorKind::Value);
            }
            let flags = tri!(logical_operands(&args));
            if flags.is_empty() {
                return CellValue::Error(ErrorKind::Value);
            }
            CellValue::Bool(if name == "AND" {
                flags.iter().all(|&b| b)
            } else {
                flags.iter().any(|&b| b)
            })
        }
        "NOT" => {
            if !arity(1, 1) {
                return CellValue::Error(ErrorKind::Value);
            }
            CellValue::Bool(!tri!(to_bool(&args[0].scalar())))
        }
        "SUM" | "AVERAGE" | "MIN" | "MAX" => {
            if args.is_empty() {
                return CellValue::Error(ErrorKind::Value);
            }
            let nums = tri!(numeric_operands(&args));
            match name {
                "SUM" => CellValue::number(nums.iter().sum()),
                "AVERAGE" if nums.is_empty() => CellValue::Error(ErrorKind::Div0),
                "AVERAGE" => CellValue::number(nums.iter().sum::<f64>() / nums.len() as f64),
                _ if nums.is_empty() => CellValue::Number(0.0),
                "MIN" => CellValue::number(nums.iter().copied().fold(f64::INFINITY, f64::min)),
                _ => CellValue::number(nums.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            }
        }
        "COUNT" => {
            if args.is_empty() {
                return CellValue::Error(ErrorKind::Value);
            }
            let n: usize = args
                .iter()
                .map(|a| match a {
                    Arg::Value(v) | Arg::Ref(v) => usize::from(matches!(v, CellValue::Number(_))),
                    Arg::Range(r) => r.values.iter().filter(|v| matches!(v, CellValue::Number(_))).count(),
                })
                .sum();
            CellValue::Number(n as f64)
        }
        "ABS" => {
            if !arity(1, 1) {
                return CellValue::Error(ErrorKind::Value);
            }
            CellValue::number(tri!(to_number(&args[0].scalar())).abs())
        }
        "ROUND" => {
            if !arity(2, 2) {
                return CellValue::Error(ErrorKind::Value);
            }
            let x = tri!(to_number(&args[0].scalar()));
            let digits = tri!(to_number(&args[1].scalar())).trunc();
            CellValue::number(round_half_away(x, digits))
        }
        "COUNTIF" => {
            if !arity(2, 2) {
                return CellValue::Error(ErrorKind::Value);
            }
            let range = match &args[0] {
                Arg::Range(r) => r.clone(),
                Arg::Ref(v) => match v {
                    CellValue::Blank => RangeValues {
                        values: vec![],
                        blanks: 1,
                    },
                    v => RangeValues {
                        values: vec![v.clone()],
                        blanks: 0,
                    },
                },
                Arg::Value(_) => return CellValue::Error(ErrorKind::Value),
            };
            let criterion = tri!(Criterion::parse(&args[1].scalar()));
            let mut count = range.values.iter().filter(|v| criterion.matches(v)).count() as u64;
            if criterion.matches(&CellValue::Blank) {
                count += range.blanks;
            }
            CellValue::Number(count as f64)
        }
        "RAND" => {
            if !arity(0, 0) {
                return CellValue::Error(ErrorKind::Value);
            }
            CellValue::Number(ctx.rand())
        }
        _ => CellValue::Error(ErrorKind::Name),
    }
}

fn logical_operands(args: &[Arg]) -> Result<Vec<bool>, ErrorKind> {
    fn push(v: &CellValue, out: &mut Vec<bool>) -> Result<(), ErrorKind> {
        match v {
            CellValue::Bool(b) => out.push(*b),
            CellValue::Number(n) => out.push(*n != 0.0),
            CellValue::Blank => {}
            CellValue::Text(_) => return Err(ErrorKind::Value),
            CellValue::Error(k) => return Err(*k),
        }
        Ok(())
    }
    let mut out = Vec::new();
    for a in args {
        match a {
            Arg::Value(v) | Arg::Ref(v) => push(v, &mut out)?,
            Arg::Range(r) => {
                for v in &r.values {
                    push(v, &mut out)?;
                }
            }
        }
    }
    Ok(out)
}

/// Numbers for the aggregates. Values typed into the call are coerced;
/// cells read through references contribute only if they hold numbers.
fn numeric_operands(args: &[Arg]) -> Result<Vec<f64>, ErrorKind> {
    let mut out = Vec::new();
    for a in args {
        match a {
            Arg::Value(v) => out.push(to_number(v)?),
            Arg::Ref(v) => match v {
                CellValue::Number(n) => out.push(*n),
                CellValue::Error(k) => return Err(*k),
                _ => {}
            },
            Arg::Range(r) => {
                for v in &r.values {
                    match v {
                        CellValue::Number(n) => out.push(*n),
                        CellValue::Error(k) => return Err(*k),
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Round half away from zero. A product within a few ulps of a half is
/// treated as an exact half, so decimal inputs like 2.675 round up.
fn round_half_away(x: f64, digits: f64) -> f64 {
    let digits = digits.clamp(-308.0, 308.0);
    let scale = 10f64.powf(digits);
    let y = x * scale;
    if !y.is_finite() {
        return x;
    }
    let frac = (y - y.trunc()).abs();
    let r = if (frac - 0.5).abs() <= 4.0 * f64::EPSILON * y.abs().max(1.0) {
        y.trunc() + y.signum()
    } else {
        y.round()
    };
    r / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CritOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
struct Criterion {
    op: CritOp,
    value: CellValue,
}

impl Criterion {
    /// `"<40"`, `">=x"`, `"<>"`, a bare literal, or a number/boolean value.
    fn parse(v: &CellValue) -> Result<Criterion, ErrorKind> {
        let text = match v {
            CellValue::Error(k) => return Err(*k),
            CellValue::Text(s) => s.as_str(),
            CellValue::Blank => "",
            other => {
                return Ok(Criterion {
                    op: CritOp::Eq,
                    value: other.clone(),
                })
            }
        };
        let (op, rest) = [
            ("<=", CritOp::Le),
            (">=", CritOp::Ge),
            ("<>", CritOp::Ne),
            ("<", CritOp::Lt),
            (">", CritOp::Gt),
            ("=", CritOp::Eq),
        ]
        .into_iter()
        .find_map(|(p, op)| text.strip_prefix(p).map(|r| (op, r)))
        .unwrap_or((CritOp::Eq, text));
        let value = if let Some(n) = parse_decimal(rest.trim()) {
            CellValue::number(n)
        } else if rest.eq_ignore_ascii_case("TRUE") {
            CellValue::Bool(true)
        } else if rest.eq_ignore_ascii_case("FALSE") {
            CellValue::Bool(false)
        } else {
            CellValue::Text(rest.to_string())
        };
        Ok(Criterion { op, value })
    }

    fn matches(&self, cell: &CellValue) -> bool {
        if matches!(cell, CellValue::Error(_)) {
            return false;
        }
        let empty_crit = matches!(&self.value, CellValue::Text(s) if s.is_empty());
        let equal = match (cell, &self.value) {
            (CellValue::Blank, _) => empty_crit,
            (CellValue::Text(a), CellValue::Text(b)) => fold_text(a) == fold_text(b),
            (CellValue::Number(a), CellValue::Number(b)) => a == b,
            (CellValue::Bool(a), CellValue::Bool(b)) => a == b,
            _ => false,
        };
        match self.op {
            CritOp::Eq => equal,
            CritOp::Ne => !equal,
            op => {
                let same_type = std::mem::discriminant(cell) == std::mem::discriminant(&self.value);
                if !same_type {
                    return false;
                }
                let Ok(ord) = compare(cell, &self.value) else {
                    return false;
                };
                match op {
                    CritOp::Lt => ord.is_lt(),
                    CritOp::Le => ord.is_le(),
                    CritOp::Gt => ord.is_gt(),
                    CritOp::Ge => ord.is_ge(),
                    _ => unreachable!(),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellRef, RangeRef};

    struct NoCells(u32);

    impl EvalContext for NoCells {
        fn cell(&self, _: &CellRef) -> CellValue {
            CellValue::Blank
        }
        fn range(&self, _: &RangeRef) -> RangeValues {
            RangeValues::default()
        }
        fn rand(&mut self) -> f64 {
            self.0 += 1;
            0.5
        }
    }

    fn call(name: &str, args: Vec<Arg>) -> CellValue {
        call_builtin(name, args, &mut NoCells(0))
    }

    fn num(x: f64) -> Arg {
        Arg::Value(CellValue::Number(x))
    }

    fn range(vals: &[CellValue], blanks: u64) -> Arg {
        Arg::Range(RangeValues {
            values: vals.to_vec(),
            blanks,
        })
    }

    fn n(x: f64) -> CellValue {
        CellValue::Number(x)
    }

    #[test]
    fn pass_band_guard() {
        let and = call("AND", vec![Arg::Value(CellValue::Bool(55.31 >= 40.0)), Arg::Value(CellValue::Bool(55.31 < 70.0))]);
        assert_eq!(and, CellValue::Bool(true));
        let grade = call(
            "IF",
            vec![Arg::Value(and), Arg::Value(CellValue::text("PASS")), Arg::Value(CellValue::text("HONOR"))],
        );
        assert_eq!(grade, CellValue::text("PASS"));
    }

    #[test]
    fn sum_of_blank_range_is_zero() {
        assert_eq!(call("SUM", vec![range(&[], 5)]), n(0.0));
    }

    #[test]
    fn countif_less_than() {
        let data = [n(10.0), n(40.0), n(39.0), n(70.0)];
        // Brute force: members strictly below 40.
        let expected = data.iter().filter(|v| matches!(v, CellValue::Number(x) if *x < 40.0)).count();
        assert_eq!(expected, 2);
        assert_eq!(
            call("COUNTIF", vec![range(&data, 1), Arg::Value(CellValue::text("<40"))]),
            n(expected as f64)
        );
    }

    #[test]
    fn countif_criteria_forms() {
        let data = [n(40.0), CellValue::text("Pass"), CellValue::text("pass"), CellValue::Bool(true), n(41.0)];
        let c = |crit: CellValue| call("COUNTIF", vec![range(&data, 2), Arg::Value(crit)]);
        assert_eq!(c(n(40.0)), n(1.0));
        assert_eq!(c(CellValue::text("40")), n(1.0));
        assert_eq!(c(CellValue::text("PASS")), n(2.0));
        assert_eq!(c(CellValue::text(">=40")), n(2.0));
        assert_eq!(c(CellValue::text("<>40")), n(6.0));
        assert_eq!(c(CellValue::text("")), n(2.0));
        assert_eq!(c(CellValue::text("<>")), n(5.0));
        assert_eq!(c(CellValue::text("TRUE")), n(1.0));
        assert_eq!(c(CellValue::Error(ErrorKind::Div0)), CellValue::Error(ErrorKind::Div0));
        assert_eq!(call("COUNTIF", vec![num(1.0), num(1.0)]), CellValue::Error(ErrorKind::Value));
    }

    #[test]
    fn logical_functions() {
        assert_eq!(call("AND", vec![num(1.0), Arg::Value(CellValue::Bool(true))]), CellValue::Bool(true));
        assert_eq!(call("OR", vec![num(0.0), range(&[CellValue::Bool(false)], 3)]), CellValue::Bool(false));
        assert_eq!(call("AND", vec![range(&[], 3)]), CellValue::Error(ErrorKind::Value));
        assert_eq!(call("AND", vec![Arg::Ref(CellValue::text("x"))]), CellValue::Error(ErrorKind::Value));
        assert_eq!(
            call("OR", vec![Arg::Value(CellValue::Bool(true)), Arg::Value(CellValue::Error(ErrorKind::Ref))]),
            CellValue::Error(ErrorKind::Ref)
        );
        assert_eq!(call("NOT", vec![num(0.0)]), CellValue::Bool(true));
        assert_eq!(call("NOT", vec![]), CellValue::Error(ErrorKind::Value));
    }

    #[test]
    fn aggregates() {
        let data = [n(1.0), CellValue::text("x"), CellValue::Bool(true), n(5.0)];
        assert_eq!(call("SUM", vec![range(&data, 1), num(2.0)]), n(8.0));
        assert_eq!(call("SUM", vec![Arg::Value(CellValue::text("3")), Arg::Value(CellValue::Bool(true))]), n(4.0));
        assert_eq!(call("SUM", vec![Arg::Value(CellValue::text("x"))]), CellValue::Error(ErrorKind::Value));
        assert_eq!(call("SUM", vec![Arg::Ref(CellValue::text("x"))]), n(0.0));
        assert_eq!(call("AVERAGE", vec![range(&data, 1)]), n(3.0));
        assert_eq!(call("AVERAGE", vec![range(&[], 4)]), CellValue::Error(ErrorKind::Div0));
        assert_eq!(call("MIN", vec![range(&data, 0)]), n(1.0));
        assert_eq!(call("MAX", vec![range(&data, 0), num(-3.0)]), n(5.0));
        assert_eq!(call("MAX", vec![range(&[], 2)]), n(0.0));
        assert_eq!(call("COUNT", vec![range(&data, 3), Arg::Value(CellValue::text("1"))]), n(2.0));
        assert_eq!(
            call("SUM", vec![range(&[n(1.0), CellValue::Error(ErrorKind::Div0)], 0)]),
            CellValue::Error(ErrorKind::Div0)
        );
    }

    #[test]
    fn rounding() {
        assert_eq!(call("ROUND", vec![num(2.5), num(0.0)]), n(3.0));
        assert_eq!(call("ROUND", vec![num(-2.5), num(0.0)]), n(-3.0));
        assert_eq!(call("ROUND", vec![num(2.675), num(2.0)]), n(2.68));
        assert_eq!(call("ROUND", vec![num(1.005), num(2.0)]), n(1.01));
        assert_eq!(call("ROUND", vec![num(2.674), num(2.0)]), n(2.67));
        assert_eq!(call("ROUND", vec![num(1234.5), num(-2.0)]), n(1200.0));
        assert_eq!(call("ROUND", vec![num(16.666666), num(2.9)]), n(16.67));
        assert_eq!(call("ROUND", vec![num(1.0)]), CellValue::Error(ErrorKind::Value));
        assert_eq!(call("ABS", vec![num(-3.5)]), n(3.5));
    }

    #[test]
    fn rand_and_unknown() {
        let mut ctx = NoCells(0);
        assert_eq!(call_builtin("RAND", vec![], &mut ctx), n(0.5));
        assert_eq!(ctx.0, 1);
        assert_eq!(call("RAND", vec![num(1.0)]), CellValue::Error(ErrorKind::Value));
        assert_eq!(call("VLOOKUP", vec![]), CellValue::Error(ErrorKind::Name));
    }
}
