use crate::error::RefError;
use crate::grid::RangeRef;

use super::ast::{Expr, RefItem};

/// References in left-to-right source order, duplicates kept.
pub fn collect_refs(e: &Expr) -> Vec<RefItem> {
    let mut out = Vec::new();
    walk_refs(e, &mut out);
    out
}

fn walk_refs(e: &Expr, out: &mut Vec<RefItem>) {
    match e {
        Expr::Ref(r) => out.push(RefItem::Cell(r.clone())),
        Expr::Range(rr) => out.push(RefItem::Range(rr.clone())),
        Expr::Unary(_, c) => walk_refs(c, out),
        Expr::Binary(_, l, r) => {
            walk_refs(l, out);
            walk_refs(r, out);
        }
        Expr::Call(_, args) => args.iter().for_each(|a| walk_refs(a, out)),
        Expr::Number(_) | Expr::Text(_) | Expr::Bool(_) => {}
    }
}

/// Shift every relative axis of every reference by `(drow, dcol)`, the rule
/// a spreadsheet applies when a formula is copied.
pub fn translate_refs(e: &Expr, drow: i64, dcol: i64) -> Result<Expr, RefError> {
    Ok(match e {
        Expr::Ref(r) => Expr::Ref(r.shifted(drow, dcol)?),
        Expr::Range(rr) => Expr::Range(RangeRef::normalized(
            rr.start.shifted(drow, dcol)?,
            rr.end.shifted(drow, dcol)?,
        )),
        Expr::Unary(op, c) => Expr::unary(*op, translate_refs(c, drow, dcol)?),
        Expr::Binary(op, l, r) => Expr::binary(
            *op,
            translate_refs(l, drow, dcol)?,
            translate_refs(r, drow, dcol)?,
        ),
        Expr::Call(name, args) => Expr::Call(
            name.clone(),
            args.iter()
                .map(|a| translate_refs(a, drow, dcol))
                .collect::<Result<_, _>>()?,
        ),
        leaf => leaf.clone(),
    })
}
