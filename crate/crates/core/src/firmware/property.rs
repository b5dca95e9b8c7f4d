// SPDX-License-Identifier: Apache-2.0

//! Expansion of `antecedent |-> (immediate && ##N delayed)` into firmware
//! statements: one assert for the immediate part, `N` clock steps, then an
//! assert of the delayed part.

use super::ast::*;

pub fn lower_property(p: &PropertySpec) -> Vec<FwStmt> {
    lower_labeled(p, "property")
}

pub(crate) fn lower_labeled(p: &PropertySpec, label: &str) -> Vec<FwStmt> {
    let trivially_true = matches!(p.antecedent, FwExpr::Num(v) if v != 0);
    let guarded = |c: &FwExpr| {
        if trivially_true {
            c.clone()
        } else {
            FwExpr::Binary(
                FwBinOp::LogOr,
                Box::new(FwExpr::Unary(FwUnOp::LogNot, Box::new(p.antecedent.clone()))),
                Box::new(c.clone()),
            )
        }
    };
    let mut out = Vec::new();
    // `A |-> ##0 D` is `A |-> D`.
    let (immediate, delayed) = match (&p.immediate, &p.delayed) {
        (Some(i), Some(d)) if p.delay == 0 => (
            Some(FwExpr::Binary(FwBinOp::LogAnd, Box::new(i.clone()), Box::new(d.clone()))),
            None,
        ),
        (None, Some(d)) if p.delay == 0 => (Some(d.clone()), None),
        (i, d) => (i.clone(), d.clone()),
    };
    if let Some(i) = &immediate {
        out.push(FwStmt::Assert {
            cond: guarded(i),
            label: label.to_string(),
        });
    }
    if let Some(d) = delayed {
        for _ in 0..p.delay {
            out.push(FwStmt::Step);
        }
        out.push(FwStmt::Assert {
            cond: d,
            label: format!("{label} (##{})", p.delay),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firmware::parse_property;

    fn render(e: &FwExpr) -> String {
        match e {
            FwExpr::Num(n) => n.to_string(),
            FwExpr::Ident(n, _) => n.clone(),
            FwExpr::Unary(FwUnOp::LogNot, a) => format!("!{}", render(a)),
            FwExpr::Binary(op, a, b) => format!("({} {} {})", render(a), op.symbol(), render(b)),
            other => format!("{other:?}"),
        }
    }

    fn shape(stmts: &[FwStmt]) -> Vec<String> {
        stmts
            .iter()
            .map(|s| match s {
                FwStmt::Assert { cond, .. } => format!("assert{}", render(cond)),
                FwStmt::Step => "step".into(),
                other => format!("{other:?}"),
            })
            .collect()
    }

    #[test]
    fn delayed_consequent_expands_to_steps() {
        let p = parse_property("ack==1 |-> (valid==1 && ##2 empty==0)").unwrap();
        assert_eq!(
            shape(&lower_property(&p)),
            ["assert(!(ack == 1) || (valid == 1))", "step", "step", "assert(empty == 0)"]
        );
    }

    #[test]
    fn true_antecedent_without_delay_is_one_assert() {
        let p = parse_property("1 |-> x == 3").unwrap();
        assert_eq!(shape(&lower_property(&p)), ["assert(x == 3)"]);
    }

    #[test]
    fn mixed_domain_consequent_stays_one_assert() {
        let p = parse_property("1 |-> (!tx_empty || (send_data & 1) == 1)").unwrap();
        let s = lower_property(&p);
        assert_eq!(s.len(), 1);
        assert_eq!(shape(&s), ["assert(!tx_empty || ((send_data & 1) == 1))"]);
    }
}
