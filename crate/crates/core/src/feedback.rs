// SPDX-License-Identifier: Apache-2.0

//! Recognition of combinational feedback blocks in the IR: a run of havocs
//! immediately followed by an assume that conjoins one `target == expr`
//! equality per havocked variable. Concrete consumers (random simulation,
//! the enumeration oracle) resolve such blocks instead of guessing values.

use std::collections::HashMap;
use std::sync::Arc;

use crate::bv::{BinOp, BvExpr, ExprKind};
use crate::ir::Stmt;

#[derive(Clone, Debug)]
pub struct FeedbackBlock {
    /// Havocked variables in statement order.
    pub targets: Vec<Arc<str>>,
    /// Defining expression per target, same order.
    pub equations: Vec<BvExpr>,
    pub assume: BvExpr,
}

fn conjuncts(e: &BvExpr, out: &mut Vec<BvExpr>) {
    match e.kind() {
        ExprKind::Binary(BinOp::And, a, b) if e.width() == 1 => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        _ => out.push(e.clone()),
    }
}

/// Matches a feedback block starting at `stmts[i]`; returns it with the
/// number of statements it spans.
pub fn match_block(stmts: &[Stmt], i: usize) -> Option<(FeedbackBlock, usize)> {
    let mut targets = Vec::new();
    let mut j = i;
    while let Some(Stmt::Havoc { target, .. }) = stmts.get(j) {
        targets.push(target.clone());
        j += 1;
    }
    if targets.is_empty() {
        return None;
    }
    let Some(Stmt::Assume { cond }) = stmts.get(j) else {
        return None;
    };
    let mut parts = Vec::new();
    conjuncts(cond, &mut parts);
    if parts.len() != targets.len() {
        return None;
    }
    let mut defs: HashMap<Arc<str>, BvExpr> = HashMap::new();
    for p in &parts {
        let ExprKind::Binary(BinOp::Eq, l, r) = p.kind() else {
            return None;
        };
        let (name, _) = l.as_var()?;
        if !targets.contains(name) || defs.insert(name.clone(), r.clone()).is_some() {
            return None;
        }
    }
    let equations = targets.iter().map(|t| defs[t].clone()).collect();
    Some((
        FeedbackBlock {
            targets,
            equations,
            assume: cond.clone(),
        },
        j + 1 - i,
    ))
}

impl FeedbackBlock {
    /// For target `k`, the indices of targets its equation reads.
    pub fn deps(&self) -> Vec<Vec<usize>> {
        let idx: HashMap<&Arc<str>, usize> = self.targets.iter().enumerate().map(|(i, t)| (t, i)).collect();
        self.equations
            .iter()
            .map(|e| {
                let mut d: Vec<usize> = e.var_names().iter().filter_map(|n| idx.get(n).copied()).collect();
                d.sort_unstable();
                d.dedup();
                d
            })
            .collect()
    }

    /// An evaluation order in which every equation only reads targets
    /// already computed, if the equations are acyclic.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let deps = self.deps();
        let n = deps.len();
        let mut state = vec![0u8; n];
        let mut order = Vec::with_capacity(n);
        fn visit(k: usize, deps: &[Vec<usize>], state: &mut [u8], order: &mut Vec<usize>) -> bool {
            match state[k] {
                2 => return true,
                1 => return false,
                _ => {}
            }
            state[k] = 1;
            for &x in &deps[k] {
                if !visit(x, deps, state, order) {
                    return false;
                }
            }
            state[k] = 2;
            order.push(k);
            true
        }
        for k in 0..n {
            if !visit(k, &deps, &mut state, &mut order) {
                return None;
            }
        }
        Some(order)
    }
}

/// Replaces every acyclic feedback block by ordered assignments followed by
/// the original (now trivially satisfied) assume. Cyclic blocks are kept.
pub fn resolve_acyclic(stmts: &[Stmt]) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    let mut i = 0;
    while i < stmts.len() {
        if let Some((b, len)) = match_block(stmts, i) {
            if let Some(order) = b.topo_order() {
                for k in order {
                    out.push(Stmt::assign(b.targets[k].clone(), b.equations[k].clone()));
                }
                out.push(Stmt::assume(b.assume));
                i += len;
                continue;
            }
        }
        out.push(match &stmts[i] {
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => Stmt::ite(cond.clone(), resolve_acyclic(then_branch), resolve_acyclic(else_branch)),
            Stmt::Loop { cond, body } => Stmt::Loop {
                cond: cond.clone(),
                body: resolve_acyclic(body),
            },
            s => s.clone(),
        });
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_ordered_and_cycle_is_kept() {
        let x = BvExpr::var("x", 0, 4);
        let y = BvExpr::var("y", 0, 4);
        let a = BvExpr::var("a", 0, 4);
        let chain = vec![
            Stmt::havoc("x"),
            Stmt::havoc("y"),
            Stmt::assume(x.eq(&y.add(&BvExpr::konst(1, 4))).and(&y.eq(&a))),
        ];
        let r = resolve_acyclic(&chain);
        assert_eq!(r.len(), 3);
        assert!(matches!(&r[0], Stmt::Assign { target, .. } if &**target == "y"));
        assert!(matches!(&r[1], Stmt::Assign { target, .. } if &**target == "x"));

        let cyc = vec![
            Stmt::havoc("x"),
            Stmt::havoc("y"),
            Stmt::assume(x.eq(&y).and(&y.eq(&x.not()))),
        ];
        assert_eq!(resolve_acyclic(&cyc), cyc);
    }
}
