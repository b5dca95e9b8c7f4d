// SPDX-License-Identifier: Apache-2.0

//! Backward syntactic slicing of an unwound program with respect to its
//! assertions.
//!
//! One backward pass computes the set of variables that may still be read
//! by a retained statement. Asserts and assumes are always retained; an
//! assignment or havoc survives only if its target is in the set at that
//! point; an `if` survives if either branch retained something, and then its
//! condition becomes relevant as well. Havoc ids are left untouched so a
//! trace found on the slice replays on the original program.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::bv::BvExpr;
use crate::ir::{Program, Stmt};

type Live = BTreeSet<Arc<str>>;

fn add_vars(e: &BvExpr, live: &mut Live) {
    e.for_each_var(&mut |n, _, _| {
        live.insert(n.clone());
    });
}

fn block(stmts: &[Stmt], live: &mut Live) -> Vec<Stmt> {
    let mut kept = Vec::new();
    for s in stmts.iter().rev() {
        match s {
            Stmt::Assert { cond, .. } | Stmt::Assume { cond } => {
                add_vars(cond, live);
                kept.push(s.clone());
            }
            Stmt::Assign { target, value } => {
                if live.remove(target) {
                    add_vars(value, live);
                    kept.push(s.clone());
                }
            }
            Stmt::Havoc { target, .. } => {
                if live.remove(target) {
                    kept.push(s.clone());
                }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let mut lt = live.clone();
                let t = block(then_branch, &mut lt);
                let e = block(else_branch, live);
                if !t.is_empty() || !e.is_empty() {
                    live.extend(lt);
                    add_vars(cond, live);
                    kept.push(Stmt::ite(cond.clone(), t, e));
                }
            }
            Stmt::Loop { cond, body } => {
                // Not expected after unwinding; iterate to a fixpoint.
                let mut acc = live.clone();
                add_vars(cond, &mut acc);
                loop {
                    let mut l = acc.clone();
                    block(body, &mut l);
                    let before = acc.len();
                    acc.extend(l);
                    if acc.len() == before {
                        break;
                    }
                }
                let mut l = acc.clone();
                let b = block(body, &mut l);
                *live = acc;
                kept.push(Stmt::Loop {
                    cond: cond.clone(),
                    body: b,
                });
            }
        }
    }
    kept.reverse();
    kept
}

/// Variables live at program entry of the slice.
pub fn relevant_inputs(p: &Program) -> Live {
    let mut live = Live::new();
    block(&p.body, &mut live);
    live
}

/// Slices `p` to the statements its asserts depend on. Without asserts
/// the program is returned unchanged.
pub fn slice(p: &Program) -> Program {
    if !p.has_asserts() {
        log::warn!("no assertions; slicing skipped");
        return p.clone();
    }
    let mut live = Live::new();
    let body = block(&p.body, &mut live);
    Program {
        vars: p.vars.clone(),
        body,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> BvExpr {
        BvExpr::var(n, 0, 8)
    }

    fn c(n: u64) -> BvExpr {
        BvExpr::konst(n, 8)
    }

    fn prog(body: Vec<Stmt>) -> Program {
        let mut p = Program::new();
        for n in ["m", "t", "c", "d", "reset", "x"] {
            p.declare(n, 8);
        }
        p.body = body;
        p.number_havocs();
        p
    }

    #[test]
    fn drops_t_keeps_m_and_guards() {
        let p = prog(vec![
            Stmt::ite(
                v("reset").ne(&c(0)),
                vec![Stmt::assign("m", c(0)), Stmt::assign("t", c(0))],
                vec![Stmt::ite(
                    v("c").ugt(&v("d")),
                    vec![Stmt::assign("m", v("c").add(&v("d")))],
                    vec![Stmt::assign("t", v("c").and(&c(3)).shl(&v("d")))],
                )],
            ),
            Stmt::assert("m", v("m").ule(&c(200))),
        ]);
        let s = slice(&p);
        let mut targets = Vec::new();
        s.walk(|st| {
            if let Stmt::Assign { target, .. } = st {
                targets.push(target.to_string());
            }
        });
        assert_eq!(targets, ["m", "m"]);
        assert!(matches!(&s.body[0], Stmt::If { else_branch, .. }
            if matches!(&else_branch[0], Stmt::If { else_branch: e, .. } if e.is_empty())));
        assert_eq!(slice(&s), s);
    }

    #[test]
    fn assumes_are_kept_and_make_their_vars_relevant() {
        let p = prog(vec![
            Stmt::havoc("x"),
            Stmt::assign("t", v("x")),
            Stmt::havoc("c"),
            Stmt::assume(v("t").eq(&c(1))),
            Stmt::assert("c", v("c").ne(&c(9))),
        ]);
        assert_eq!(slice(&p), p);
    }

    #[test]
    fn no_asserts_is_identity() {
        let p = prog(vec![Stmt::assign("x", c(1))]);
        assert_eq!(slice(&p), p);
    }
}
