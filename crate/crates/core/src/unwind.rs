// SPDX-License-Identifier: Apache-2.0

//! Bounded loop unwinding.
//!
//! Each loop becomes nested `if (cond) { body; ... }` copies. After the last
//! copy an unwinding assumption `assume(!cond)` discards executions that
//! would need more iterations. Outermost loops are cut after `k` copies.
//! Nested loops whose condition is a known constant in every iteration
//! (a counted wait loop, say) are unrolled completely; other nested loops
//! are cut after `k` copies as well.
//!
//! A forward constant analysis decides loop conditions only. All other
//! statements are copied unchanged.

use std::collections::HashMap;
use std::sync::Arc;

use crate::bv::{eval, BvExpr};
use crate::ir::{Program, Stmt};

/// Iteration cap for loops unrolled by constant condition.
pub const MAX_CONST_UNROLL: usize = 1 << 16;

#[derive(Clone, Debug)]
pub struct Unwound {
    pub program: Program,
    pub warnings: Vec<String>,
    /// Number of unwinding assumptions emitted.
    pub cuts: usize,
}

type Consts = HashMap<Arc<str>, u64>;

fn const_value(e: &BvExpr, env: &Consts) -> Option<u64> {
    eval(e, env).ok()
}

/// Pointwise intersection of two constant maps.
fn join(a: &Consts, b: &Consts) -> Consts {
    a.iter()
        .filter(|(k, v)| b.get(*k) == Some(v))
        .map(|(k, v)| (k.clone(), *v))
        .collect()
}

struct Unwinder {
    k: usize,
    warnings: Vec<String>,
    cuts: usize,
}

fn has_assert(stmts: &[Stmt]) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Assert { .. } => true,
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => has_assert(then_branch) || has_assert(else_branch),
        Stmt::Loop { body, .. } => has_assert(body),
        _ => false,
    })
}

impl Unwinder {
    /// Unwinds `stmts`; `env` is the constant state before them and holds
    /// the state after them on return (`None` once every path is cut off).
    fn block(&mut self, stmts: &[Stmt], env: &mut Option<Consts>, depth: usize, out: &mut Vec<Stmt>) {
        for s in stmts {
            let Some(cur) = env.as_mut() else {
                // Unreachable: a previous unwinding assumption was `false`.
                return;
            };
            match s {
                Stmt::Assign { target, value } => {
                    match const_value(value, cur) {
                        Some(v) => cur.insert(target.clone(), v),
                        None => cur.remove(target),
                    };
                    out.push(s.clone());
                }
                Stmt::Havoc { target, .. } => {
                    cur.remove(target);
                    out.push(s.clone());
                }
                Stmt::Assume { cond } => {
                    if const_value(cond, cur) == Some(0) {
                        *env = None;
                    }
                    out.push(s.clone());
                }
                Stmt::Assert { .. } => out.push(s.clone()),
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    let c = const_value(cond, cur);
                    let mut te = if c == Some(0) { None } else { Some(cur.clone()) };
                    let mut ee = if matches!(c, Some(v) if v != 0) { None } else { Some(cur.clone()) };
                    let mut t = Vec::new();
                    let mut e = Vec::new();
                    match &mut te {
                        Some(_) => self.block(then_branch, &mut te, depth, &mut t),
                        None => t = self.copy_unreached(then_branch),
                    }
                    match &mut ee {
                        Some(_) => self.block(else_branch, &mut ee, depth, &mut e),
                        None => e = self.copy_unreached(else_branch),
                    }
                    *env = match (te, ee) {
                        (Some(a), Some(b)) => Some(join(&a, &b)),
                        (Some(a), None) | (None, Some(a)) => Some(a),
                        (None, None) => None,
                    };
                    out.push(Stmt::ite(cond.clone(), t, e));
                }
                Stmt::Loop { cond, body } => self.lop(cond, body, env, depth, out),
            }
        }
    }

    /// Unwinds a branch the analysis considers dead (constant condition).
    /// It is kept so the statement structure stays faithful; loops in it are
    /// cut after `k` copies.
    fn copy_unreached(&mut self, stmts: &[Stmt]) -> Vec<Stmt> {
        let mut out = Vec::new();
        self.block(stmts, &mut Some(Consts::new()), 0, &mut out);
        out
    }

    fn lop(&mut self, cond: &BvExpr, body: &[Stmt], env: &mut Option<Consts>, depth: usize, out: &mut Vec<Stmt>) {
        if self.k == 0 && has_assert(body) {
            self.warn("unwinding bound 0 skips assertions inside a loop".into());
        }
        // Iteration copies as (condition known true, body); the chain is
        // folded into nested ifs afterwards.
        let mut copies: Vec<(bool, Vec<Stmt>)> = Vec::new();
        let mut tail = Vec::new();
        let mut exits: Vec<Consts> = Vec::new();
        let mut cur = env.clone();
        while let Some(c_env) = cur.take() {
            let c = const_value(cond, &c_env);
            if c == Some(0) {
                exits.push(c_env);
                break;
            }
            let limit = if depth > 0 && c.is_some() { MAX_CONST_UNROLL } else { self.k };
            if copies.len() >= limit {
                if depth > 0 && c.is_some() {
                    self.warn(format!("loop still running after {MAX_CONST_UNROLL} iterations; cut"));
                } else if depth > 0 {
                    self.warn(format!(
                        "nested loop with a data-dependent condition cut after {} iterations",
                        self.k
                    ));
                }
                self.cuts += 1;
                tail.push(Stmt::assume(cond.not()));
                if c.is_none() {
                    exits.push(c_env);
                }
                break;
            }
            if c.is_none() {
                exits.push(c_env.clone());
            }
            let mut b = Vec::new();
            cur = Some(c_env);
            self.block(body, &mut cur, depth + 1, &mut b);
            copies.push((c.is_some(), b));
        }
        *env = exits.into_iter().reduce(|a, b| join(&a, &b));
        let mut inner = tail;
        while let Some((known_true, mut b)) = copies.pop() {
            b.extend(inner);
            inner = if known_true { b } else { vec![Stmt::ite(cond.clone(), b, Vec::new())] };
        }
        out.extend(inner);
    }

    fn warn(&mut self, w: String) {
        if !self.warnings.contains(&w) {
            log::warn!("{w}");
            self.warnings.push(w);
        }
    }
}

/// Unwinds every loop of `p` with bound `k` and renumbers havocs so each
/// copy has its own id.
pub fn unwind(p: &Program, k: usize) -> Unwound {
    let mut u = Unwinder {
        k,
        warnings: Vec::new(),
        cuts: 0,
    };
    let mut body = Vec::new();
    let mut env = Some(Consts::new());
    u.block(&p.body, &mut env, 0, &mut body);
    let mut program = Program {
        vars: p.vars.clone(),
        body,
    };
    program.number_havocs();
    Unwound {
        program,
        warnings: u.warnings,
        cuts: u.cuts,
    }
}
