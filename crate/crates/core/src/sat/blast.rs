// SPDX-License-Identifier: Apache-2.0

//! Tseitin bit-blasting of [`BvExpr`] into a [`SatBackend`].
//!
//! Every expression node maps to a little-endian vector of literals. Constant
//! bits are folded against a dedicated true literal, and the node cache plus
//! a gate cache keep repeated sub-terms from being encoded twice within one
//! instance.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{Cdcl, Lit, SatBackend, SolveOutcome, SolverError};
use crate::bv::{BinOp, BvExpr, ExprKind, UnOp};

pub type SatResult = SolveOutcome;

pub struct CnfInstance {
    backend: Box<dyn SatBackend>,
    clauses: Vec<Vec<Lit>>,
    t: Lit,
    cache: HashMap<BvExpr, Vec<Lit>>,
    vars: HashMap<(Arc<str>, u32), Vec<Lit>>,
    gates: HashMap<(u8, Lit, Lit), Lit>,
    timeout: Option<Duration>,
    solve_calls: u64,
}

impl Default for CnfInstance {
    fn default() -> Self {
        Self::new()
    }
}

impl CnfInstance {
    pub fn new() -> Self {
        Self::with_backend(Box::new(Cdcl::new()))
    }

    pub fn with_backend(mut backend: Box<dyn SatBackend>) -> Self {
        let t = backend.new_var();
        backend.add_clause(&[t]);
        CnfInstance {
            backend,
            clauses: vec![vec![t]],
            t,
            cache: HashMap::new(),
            vars: HashMap::new(),
            gates: HashMap::new(),
            timeout: None,
            solve_calls: 0,
        }
    }

    /// Wall-clock limit applied to every subsequent `solve`.
    pub fn set_timeout(&mut self, t: Option<Duration>) {
        self.timeout = t;
    }

    pub fn true_lit(&self) -> Lit {
        self.t
    }

    pub fn false_lit(&self) -> Lit {
        !self.t
    }

    pub fn fresh(&mut self) -> Lit {
        self.backend.new_var()
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.clauses.push(lits.to_vec());
        self.backend.add_clause(lits);
    }

    pub fn num_vars(&self) -> usize {
        self.backend.num_vars()
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn solve_calls(&self) -> u64 {
        self.solve_calls
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    /// Adds `e` (width 1) as a hard constraint.
    pub fn assert(&mut self, e: &BvExpr) {
        let l = self.lit(e);
        self.add_clause(&[l]);
    }

    /// Adds `act ⇒ e`.
    pub fn assert_under(&mut self, act: Lit, e: &BvExpr) {
        let l = self.lit(e);
        self.add_clause(&[!act, l]);
    }

    /// Makes `name@version` denote the value of `e`. SSA definitions are
    /// encoded by sharing `e`'s literals, so no equality clauses are needed
    /// unless the variable was already encoded.
    pub fn define(&mut self, name: &Arc<str>, version: u32, e: &BvExpr) {
        let bits = self.bits(e);
        let key = (name.clone(), version);
        if let Some(old) = self.vars.get(&key).cloned() {
            assert_eq!(old.len(), bits.len(), "redefinition changes width of {name}");
            for (a, b) in old.iter().zip(&bits) {
                self.add_clause(&[!*a, *b]);
                self.add_clause(&[*a, !*b]);
            }
        } else {
            self.vars.insert(key, bits);
        }
    }

    pub fn is_encoded(&self, name: &Arc<str>, version: u32) -> bool {
        self.vars.contains_key(&(name.clone(), version))
    }

    /// Solves the stored clauses under `assumptions`.
    pub fn solve(&mut self, assumptions: &[Lit]) -> Result<SolveOutcome, SolverError> {
        self.solve_calls += 1;
        let deadline = self.timeout.map(|t| Instant::now() + t);
        self.backend.solve(assumptions, deadline)
    }

    pub fn model_lit(&self, l: Lit) -> Option<bool> {
        self.backend.model_value(l)
    }

    fn model_bits(&self, bits: &[Lit]) -> Option<u64> {
        let mut v = 0u64;
        for (i, l) in bits.iter().enumerate() {
            if self.backend.model_value(*l)? {
                v |= 1 << i;
            }
        }
        Some(v)
    }

    /// Model value of `name@version`, `None` when it was never encoded.
    pub fn var_value(&self, name: &Arc<str>, version: u32) -> Option<u64> {
        let bits = self.vars.get(&(name.clone(), version))?;
        self.model_bits(bits)
    }

    /// Model value of an already-encoded expression.
    pub fn expr_value(&self, e: &BvExpr) -> Option<u64> {
        let bits = self.cache.get(e)?;
        self.model_bits(bits)
    }

    // ---- gates --------------------------------------------------------

    fn and2(&mut self, a: Lit, b: Lit) -> Lit {
        let (t, f) = (self.t, !self.t);
        if a == f || b == f || a == !b {
            return f;
        }
        if a == t || a == b {
            return b;
        }
        if b == t {
            return a;
        }
        let key = (0, a.min(b), a.max(b));
        if let Some(x) = self.gates.get(&key) {
            return *x;
        }
        let x = self.fresh();
        self.add_clause(&[!x, a]);
        self.add_clause(&[!x, b]);
        self.add_clause(&[x, !a, !b]);
        self.gates.insert(key, x);
        x
    }

    fn or2(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and2(!a, !b)
    }

    fn xor2(&mut self, a: Lit, b: Lit) -> Lit {
        let (t, f) = (self.t, !self.t);
        if a == f {
            return b;
        }
        if b == f {
            return a;
        }
        if a == t {
            return !b;
        }
        if b == t {
            return !a;
        }
        if a == b {
            return f;
        }
        if a == !b {
            return t;
        }
        // Normalise signs so x ^ y and !x ^ !y share one gate.
        let neg = a.is_neg() ^ b.is_neg();
        let (pa, pb) = (Lit::new(a.var(), false), Lit::new(b.var(), false));
        let key = (1, pa.min(pb), pa.max(pb));
        let x = if let Some(x) = self.gates.get(&key) {
            *x
        } else {
            let x = self.fresh();
            self.add_clause(&[!x, pa, pb]);
            self.add_clause(&[!x, !pa, !pb]);
            self.add_clause(&[x, !pa, pb]);
            self.add_clause(&[x, pa, !pb]);
            self.gates.insert(key, x);
            x
        };
        if neg {
            !x
        } else {
            x
        }
    }

    fn mux(&mut self, s: Lit, a: Lit, b: Lit) -> Lit {
        if s == self.t {
            return a;
        }
        if s == !self.t {
            return b;
        }
        if a == b {
            return a;
        }
        if a == self.t {
            return self.or2(s, b);
        }
        if a == !self.t {
            return self.and2(!s, b);
        }
        if b == self.t {
            return self.or2(!s, a);
        }
        if b == !self.t {
            return self.and2(s, a);
        }
        let x = self.fresh();
        self.add_clause(&[!s, !a, x]);
        self.add_clause(&[!s, a, !x]);
        self.add_clause(&[s, !b, x]);
        self.add_clause(&[s, b, !x]);
        self.add_clause(&[!a, !b, x]);
        self.add_clause(&[a, b, !x]);
        x
    }

    fn and_all(&mut self, ls: &[Lit]) -> Lit {
        let mut acc = self.t;
        for l in ls {
            acc = self.and2(acc, *l);
        }
        acc
    }

    fn or_all(&mut self, ls: &[Lit]) -> Lit {
        let mut acc = !self.t;
        for l in ls {
            acc = self.or2(acc, *l);
        }
        acc
    }

    /// Ripple-carry adder; returns (sum, carry-out).
    fn adder(&mut self, a: &[Lit], b: &[Lit], mut carry: Lit) -> (Vec<Lit>, Lit) {
        let mut out = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let axb = self.xor2(a[i], b[i]);
            out.push(self.xor2(axb, carry));
            let g = self.and2(a[i], b[i]);
            let p = self.and2(axb, carry);
            carry = self.or2(g, p);
        }
        (out, carry)
    }

    /// Unsigned a < b via the borrow of a - b.
    fn ult_bits(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let nb: Vec<Lit> = b.iter().map(|l| !*l).collect();
        let (_, carry) = self.adder(a, &nb, self.t);
        !carry
    }

    fn shift(&mut self, a: &[Lit], amt: &[Lit], left: bool) -> Vec<Lit> {
        let w = a.len();
        let f = !self.t;
        let mut cur = a.to_vec();
        let mut overflow = Vec::new();
        for (k, s) in amt.iter().enumerate() {
            let dist = if k < 63 { 1u64 << k } else { u64::MAX };
            if dist >= w as u64 {
                overflow.push(*s);
                continue;
            }
            let d = dist as usize;
            let mut next = Vec::with_capacity(w);
            for i in 0..w {
                let moved = if left {
                    if i >= d {
                        cur[i - d]
                    } else {
                        f
                    }
                } else if i + d < w {
                    cur[i + d]
                } else {
                    f
                };
                next.push(self.mux(*s, moved, cur[i]));
            }
            cur = next;
        }
        let ovf = self.or_all(&overflow);
        cur.into_iter().map(|l| self.and2(!ovf, l)).collect()
    }

    // ---- expressions --------------------------------------------------

    /// Literal for a width-1 expression.
    pub fn lit(&mut self, e: &BvExpr) -> Lit {
        assert_eq!(e.width(), 1, "expected a 1-bit expression, got {e}");
        self.bits(e)[0]
    }

    pub fn bits(&mut self, e: &BvExpr) -> Vec<Lit> {
        if let Some(b) = self.cache.get(e) {
            return b.clone();
        }
        let w = e.width() as usize;
        let out: Vec<Lit> = match e.kind() {
            ExprKind::Var { name, version } => {
                let key = (name.clone(), *version);
                if let Some(b) = self.vars.get(&key) {
                    b.clone()
                } else {
                    let b: Vec<Lit> = (0..w).map(|_| self.fresh()).collect();
                    self.vars.insert(key, b.clone());
                    b
                }
            }
            ExprKind::Const(v) => (0..w)
                .map(|i| if (v >> i) & 1 == 1 { self.t } else { !self.t })
                .collect(),
            ExprKind::Unary(op, a) => {
                let a = self.bits(a);
                match op {
                    UnOp::Not => a.iter().map(|l| !*l).collect(),
                    UnOp::Neg => {
                        let na: Vec<Lit> = a.iter().map(|l| !*l).collect();
                        let zero = vec![!self.t; a.len()];
                        self.adder(&na, &zero, self.t).0
                    }
                    UnOp::RedOr => vec![self.or_all(&a)],
                    UnOp::RedAnd => vec![self.and_all(&a)],
                    UnOp::RedXor => {
                        let mut acc = !self.t;
                        for l in a {
                            acc = self.xor2(acc, l);
                        }
                        vec![acc]
                    }
                }
            }
            ExprKind::Binary(op, a, b) => {
                let x = self.bits(a);
                let y = self.bits(b);
                match op {
                    BinOp::And => (0..w).map(|i| self.and2(x[i], y[i])).collect(),
                    BinOp::Or => (0..w).map(|i| self.or2(x[i], y[i])).collect(),
                    BinOp::Xor => (0..w).map(|i| self.xor2(x[i], y[i])).collect(),
                    BinOp::Add => self.adder(&x, &y, !self.t).0,
                    BinOp::Sub => {
                        let ny: Vec<Lit> = y.iter().map(|l| !*l).collect();
                        self.adder(&x, &ny, self.t).0
                    }
                    BinOp::Mul => {
                        let f = !self.t;
                        let mut acc = vec![f; w];
                        for (i, yi) in y.iter().enumerate() {
                            let row: Vec<Lit> = (0..w)
                                .map(|j| if j >= i { self.and2(x[j - i], *yi) } else { f })
                                .collect();
                            acc = self.adder(&acc, &row, f).0;
                        }
                        acc
                    }
                    BinOp::Shl => self.shift(&x, &y, true),
                    BinOp::Lshr => self.shift(&x, &y, false),
                    BinOp::Eq => {
                        let eqs: Vec<Lit> = (0..x.len()).map(|i| !self.xor2(x[i], y[i])).collect();
                        vec![self.and_all(&eqs)]
                    }
                    BinOp::Ult => vec![self.ult_bits(&x, &y)],
                    BinOp::Ule => vec![!self.ult_bits(&y, &x)],
                    BinOp::Slt => {
                        let n = x.len();
                        let mut x2 = x.clone();
                        let mut y2 = y.clone();
                        x2[n - 1] = !x2[n - 1];
                        y2[n - 1] = !y2[n - 1];
                        vec![self.ult_bits(&x2, &y2)]
                    }
                    BinOp::Concat => {
                        let mut v = y;
                        v.extend(x);
                        v
                    }
                }
            }
            ExprKind::Ite(c, a, b) => {
                let s = self.lit(c);
                let x = self.bits(a);
                let y = self.bits(b);
                (0..w).map(|i| self.mux(s, x[i], y[i])).collect()
            }
            ExprKind::Extract { hi, lo, arg } => self.bits(arg)[*lo as usize..=*hi as usize].to_vec(),
            ExprKind::Zext(a) => {
                let mut v = self.bits(a);
                v.resize(w, !self.t);
                v
            }
            ExprKind::Sext(a) => {
                let mut v = self.bits(a);
                let msb = *v.last().expect("non-empty");
                v.resize(w, msb);
                v
            }
        };
        debug_assert_eq!(out.len(), w);
        self.cache.insert(e.clone(), out.clone());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bv::{eval, ConcreteEnv};

    #[test]
    fn contradiction_is_unsat() {
        let mut inst = CnfInstance::new();
        let a = BvExpr::var("a", 0, 1);
        inst.assert(&a.and(&a.not()));
        assert_eq!(inst.solve(&[]).unwrap(), SolveOutcome::Unsat);
    }

    #[test]
    fn sum_is_five_at_width_three() {
        let mut inst = CnfInstance::new();
        let x = BvExpr::var("x", 0, 3);
        let y = BvExpr::var("y", 0, 3);
        inst.assert(&x.add(&y).eq(&BvExpr::konst(5, 3)));
        assert_eq!(inst.solve(&[]).unwrap(), SolveOutcome::Sat);
        let xv = inst.var_value(&"x".into(), 0).unwrap();
        let yv = inst.var_value(&"y".into(), 0).unwrap();
        assert_eq!((xv + yv) % 8, 5);
    }

    #[test]
    fn masked_shift_model() {
        let mut inst = CnfInstance::new();
        let c = BvExpr::var("c", 0, 8);
        let d = BvExpr::var("d", 0, 8);
        let e = c.and(&BvExpr::konst(3, 8)).shl(&d).eq(&BvExpr::konst(12, 8));
        inst.assert(&e);
        inst.assert(&d.eq(&BvExpr::konst(2, 8)));
        assert_eq!(inst.solve(&[]).unwrap(), SolveOutcome::Sat);
        let cv = inst.var_value(&"c".into(), 0).unwrap();
        assert_eq!(cv & 3, 3);
        let mut env = ConcreteEnv::new();
        env.bind("c", 0, 8, cv);
        env.bind("d", 0, 8, 2);
        assert_eq!(eval(&e, &env).unwrap(), 1);
    }

    #[test]
    fn definitions_share_literals() {
        let mut inst = CnfInstance::new();
        let n: Arc<str> = "m".into();
        inst.define(&n, 2, &BvExpr::konst(0, 4));
        let m2 = BvExpr::var(n.clone(), 2, 4);
        inst.assert(&m2.ne(&BvExpr::konst(0, 4)));
        assert_eq!(inst.solve(&[]).unwrap(), SolveOutcome::Unsat);
    }

    #[test]
    fn incremental_matches_batch() {
        let x = BvExpr::var("x", 0, 4);
        let a = x.ult(&BvExpr::konst(9, 4));
        let b = x.add(&BvExpr::konst(3, 4)).eq(&BvExpr::konst(1, 4));
        let mut inc = CnfInstance::new();
        inc.assert(&a);
        assert_eq!(inc.solve(&[]).unwrap(), SolveOutcome::Sat);
        inc.assert(&b);
        let r1 = inc.solve(&[]).unwrap();
        let mut batch = CnfInstance::new();
        batch.assert(&a.and(&b));
        assert_eq!(r1, batch.solve(&[]).unwrap());
        assert_eq!(r1, SolveOutcome::Unsat); // x = 14 is not < 9
    }
}
