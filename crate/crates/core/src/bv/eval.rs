// SPDX-License-Identifier: Apache-2.0

//! Concrete two-valued semantics of [`BvExpr`]. This is the reference the
//! replay interpreter and every oracle in the test-suite are measured against.

use std::collections::HashMap;
use std::sync::Arc;

use super::expr::{mask, BinOp, BvExpr, ExprKind, UnOp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable {name} (version {version})")]
    Unbound { name: String, version: u32 },
}

/// Source of variable values during evaluation.
pub trait Env {
    fn lookup(&self, name: &Arc<str>, version: u32) -> Option<u64>;
}

/// Map from `(name, version)` to an unsigned value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConcreteEnv {
    values: HashMap<(Arc<str>, u32), u64>,
}

impl ConcreteEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `(name, version)`; the value is truncated to `width` bits.
    pub fn bind(&mut self, name: impl Into<Arc<str>>, version: u32, width: u32, value: u64) {
        self.values.insert((name.into(), version), value & mask(width));
    }

    pub fn get(&self, name: &str, version: u32) -> Option<u64> {
        self.values.get(&(Arc::from(name), version)).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Env for ConcreteEnv {
    fn lookup(&self, name: &Arc<str>, version: u32) -> Option<u64> {
        self.values.get(&(name.clone(), version)).copied()
    }
}

/// Version-free environment keyed by name only; used by the interpreter,
/// where every variable lives at version 0.
impl Env for HashMap<Arc<str>, u64> {
    fn lookup(&self, name: &Arc<str>, _version: u32) -> Option<u64> {
        self.get(name).copied()
    }
}

pub(crate) fn sign_extend(v: u64, from: u32, to: u32) -> u64 {
    if from >= 64 {
        return v;
    }
    let sign = (v >> (from - 1)) & 1;
    if sign == 1 {
        (v | !mask(from)) & mask(to)
    } else {
        v
    }
}

pub(crate) fn apply_unary(op: UnOp, v: u64, width: u32) -> u64 {
    match op {
        UnOp::Not => !v & mask(width),
        UnOp::Neg => v.wrapping_neg() & mask(width),
        UnOp::RedOr => (v != 0) as u64,
        UnOp::RedAnd => (v == mask(width)) as u64,
        UnOp::RedXor => (v.count_ones() & 1) as u64,
    }
}

pub(crate) fn apply_binary(op: BinOp, a: u64, wa: u32, b: u64, wb: u32) -> u64 {
    let m = mask(wa);
    match op {
        BinOp::And => a & b,
        BinOp::Or => a | b,
        BinOp::Xor => a ^ b,
        BinOp::Add => a.wrapping_add(b) & m,
        BinOp::Sub => a.wrapping_sub(b) & m,
        BinOp::Mul => a.wrapping_mul(b) & m,
        // Shift amounts at or beyond the operand width yield zero.
        BinOp::Shl => {
            if b >= wa as u64 {
                0
            } else {
                (a << b) & m
            }
        }
        BinOp::Lshr => {
            if b >= wa as u64 {
                0
            } else {
                a >> b
            }
        }
        BinOp::Eq => (a == b) as u64,
        BinOp::Ult => (a < b) as u64,
        BinOp::Ule => (a <= b) as u64,
        BinOp::Slt => {
            let sa = sign_extend(a, wa, 64) as i64;
            let sb = sign_extend(b, wb, 64) as i64;
            (sa < sb) as u64
        }
        BinOp::Concat => (a << wb) | b,
    }
}

/// Evaluates `e` under `env`. Results always fit `e.width()`.
pub fn eval(e: &BvExpr, env: &impl Env) -> Result<u64, EvalError> {
    eval_rec(e, env)
}

fn eval_rec(e: &BvExpr, env: &impl Env) -> Result<u64, EvalError> {
    let v = match e.kind() {
        ExprKind::Var { name, version } => {
            env.lookup(name, *version)
                .ok_or_else(|| EvalError::Unbound {
                    name: name.to_string(),
                    version: *version,
                })?
                & mask(e.width())
        }
        ExprKind::Const(v) => *v,
        ExprKind::Unary(op, a) => apply_unary(*op, eval_rec(a, env)?, a.width()),
        ExprKind::Binary(op, a, b) => {
            let x = eval_rec(a, env)?;
            let y = eval_rec(b, env)?;
            apply_binary(*op, x, a.width(), y, b.width())
        }
        ExprKind::Ite(c, a, b) => {
            if eval_rec(c, env)? != 0 {
                eval_rec(a, env)?
            } else {
                eval_rec(b, env)?
            }
        }
        ExprKind::Extract { hi, lo, arg } => (eval_rec(arg, env)? >> lo) & mask(hi - lo + 1),
        ExprKind::Zext(a) => eval_rec(a, env)?,
        ExprKind::Sext(a) => sign_extend(eval_rec(a, env)?, a.width(), e.width()),
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, u32, u64)]) -> ConcreteEnv {
        let mut env = ConcreteEnv::new();
        for (n, w, v) in pairs {
            env.bind(*n, 0, *w, *v);
        }
        env
    }

    #[test]
    fn ite_selects_zero_when_e_old_set() {
        let e_old = BvExpr::var("e_old", 0, 1);
        let d_old = BvExpr::var("d_old", 0, 1);
        let c = BvExpr::ite(&e_old, &BvExpr::konst(0, 1), &d_old);
        let v = eval(&c, &env(&[("e_old", 1, 1), ("d_old", 1, 1)])).unwrap();
        assert_eq!(v, 0);
    }

    #[test]
    fn and_with_zero_annihilates() {
        for w in [1, 3, 8, 32, 64] {
            let x = BvExpr::var("x", 0, w);
            let e = x.and(&BvExpr::konst(0, w));
            assert_eq!(eval(&e, &env(&[("x", w, u64::MAX)])).unwrap(), 0);
        }
    }

    #[test]
    fn masked_shift_example() {
        // (c & 3) << d with c = 7, d = 2 at 32 bits.
        let c = BvExpr::var("c", 0, 32);
        let d = BvExpr::var("d", 0, 32);
        let e = c.and(&BvExpr::konst(3, 32)).shl(&d);
        assert_eq!(eval(&e, &env(&[("c", 32, 7), ("d", 32, 2)])).unwrap(), 12);
        // brute-force cross-check over small c, d
        for cv in 0..16u64 {
            for dv in 0..40u64 {
                let got = eval(&e, &env(&[("c", 32, cv), ("d", 32, dv)])).unwrap();
                let want = if dv >= 32 { 0 } else { ((cv & 3) << dv) & 0xffff_ffff };
                assert_eq!(got, want, "c={cv} d={dv}");
            }
        }
    }

    #[test]
    fn unbound_variable_is_reported() {
        let e = BvExpr::var("ghost", 3, 4);
        let err = eval(&e, &ConcreteEnv::new()).unwrap_err();
        assert_eq!(
            err,
            EvalError::Unbound {
                name: "ghost".into(),
                version: 3
            }
        );
    }

    #[test]
    fn shifts_beyond_width_are_zero() {
        let x = BvExpr::var("x", 0, 8);
        let e = env(&[("x", 8, 0xff)]);
        assert_eq!(eval(&x.shl(&BvExpr::konst(8, 8)), &e).unwrap(), 0);
        assert_eq!(eval(&x.lshr(&BvExpr::konst(200, 8)), &e).unwrap(), 0);
        assert_eq!(eval(&x.lshr(&BvExpr::konst(7, 8)), &e).unwrap(), 1);
    }

    #[test]
    fn signed_ops() {
        let a = BvExpr::konst(0b1110, 4); // -2
        let b = BvExpr::konst(0b0001, 4); // 1
        assert!(a.slt(&b).is_true());
        assert_eq!(a.sext(8).as_const(), Some(0xfe));
    }
}
