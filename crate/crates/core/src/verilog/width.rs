// SPDX-License-Identifier: Apache-2.0

//! Self-determined expression widths and constant folding of parameter
//! expressions.

use super::ast::*;
use super::VerilogError;
use crate::bv::MAX_WIDTH;

/// Width of an unsized literal or parameter reference.
pub const INTEGER_WIDTH: u32 = 32;

/// Self-determined width of `e`. `signal` returns the width of a declared
/// signal, or `None` for names that are parameters/constants (which are
/// treated as 32-bit unsized values).
pub fn self_width(
    e: &ExprAst,
    signal: &dyn Fn(&str) -> Option<u32>,
    konst: &dyn Fn(&ExprAst) -> Result<u64, VerilogError>,
) -> Result<u32, VerilogError> {
    let w = |x: &ExprAst| self_width(x, signal, konst);
    let width = match e {
        ExprAst::Ident(n, _) => signal(n).unwrap_or(INTEGER_WIDTH),
        ExprAst::Const { width, .. } => width.unwrap_or(INTEGER_WIDTH),
        ExprAst::BitSelect { .. } => 1,
        ExprAst::PartSelect { msb, lsb, span, .. } => {
            let (m, l) = (konst(msb)?, konst(lsb)?);
            if m < l {
                return Err(VerilogError::elab(*span, format!("part-select [{m}:{l}] has msb < lsb")));
            }
            (m - l + 1) as u32
        }
        ExprAst::IndexedPartSelect { width, span, .. } => {
            let v = konst(width)?;
            if v == 0 {
                return Err(VerilogError::elab(*span, "indexed part-select of width 0"));
            }
            v.min(u64::from(MAX_WIDTH) + 1) as u32
        }
        ExprAst::Concat(ps) => {
            let mut s = 0;
            for p in ps {
                s += w(p)?;
            }
            s
        }
        ExprAst::Repeat { count, parts } => {
            let n = konst(count)?;
            let mut s = 0u64;
            for p in parts {
                s += u64::from(w(p)?);
            }
            (s * n).min(u64::from(u32::MAX)) as u32
        }
        ExprAst::Unary(UnaryOp::LogNot, _) | ExprAst::Reduction(..) => 1,
        ExprAst::Unary(_, a) => w(a)?,
        ExprAst::Binary(op, a, b) => match op {
            _ if op.is_comparison() => {
                w(a)?;
                w(b)?;
                1
            }
            BinaryOp::LogAnd | BinaryOp::LogOr => {
                w(a)?;
                w(b)?;
                1
            }
            BinaryOp::Shl | BinaryOp::Shr => {
                w(b)?;
                w(a)?
            }
            _ => w(a)?.max(w(b)?),
        },
        ExprAst::Ternary(c, a, b) => {
            w(c)?;
            w(a)?.max(w(b)?)
        }
    };
    if width == 0 || width > MAX_WIDTH {
        return Err(VerilogError::unsupported(
            e.span(),
            format!("expression of width {width} (supported: 1..={MAX_WIDTH})"),
        ));
    }
    Ok(width)
}

/// Folds a constant expression. `lookup` resolves parameter (or loop
/// variable) names. Arithmetic is done on 64-bit unsigned values.
pub fn const_eval(
    e: &ExprAst,
    lookup: &dyn Fn(&str) -> Option<u64>,
) -> Result<u64, VerilogError> {
    let ev = |x: &ExprAst| const_eval(x, lookup);
    Ok(match e {
        ExprAst::Ident(n, span) => lookup(n).ok_or_else(|| {
            VerilogError::elab(*span, format!("`{n}` is not a constant"))
        })?,
        ExprAst::Const { value, .. } => *value,
        ExprAst::BitSelect { base, index, span } => {
            let v = lookup(base)
                .ok_or_else(|| VerilogError::elab(*span, format!("`{base}` is not a constant")))?;
            let i = ev(index)?;
            if i >= 64 { 0 } else { (v >> i) & 1 }
        }
        ExprAst::PartSelect { base, msb, lsb, span } => {
            let v = lookup(base)
                .ok_or_else(|| VerilogError::elab(*span, format!("`{base}` is not a constant")))?;
            let (m, l) = (ev(msb)?, ev(lsb)?);
            if m < l || m >= 64 {
                return Err(VerilogError::elab(*span, "bad constant part-select"));
            }
            (v >> l) & crate::bv::mask((m - l + 1) as u32)
        }
        ExprAst::Unary(op, a) => {
            let a = ev(a)?;
            match op {
                UnaryOp::Not => !a,
                UnaryOp::LogNot => u64::from(a == 0),
                UnaryOp::Neg => a.wrapping_neg(),
                UnaryOp::Plus => a,
            }
        }
        ExprAst::Binary(op, a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            match op {
                BinaryOp::Add => a.wrapping_add(b),
                BinaryOp::Sub => a.wrapping_sub(b),
                BinaryOp::Mul => a.wrapping_mul(b),
                BinaryOp::And => a & b,
                BinaryOp::Or => a | b,
                BinaryOp::Xor => a ^ b,
                BinaryOp::Xnor => !(a ^ b),
                BinaryOp::Shl => {
                    if b >= 64 { 0 } else { a << b }
                }
                BinaryOp::Shr => {
                    if b >= 64 { 0 } else { a >> b }
                }
                BinaryOp::Lt => u64::from(a < b),
                BinaryOp::Le => u64::from(a <= b),
                BinaryOp::Gt => u64::from(a > b),
                BinaryOp::Ge => u64::from(a >= b),
                BinaryOp::Eq => u64::from(a == b),
                BinaryOp::Ne => u64::from(a != b),
                BinaryOp::LogAnd => u64::from(a != 0 && b != 0),
                BinaryOp::LogOr => u64::from(a != 0 || b != 0),
            }
        }
        ExprAst::Ternary(c, a, b) => {
            if ev(c)? != 0 {
                ev(a)?
            } else {
                ev(b)?
            }
        }
        other => {
            return Err(VerilogError::unsupported(
                other.span(),
                "this operator in a constant expression",
            ))
        }
    })
}
