// SPDX-License-Identifier: Apache-2.0

//! Mask-and-shift lowering of Verilog vector operators into word-level
//! expressions. Each rule produces the same shape a C rendering would use:
//! selects become `(x & m) >> lo`, partial writes become read-modify-write
//! updates of the whole vector, and concatenations become shifted ORs.

use super::expr::{mask, BinOp, BvExpr, ExprKind, MAX_WIDTH};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LowerError {
    #[error("select [{hi}:{lo}] out of range for a {width}-bit vector")]
    OutOfRange { hi: u32, lo: u32, width: u32 },
    #[error("indexed part-select offset is not a constant after unrolling: {0}")]
    NonConstantOffset(String),
    #[error("concatenation is {0} bits wide; the limit is {MAX_WIDTH}")]
    TooWide(u32),
    #[error("empty concatenation")]
    Empty,
}

fn check_range(hi: u32, lo: u32, width: u32) -> Result<(), LowerError> {
    if lo > hi || hi >= width {
        Err(LowerError::OutOfRange { hi, lo, width })
    } else {
        Ok(())
    }
}

/// `base[hi:lo]` as `(base & field) >> lo`, kept at the width of `base`.
pub fn lower_part_select(base: &BvExpr, hi: u32, lo: u32) -> Result<BvExpr, LowerError> {
    let w = base.width();
    check_range(hi, lo, w)?;
    let field = mask(hi - lo + 1) << lo;
    if field == mask(w) {
        return Ok(base.clone());
    }
    let masked = base.and(&BvExpr::konst(field, w));
    Ok(if lo == 0 {
        masked
    } else {
        masked.lshr(&BvExpr::konst(lo as u64, w))
    })
}

/// Full-width value of `lhs_base` after `lhs_base[hi:lo] = rhs`:
/// `(old & keep) | ((rhs & field) << lo)`. The right-hand side is truncated
/// to the field width.
pub fn lower_bit_assign(
    lhs_base: &BvExpr,
    hi: u32,
    lo: u32,
    rhs: &BvExpr,
) -> Result<BvExpr, LowerError> {
    let w = lhs_base.width();
    check_range(hi, lo, w)?;
    let field_w = hi - lo + 1;
    let keep = mask(w) & !(mask(field_w) << lo);
    let rhs_w = if rhs.width() > w {
        rhs.extract(w - 1, 0)
    } else {
        rhs.zext(w)
    };
    if keep == 0 {
        return Ok(rhs_w);
    }
    let field = if known_fits(&rhs_w, field_w) {
        rhs_w
    } else {
        rhs_w.and(&BvExpr::konst(mask(field_w), w))
    };
    let placed = if lo == 0 {
        field
    } else {
        field.shl(&BvExpr::konst(lo as u64, w))
    };
    Ok(lhs_base.and(&BvExpr::konst(keep, w)).or(&placed))
}

/// Cheap syntactic check that `e` never has bits set at or above `bits`.
fn known_fits(e: &BvExpr, bits: u32) -> bool {
    if e.width() <= bits {
        return true;
    }
    match e.kind() {
        ExprKind::Const(v) => *v <= mask(bits),
        ExprKind::Zext(a) => known_fits(a, bits),
        ExprKind::Binary(BinOp::And, a, b) => known_fits(a, bits) || known_fits(b, bits),
        ExprKind::Binary(BinOp::Lshr, a, b) => match b.as_const() {
            Some(k) if k < 64 => known_fits(a, bits.saturating_add(k as u32)),
            _ => false,
        },
        _ => false,
    }
}

/// `{a[hi:lo], b[hi:lo], ...}` with the first operand in the most significant
/// position.
pub fn lower_concat(operands: &[(BvExpr, u32, u32)]) -> Result<BvExpr, LowerError> {
    if operands.is_empty() {
        return Err(LowerError::Empty);
    }
    let mut total = 0u32;
    for (e, hi, lo) in operands {
        check_range(*hi, *lo, e.width())?;
        total += hi - lo + 1;
    }
    if total > MAX_WIDTH {
        return Err(LowerError::TooWide(total));
    }
    let mut acc: Option<BvExpr> = None;
    let mut remaining = total;
    for (e, hi, lo) in operands {
        let fw = hi - lo + 1;
        remaining -= fw;
        let mut t = if *lo == 0 {
            e.clone()
        } else {
            e.lshr(&BvExpr::konst(*lo as u64, e.width()))
        };
        t = t.resize(total);
        // After the shift and resize the value already fits when the field
        // runs to the top of the operand and nothing was truncated.
        let fits = *hi + 1 == e.width() && e.width() - lo <= total;
        if !fits {
            t = t.and(&BvExpr::konst(mask(fw), total));
        }
        if remaining > 0 {
            t = t.shl(&BvExpr::konst(remaining as u64, total));
        }
        acc = Some(match acc {
            None => t,
            Some(a) => a.or(&t),
        });
    }
    Ok(acc.expect("non-empty"))
}

/// `base[offset +: width]`; the offset must already be a constant.
pub fn lower_indexed_part_select(
    base: &BvExpr,
    offset: &BvExpr,
    width: u32,
) -> Result<BvExpr, LowerError> {
    let off = offset
        .as_const()
        .ok_or_else(|| LowerError::NonConstantOffset(offset.to_string()))?;
    if width == 0 || off + width as u64 > base.width() as u64 {
        return Err(LowerError::OutOfRange {
            hi: (off + width as u64).saturating_sub(1) as u32,
            lo: off as u32,
            width: base.width(),
        });
    }
    let lo = off as u32;
    Ok(base.extract(lo + width - 1, lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bv::eval::{eval, ConcreteEnv};

    fn v8(name: &str) -> BvExpr {
        BvExpr::var(name, 0, 8)
    }

    #[test]
    fn bit_select_figure_pattern() {
        // out1[7:5] = in1[4:2]
        let rhs = lower_part_select(&v8("in1"), 4, 2).unwrap();
        assert_eq!(rhs.to_string(), "((in1 & 0x1c) >> 0x2)");
        let e = lower_bit_assign(&v8("out1"), 7, 5, &rhs).unwrap();
        assert_eq!(
            e.to_string(),
            "((out1 & 0x1f) | (((in1 & 0x1c) >> 0x2) << 0x5))"
        );
        let mut env = ConcreteEnv::new();
        env.bind("out1", 0, 8, 0x00);
        env.bind("in1", 0, 8, 0x14);
        assert_eq!(eval(&e, &env).unwrap(), 0xA0);
    }

    #[test]
    fn single_bit_select_figure_pattern() {
        // out2[6] = in2[4] -> (out2 & 0xbf) | (((in2 & 0x10) >> 4) << 6)
        let rhs = lower_part_select(&v8("in2"), 4, 4).unwrap();
        let e = lower_bit_assign(&v8("out2"), 6, 6, &rhs).unwrap();
        assert_eq!(
            e.to_string(),
            "((out2 & 0xbf) | (((in2 & 0x10) >> 0x4) << 0x6))"
        );
    }

    #[test]
    fn whole_vector_assign_is_rhs() {
        let rhs = v8("r");
        assert_eq!(lower_bit_assign(&v8("out"), 7, 0, &rhs).unwrap(), rhs);
    }

    #[test]
    fn concat_figure_pattern() {
        let e = lower_concat(&[(v8("in2"), 5, 2), (v8("in1"), 6, 1)]).unwrap();
        assert_eq!(e.width(), 10);
        let mut env = ConcreteEnv::new();
        env.bind("in2", 0, 8, 0xFF);
        env.bind("in1", 0, 8, 0x00);
        assert_eq!(eval(&e, &env).unwrap(), 0x3C0);
    }

    #[test]
    fn concat_single_operand_is_identity() {
        let x = v8("x");
        assert_eq!(lower_concat(&[(x.clone(), 7, 0)]).unwrap(), x);
    }

    #[test]
    fn indexed_part_select() {
        let base = BvExpr::var("in", 0, 32);
        let e = lower_indexed_part_select(&base, &BvExpr::konst(16, 32), 8).unwrap();
        assert_eq!(e, base.extract(23, 16));
        let whole = lower_indexed_part_select(&base, &BvExpr::konst(0, 32), 32).unwrap();
        assert_eq!(whole, base);
        let dynamic = lower_indexed_part_select(&base, &BvExpr::var("i", 0, 32), 8);
        assert!(matches!(dynamic, Err(LowerError::NonConstantOffset(_))));
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(lower_bit_assign(&v8("o"), 8, 5, &v8("r")).is_err());
        assert!(lower_part_select(&v8("o"), 2, 3).is_err());
        assert!(lower_concat(&[(v8("a"), 9, 0)]).is_err());
    }
}
