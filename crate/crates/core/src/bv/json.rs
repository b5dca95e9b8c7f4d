// SPDX-License-Identifier: Apache-2.0

//! JSON form of [`BvExpr`]: `{"op": "add", "width": 8, "args": [...]}`.
//! Variables carry `name` (and `version` when non-zero), constants `value`,
//! extracts `hi`/`lo`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::expr::{mask, BinOp, BvExpr, ExprKind, UnOp, MAX_WIDTH};

#[derive(Serialize, Deserialize)]
struct Repr {
    op: String,
    width: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "is_zero")]
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    args: Vec<BvExpr>,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

fn unop_name(op: UnOp) -> &'static str {
    match op {
        UnOp::Not => "not",
        UnOp::Neg => "neg",
        UnOp::RedOr => "redor",
        UnOp::RedAnd => "redand",
        UnOp::RedXor => "redxor",
    }
}

fn binop_name(op: BinOp) -> &'static str {
    match op {
        BinOp::And => "and",
        BinOp::Or => "or",
        BinOp::Xor => "xor",
        BinOp::Add => "add",
        BinOp::Sub => "sub",
        BinOp::Mul => "mul",
        BinOp::Shl => "shl",
        BinOp::Lshr => "lshr",
        BinOp::Eq => "eq",
        BinOp::Ult => "ult",
        BinOp::Ule => "ule",
        BinOp::Slt => "slt",
        BinOp::Concat => "concat",
    }
}

impl Serialize for BvExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut r = Repr {
            op: String::new(),
            width: self.width(),
            name: None,
            version: 0,
            value: None,
            hi: None,
            lo: None,
            args: Vec::new(),
        };
        match self.kind() {
            ExprKind::Var { name, version } => {
                r.op = "var".into();
                r.name = Some(name.to_string());
                r.version = *version;
            }
            ExprKind::Const(v) => {
                r.op = "const".into();
                r.value = Some(*v);
            }
            ExprKind::Unary(op, a) => {
                r.op = unop_name(*op).into();
                r.args = vec![a.clone()];
            }
            ExprKind::Binary(op, a, b) => {
                r.op = binop_name(*op).into();
                r.args = vec![a.clone(), b.clone()];
            }
            ExprKind::Ite(c, a, b) => {
                r.op = "ite".into();
                r.args = vec![c.clone(), a.clone(), b.clone()];
            }
            ExprKind::Extract { hi, lo, arg } => {
                r.op = "extract".into();
                r.hi = Some(*hi);
                r.lo = Some(*lo);
                r.args = vec![arg.clone()];
            }
            ExprKind::Zext(a) => {
                r.op = "zext".into();
                r.args = vec![a.clone()];
            }
            ExprKind::Sext(a) => {
                r.op = "sext".into();
                r.args = vec![a.clone()];
            }
        }
        r.serialize(s)
    }
}

fn build(r: Repr) -> Result<BvExpr, String> {
    let w = r.width;
    if !(1..=MAX_WIDTH).contains(&w) {
        return Err(format!("width {w} out of range"));
    }
    let arity = |n: usize| -> Result<(), String> {
        if r.args.len() == n {
            Ok(())
        } else {
            Err(format!("`{}` expects {n} operands, got {}", r.op, r.args.len()))
        }
    };
    let same = |a: &BvExpr, b: &BvExpr| -> Result<(), String> {
        if a.width() == b.width() {
            Ok(())
        } else {
            Err(format!("operand widths differ in `{}`", r.op))
        }
    };
    let e = match r.op.as_str() {
        "var" => {
            arity(0)?;
            let name = r.name.clone().ok_or("var without name")?;
            BvExpr::var(name, r.version, w)
        }
        "const" => {
            arity(0)?;
            let v = r.value.ok_or("const without value")?;
            if v & !mask(w) != 0 {
                return Err(format!("constant {v} does not fit {w} bits"));
            }
            BvExpr::konst(v, w)
        }
        "not" | "neg" | "redor" | "redand" | "redxor" => {
            arity(1)?;
            let a = &r.args[0];
            match r.op.as_str() {
                "not" => a.not(),
                "neg" => a.neg(),
                "redor" => a.redor(),
                "redand" => a.redand(),
                _ => a.redxor(),
            }
        }
        "shl" | "lshr" => {
            arity(2)?;
            let (a, b) = (&r.args[0], &r.args[1]);
            if r.op == "shl" {
                a.shl(b)
            } else {
                a.lshr(b)
            }
        }
        "concat" => {
            arity(2)?;
            let (a, b) = (&r.args[0], &r.args[1]);
            if a.width() + b.width() > MAX_WIDTH {
                return Err("concat too wide".into());
            }
            a.concat(b)
        }
        "and" | "or" | "xor" | "add" | "sub" | "mul" | "eq" | "ult" | "ule" | "slt" => {
            arity(2)?;
            let (a, b) = (&r.args[0], &r.args[1]);
            same(a, b)?;
            match r.op.as_str() {
                "and" => a.and(b),
                "or" => a.or(b),
                "xor" => a.xor(b),
                "add" => a.add(b),
                "sub" => a.sub(b),
                "mul" => a.mul(b),
                "eq" => a.eq(b),
                "ult" => a.ult(b),
                "ule" => a.ule(b),
                _ => a.slt(b),
            }
        }
        "ite" => {
            arity(3)?;
            let (c, a, b) = (&r.args[0], &r.args[1], &r.args[2]);
            if c.width() != 1 {
                return Err("ite condition must be 1 bit".into());
            }
            same(a, b)?;
            BvExpr::ite(c, a, b)
        }
        "extract" => {
            arity(1)?;
            let (hi, lo) = (r.hi.ok_or("extract without hi")?, r.lo.ok_or("extract without lo")?);
            let a = &r.args[0];
            if lo > hi || hi >= a.width() {
                return Err(format!("extract [{hi}:{lo}] out of range"));
            }
            a.extract(hi, lo)
        }
        "zext" | "sext" => {
            arity(1)?;
            let a = &r.args[0];
            if w < a.width() {
                return Err(format!("`{}` cannot shrink", r.op));
            }
            if r.op == "zext" {
                a.zext(w)
            } else {
                a.sext(w)
            }
        }
        other => return Err(format!("unknown operator `{other}`")),
    };
    if e.width() != w {
        return Err(format!(
            "declared width {w} does not match inferred width {} for `{}`",
            e.width(),
            r.op
        ));
    }
    Ok(e)
}

impl<'de> Deserialize<'de> for BvExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = Repr::deserialize(d)?;
        build(r).map_err(D::Error::custom)
    }
}
