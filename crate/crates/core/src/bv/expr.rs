// SPDX-License-Identifier: Apache-2.0

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Widest bit-vector the IR supports.
pub const MAX_WIDTH: u32 = 64;

#[inline]
pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
    RedOr,
    RedAnd,
    RedXor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Add,
    Sub,
    Mul,
    Shl,
    Lshr,
    Eq,
    Ult,
    Ule,
    Slt,
    Concat,
}

impl BinOp {
    pub fn is_predicate(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ult | BinOp::Ule | BinOp::Slt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Var { name: Arc<str>, version: u32 },
    Const(u64),
    Unary(UnOp, BvExpr),
    Binary(BinOp, BvExpr, BvExpr),
    Ite(BvExpr, BvExpr, BvExpr),
    Extract { hi: u32, lo: u32, arg: BvExpr },
    Zext(BvExpr),
    Sext(BvExpr),
}

#[derive(Debug)]
struct Node {
    kind: ExprKind,
    width: u32,
    hash: u64,
}

/// Immutable, width-annotated bit-vector expression.
///
/// Nodes are reference counted and carry a precomputed structural hash, so
/// hashing is O(1) and equality short-circuits on pointer identity. This is
/// what the bit-blaster's per-instance cache relies on.
#[derive(Clone)]
pub struct BvExpr(Arc<Node>);

impl PartialEq for BvExpr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash
                && self.0.width == other.0.width
                && self.0.kind == other.0.kind)
    }
}

impl Eq for BvExpr {}

impl Hash for BvExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for BvExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl BvExpr {
    fn mk(kind: ExprKind, width: u32) -> BvExpr {
        assert!(
            (1..=MAX_WIDTH).contains(&width),
            "bit-vector width {width} out of range"
        );
        let mut h = DefaultHasher::new();
        kind.hash(&mut h);
        width.hash(&mut h);
        BvExpr(Arc::new(Node {
            kind,
            width,
            hash: h.finish(),
        }))
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    pub fn width(&self) -> u32 {
        self.0.width
    }

    pub fn ptr_eq(&self, other: &BvExpr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn as_const(&self) -> Option<u64> {
        match self.kind() {
            ExprKind::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<(&Arc<str>, u32)> {
        match self.kind() {
            ExprKind::Var { name, version } => Some((name, *version)),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        self.width() == 1 && self.as_const() == Some(1)
    }

    pub fn is_false(&self) -> bool {
        self.width() == 1 && self.as_const() == Some(0)
    }

    // ---- leaves -------------------------------------------------------

    pub fn var(name: impl Into<Arc<str>>, version: u32, width: u32) -> BvExpr {
        BvExpr::mk(
            ExprKind::Var {
                name: name.into(),
                version,
            },
            width,
        )
    }

    pub fn konst(value: u64, width: u32) -> BvExpr {
        assert!(
            value & !mask(width) == 0,
            "constant {value:#x} does not fit in {width} bits"
        );
        BvExpr::mk(ExprKind::Const(value), width)
    }

    /// Constant truncated to `width` bits.
    pub fn konst_trunc(value: u64, width: u32) -> BvExpr {
        BvExpr::konst(value & mask(width), width)
    }

    pub fn bool(b: bool) -> BvExpr {
        BvExpr::konst(b as u64, 1)
    }

    pub fn tt() -> BvExpr {
        BvExpr::bool(true)
    }

    pub fn ff() -> BvExpr {
        BvExpr::bool(false)
    }

    // ---- unary --------------------------------------------------------

    fn unary(op: UnOp, a: &BvExpr) -> BvExpr {
        let width = match op {
            UnOp::Not | UnOp::Neg => a.width(),
            UnOp::RedOr | UnOp::RedAnd | UnOp::RedXor => 1,
        };
        if let Some(v) = a.as_const() {
            return BvExpr::konst(super::eval::apply_unary(op, v, a.width()), width);
        }
        BvExpr::mk(ExprKind::Unary(op, a.clone()), width)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(&self) -> BvExpr {
        BvExpr::unary(UnOp::Not, self)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(&self) -> BvExpr {
        BvExpr::unary(UnOp::Neg, self)
    }

    pub fn redor(&self) -> BvExpr {
        BvExpr::unary(UnOp::RedOr, self)
    }

    pub fn redand(&self) -> BvExpr {
        BvExpr::unary(UnOp::RedAnd, self)
    }

    pub fn redxor(&self) -> BvExpr {
        BvExpr::unary(UnOp::RedXor, self)
    }

    // ---- binary -------------------------------------------------------

    fn binary(op: BinOp, a: &BvExpr, b: &BvExpr) -> BvExpr {
        let width = match op {
            BinOp::Shl | BinOp::Lshr => a.width(),
            BinOp::Concat => {
                let w = a.width() + b.width();
                assert!(w <= MAX_WIDTH, "concat width {w} exceeds {MAX_WIDTH}");
                w
            }
            _ => {
                assert_eq!(
                    a.width(),
                    b.width(),
                    "operand widths differ for {op:?}: {a} vs {b}"
                );
                if op.is_predicate() {
                    1
                } else {
                    a.width()
                }
            }
        };
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            let v = super::eval::apply_binary(op, x, a.width(), y, b.width());
            return BvExpr::konst(v, width);
        }
        BvExpr::mk(ExprKind::Binary(op, a.clone(), b.clone()), width)
    }

    pub fn and(&self, b: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::And, self, b)
    }

    pub fn or(&self, b: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Or, self, b)
    }

    pub fn xor(&self, b: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Xor, self, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(&self, b: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Add, self, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(&self, b: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Sub, self, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(&self, b: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Mul, self, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn shl(&self, amount: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Shl, self, amount)
    }

    pub fn lshr(&self, amount: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Lshr, self, amount)
    }

    pub fn eq(&self, b: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Eq, self, b)
    }

    pub fn ne(&self, b: &BvExpr) -> BvExpr {
        self.eq(b).not()
    }

    pub fn ult(&self, b: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Ult, self, b)
    }

    pub fn ule(&self, b: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Ule, self, b)
    }

    pub fn ugt(&self, b: &BvExpr) -> BvExpr {
        b.ult(self)
    }

    pub fn uge(&self, b: &BvExpr) -> BvExpr {
        b.ule(self)
    }

    pub fn slt(&self, b: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Slt, self, b)
    }

    pub fn concat(&self, low: &BvExpr) -> BvExpr {
        BvExpr::binary(BinOp::Concat, self, low)
    }

    // ---- other --------------------------------------------------------

    pub fn ite(cond: &BvExpr, then: &BvExpr, els: &BvExpr) -> BvExpr {
        assert_eq!(cond.width(), 1, "ite condition must be 1 bit wide");
        assert_eq!(then.width(), els.width(), "ite arm widths differ");
        match cond.as_const() {
            Some(1) => then.clone(),
            Some(_) => els.clone(),
            None => BvExpr::mk(
                ExprKind::Ite(cond.clone(), then.clone(), els.clone()),
                then.width(),
            ),
        }
    }

    pub fn extract(&self, hi: u32, lo: u32) -> BvExpr {
        assert!(
            lo <= hi && hi < self.width(),
            "extract [{hi}:{lo}] out of range for width {}",
            self.width()
        );
        if lo == 0 && hi + 1 == self.width() {
            return self.clone();
        }
        let width = hi - lo + 1;
        if let Some(v) = self.as_const() {
            return BvExpr::konst((v >> lo) & mask(width), width);
        }
        BvExpr::mk(
            ExprKind::Extract {
                hi,
                lo,
                arg: self.clone(),
            },
            width,
        )
    }

    pub fn zext(&self, width: u32) -> BvExpr {
        assert!(width >= self.width(), "zext cannot shrink");
        if width == self.width() {
            return self.clone();
        }
        if let Some(v) = self.as_const() {
            return BvExpr::konst(v, width);
        }
        BvExpr::mk(ExprKind::Zext(self.clone()), width)
    }

    pub fn sext(&self, width: u32) -> BvExpr {
        assert!(width >= self.width(), "sext cannot shrink");
        if width == self.width() {
            return self.clone();
        }
        if let Some(v) = self.as_const() {
            return BvExpr::konst(super::eval::sign_extend(v, self.width(), width), width);
        }
        BvExpr::mk(ExprKind::Sext(self.clone()), width)
    }

    /// Keeps the low `width` bits, pushing the truncation into operators whose
    /// low result bits depend only on the low operand bits. This keeps
    /// arithmetic on narrow registers narrow even when Verilog sizing rules
    /// widened it to 32 bits.
    pub fn truncate(&self, width: u32) -> BvExpr {
        assert!(width >= 1 && width <= self.width(), "truncate to {width}");
        if width == self.width() {
            return self.clone();
        }
        match self.kind() {
            ExprKind::Const(v) => BvExpr::konst(v & mask(width), width),
            ExprKind::Unary(UnOp::Not, a) => a.truncate(width).not(),
            ExprKind::Unary(UnOp::Neg, a) => a.truncate(width).neg(),
            ExprKind::Binary(
                op @ (BinOp::And | BinOp::Or | BinOp::Xor | BinOp::Add | BinOp::Sub | BinOp::Mul),
                a,
                b,
            ) => BvExpr::binary(*op, &a.truncate(width), &b.truncate(width)),
            ExprKind::Binary(BinOp::Shl, a, s) => a.truncate(width).shl(s),
            ExprKind::Binary(BinOp::Concat, hi, lo) => {
                if width <= lo.width() {
                    lo.truncate(width)
                } else {
                    hi.truncate(width - lo.width()).concat(lo)
                }
            }
            ExprKind::Ite(c, a, b) => BvExpr::ite(c, &a.truncate(width), &b.truncate(width)),
            ExprKind::Zext(a) | ExprKind::Sext(a) if a.width() >= width => a.truncate(width),
            ExprKind::Zext(a) => a.zext(width),
            ExprKind::Sext(a) => a.sext(width),
            ExprKind::Extract { lo, arg, .. } => arg.extract(lo + width - 1, *lo),
            _ => self.extract(width - 1, 0),
        }
    }

    /// Zero-extends or truncates to `width`.
    pub fn resize(&self, width: u32) -> BvExpr {
        match width.cmp(&self.width()) {
            std::cmp::Ordering::Equal => self.clone(),
            std::cmp::Ordering::Greater => self.zext(width),
            std::cmp::Ordering::Less => self.extract(width - 1, 0),
        }
    }

    /// `self != 0` as a 1-bit value.
    pub fn to_bool(&self) -> BvExpr {
        if self.width() == 1 {
            self.clone()
        } else {
            self.redor()
        }
    }

    pub fn implies(&self, b: &BvExpr) -> BvExpr {
        self.not().or(b)
    }

    pub fn and_all<'a>(items: impl IntoIterator<Item = &'a BvExpr>) -> BvExpr {
        let mut acc: Option<BvExpr> = None;
        for e in items {
            if e.is_true() {
                continue;
            }
            acc = Some(match acc {
                None => e.clone(),
                Some(a) => a.and(e),
            });
        }
        acc.unwrap_or_else(BvExpr::tt)
    }

    pub fn or_all<'a>(items: impl IntoIterator<Item = &'a BvExpr>) -> BvExpr {
        let mut acc: Option<BvExpr> = None;
        for e in items {
            if e.is_false() {
                continue;
            }
            acc = Some(match acc {
                None => e.clone(),
                Some(a) => a.or(e),
            });
        }
        acc.unwrap_or_else(BvExpr::ff)
    }

    pub fn children(&self) -> Vec<&BvExpr> {
        match self.kind() {
            ExprKind::Var { .. } | ExprKind::Const(_) => vec![],
            ExprKind::Unary(_, a) | ExprKind::Zext(a) | ExprKind::Sext(a) => vec![a],
            ExprKind::Extract { arg, .. } => vec![arg],
            ExprKind::Binary(_, a, b) => vec![a, b],
            ExprKind::Ite(c, a, b) => vec![c, a, b],
        }
    }

    /// Visits every variable occurrence (with repetition, in DFS order).
    pub fn for_each_var(&self, f: &mut impl FnMut(&Arc<str>, u32, u32)) {
        let mut stack = vec![self];
        let mut seen = std::collections::HashSet::new();
        while let Some(e) = stack.pop() {
            if !seen.insert(Arc::as_ptr(&e.0) as usize) {
                continue;
            }
            if let ExprKind::Var { name, version } = e.kind() {
                f(name, *version, e.width());
            }
            stack.extend(e.children());
        }
    }

    pub fn var_names(&self) -> Vec<Arc<str>> {
        let mut out = Vec::new();
        self.for_each_var(&mut |n, _, _| {
            if !out.contains(n) {
                out.push(n.clone())
            }
        });
        out
    }

    /// Rebuilds the expression bottom-up, replacing every variable leaf with
    /// `f(name, version, width)` when it returns `Some`.
    pub fn map_vars(&self, f: &mut impl FnMut(&Arc<str>, u32, u32) -> Option<BvExpr>) -> BvExpr {
        let mut memo = std::collections::HashMap::new();
        self.map_vars_memo(f, &mut memo)
    }

    fn map_vars_memo(
        &self,
        f: &mut impl FnMut(&Arc<str>, u32, u32) -> Option<BvExpr>,
        memo: &mut std::collections::HashMap<usize, BvExpr>,
    ) -> BvExpr {
        let key = Arc::as_ptr(&self.0) as usize;
        if let Some(e) = memo.get(&key) {
            return e.clone();
        }
        let out = match self.kind() {
            ExprKind::Var { name, version } => match f(name, *version, self.width()) {
                Some(e) => {
                    assert_eq!(e.width(), self.width(), "substitution changed width");
                    e
                }
                None => self.clone(),
            },
            ExprKind::Const(_) => self.clone(),
            ExprKind::Unary(op, a) => BvExpr::unary(*op, &a.map_vars_memo(f, memo)),
            ExprKind::Binary(op, a, b) => {
                let a2 = a.map_vars_memo(f, memo);
                let b2 = b.map_vars_memo(f, memo);
                BvExpr::binary(*op, &a2, &b2)
            }
            ExprKind::Ite(c, a, b) => {
                let c2 = c.map_vars_memo(f, memo);
                let a2 = a.map_vars_memo(f, memo);
                let b2 = b.map_vars_memo(f, memo);
                BvExpr::ite(&c2, &a2, &b2)
            }
            ExprKind::Extract { hi, lo, arg } => arg.map_vars_memo(f, memo).extract(*hi, *lo),
            ExprKind::Zext(a) => a.map_vars_memo(f, memo).zext(self.width()),
            ExprKind::Sext(a) => a.map_vars_memo(f, memo).sext(self.width()),
        };
        memo.insert(key, out.clone());
        out
    }

    /// Number of distinct nodes in the DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if seen.insert(Arc::as_ptr(&e.0) as usize) {
                stack.extend(e.children());
            }
        }
        seen.len()
    }
}

fn binop_symbol(op: BinOp) -> &'static str {
    match op {
        BinOp::And => "&",
        BinOp::Or => "|",
        BinOp::Xor => "^",
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Shl => "<<",
        BinOp::Lshr => ">>",
        BinOp::Eq => "==",
        BinOp::Ult => "<",
        BinOp::Ule => "<=",
        BinOp::Slt => "<s",
        BinOp::Concat => "++",
    }
}

impl fmt::Display for BvExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ExprKind::Var { name, version } => {
                if *version == 0 {
                    write!(f, "{name}")
                } else {
                    write!(f, "{name}_{version}")
                }
            }
            ExprKind::Const(v) => {
                if self.width() == 1 {
                    write!(f, "{v}")
                } else {
                    write!(f, "{v:#x}")
                }
            }
            ExprKind::Unary(op, a) => match op {
                UnOp::Not if self.width() == 1 => write!(f, "!{a}"),
                UnOp::Not => write!(f, "~{a}"),
                UnOp::Neg => write!(f, "-{a}"),
                UnOp::RedOr => write!(f, "redor({a})"),
                UnOp::RedAnd => write!(f, "redand({a})"),
                UnOp::RedXor => write!(f, "redxor({a})"),
            },
            ExprKind::Binary(op, a, b) => write!(f, "({a} {} {b})", binop_symbol(*op)),
            ExprKind::Ite(c, a, b) => write!(f, "ite({c}, {a}, {b})"),
            ExprKind::Extract { hi, lo, arg } => write!(f, "{arg}[{hi}:{lo}]"),
            ExprKind::Zext(a) => write!(f, "zext{}({a})", self.width()),
            ExprKind::Sext(a) => write!(f, "sext{}({a})", self.width()),
        }
    }
}
