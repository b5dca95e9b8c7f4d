// SPDX-License-Identifier: Apache-2.0

//! Reference simulator that interprets an elaborated design straight from
//! the syntax tree. A cycle is: apply inputs, settle combinational logic to
//! a fixpoint, run every clocked block against the settled state (blocking
//! writes visible only inside their own block, nonblocking writes queued),
//! commit, settle again.
//!
//! It shares nothing with the synthesizer beyond the elaborated design and is
//! used as the oracle for netlist equivalence tests.

use std::collections::HashMap;

use crate::bv::mask;
use crate::verilog::ast::*;
use crate::verilog::{ElaboratedDesign, VerilogError};

type Res<T> = Result<T, VerilogError>;

/// A pending write: bits under `mask` of signal `hier` become `bits`.
#[derive(Clone, Debug)]
struct Write {
    hier: String,
    mask: u64,
    bits: u64,
}

pub struct RefSim<'d> {
    d: &'d ElaboratedDesign,
    vals: HashMap<String, u64>,
}

struct Ctx<'a> {
    d: &'a ElaboratedDesign,
    inst: usize,
    consts: &'a HashMap<String, u64>,
    read: &'a dyn Fn(&str) -> u64,
}

impl Ctx<'_> {
    fn sw(&self, e: &ExprAst) -> Res<u32> {
        self.d.width_in(self.inst, e, self.consts)
    }

    fn konst(&self, e: &ExprAst) -> Res<u64> {
        self.d.const_in(self.inst, e, self.consts)
    }

    fn is_const(&self, e: &ExprAst) -> bool {
        let mut ids = Vec::new();
        e.idents(&mut ids);
        ids.iter().all(|n| {
            self.consts.contains_key(n)
                || (self.d.signal(self.inst, n).is_none() && self.d.param(self.inst, n).is_some())
        })
    }

    fn ident(&self, n: &str, span: Span) -> Res<(u64, u32)> {
        if let Some(v) = self.consts.get(n) {
            return Ok((v & mask(32), 32));
        }
        if let Some(s) = self.d.signal(self.inst, n) {
            return Ok(((self.read)(&self.d.hier(self.inst, n)) & mask(s.width), s.width));
        }
        if let Some(p) = self.d.param(self.inst, n) {
            return Ok((p & mask(32), 32));
        }
        Err(VerilogError::elab(span, format!("undeclared identifier `{n}`")))
    }

    fn cond(&self, e: &ExprAst) -> Res<bool> {
        Ok(self.eval(e, self.sw(e)?)? != 0)
    }

    fn eval(&self, e: &ExprAst, w: u32) -> Res<u64> {
        let m = mask(w);
        let v = match e {
            ExprAst::Ident(n, s) => self.ident(n, *s)?.0,
            ExprAst::Const { value, .. } => *value,
            ExprAst::BitSelect { base, index, span } => {
                let (b, bw) = self.ident(base, *span)?;
                let i = if self.is_const(index) {
                    self.konst(index)?
                } else {
                    self.eval(index, self.sw(index)?)?
                };
                if i >= u64::from(bw) {
                    0
                } else {
                    (b >> i) & 1
                }
            }
            ExprAst::PartSelect { base, msb, lsb, span } => {
                let (b, bw) = self.ident(base, *span)?;
                let (hi, lo) = (self.konst(msb)?, self.konst(lsb)?);
                if hi < lo || hi >= u64::from(bw) {
                    return Err(VerilogError::elab(*span, "part-select out of range"));
                }
                (b >> lo) & mask((hi - lo + 1) as u32)
            }
            ExprAst::IndexedPartSelect {
                base,
                offset,
                width,
                up,
                span,
            } => {
                let (b, bw) = self.ident(base, *span)?;
                let c = self.konst(width)?;
                if c == 0 || c > u64::from(bw) {
                    return Err(VerilogError::elab(*span, "indexed part-select wider than its base"));
                }
                let lo = if self.is_const(offset) {
                    let off = self.konst(offset)? as i64;
                    let lo = if *up { off } else { off - c as i64 + 1 };
                    if lo < 0 || lo + c as i64 > i64::from(bw) {
                        return Err(VerilogError::elab(*span, "indexed part-select out of range"));
                    }
                    lo as u64
                } else {
                    let ow = self.sw(offset)?;
                    let off = self.eval(offset, ow)?;
                    if *up {
                        off
                    } else {
                        off.wrapping_sub(c - 1) & mask(ow)
                    }
                };
                if lo >= u64::from(bw) {
                    0
                } else {
                    (b >> lo) & mask(c as u32)
                }
            }
            ExprAst::Concat(parts) => {
                let mut acc = 0u64;
                for p in parts {
                    let pw = self.sw(p)?;
                    acc = (acc << pw) | self.eval(p, pw)?;
                }
                acc
            }
            ExprAst::Repeat { count, parts } => {
                let n = self.konst(count)?;
                let inner = ExprAst::Concat(parts.clone());
                let iw = self.sw(&inner)?;
                let one = self.eval(&inner, iw)?;
                let mut acc = 0u64;
                for _ in 0..n {
                    acc = (acc << iw) | one;
                }
                acc
            }
            ExprAst::Unary(op, a) => match op {
                UnaryOp::Not => !self.eval(a, w)?,
                UnaryOp::Neg => self.eval(a, w)?.wrapping_neg(),
                UnaryOp::Plus => self.eval(a, w)?,
                UnaryOp::LogNot => u64::from(!self.cond(a)?),
            },
            ExprAst::Reduction(op, a) => {
                let aw = self.sw(a)?;
                let x = self.eval(a, aw)?;
                let r = match op {
                    RedOp::And | RedOp::Nand => x == mask(aw),
                    RedOp::Or | RedOp::Nor => x != 0,
                    RedOp::Xor | RedOp::Xnor => x.count_ones() % 2 == 1,
                };
                let inv = matches!(op, RedOp::Nand | RedOp::Nor | RedOp::Xnor);
                u64::from(r != inv)
            }
            ExprAst::Binary(op, a, b) => {
                use BinaryOp::*;
                match op {
                    Add => self.eval(a, w)?.wrapping_add(self.eval(b, w)?),
                    Sub => self.eval(a, w)?.wrapping_sub(self.eval(b, w)?),
                    Mul => self.eval(a, w)?.wrapping_mul(self.eval(b, w)?),
                    And => self.eval(a, w)? & self.eval(b, w)?,
                    Or => self.eval(a, w)? | self.eval(b, w)?,
                    Xor => self.eval(a, w)? ^ self.eval(b, w)?,
                    Xnor => !(self.eval(a, w)? ^ self.eval(b, w)?),
                    Shl | Shr => {
                        let x = self.eval(a, w)?;
                        let n = self.eval(b, self.sw(b)?)?;
                        if n >= u64::from(w) {
                            0
                        } else if *op == Shl {
                            x << n
                        } else {
                            x >> n
                        }
                    }
                    LogAnd => u64::from(self.cond(a)? && self.cond(b)?),
                    LogOr => u64::from(self.cond(a)? || self.cond(b)?),
                    Lt | Le | Gt | Ge | Eq | Ne => {
                        let cw = self.sw(a)?.max(self.sw(b)?);
                        let (x, y) = (self.eval(a, cw)?, self.eval(b, cw)?);
                        u64::from(match op {
                            Lt => x < y,
                            Le => x <= y,
                            Gt => x > y,
                            Ge => x >= y,
                            Eq => x == y,
                            _ => x != y,
                        })
                    }
                }
            }
            ExprAst::Ternary(c, a, b) => {
                if self.cond(c)? {
                    self.eval(a, w)?
                } else {
                    self.eval(b, w)?
                }
            }
        };
        Ok(v & m)
    }

    fn lvalue_width(&self, l: &LValue) -> Res<u32> {
        Ok(match l {
            LValue::Ident(n, s) => self.ident(n, *s)?.1,
            LValue::BitSelect { .. } => 1,
            LValue::PartSelect { msb, lsb, .. } => (self.konst(msb)? - self.konst(lsb)? + 1) as u32,
            LValue::IndexedPartSelect { width, .. } => self.konst(width)? as u32,
            LValue::Concat(ps) => {
                let mut s = 0;
                for p in ps {
                    s += self.lvalue_width(p)?;
                }
                s
            }
        })
    }

    /// Writes produced by `lhs = rhs`.
    fn assign(&self, lhs: &LValue, rhs: &ExprAst) -> Res<Vec<Write>> {
        let tw = self.lvalue_width(lhs)?;
        let w = self.sw(rhs)?.max(tw);
        let v = self.eval(rhs, w)? & mask(tw);
        let mut out = Vec::new();
        self.split(lhs, v, &mut out)?;
        Ok(out)
    }

    fn split(&self, l: &LValue, v: u64, out: &mut Vec<Write>) -> Res<()> {
        let base_width = |n: &str, span: Span| -> Res<(String, u32)> {
            let s = self
                .d
                .signal(self.inst, n)
                .ok_or_else(|| VerilogError::elab(span, format!("undeclared identifier `{n}`")))?;
            Ok((self.d.hier(self.inst, n), s.width))
        };
        let mut field = |hier: String, bw: u32, lo: u64, width: u32| {
            if lo < u64::from(bw) {
                out.push(Write {
                    hier,
                    mask: (mask(width) << lo) & mask(bw),
                    bits: (v << lo) & mask(bw),
                });
            }
        };
        match l {
            LValue::Ident(n, s) => {
                let (h, bw) = base_width(n, *s)?;
                field(h, bw, 0, bw);
            }
            LValue::BitSelect { base, index, span } => {
                let (h, bw) = base_width(base, *span)?;
                let i = if self.is_const(index) {
                    self.konst(index)?
                } else {
                    self.eval(index, self.sw(index)?)?
                };
                field(h, bw, i, 1);
            }
            LValue::PartSelect { base, msb, lsb, span } => {
                let (h, bw) = base_width(base, *span)?;
                let (hi, lo) = (self.konst(msb)?, self.konst(lsb)?);
                if hi < lo || hi >= u64::from(bw) {
                    return Err(VerilogError::elab(*span, "part-select out of range"));
                }
                field(h, bw, lo, (hi - lo + 1) as u32);
            }
            LValue::IndexedPartSelect {
                base,
                offset,
                width,
                up,
                span,
            } => {
                let (h, bw) = base_width(base, *span)?;
                let c = self.konst(width)?;
                let lo = if self.is_const(offset) {
                    let off = self.konst(offset)? as i64;
                    let lo = if *up { off } else { off - c as i64 + 1 };
                    if lo < 0 || lo + c as i64 > i64::from(bw) {
                        return Err(VerilogError::elab(*span, "indexed part-select out of range"));
                    }
                    lo as u64
                } else {
                    let ow = self.sw(offset)?;
                    let off = self.eval(offset, ow)?;
                    if *up {
                        off
                    } else {
                        off.wrapping_sub(c - 1) & mask(ow)
                    }
                };
                field(h, bw, lo, c as u32);
            }
            LValue::Concat(parts) => {
                let mut off = 0;
                for p in parts.iter().rev() {
                    let pw = self.lvalue_width(p)?;
                    self.split(p, (v >> off) & mask(pw), out)?;
                    off += pw;
                }
            }
        }
        Ok(())
    }
}

fn apply(vals: &mut HashMap<String, u64>, w: &Write) {
    let e = vals.entry(w.hier.clone()).or_insert(0);
    *e = (*e & !w.mask) | w.bits;
}

/// Result of running one procedural block.
#[derive(Default)]
struct BlockRun {
    overlay: HashMap<String, u64>,
    nba: Vec<Write>,
}

const UNROLL_LIMIT: usize = 4096;

impl BlockRun {
    fn exec(
        &mut self,
        d: &ElaboratedDesign,
        inst: usize,
        st: &StmtAst,
        consts: &HashMap<String, u64>,
        base: &HashMap<String, u64>,
    ) -> Res<()> {
        match st {
            StmtAst::Block(v) => {
                for s in v {
                    self.exec(d, inst, s, consts, base)?;
                }
            }
            StmtAst::Empty => {}
            StmtAst::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.ctx(d, inst, consts, base, |cx| cx.cond(cond))?;
                if c {
                    self.exec(d, inst, then_branch, consts, base)?;
                } else if let Some(e) = else_branch {
                    self.exec(d, inst, e, consts, base)?;
                }
            }
            StmtAst::Assign {
                lhs, rhs, blocking, ..
            } => {
                let ws = self.ctx(d, inst, consts, base, |cx| cx.assign(lhs, rhs))?;
                for w in ws {
                    if *blocking {
                        let cur = self.overlay.get(&w.hier).or(base.get(&w.hier)).copied().unwrap_or(0);
                        self.overlay.insert(w.hier.clone(), (cur & !w.mask) | w.bits);
                    } else {
                        self.nba.push(w);
                    }
                }
            }
            StmtAst::For {
                var,
                init,
                cond,
                step,
                body,
                span,
            } => {
                let mut c = consts.clone();
                let mut i = d.const_in(inst, init, &c)?;
                for _ in 0..=UNROLL_LIMIT {
                    c.insert(var.clone(), i & mask(32));
                    if d.const_in(inst, cond, &c)? == 0 {
                        return Ok(());
                    }
                    self.exec(d, inst, body, &c, base)?;
                    i = d.const_in(inst, step, &c)?;
                }
                return Err(VerilogError::unsupported(*span, "for-loop exceeds the unroll limit"));
            }
        }
        Ok(())
    }

    fn ctx<T>(
        &self,
        d: &ElaboratedDesign,
        inst: usize,
        consts: &HashMap<String, u64>,
        base: &HashMap<String, u64>,
        f: impl FnOnce(&Ctx) -> Res<T>,
    ) -> Res<T> {
        let read = |h: &str| self.overlay.get(h).or(base.get(h)).copied().unwrap_or(0);
        f(&Ctx {
            d,
            inst,
            consts,
            read: &read,
        })
    }
}

impl<'d> RefSim<'d> {
    /// All signals start at zero; initial blocks run, then the design settles.
    pub fn new(d: &'d ElaboratedDesign) -> Res<Self> {
        let vals = d.signals.keys().map(|k| (k.clone(), 0)).collect();
        let mut sim = RefSim { d, vals };
        let none = HashMap::new();
        for inst in 0..d.instances.len() {
            for st in &d.module(inst).initials {
                let mut run = BlockRun::default();
                run.exec(d, inst, st, &none, &sim.vals)?;
                sim.vals.extend(run.overlay);
                for w in &run.nba {
                    apply(&mut sim.vals, w);
                }
            }
        }
        sim.settle()?;
        Ok(sim)
    }

    pub fn value(&self, hier: &str) -> u64 {
        self.vals.get(hier).copied().unwrap_or(0)
    }

    /// Applies `inputs` (hierarchical name to value) and clocks once.
    pub fn cycle(&mut self, inputs: &HashMap<String, u64>) -> Res<()> {
        for (n, v) in inputs {
            let w = self.d.signals.get(n).map(|s| s.width).unwrap_or(64);
            self.vals.insert(n.clone(), v & mask(w));
        }
        self.settle()?;
        let pre = self.vals.clone();
        let none = HashMap::new();
        let mut runs = Vec::new();
        for inst in 0..self.d.instances.len() {
            for a in &self.d.module(inst).always {
                if let Trigger::Posedge(_) = a.trigger {
                    let mut run = BlockRun::default();
                    run.exec(self.d, inst, &a.body, &none, &pre)?;
                    runs.push(run);
                }
            }
        }
        for r in &runs {
            self.vals.extend(r.overlay.iter().map(|(k, v)| (k.clone(), *v)));
        }
        for r in &runs {
            for w in &r.nba {
                apply(&mut self.vals, w);
            }
        }
        self.settle()
    }

    /// Re-evaluates continuous assigns, combinational blocks and port
    /// bindings until nothing changes.
    fn settle(&mut self) -> Res<()> {
        let d = self.d;
        let none = HashMap::new();
        let mut items = 0;
        for inst in 0..d.instances.len() {
            let m = d.module(inst);
            items += m.assigns.len() + m.always.len() + d.instances[inst].bindings.len();
        }
        for _ in 0..items + 2 {
            let before = self.vals.clone();
            for inst in 0..d.instances.len() {
                let m = d.module(inst);
                for a in &m.assigns {
                    let read = |h: &str| self.vals.get(h).copied().unwrap_or(0);
                    let cx = Ctx {
                        d,
                        inst,
                        consts: &none,
                        read: &read,
                    };
                    let ws = cx.assign(&a.lhs, &a.rhs)?;
                    let mut fresh: HashMap<String, u64> = HashMap::new();
                    for w in &ws {
                        let e = fresh.entry(w.hier.clone()).or_insert(0);
                        *e = (*e & !w.mask) | w.bits;
                    }
                    self.vals.extend(fresh);
                }
                for a in &m.always {
                    if a.trigger == Trigger::Comb {
                        let mut run = BlockRun::default();
                        run.exec(d, inst, &a.body, &none, &self.vals)?;
                        self.vals.extend(run.overlay);
                        for w in &run.nba {
                            apply(&mut self.vals, w);
                        }
                    }
                }
                if let Some(p) = d.instances[inst].parent {
                    for b in &d.instances[inst].bindings {
                        let Some(actual) = &b.actual else { continue };
                        let formal = d.hier(inst, &b.formal);
                        match b.dir {
                            Dir::Input => {
                                let read = |h: &str| self.vals.get(h).copied().unwrap_or(0);
                                let cx = Ctx {
                                    d,
                                    inst: p,
                                    consts: &none,
                                    read: &read,
                                };
                                let w = cx.sw(actual)?.max(b.width);
                                let v = cx.eval(actual, w)? & mask(b.width);
                                self.vals.insert(formal, v);
                            }
                            _ => {
                                if let ExprAst::Ident(n, _) = actual {
                                    let v = self.value(&formal);
                                    self.vals.insert(d.hier(p, n), v);
                                }
                            }
                        }
                    }
                }
            }
            if self.vals == before {
                return Ok(());
            }
        }
        Err(VerilogError::elab(
            Span::default(),
            "combinational logic does not settle",
        ))
    }
}
