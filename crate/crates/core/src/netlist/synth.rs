// SPDX-License-Identifier: Apache-2.0

//! Elaborated design to software netlist.
//!
//! One call of the step routine is one clock cycle of the whole flattened
//! design:
//!
//! 1. every register that is read somewhere is copied to a shadow variable;
//! 2. all combinational logic is evaluated in dependency order, reading
//!    registers through their shadows;
//! 3. clocked processes run; non-blocking writes update the register
//!    directly while every read sees the shadow, blocking writes are
//!    visible to later statements of the same process;
//! 4. combinational logic depending on registers is evaluated again so that
//!    the state observed between steps is consistent.
//!
//! Combinational feedback (a signal-level cycle, or instances feeding each
//! other through ports) is encoded by havocking the signals involved and
//! assuming their defining equalities.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use super::graph::{block_targets, build_comb_graph, schedule, CombDepGraph, DriverKind};
use crate::bv::{lower_bit_assign, lower_part_select, mask, BvExpr};
use crate::ir::{Program, Stmt};
use crate::verilog::*;

/// Equalities resolved together by havoc-then-assume.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackGroup {
    /// `(signal, defining expression)`, reading registers directly.
    pub equations: Vec<(Arc<str>, BvExpr)>,
}

impl FeedbackGroup {
    pub fn members(&self) -> Vec<Arc<str>> {
        self.equations.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn constraint(&self, vars: &IndexMap<Arc<str>, u32>) -> BvExpr {
        let eqs: Vec<BvExpr> = self
            .equations
            .iter()
            .map(|(n, e)| BvExpr::var(n.clone(), 0, vars[n]).eq(e))
            .collect();
        BvExpr::and_all(&eqs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwNetlistProgram {
    pub top: String,
    /// Every variable of init/step with its width.
    pub vars: IndexMap<Arc<str>, u32>,
    /// Registers.
    pub state_vars: Vec<(Arc<str>, u32)>,
    /// Primary inputs other than the clock; havocked or pinned per step by
    /// the harness.
    pub inputs: Vec<(Arc<str>, u32)>,
    pub outputs: Vec<(Arc<str>, u32)>,
    pub clock: Option<Arc<str>>,
    /// `(register, shadow)` pairs captured at the start of each step.
    pub shadows: Vec<(Arc<str>, Arc<str>)>,
    pub init: Vec<Stmt>,
    pub step: Vec<Stmt>,
    pub feedback: Vec<FeedbackGroup>,
    /// Conjunction of all feedback equalities.
    pub comb_constraint: Option<BvExpr>,
    /// Assertions registered by the harness.
    pub asserts: Vec<(String, BvExpr)>,
    /// True when the design has clocked processes.
    pub sequential: bool,
}

impl SwNetlistProgram {
    /// `init` followed by one step per entry of `inputs`, each preceded by
    /// constant assignments of the given input values (missing inputs keep
    /// their previous value).
    pub fn with_inputs(&self, inputs: &[HashMap<Arc<str>, u64>]) -> Program {
        let mut p = Program::new();
        p.vars = self.vars.clone();
        p.body = self.init.clone();
        for cycle in inputs {
            for (n, w) in &self.inputs {
                if let Some(v) = cycle.get(n) {
                    p.body.push(Stmt::assign(n.clone(), BvExpr::konst_trunc(*v, *w)));
                }
            }
            p.body.extend(self.step.iter().cloned());
        }
        p
    }

    pub fn width_of(&self, name: &str) -> Option<u32> {
        self.vars.get(name).copied()
    }

    pub fn var(&self, name: &str) -> Option<BvExpr> {
        let (k, w) = self.vars.get_key_value(name)?;
        Some(BvExpr::var(k.clone(), 0, *w))
    }

    /// Looks a signal up by hierarchical name, or by a name relative to the
    /// top instance (`q` for `top.q`, `a.q` for `top.a.q`).
    pub fn resolve(&self, name: &str) -> Option<Arc<str>> {
        if let Some((k, _)) = self.vars.get_key_value(name) {
            return Some(k.clone());
        }
        let full = format!("{}.{}", self.top, name);
        self.vars.get_key_value(full.as_str()).map(|(k, _)| k.clone())
    }
}

fn loop_vars_of(s: &StmtAst, out: &mut HashSet<String>) {
    match s {
        StmtAst::Block(v) => v.iter().for_each(|x| loop_vars_of(x, out)),
        StmtAst::If {
            then_branch,
            else_branch,
            ..
        } => {
            loop_vars_of(then_branch, out);
            if let Some(e) = else_branch {
                loop_vars_of(e, out);
            }
        }
        StmtAst::For { var, body, .. } => {
            out.insert(var.clone());
            loop_vars_of(body, out);
        }
        _ => {}
    }
}

pub(crate) const MAX_UNROLL: u64 = 4096;

/// Name-resolution and sizing context for translating expressions of one
/// instance.
struct Scope<'a> {
    d: &'a ElaboratedDesign,
    inst: usize,
    consts: &'a HashMap<String, u64>,
    locals: &'a HashMap<String, BvExpr>,
    /// Outputs of the combinational block being flattened; reading one that
    /// has no value yet is an error.
    guard: Option<&'a HashSet<String>>,
    loop_vars: &'a HashSet<String>,
    read: &'a dyn Fn(&str) -> BvExpr,
}

impl Scope<'_> {
    fn width(&self, e: &ExprAst) -> Result<u32, VerilogError> {
        self.d.width_in(self.inst, e, self.consts)
    }

    fn konst(&self, e: &ExprAst) -> Result<u64, VerilogError> {
        self.d.const_in(self.inst, e, self.consts)
    }

    fn ident(&self, n: &str, span: Span) -> Result<BvExpr, VerilogError> {
        if let Some(v) = self.consts.get(n) {
            return Ok(BvExpr::konst_trunc(*v, 32));
        }
        if let Some(v) = self.locals.get(n) {
            return Ok(v.clone());
        }
        if let Some(g) = self.guard {
            if g.contains(n) {
                return Err(VerilogError::unsupported(
                    span,
                    format!("`{n}` is read before it is assigned in a combinational block (latch)"),
                ));
            }
        }
        if self.loop_vars.contains(n) {
            return Err(VerilogError::unsupported(
                span,
                format!("loop variable `{n}` used outside its loop"),
            ));
        }
        if self.d.signal(self.inst, n).is_some() {
            return Ok((self.read)(&self.d.hier(self.inst, n)));
        }
        if let Some(p) = self.d.param(self.inst, n) {
            return Ok(BvExpr::konst_trunc(p, 32));
        }
        Err(VerilogError::elab(span, format!("undeclared identifier `{n}`")))
    }

    /// `e` evaluated at context width `w` (at least its self-determined width).
    fn conv(&self, e: &ExprAst, w: u32) -> Result<BvExpr, VerilogError> {
        let sw = |x: &ExprAst| self.width(x);
        Ok(match e {
            ExprAst::Ident(n, span) => self.ident(n, *span)?.zext(w),
            ExprAst::Const { value, .. } => BvExpr::konst_trunc(*value, w),
            ExprAst::BitSelect { base, index, span } => {
                let b = self.ident(base, *span)?;
                let bw = b.width();
                let bit = if self.is_const(index) {
                    let i = self.konst(index)?;
                    if i >= u64::from(bw) {
                        BvExpr::konst(0, 1)
                    } else {
                        b.extract(i as u32, i as u32)
                    }
                } else {
                    let i = self.conv(index, sw(index)?)?;
                    b.lshr(&i).extract(0, 0)
                };
                bit.zext(w)
            }
            ExprAst::PartSelect {
                base,
                msb,
                lsb,
                span,
            } => {
                let b = self.ident(base, *span)?;
                let (m, l) = (self.konst(msb)?, self.konst(lsb)?);
                if m < l || m >= u64::from(b.width()) {
                    return Err(VerilogError::elab(
                        *span,
                        format!("part-select {base}[{m}:{l}] out of range for width {}", b.width()),
                    ));
                }
                let v = lower_part_select(&b, m as u32, l as u32).expect("checked range");
                if w >= v.width() {
                    v.zext(w)
                } else {
                    v.truncate(w)
                }
            }
            ExprAst::IndexedPartSelect {
                base,
                offset,
                width,
                up,
                span,
            } => {
                let b = self.ident(base, *span)?;
                let c = self.konst(width)?;
                if c == 0 || c > u64::from(b.width()) {
                    return Err(VerilogError::elab(*span, "indexed part-select wider than its base"));
                }
                let c = c as u32;
                let v = if self.is_const(offset) {
                    let off = self.konst(offset)? as i64;
                    let lo = if *up { off } else { off - i64::from(c) + 1 };
                    let hi = lo + i64::from(c) - 1;
                    if lo < 0 || hi >= i64::from(b.width()) {
                        return Err(VerilogError::elab(*span, "indexed part-select out of range"));
                    }
                    b.extract(hi as u32, lo as u32)
                } else {
                    let off = self.conv(offset, sw(offset)?)?;
                    let lo = if *up {
                        off
                    } else {
                        off.sub(&BvExpr::konst_trunc(u64::from(c - 1), off.width()))
                    };
                    b.lshr(&lo).extract(c - 1, 0)
                };
                v.zext(w)
            }
            ExprAst::Concat(parts) => {
                let mut acc: Option<BvExpr> = None;
                for p in parts {
                    let v = self.conv(p, sw(p)?)?;
                    acc = Some(match acc {
                        None => v,
                        Some(a) => a.concat(&v),
                    });
                }
                acc.expect("non-empty concat").zext(w)
            }
            ExprAst::Repeat { count, parts } => {
                let n = self.konst(count)?;
                if n == 0 {
                    return Err(VerilogError::unsupported(e.span(), "zero replication"));
                }
                let one = self.conv(&ExprAst::Concat(parts.clone()), sw(&ExprAst::Concat(parts.clone()))?)?;
                let mut acc = one.clone();
                for _ in 1..n {
                    acc = acc.concat(&one);
                }
                acc.zext(w)
            }
            ExprAst::Unary(op, a) => match op {
                UnaryOp::Not => self.conv(a, w)?.not(),
                UnaryOp::Neg => self.conv(a, w)?.neg(),
                UnaryOp::Plus => self.conv(a, w)?,
                UnaryOp::LogNot => self.cond(a)?.not().zext(w),
            },
            ExprAst::Reduction(op, a) => {
                let v = self.conv(a, sw(a)?)?;
                let r = match op {
                    RedOp::And => v.redand(),
                    RedOp::Or => v.redor(),
                    RedOp::Xor => v.redxor(),
                    RedOp::Nand => v.redand().not(),
                    RedOp::Nor => v.redor().not(),
                    RedOp::Xnor => v.redxor().not(),
                };
                r.zext(w)
            }
            ExprAst::Binary(op, a, b) => match op {
                BinaryOp::Add => self.conv(a, w)?.add(&self.conv(b, w)?),
                BinaryOp::Sub => self.conv(a, w)?.sub(&self.conv(b, w)?),
                BinaryOp::Mul => self.conv(a, w)?.mul(&self.conv(b, w)?),
                BinaryOp::And => self.conv(a, w)?.and(&self.conv(b, w)?),
                BinaryOp::Or => self.conv(a, w)?.or(&self.conv(b, w)?),
                BinaryOp::Xor => self.conv(a, w)?.xor(&self.conv(b, w)?),
                BinaryOp::Xnor => self.conv(a, w)?.xor(&self.conv(b, w)?).not(),
                BinaryOp::Shl => self.conv(a, w)?.shl(&self.conv(b, sw(b)?)?),
                BinaryOp::Shr => self.conv(a, w)?.lshr(&self.conv(b, sw(b)?)?),
                BinaryOp::LogAnd => self.cond(a)?.and(&self.cond(b)?).zext(w),
                BinaryOp::LogOr => self.cond(a)?.or(&self.cond(b)?).zext(w),
                cmp => {
                    let m = sw(a)?.max(sw(b)?);
                    let (x, y) = (self.conv(a, m)?, self.conv(b, m)?);
                    let r = match cmp {
                        BinaryOp::Lt => x.ult(&y),
                        BinaryOp::Le => x.ule(&y),
                        BinaryOp::Gt => x.ugt(&y),
                        BinaryOp::Ge => x.uge(&y),
                        BinaryOp::Eq => x.eq(&y),
                        BinaryOp::Ne => x.ne(&y),
                        _ => unreachable!("non-comparison handled above"),
                    };
                    r.zext(w)
                }
            },
            ExprAst::Ternary(c, a, b) => {
                BvExpr::ite(&self.cond(c)?, &self.conv(a, w)?, &self.conv(b, w)?)
            }
        })
    }

    fn is_const(&self, e: &ExprAst) -> bool {
        let mut ids = Vec::new();
        e.idents(&mut ids);
        ids.iter().all(|n| {
            self.consts.contains_key(n)
                || (self.d.signal(self.inst, n).is_none() && self.d.param(self.inst, n).is_some())
        })
    }

    /// Value of `e` assigned to a target of width `tw`.
    fn value(&self, e: &ExprAst, tw: u32) -> Result<BvExpr, VerilogError> {
        let w = self.width(e)?.max(tw);
        Ok(self.conv(e, w)?.truncate(tw))
    }

    /// `e != 0` as a 1-bit condition.
    fn cond(&self, e: &ExprAst) -> Result<BvExpr, VerilogError> {
        Ok(self.conv(e, self.width(e)?)?.to_bool())
    }

    fn lvalue_width(&self, l: &LValue) -> Result<u32, VerilogError> {
        Ok(match l {
            LValue::Ident(n, s) => self.signal_width(n, *s)?,
            LValue::BitSelect { .. } => 1,
            LValue::PartSelect { msb, lsb, span, .. } => {
                let (m, l) = (self.konst(msb)?, self.konst(lsb)?);
                if m < l {
                    return Err(VerilogError::elab(*span, "part-select with msb < lsb"));
                }
                (m - l + 1) as u32
            }
            LValue::IndexedPartSelect { width, .. } => self.konst(width)? as u32,
            LValue::Concat(ps) => {
                let mut s = 0;
                for p in ps {
                    s += self.lvalue_width(p)?;
                }
                if s > crate::bv::MAX_WIDTH {
                    return Err(VerilogError::unsupported(l.span(), "concatenation wider than 64 bits"));
                }
                s
            }
        })
    }

    fn signal_width(&self, n: &str, span: Span) -> Result<u32, VerilogError> {
        self.d
            .signal(self.inst, n)
            .map(|s| s.width)
            .ok_or_else(|| VerilogError::elab(span, format!("`{n}` is not a signal")))
    }

    /// Applies `lhs = v` to the current base values in `cur` (keyed by local
    /// name). `old` supplies the value of a base not yet in `cur`.
    fn write(
        &self,
        lhs: &LValue,
        v: BvExpr,
        cur: &mut IndexMap<String, BvExpr>,
        old: &dyn Fn(&str, u32) -> BvExpr,
    ) -> Result<(), VerilogError> {
        let base_val = |n: &str, span: Span, cur: &mut IndexMap<String, BvExpr>| {
            let w = self.signal_width(n, span)?;
            Ok::<BvExpr, VerilogError>(cur.get(n).cloned().unwrap_or_else(|| old(n, w)))
        };
        match lhs {
            LValue::Ident(n, _) => {
                cur.insert(n.clone(), v);
            }
            LValue::BitSelect { base, index, span } => {
                let b = base_val(base, *span, cur)?;
                let bw = b.width();
                let nv = if self.is_const(index) {
                    let i = self.konst(index)?;
                    if i >= u64::from(bw) {
                        return Ok(());
                    }
                    lower_bit_assign(&b, i as u32, i as u32, &v).expect("checked range")
                } else {
                    let i = self.conv(index, self.width(index)?)?;
                    let one = BvExpr::konst(1, bw);
                    b.and(&one.shl(&i).not()).or(&v.zext(bw).shl(&i))
                };
                cur.insert(base.clone(), nv);
            }
            LValue::PartSelect {
                base,
                msb,
                lsb,
                span,
            } => {
                let b = base_val(base, *span, cur)?;
                let (m, l) = (self.konst(msb)?, self.konst(lsb)?);
                if m >= u64::from(b.width()) {
                    return Err(VerilogError::elab(
                        *span,
                        format!("part-select {base}[{m}:{l}] out of range for width {}", b.width()),
                    ));
                }
                let nv = lower_bit_assign(&b, m as u32, l as u32, &v).expect("checked range");
                cur.insert(base.clone(), nv);
            }
            LValue::IndexedPartSelect {
                base,
                offset,
                width,
                up,
                span,
            } => {
                let b = base_val(base, *span, cur)?;
                let bw = b.width();
                let c = self.konst(width)? as u32;
                if c == 0 || c > bw {
                    return Err(VerilogError::elab(*span, "indexed part-select wider than its base"));
                }
                let nv = if self.is_const(offset) {
                    let off = self.konst(offset)? as i64;
                    let lo = if *up { off } else { off - i64::from(c) + 1 };
                    let hi = lo + i64::from(c) - 1;
                    if lo < 0 || hi >= i64::from(bw) {
                        return Err(VerilogError::elab(*span, "indexed part-select out of range"));
                    }
                    lower_bit_assign(&b, hi as u32, lo as u32, &v).expect("checked range")
                } else {
                    let off = self.conv(offset, self.width(offset)?)?;
                    let lo = if *up {
                        off
                    } else {
                        off.sub(&BvExpr::konst_trunc(u64::from(c - 1), off.width()))
                    };
                    let field = BvExpr::konst(mask(c), bw);
                    b.and(&field.shl(&lo).not()).or(&v.zext(bw).shl(&lo))
                };
                cur.insert(base.clone(), nv);
            }
            LValue::Concat(parts) => {
                let mut off = 0;
                for p in parts.iter().rev() {
                    let pw = self.lvalue_width(p)?;
                    let piece = v.extract(off + pw - 1, off);
                    self.write(p, piece, cur, old)?;
                    off += pw;
                }
            }
        }
        Ok(())
    }

    /// Evaluates `lhs = rhs` and returns the new value of every base written.
    fn assign(
        &self,
        lhs: &LValue,
        rhs: &ExprAst,
        old: &dyn Fn(&str, u32) -> BvExpr,
    ) -> Result<IndexMap<String, BvExpr>, VerilogError> {
        let tw = self.lvalue_width(lhs)?;
        let v = self.value(rhs, tw)?;
        let mut cur = IndexMap::new();
        self.write(lhs, v, &mut cur, old)?;
        Ok(cur)
    }
}

fn unroll(
    scope_consts: &HashMap<String, u64>,
    d: &ElaboratedDesign,
    inst: usize,
    var: &str,
    init: &ExprAst,
    cond: &ExprAst,
    step: &ExprAst,
    span: Span,
    mut body: impl FnMut(&HashMap<String, u64>) -> Result<(), VerilogError>,
) -> Result<(), VerilogError> {
    let mut consts = scope_consts.clone();
    let not_const = |e: VerilogError| {
        VerilogError::unsupported(span, format!("for-loop bounds must be constant ({})", e.message()))
    };
    let mut v = d.const_in(inst, init, &consts).map_err(not_const)?;
    let mut n = 0u64;
    loop {
        consts.insert(var.to_string(), v);
        if d.const_in(inst, cond, &consts).map_err(not_const)? == 0 {
            return Ok(());
        }
        n += 1;
        if n > MAX_UNROLL {
            return Err(VerilogError::unsupported(
                span,
                format!("for-loop with more than {MAX_UNROLL} iterations"),
            ));
        }
        body(&consts)?;
        // loop variables are 32-bit integers
        v = d.const_in(inst, step, &consts).map_err(not_const)? & mask(32);
    }
}

struct Synth<'a> {
    d: &'a ElaboratedDesign,
    g: CombDepGraph,
    shadow: IndexMap<String, Arc<str>>,
    names: HashMap<String, Arc<str>>,
    widths: IndexMap<Arc<str>, u32>,
    loop_vars: Vec<HashSet<String>>,
    no_consts: HashMap<String, u64>,
    no_locals: HashMap<String, BvExpr>,
}

impl Synth<'_> {
    fn name(&self, hier: &str) -> Arc<str> {
        self.names[hier].clone()
    }

    fn var(&self, hier: &str) -> BvExpr {
        let n = self.name(hier);
        BvExpr::var(n.clone(), 0, self.widths[&n])
    }

    fn reader(&self, via_shadow: bool) -> impl Fn(&str) -> BvExpr + '_ {
        move |h: &str| match self.shadow.get(h) {
            Some(s) if via_shadow => BvExpr::var(s.clone(), 0, self.widths[s]),
            _ => self.var(h),
        }
    }

    fn scope<'s>(
        &'s self,
        inst: usize,
        consts: &'s HashMap<String, u64>,
        locals: &'s HashMap<String, BvExpr>,
        guard: Option<&'s HashSet<String>>,
        read: &'s dyn Fn(&str) -> BvExpr,
    ) -> Scope<'s> {
        Scope {
            d: self.d,
            inst,
            consts,
            locals,
            guard,
            loop_vars: &self.loop_vars[inst],
            read,
        }
    }

    /// Defining equalities of one combinational driver.
    fn driver_eqs(&self, k: usize, via_shadow: bool) -> Result<Vec<(Arc<str>, BvExpr)>, VerilogError> {
        let read = self.reader(via_shadow);
        let d = self.d;
        match self.g.drivers[k].kind {
            DriverKind::Assign { inst, index } => {
                let a = &d.module(inst).assigns[index];
                let sc = self.scope(inst, &self.no_consts, &self.no_locals, None, &read);
                // partial continuous assignments leave the other bits 0
                let cur = sc.assign(&a.lhs, &a.rhs, &|_, w| BvExpr::konst(0, w))?;
                Ok(cur
                    .into_iter()
                    .map(|(n, v)| (self.name(&d.hier(inst, &n)), v))
                    .collect())
            }
            DriverKind::CombAlways { inst, index } => {
                let a = &d.module(inst).always[index];
                let (targets, _) = block_targets(a);
                let guard: HashSet<String> = targets.iter().cloned().collect();
                let mut locals = HashMap::new();
                self.flatten(inst, &a.body, &self.no_consts, &mut locals, &guard, &read)?;
                targets
                    .iter()
                    .map(|t| {
                        let v = locals.get(t).cloned().ok_or_else(|| {
                            VerilogError::unsupported(a.span, format!("`{t}` is not assigned (latch)"))
                        })?;
                        Ok((self.name(&d.hier(inst, t)), v))
                    })
                    .collect()
            }
            DriverKind::BindIn { child, port } => {
                let b = &d.instances[child].bindings[port];
                let parent = d.instances[child].parent.expect("child");
                let sc = self.scope(parent, &self.no_consts, &self.no_locals, None, &read);
                let v = sc.value(b.actual.as_ref().expect("bound"), b.width)?;
                Ok(vec![(self.name(&d.hier(child, &b.formal)), v)])
            }
            DriverKind::BindOut { child, port } => {
                let b = &d.instances[child].bindings[port];
                let parent = d.instances[child].parent.expect("child");
                let Some(ExprAst::Ident(n, _)) = &b.actual else {
                    unreachable!("checked during elaboration")
                };
                Ok(vec![(
                    self.name(&d.hier(parent, n)),
                    read(&d.hier(child, &b.formal)),
                )])
            }
        }
    }

    /// Symbolically executes a combinational block into one expression per
    /// assigned signal.
    fn flatten(
        &self,
        inst: usize,
        s: &StmtAst,
        consts: &HashMap<String, u64>,
        locals: &mut HashMap<String, BvExpr>,
        guard: &HashSet<String>,
        read: &dyn Fn(&str) -> BvExpr,
    ) -> Result<(), VerilogError> {
        match s {
            StmtAst::Block(v) => {
                for x in v {
                    self.flatten(inst, x, consts, locals, guard, read)?;
                }
            }
            StmtAst::Assign { lhs, rhs, .. } => {
                let cur = {
                    let sc = self.scope(inst, consts, locals, Some(guard), read);
                    let locals_ref = &*locals;
                    sc.assign(lhs, rhs, &|n, w| {
                        locals_ref.get(n).cloned().unwrap_or_else(|| BvExpr::konst(0, w))
                    })?
                };
                locals.extend(cur);
            }
            StmtAst::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.scope(inst, consts, locals, Some(guard), read).cond(cond)?;
                let mut lt = locals.clone();
                self.flatten(inst, then_branch, consts, &mut lt, guard, read)?;
                let mut le = locals.clone();
                if let Some(e) = else_branch {
                    self.flatten(inst, e, consts, &mut le, guard, read)?;
                }
                let keys: IndexSet<String> = lt.keys().chain(le.keys()).cloned().collect();
                for k in keys {
                    match (lt.get(&k), le.get(&k)) {
                        (Some(a), Some(b)) => {
                            let v = if a == b { a.clone() } else { BvExpr::ite(&c, a, b) };
                            locals.insert(k, v);
                        }
                        _ => {
                            return Err(VerilogError::unsupported(
                                cond.span(),
                                format!("`{k}` is not assigned on every path of a combinational block (latch)"),
                            ))
                        }
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
                unroll(consts, self.d, inst, var, init, cond, step, *span, |c| {
                    self.flatten(inst, body, c, locals, guard, read)
                })?;
            }
            StmtAst::Empty => {}
        }
        Ok(())
    }

    /// Translates a clocked (or initial) process into statements.
    fn gen(
        &self,
        inst: usize,
        s: &StmtAst,
        consts: &HashMap<String, u64>,
        read: &dyn Fn(&str) -> BvExpr,
        out: &mut Vec<Stmt>,
    ) -> Result<(), VerilogError> {
        match s {
            StmtAst::Block(v) => {
                for x in v {
                    self.gen(inst, x, consts, read, out)?;
                }
            }
            StmtAst::Assign { lhs, rhs, .. } => {
                let sc = self.scope(inst, consts, &self.no_locals, None, read);
                let cur = sc.assign(lhs, rhs, &|n, _| self.var(&self.d.hier(inst, n)))?;
                for (n, v) in cur {
                    out.push(Stmt::assign(self.name(&self.d.hier(inst, &n)), v));
                }
            }
            StmtAst::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self
                    .scope(inst, consts, &self.no_locals, None, read)
                    .cond(cond)?;
                let mut t = Vec::new();
                self.gen(inst, then_branch, consts, read, &mut t)?;
                let mut e = Vec::new();
                if let Some(eb) = else_branch {
                    self.gen(inst, eb, consts, read, &mut e)?;
                }
                match c.as_const() {
                    Some(1) => out.extend(t),
                    Some(_) => out.extend(e),
                    None if t.is_empty() && e.is_empty() => {}
                    None => out.push(Stmt::ite(c, t, e)),
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
                unroll(consts, self.d, inst, var, init, cond, step, *span, |c| {
                    self.gen(inst, body, c, read, out)
                })?;
            }
            StmtAst::Empty => {}
        }
        Ok(())
    }
}

fn assign_kinds(s: &StmtAst, blocking: &mut IndexSet<String>, nba: &mut IndexSet<String>) {
    match s {
        StmtAst::Block(v) => v.iter().for_each(|x| assign_kinds(x, blocking, nba)),
        StmtAst::If {
            then_branch,
            else_branch,
            ..
        } => {
            assign_kinds(then_branch, blocking, nba);
            if let Some(e) = else_branch {
                assign_kinds(e, blocking, nba);
            }
        }
        StmtAst::Assign { lhs, blocking: b, .. } => {
            for base in lhs.bases() {
                if *b {
                    blocking.insert(base.to_string());
                } else {
                    nba.insert(base.to_string());
                }
            }
        }
        StmtAst::For { body, .. } => assign_kinds(body, blocking, nba),
        StmtAst::Empty => {}
    }
}

fn reads_of(s: &StmtAst, out: &mut Vec<String>) {
    match s {
        StmtAst::Block(v) => v.iter().for_each(|x| reads_of(x, out)),
        StmtAst::If {
            cond,
            then_branch,
            else_branch,
        } => {
            cond.idents(out);
            reads_of(then_branch, out);
            if let Some(e) = else_branch {
                reads_of(e, out);
            }
        }
        StmtAst::Assign { lhs, rhs, .. } => {
            rhs.idents(out);
            lhs.index_idents(out);
            // partial writes read the old value of the base
            if !matches!(lhs, LValue::Ident(..)) {
                out.extend(lhs.bases().into_iter().map(String::from));
            }
        }
        StmtAst::For {
            init,
            cond,
            step,
            body,
            ..
        } => {
            init.idents(out);
            cond.idents(out);
            step.idents(out);
            reads_of(body, out);
        }
        StmtAst::Empty => {}
    }
}

pub fn synthesize(d: &ElaboratedDesign) -> Result<SwNetlistProgram, VerilogError> {
    let g = build_comb_graph(d);
    let units = schedule(&g, d);

    let mut loop_vars = Vec::new();
    for i in 0..d.instances.len() {
        let m = d.module(i);
        let mut lv = HashSet::new();
        for a in &m.always {
            loop_vars_of(&a.body, &mut lv);
        }
        for s in &m.initials {
            loop_vars_of(s, &mut lv);
        }
        loop_vars.push(lv);
    }

    // clocked processes and the registers they read
    let mut clocked: Vec<(usize, &AlwaysBlock)> = Vec::new();
    let mut regs_read: IndexSet<String> = IndexSet::new();
    for i in 0..d.instances.len() {
        for a in &d.module(i).always {
            if let Trigger::Posedge(_) = a.trigger {
                let mut blocking = IndexSet::new();
                let mut nba = IndexSet::new();
                assign_kinds(&a.body, &mut blocking, &mut nba);
                if let Some(x) = blocking.iter().find(|x| nba.contains(*x)) {
                    return Err(VerilogError::unsupported(
                        a.span,
                        format!("`{x}` mixes blocking and non-blocking assignments"),
                    ));
                }
                clocked.push((i, a));
                let mut r = Vec::new();
                reads_of(&a.body, &mut r);
                for n in r {
                    if loop_vars[i].contains(&n) {
                        continue;
                    }
                    let h = d.hier(i, &n);
                    if g.registers.contains(&h) {
                        regs_read.insert(h);
                    }
                }
            }
        }
    }
    for drv in &g.drivers {
        for r in &drv.reads {
            if g.registers.contains(r) {
                regs_read.insert(r.clone());
            }
        }
    }

    // variables
    let mut names: HashMap<String, Arc<str>> = HashMap::new();
    let mut widths: IndexMap<Arc<str>, u32> = IndexMap::new();
    for (h, s) in &d.signals {
        if loop_vars[s.instance].contains(&s.local) {
            continue;
        }
        let n: Arc<str> = Arc::from(h.as_str());
        names.insert(h.clone(), n.clone());
        widths.insert(n, s.width);
    }
    let mut shadow: IndexMap<String, Arc<str>> = IndexMap::new();
    for r in g.registers.iter().filter(|r| regs_read.contains(*r)) {
        let mut cand = format!("{r}_old");
        let mut k = 1;
        while d.signals.contains_key(&cand) || shadow.values().any(|s| **s == *cand) {
            cand = format!("{r}_old{k}");
            k += 1;
        }
        let s: Arc<str> = Arc::from(cand.as_str());
        widths.insert(s.clone(), d.signals[r].width);
        shadow.insert(r.clone(), s);
    }

    let sy = Synth {
        d,
        g,
        shadow,
        names,
        widths,
        loop_vars,
        no_consts: HashMap::new(),
        no_locals: HashMap::new(),
    };

    // which units depend on registers
    let mut out_unit: HashMap<&str, usize> = HashMap::new();
    for (u, unit) in units.iter().enumerate() {
        for &k in &unit.drivers {
            for o in &sy.g.drivers[k].outputs {
                out_unit.insert(o.as_str(), u);
            }
        }
    }
    let mut reg_dep = vec![false; units.len()];
    for (u, unit) in units.iter().enumerate() {
        reg_dep[u] = unit.drivers.iter().any(|&k| {
            sy.g.drivers[k].reads.iter().any(|r| {
                sy.g.registers.contains(r)
                    || out_unit.get(r.as_str()).is_some_and(|&p| p != u && reg_dep[p])
            })
        });
    }

    let mut feedback = Vec::new();
    let emit_unit = |u: usize, via_shadow: bool, out: &mut Vec<Stmt>| -> Result<Option<FeedbackGroup>, VerilogError> {
        let unit = &units[u];
        let mut eqs = Vec::new();
        for &k in &unit.drivers {
            eqs.extend(sy.driver_eqs(k, via_shadow)?);
        }
        if !unit.feedback {
            for (t, e) in eqs {
                out.push(Stmt::assign(t, e));
            }
            return Ok(None);
        }
        for (t, _) in &eqs {
            out.push(Stmt::havoc(t.clone()));
        }
        let group = FeedbackGroup { equations: eqs };
        out.push(Stmt::assume(group.constraint(&sy.widths)));
        Ok(Some(group))
    };

    // init
    let mut init = Vec::new();
    let comb_driven: HashSet<&str> = sy
        .g
        .drivers
        .iter()
        .flat_map(|d| d.outputs.iter().map(|s| s.as_str()))
        .collect();
    for (h, s) in &d.signals {
        let Some(n) = sy.names.get(h) else { continue };
        if !comb_driven.contains(h.as_str()) {
            init.push(Stmt::assign(n.clone(), BvExpr::konst(0, s.width)));
        }
    }
    let all_direct = sy.reader(false);
    for i in 0..d.instances.len() {
        for s in &d.module(i).initials {
            sy.gen(i, s, &HashMap::new(), &all_direct, &mut init)?;
        }
    }
    for u in 0..units.len() {
        if let Some(gr) = emit_unit(u, false, &mut init)? {
            feedback.push(gr);
        }
    }

    // step
    let mut step = Vec::new();
    for (r, s) in &sy.shadow {
        step.push(Stmt::assign(s.clone(), sy.var(r)));
    }
    for u in 0..units.len() {
        emit_unit(u, true, &mut step)?;
    }
    for (i, a) in &clocked {
        let mut blocking = IndexSet::new();
        let mut nba = IndexSet::new();
        assign_kinds(&a.body, &mut blocking, &mut nba);
        let own: HashSet<String> = blocking.iter().map(|b| d.hier(*i, b)).collect();
        let read = |h: &str| match sy.shadow.get(h) {
            Some(s) if !own.contains(h) => BvExpr::var(s.clone(), 0, sy.widths[s]),
            _ => sy.var(h),
        };
        sy.gen(*i, &a.body, &HashMap::new(), &read, &mut step)?;
    }
    for u in 0..units.len() {
        if reg_dep[u] {
            emit_unit(u, false, &mut step)?;
        }
    }

    let state_vars: Vec<(Arc<str>, u32)> = d
        .signals
        .iter()
        .filter(|(h, _)| sy.g.registers.contains(*h))
        .map(|(h, s)| (sy.name(h), s.width))
        .collect();
    let to_named = |v: Vec<(String, u32)>| -> Vec<(Arc<str>, u32)> {
        v.into_iter().map(|(n, w)| (sy.name(&n), w)).collect()
    };
    let comb_constraint = if feedback.is_empty() {
        None
    } else {
        let parts: Vec<BvExpr> = feedback.iter().map(|f: &FeedbackGroup| f.constraint(&sy.widths)).collect();
        Some(BvExpr::and_all(&parts))
    };
    Ok(SwNetlistProgram {
        top: d.top.clone(),
        vars: sy.widths.clone(),
        sequential: !clocked.is_empty(),
        state_vars,
        inputs: to_named(d.primary_inputs()),
        outputs: to_named(d.primary_outputs()),
        clock: d.clock.as_ref().map(|c| sy.name(c)),
        shadows: sy.shadow.iter().map(|(r, s)| (sy.name(r), s.clone())).collect(),
        init,
        step,
        feedback,
        comb_constraint,
        asserts: vec![],
    })
}
