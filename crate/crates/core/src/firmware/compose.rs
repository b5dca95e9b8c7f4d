// SPDX-License-Identifier: Apache-2.0

//! Sequential composition of firmware with a software netlist.
//!
//! Every `step()` expands to: havoc each primary input not pinned by
//! `set_input`, the netlist step routine, the netlist's registered asserts,
//! and an increment of the cycle counter. Functions are inlined. Arrays
//! become one variable per element, and dynamic indexing becomes `ite`
//! chains (an out-of-range read yields 0, an out-of-range write is dropped).
//!
//! Operators work at the wider operand's width. Unsized literals adapt to
//! the other operand; shifting or complementing a literal works on 64 bits.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use indexmap::IndexMap;

use super::ast::*;
use super::property::lower_labeled;
use super::FwError;
use crate::bv::{mask, BvExpr};
use crate::ir::{Program, Stmt, CYCLE_VAR};
use crate::netlist::SwNetlistProgram;

type Res<T> = Result<T, FwError>;

#[derive(Clone, Debug)]
enum Sym {
    Scalar(Arc<str>, u32),
    Array(Vec<Arc<str>>, u32),
}

#[derive(Clone, Debug)]
enum V {
    S(BvExpr),
    L(u64),
}

fn bits(v: u64) -> u32 {
    (64 - v.leading_zeros()).max(1)
}

impl V {
    fn width(&self) -> u32 {
        match self {
            V::S(e) => e.width(),
            V::L(v) => bits(*v),
        }
    }

    fn at(&self, w: u32) -> BvExpr {
        match self {
            V::S(e) => e.resize(w),
            V::L(v) => BvExpr::konst_trunc(*v, w),
        }
    }

    fn cond(&self) -> V {
        match self {
            V::S(e) => V::S(e.to_bool()),
            V::L(v) => V::L(u64::from(*v != 0)),
        }
    }

    fn expr(&self) -> BvExpr {
        match self {
            V::S(e) => e.clone(),
            V::L(v) => BvExpr::konst(*v, bits(*v)),
        }
    }
}

struct Lower<'a> {
    hw: &'a SwNetlistProgram,
    fw: &'a FirmwareProgram,
    vars: IndexMap<Arc<str>, u32>,
    scopes: Vec<HashMap<String, Sym>>,
    pinned: BTreeSet<Arc<str>>,
    inputs: HashSet<Arc<str>>,
    call_stack: Vec<String>,
    counter: usize,
    steps: usize,
}

impl<'a> Lower<'a> {
    fn fresh_name(&mut self, base: &str) -> Arc<str> {
        if !self.vars.contains_key(base) {
            return Arc::from(base);
        }
        loop {
            self.counter += 1;
            let n = format!("{base}#{}", self.counter);
            if !self.vars.contains_key(n.as_str()) {
                return Arc::from(n);
            }
        }
    }

    fn declare(&mut self, base: &str, w: u32) -> Arc<str> {
        let n = self.fresh_name(base);
        self.vars.insert(n.clone(), w);
        n
    }

    fn var(&self, n: &Arc<str>) -> BvExpr {
        BvExpr::var(n.clone(), 0, self.vars[n])
    }

    fn lookup(&self, name: &str) -> Option<&Sym> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn decl(&mut self, d: &VarDecl, out: &mut Vec<Stmt>) -> Res<()> {
        let sym = match d.len {
            None => {
                let n = self.declare(&d.name, d.width);
                let v = match &d.init {
                    Some(e) => self.expr(e, out)?.at(d.width),
                    None => BvExpr::konst(0, d.width),
                };
                out.push(Stmt::assign(n.clone(), v));
                Sym::Scalar(n, d.width)
            }
            Some(len) => {
                let mut elems = Vec::new();
                for k in 0..len {
                    let n = self.declare(&format!("{}[{k}]", d.name), d.width);
                    out.push(Stmt::assign(n.clone(), BvExpr::konst(0, d.width)));
                    elems.push(n);
                }
                Sym::Array(elems, d.width)
            }
        };
        let scope = self.scopes.last_mut().expect("scope");
        if scope.contains_key(&d.name) {
            return Err(FwError::new(d.pos, format!("`{}` declared twice in the same scope", d.name)));
        }
        scope.insert(d.name.clone(), sym);
        Ok(())
    }

    fn hw_signal(&self, name: &str, pos: Pos) -> Res<BvExpr> {
        let n = self
            .hw
            .resolve(name)
            .ok_or_else(|| FwError::new(pos, format!("unknown variable or signal `{name}`")))?;
        Ok(BvExpr::var(n.clone(), 0, self.hw.vars[&n]))
    }

    fn index(&mut self, i: &FwExpr, len: usize, pos: Pos, out: &mut Vec<Stmt>) -> Res<Result<usize, BvExpr>> {
        match self.expr(i, out)? {
            V::L(k) if (k as usize) < len && k < u64::from(u32::MAX) => Ok(Ok(k as usize)),
            V::L(k) => Err(FwError::new(pos, format!("index {k} out of bounds (size {len})"))),
            V::S(e) => Ok(Err(e)),
        }
    }

    fn expr(&mut self, e: &FwExpr, out: &mut Vec<Stmt>) -> Res<V> {
        Ok(match e {
            FwExpr::Num(v) => V::L(*v),
            FwExpr::Ident(n, pos) => match self.lookup(n).cloned() {
                Some(Sym::Scalar(v, _)) => V::S(self.var(&v)),
                Some(Sym::Array(..)) => return Err(FwError::new(*pos, format!("array `{n}` used as a value"))),
                None => V::S(self.hw_signal(n, *pos)?),
            },
            FwExpr::ReadOutput(n, pos) => V::S(self.hw_signal(n, *pos)?),
            FwExpr::Index(n, i, pos) => {
                let Some(Sym::Array(elems, w)) = self.lookup(n).cloned() else {
                    return Err(FwError::new(*pos, format!("`{n}` is not an array")));
                };
                match self.index(i, elems.len(), *pos, out)? {
                    Ok(k) => V::S(self.var(&elems[k])),
                    Err(ie) => {
                        let mut acc = BvExpr::konst(0, w);
                        for (k, el) in elems.iter().enumerate().rev() {
                            if bits(k as u64) > ie.width() {
                                continue;
                            }
                            let hit = ie.eq(&BvExpr::konst(k as u64, ie.width()));
                            acc = BvExpr::ite(&hit, &self.var(el), &acc);
                        }
                        V::S(acc)
                    }
                }
            }
            FwExpr::Nondet(w, _) => {
                let n = self.declare("nondet", *w);
                out.push(Stmt::havoc(n.clone()));
                V::S(self.var(&n))
            }
            FwExpr::Call(name, args, pos) => match self.inline(name, args, *pos, out)? {
                Some(r) => V::S(r),
                None => return Err(FwError::new(*pos, format!("`{name}` returns no value"))),
            },
            FwExpr::Cast(w, a) => match self.expr(a, out)? {
                V::L(v) => V::L(v & mask(*w)),
                V::S(x) => V::S(x.resize(*w)),
            },
            FwExpr::Unary(op, a) => {
                let x = self.expr(a, out)?;
                match (op, x) {
                    (FwUnOp::LogNot, x) => match x.cond() {
                        V::L(v) => V::L(v ^ 1),
                        V::S(c) => V::S(c.not()),
                    },
                    (FwUnOp::Not, V::L(v)) => V::L(!v),
                    (FwUnOp::Neg, V::L(v)) => V::L(v.wrapping_neg()),
                    (FwUnOp::Not, V::S(x)) => V::S(x.not()),
                    (FwUnOp::Neg, V::S(x)) => V::S(x.neg()),
                }
            }
            FwExpr::Ternary(c, a, b) => {
                let c = self.expr(c, out)?.cond();
                let (x, y) = self.pure_pair(a, b, out)?;
                match c {
                    V::L(v) => {
                        if v != 0 {
                            x
                        } else {
                            y
                        }
                    }
                    V::S(c) => {
                        let w = x.width().max(y.width());
                        V::S(BvExpr::ite(&c, &x.at(w), &y.at(w)))
                    }
                }
            }
            FwExpr::Binary(op, a, b) => {
                let x = self.expr(a, out)?;
                let y = if matches!(op, FwBinOp::LogAnd | FwBinOp::LogOr) {
                    self.pure(b, out)?
                } else {
                    self.expr(b, out)?
                };
                binary(*op, x, y)
            }
        })
    }

    /// Lowers an operand that is only conditionally evaluated, which must
    /// not have side effects.
    fn pure(&mut self, e: &FwExpr, out: &mut Vec<Stmt>) -> Res<V> {
        let mut pre = Vec::new();
        let v = self.expr(e, &mut pre)?;
        if pre.iter().any(|s| !matches!(s, Stmt::Assign { .. })) {
            return Err(FwError::new(
                first_pos(e),
                "conditionally evaluated operand has side effects (call, nondet or step)",
            ));
        }
        out.extend(pre);
        Ok(v)
    }

    fn pure_pair(&mut self, a: &FwExpr, b: &FwExpr, out: &mut Vec<Stmt>) -> Res<(V, V)> {
        Ok((self.pure(a, out)?, self.pure(b, out)?))
    }

    fn inline(&mut self, name: &str, args: &[FwExpr], pos: Pos, out: &mut Vec<Stmt>) -> Res<Option<BvExpr>> {
        let f = self
            .fw
            .functions
            .get(name)
            .ok_or_else(|| FwError::new(pos, format!("unknown function `{name}`")))?;
        if self.call_stack.iter().any(|c| c == name) {
            return Err(FwError::new(pos, format!("recursive call to `{name}`")));
        }
        if f.params.len() != args.len() {
            return Err(FwError::new(
                pos,
                format!("`{name}` takes {} arguments, {} given", f.params.len(), args.len()),
            ));
        }
        let mut vals = Vec::new();
        for a in args {
            vals.push(self.expr(a, out)?);
        }
        self.counter += 1;
        let inst = self.counter;
        let mut frame = HashMap::new();
        for ((p, w), v) in f.params.iter().zip(vals) {
            let n = self.declare(&format!("{name}#{inst}.{p}"), *w);
            out.push(Stmt::assign(n.clone(), v.at(*w)));
            frame.insert(p.clone(), Sym::Scalar(n, *w));
        }
        let globals = self.scopes[0].clone();
        let saved = std::mem::replace(&mut self.scopes, vec![globals, frame]);
        self.call_stack.push(name.to_string());
        let (body, ret_expr) = match f.body.last() {
            Some(FwStmt::Return(v, _)) => (&f.body[..f.body.len() - 1], v.as_ref()),
            _ => (&f.body[..], None),
        };
        let res = (|| -> Res<Option<BvExpr>> {
            self.stmts(body, out)?;
            match (f.ret, ret_expr) {
                (Some(w), Some(e)) => {
                    let v = self.expr(e, out)?.at(w);
                    let r = self.declare(&format!("{name}#{inst}.ret"), w);
                    out.push(Stmt::assign(r.clone(), v));
                    Ok(Some(self.var(&r)))
                }
                (Some(_), None) => Err(FwError::new(f.pos, format!("`{name}` must end with `return <value>;`"))),
                (None, Some(_)) => Err(FwError::new(f.pos, format!("void function `{name}` returns a value"))),
                (None, None) => Ok(None),
            }
        })();
        self.call_stack.pop();
        self.scopes = saved;
        res
    }

    fn scoped(&mut self, stmts: &[FwStmt], out: &mut Vec<Stmt>) -> Res<()> {
        self.scopes.push(HashMap::new());
        let r = self.stmts(stmts, out);
        self.scopes.pop();
        r
    }

    fn stmts(&mut self, stmts: &[FwStmt], out: &mut Vec<Stmt>) -> Res<()> {
        for s in stmts {
            self.stmt(s, out)?;
        }
        Ok(())
    }

    fn step(&mut self, out: &mut Vec<Stmt>) {
        self.steps += 1;
        for (n, _) in &self.hw.inputs {
            if !self.pinned.contains(n) {
                out.push(Stmt::havoc(n.clone()));
            }
        }
        out.extend(self.hw.step.iter().cloned());
        for (label, c) in &self.hw.asserts {
            out.push(Stmt::assert(label.clone(), c.clone()));
        }
        let cyc = BvExpr::var(CYCLE_VAR, 0, 32);
        out.push(Stmt::assign(CYCLE_VAR, cyc.add(&BvExpr::konst(1, 32))));
    }

    /// Inputs pinned anywhere in `stmts`, including inside called functions.
    fn pins_in(&self, stmts: &[FwStmt], seen: &mut HashSet<String>, acc: &mut BTreeSet<Arc<str>>) {
        let mut exprs: Vec<&FwExpr> = Vec::new();
        for s in stmts {
            match s {
                FwStmt::SetInput { name, value, .. } => {
                    if let Some(n) = self.hw.resolve(name) {
                        acc.insert(n);
                    }
                    exprs.push(value);
                }
                FwStmt::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    exprs.push(cond);
                    self.pins_in(then_branch, seen, acc);
                    self.pins_in(else_branch, seen, acc);
                }
                FwStmt::While { cond, body } => {
                    exprs.push(cond);
                    self.pins_in(body, seen, acc);
                }
                FwStmt::For { init, cond, step, body } => {
                    exprs.push(cond);
                    self.pins_in(init, seen, acc);
                    self.pins_in(step, seen, acc);
                    self.pins_in(body, seen, acc);
                }
                FwStmt::Block(b) => self.pins_in(b, seen, acc),
                FwStmt::Call { name, args, .. } => {
                    exprs.extend(args);
                    self.pins_in_fn(name, seen, acc);
                }
                FwStmt::Decl(d) => exprs.extend(d.init.as_ref()),
                FwStmt::Assign { value, target } => {
                    exprs.push(value);
                    if let FwLValue::Elem(_, i, _) = target {
                        exprs.push(i);
                    }
                }
                FwStmt::Assume(c) | FwStmt::Assert { cond: c, .. } => exprs.push(c),
                FwStmt::Return(Some(v), _) => exprs.push(v),
                _ => {}
            }
        }
        for e in exprs {
            let mut calls = Vec::new();
            calls_in(e, &mut calls);
            for c in calls {
                self.pins_in_fn(&c, seen, acc);
            }
        }
    }

    fn pins_in_fn(&self, name: &str, seen: &mut HashSet<String>, acc: &mut BTreeSet<Arc<str>>) {
        if !seen.insert(name.to_string()) {
            return;
        }
        if let Some(f) = self.fw.functions.get(name) {
            self.pins_in(&f.body, seen, acc);
        }
    }

    fn pin_loop(&mut self, body: &[FwStmt]) {
        let mut acc = BTreeSet::new();
        self.pins_in(body, &mut HashSet::new(), &mut acc);
        self.pinned.extend(acc);
    }

    fn assign_target(&mut self, t: &FwLValue, value: &FwExpr, out: &mut Vec<Stmt>) -> Res<()> {
        match t {
            FwLValue::Var(n, pos) => {
                let Some(Sym::Scalar(v, w)) = self.lookup(n).cloned() else {
                    return Err(FwError::new(
                        *pos,
                        format!("`{n}` is not a firmware variable (use set_input to drive inputs)"),
                    ));
                };
                if let FwExpr::Nondet(nw, _) = value {
                    if *nw == w {
                        out.push(Stmt::havoc(v));
                        return Ok(());
                    }
                }
                let x = self.expr(value, out)?.at(w);
                out.push(Stmt::assign(v, x));
            }
            FwLValue::Elem(n, i, pos) => {
                let Some(Sym::Array(elems, w)) = self.lookup(n).cloned() else {
                    return Err(FwError::new(*pos, format!("`{n}` is not an array")));
                };
                let idx = self.index(i, elems.len(), *pos, out)?;
                let x = self.expr(value, out)?.at(w);
                match idx {
                    Ok(k) => out.push(Stmt::assign(elems[k].clone(), x)),
                    Err(ie) => {
                        for (k, el) in elems.iter().enumerate() {
                            if bits(k as u64) > ie.width() {
                                continue;
                            }
                            let hit = ie.eq(&BvExpr::konst(k as u64, ie.width()));
                            out.push(Stmt::assign(el.clone(), BvExpr::ite(&hit, &x, &self.var(el))));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn stmt(&mut self, s: &FwStmt, out: &mut Vec<Stmt>) -> Res<()> {
        match s {
            FwStmt::Decl(d) => self.decl(d, out)?,
            FwStmt::Assign { target, value } => self.assign_target(target, value, out)?,
            FwStmt::Block(b) => self.scoped(b, out)?,
            FwStmt::If {
                cond,
                then_branch,
                else_branch,
            } => match self.expr(cond, out)?.cond() {
                V::L(v) => self.scoped(if v != 0 { then_branch } else { else_branch }, out)?,
                V::S(c) => {
                    let before = self.pinned.clone();
                    let mut t = Vec::new();
                    self.scoped(then_branch, &mut t)?;
                    let after_then = std::mem::replace(&mut self.pinned, before);
                    let mut e = Vec::new();
                    self.scoped(else_branch, &mut e)?;
                    self.pinned.extend(after_then);
                    out.push(Stmt::ite(c, t, e));
                }
            },
            FwStmt::While { cond, body } => {
                self.pin_loop(body);
                self.lower_loop(cond, body, &[], out)?;
            }
            FwStmt::For { init, cond, step, body } => {
                self.scopes.push(HashMap::new());
                let r = (|| {
                    self.stmts(init, out)?;
                    self.pin_loop(body);
                    self.pin_loop(step);
                    self.lower_loop(cond, body, step, out)
                })();
                self.scopes.pop();
                r?;
            }
            FwStmt::Assume(c) => {
                let c = self.expr(c, out)?.cond();
                out.push(Stmt::assume(c.expr()));
            }
            FwStmt::Assert { cond, label } => {
                let c = self.expr(cond, out)?.cond();
                out.push(Stmt::assert(label.clone(), c.expr()));
            }
            FwStmt::Step => self.step(out),
            FwStmt::SetInput { name, value, pos } => {
                let n = self
                    .hw
                    .resolve(name)
                    .filter(|n| self.inputs.contains(n))
                    .ok_or_else(|| FwError::new(*pos, format!("`{name}` is not a primary input")))?;
                let w = self.hw.vars[&n];
                let v = self.expr(value, out)?.at(w);
                out.push(Stmt::assign(n.clone(), v));
                self.pinned.insert(n);
            }
            FwStmt::Call { name, args, pos } => {
                self.inline(name, args, *pos, out)?;
            }
            FwStmt::Return(_, pos) => {
                return Err(FwError::new(*pos, "`return` is only supported as the last statement of a function"))
            }
            FwStmt::Property(p, pos) => {
                let label = format!("property@{pos}");
                let stmts = lower_labeled(p, &label);
                self.stmts(&stmts, out)?;
            }
        }
        Ok(())
    }

    fn lower_loop(&mut self, cond: &FwExpr, body: &[FwStmt], step: &[FwStmt], out: &mut Vec<Stmt>) -> Res<()> {
        let mut pre = Vec::new();
        let c = self.expr(cond, &mut pre)?.cond();
        out.extend(pre.iter().cloned());
        if let V::L(0) = c {
            return Ok(());
        }
        let mut b = Vec::new();
        self.scoped(body, &mut b)?;
        self.stmts(step, &mut b)?;
        b.extend(pre);
        out.push(Stmt::Loop { cond: c.expr(), body: b });
        Ok(())
    }
}

fn first_pos(e: &FwExpr) -> Pos {
    match e {
        FwExpr::Ident(_, p) | FwExpr::Index(_, _, p) | FwExpr::Nondet(_, p) | FwExpr::ReadOutput(_, p) | FwExpr::Call(_, _, p) => *p,
        FwExpr::Unary(_, a) | FwExpr::Cast(_, a) => first_pos(a),
        FwExpr::Binary(_, a, _) | FwExpr::Ternary(a, _, _) => first_pos(a),
        FwExpr::Num(_) => Pos::default(),
    }
}

fn calls_in(e: &FwExpr, out: &mut Vec<String>) {
    match e {
        FwExpr::Call(n, args, _) => {
            out.push(n.clone());
            args.iter().for_each(|a| calls_in(a, out));
        }
        FwExpr::Index(_, i, _) => calls_in(i, out),
        FwExpr::Unary(_, a) | FwExpr::Cast(_, a) => calls_in(a, out),
        FwExpr::Binary(_, a, b) => {
            calls_in(a, out);
            calls_in(b, out);
        }
        FwExpr::Ternary(c, a, b) => {
            calls_in(c, out);
            calls_in(a, out);
            calls_in(b, out);
        }
        _ => {}
    }
}

fn binary(op: FwBinOp, x: V, y: V) -> V {
    use FwBinOp::*;
    if let (V::L(a), V::L(b)) = (&x, &y) {
        let (a, b) = (*a, *b);
        return V::L(match op {
            Mul => a.wrapping_mul(b),
            Add => a.wrapping_add(b),
            Sub => a.wrapping_sub(b),
            Shl => a.checked_shl(b.min(64) as u32).unwrap_or(0),
            Shr => a.checked_shr(b.min(64) as u32).unwrap_or(0),
            Lt => u64::from(a < b),
            Le => u64::from(a <= b),
            Gt => u64::from(a > b),
            Ge => u64::from(a >= b),
            Eq => u64::from(a == b),
            Ne => u64::from(a != b),
            And => a & b,
            Xor => a ^ b,
            Or => a | b,
            LogAnd => u64::from(a != 0 && b != 0),
            LogOr => u64::from(a != 0 || b != 0),
        });
    }
    match op {
        LogAnd | LogOr => {
            let (a, b) = (x.cond().at(1), y.cond().at(1));
            V::S(if op == LogAnd { a.and(&b) } else { a.or(&b) })
        }
        Shl | Shr => {
            let a = match &x {
                V::S(e) => e.clone(),
                V::L(v) => BvExpr::konst(*v, 64),
            };
            let s = match &y {
                V::S(e) => e.clone(),
                V::L(v) => BvExpr::konst_trunc(*v, 64),
            };
            V::S(if op == Shl { a.shl(&s) } else { a.lshr(&s) })
        }
        _ => {
            let w = x.width().max(y.width());
            let (a, b) = (x.at(w), y.at(w));
            V::S(match op {
                Mul => a.mul(&b),
                Add => a.add(&b),
                Sub => a.sub(&b),
                And => a.and(&b),
                Xor => a.xor(&b),
                Or => a.or(&b),
                Lt => a.ult(&b),
                Le => a.ule(&b),
                Gt => a.ugt(&b),
                Ge => a.uge(&b),
                Eq => a.eq(&b),
                Ne => a.ne(&b),
                _ => unreachable!("handled above"),
            })
        }
    }
}

/// Firmware-free harness: the netlist is stepped forever with every input
/// havocked each cycle.
pub fn default_harness() -> FirmwareProgram {
    let mut p = FirmwareProgram::default();
    p.functions.insert(
        "main".into(),
        Function {
            name: "main".into(),
            ret: None,
            params: Vec::new(),
            body: vec![FwStmt::While {
                cond: FwExpr::Num(1),
                body: vec![FwStmt::Step],
            }],
            pos: Pos::default(),
        },
    );
    p
}

/// Inlines `fw` (from `main`) after the netlist's initial block.
pub fn compose(fw: &FirmwareProgram, hw: &SwNetlistProgram) -> Result<Program, FwError> {
    let main = fw
        .functions
        .get("main")
        .ok_or_else(|| FwError::new(Pos::default(), "no `main` function"))?;
    if !main.params.is_empty() {
        return Err(FwError::new(main.pos, "`main` takes no parameters"));
    }
    let mut vars = hw.vars.clone();
    vars.insert(Arc::from(CYCLE_VAR), 32);
    let mut l = Lower {
        hw,
        fw,
        vars,
        scopes: vec![HashMap::new()],
        pinned: BTreeSet::new(),
        inputs: hw.inputs.iter().map(|(n, _)| n.clone()).collect(),
        call_stack: Vec::new(),
        counter: 0,
        steps: 0,
    };
    let mut body = vec![Stmt::assign(CYCLE_VAR, BvExpr::konst(0, 32))];
    body.extend(hw.init.iter().cloned());
    for g in &fw.globals {
        l.decl(g, &mut body)?;
    }
    l.inline("main", &[], main.pos, &mut body)?;
    if l.steps == 0 && hw.sequential {
        log::warn!("firmware never calls step(); the clock does not advance");
    }
    Ok(Program { vars: l.vars, body })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firmware::parse_firmware;
    use crate::interp::{run_with, Outcome};
    use crate::netlist::synthesize;
    use crate::verilog::{elaborate, parse_source};

    fn counter() -> SwNetlistProgram {
        let src = "module top(input clk, input en, input [3:0] d, output [3:0] q);
                     reg [3:0] r; assign q = r;
                     always @(posedge clk) if (en) r <= r + d;
                   endmodule";
        synthesize(&elaborate(&parse_source(src).unwrap(), "top").unwrap()).unwrap()
    }

    fn run(fw: &str) -> (Program, Outcome, IndexMap<Arc<str>, u64>) {
        let p = compose(&parse_firmware(fw).unwrap(), &counter()).unwrap();
        let p2 = crate::unwind::unwind(&p, 8).program;
        let r = run_with(&p2, &HashMap::new(), HashMap::<u32, u64>::new(), false).unwrap();
        (p, r.outcome, r.env)
    }

    #[test]
    fn pinned_inputs_drive_the_counter() {
        let (p, out, env) = run(
            "u8 acc;
             u4 twice(u4 x) { return x + x; }
             void main() {
               set_input(en, 1); set_input(d, twice(3));
               for (u8 i = 0; i < 3; i++) step();
               acc = read_output(q);
               assert(q == 2, \"wraps\");
             }",
        );
        assert_eq!(env["acc"], 18 % 16);
        assert_eq!(out, Outcome::Completed);
        let mut havocs = 0;
        p.walk(|s| havocs += usize::from(matches!(s, Stmt::Havoc { .. })));
        assert_eq!(havocs, 0);
    }

    #[test]
    fn unpinned_inputs_are_havocked_each_step() {
        let fw = parse_firmware("void main() { set_input(en, 0); step(); step(); }").unwrap();
        let p = compose(&fw, &counter()).unwrap();
        let mut havocs = Vec::new();
        p.walk(|s| {
            if let Stmt::Havoc { target, .. } = s {
                havocs.push(target.to_string());
            }
        });
        assert_eq!(havocs, ["top.d", "top.d"]);
    }

    #[test]
    fn one_assert_without_steps_composes_to_one_assert() {
        let p = compose(&parse_firmware("void main() { assert(1, \"t\"); }").unwrap(), &counter()).unwrap();
        let asserts: Vec<&Stmt> = p.body.iter().filter(|s| matches!(s, Stmt::Assert { .. })).collect();
        assert_eq!(asserts.len(), 1);
    }

    #[test]
    fn arrays_with_dynamic_index() {
        let (_, out, env) = run(
            "u4 a[3];
             void main() {
               u2 i = 0;
               while (i < 3) { a[i] = i + 5; i++; }
               a[i] = 9;
               assert(a[1] == 6 && a[i] == 0);
             }",
        );
        assert_eq!(out, Outcome::Completed);
        assert_eq!((env["a[0]"], env["a[1]"], env["a[2]"]), (5, 6, 7));
    }

    #[test]
    fn rejects_bad_programs() {
        let hw = counter();
        let bad = [
            "void main() { set_input(q, 1); }",
            "void main() { zz = 1; }",
            "void f() { f(); } void main() { f(); }",
            "u4 g() { step(); } void main() { u4 x = g(); }",
            "void main() { u4 x = 1 && step_fn(); } void step_fn() {}",
        ];
        for src in bad {
            let fw = parse_firmware(src).unwrap();
            assert!(compose(&fw, &hw).is_err(), "{src}");
        }
    }
}
