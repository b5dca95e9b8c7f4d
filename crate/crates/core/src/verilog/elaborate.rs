// SPDX-License-Identifier: Apache-2.0

//! Hierarchy resolution: builds the instance tree from the top module,
//! substitutes parameters, checks port bindings and drivers, and assigns
//! every signal a hierarchical name such as `top.a.q`.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use super::ast::*;
use super::width::{const_eval, self_width};
use super::VerilogError;
use crate::bv::MAX_WIDTH;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalKind {
    Wire,
    Reg,
    Integer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignalInfo {
    pub kind: SignalKind,
    /// Port direction, if the signal is a port of its module.
    pub dir: Option<Dir>,
    pub width: u32,
    pub instance: usize,
    pub local: String,
}

/// A resolved port connection of a child instance. `actual` lives in the
/// parent's scope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub formal: String,
    pub dir: Dir,
    pub width: u32,
    pub actual: Option<ExprAst>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceNode {
    /// Hierarchical path; the root's path is the top module name.
    pub path: String,
    pub module: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub params: IndexMap<String, u64>,
    /// Connections of this instance's ports (empty for the root).
    pub bindings: Vec<Binding>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElaboratedDesign {
    pub top: String,
    pub modules: IndexMap<String, ModuleAst>,
    /// Pre-order DFS over the instance tree; index 0 is the root.
    pub instances: Vec<InstanceNode>,
    /// Hierarchical name to signal, in declaration order then instance order.
    pub signals: IndexMap<String, SignalInfo>,
    /// Hierarchical name of the single clock (a top-level input), if any
    /// clocked process exists.
    pub clock: Option<String>,
}

impl ElaboratedDesign {
    pub fn module(&self, inst: usize) -> &ModuleAst {
        &self.modules[&self.instances[inst].module]
    }

    pub fn hier(&self, inst: usize, local: &str) -> String {
        format!("{}.{}", self.instances[inst].path, local)
    }

    pub fn signal(&self, inst: usize, local: &str) -> Option<&SignalInfo> {
        self.signals.get(&self.hier(inst, local))
    }

    pub fn param(&self, inst: usize, name: &str) -> Option<u64> {
        self.instances[inst].params.get(name).copied()
    }

    /// Folds a constant expression in the scope of `inst`, with `extra`
    /// bindings (loop variables) taking precedence over parameters.
    pub fn const_in(
        &self,
        inst: usize,
        e: &ExprAst,
        extra: &HashMap<String, u64>,
    ) -> Result<u64, VerilogError> {
        const_eval(e, &|n| extra.get(n).copied().or_else(|| self.param(inst, n)))
    }

    /// Self-determined width of `e` in the scope of `inst`.
    pub fn width_in(
        &self,
        inst: usize,
        e: &ExprAst,
        extra: &HashMap<String, u64>,
    ) -> Result<u32, VerilogError> {
        let sig = |n: &str| {
            if extra.contains_key(n) {
                None
            } else {
                self.signal(inst, n).map(|s| s.width)
            }
        };
        self_width(e, &sig, &|x| self.const_in(inst, x, extra))
    }

    /// Top-level input ports other than the clock.
    pub fn primary_inputs(&self) -> Vec<(String, u32)> {
        self.top_ports(Dir::Input)
            .into_iter()
            .filter(|(n, _)| Some(n) != self.clock.as_ref())
            .collect()
    }

    pub fn primary_outputs(&self) -> Vec<(String, u32)> {
        self.top_ports(Dir::Output)
    }

    fn top_ports(&self, dir: Dir) -> Vec<(String, u32)> {
        let m = self.module(0);
        m.port_order
            .iter()
            .filter_map(|p| {
                let s = self.signal(0, p)?;
                (s.dir == Some(dir)).then(|| (self.hier(0, p), s.width))
            })
            .collect()
    }
}

fn lvalue_targets(l: &LValue, out: &mut Vec<(String, Span)>) {
    match l {
        LValue::Ident(n, s)
        | LValue::BitSelect { base: n, span: s, .. }
        | LValue::PartSelect { base: n, span: s, .. }
        | LValue::IndexedPartSelect { base: n, span: s, .. } => out.push((n.clone(), *s)),
        LValue::Concat(ps) => ps.iter().for_each(|p| lvalue_targets(p, out)),
    }
}

/// Visits every assignment and expression of a statement.
fn walk_stmt<'a>(
    s: &'a StmtAst,
    on_assign: &mut impl FnMut(&'a LValue, bool),
    on_expr: &mut impl FnMut(&'a ExprAst),
) {
    match s {
        StmtAst::Block(v) => v.iter().for_each(|x| walk_stmt(x, on_assign, on_expr)),
        StmtAst::If {
            cond,
            then_branch,
            else_branch,
        } => {
            on_expr(cond);
            walk_stmt(then_branch, on_assign, on_expr);
            if let Some(e) = else_branch {
                walk_stmt(e, on_assign, on_expr);
            }
        }
        StmtAst::Assign {
            lhs, rhs, blocking, ..
        } => {
            on_assign(lhs, *blocking);
            on_expr(rhs);
        }
        StmtAst::For {
            init,
            cond,
            step,
            body,
            ..
        } => {
            on_expr(init);
            on_expr(cond);
            on_expr(step);
            walk_stmt(body, on_assign, on_expr);
        }
        StmtAst::Empty => {}
    }
}

fn for_vars(s: &StmtAst, out: &mut Vec<String>) {
    match s {
        StmtAst::Block(v) => v.iter().for_each(|x| for_vars(x, out)),
        StmtAst::If {
            then_branch,
            else_branch,
            ..
        } => {
            for_vars(then_branch, out);
            if let Some(e) = else_branch {
                for_vars(e, out);
            }
        }
        StmtAst::For { var, body, .. } => {
            out.push(var.clone());
            for_vars(body, out);
        }
        _ => {}
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Driver {
    Assign,
    Always(usize),
    Instance(usize),
}

struct Builder<'m> {
    modules: &'m IndexMap<String, ModuleAst>,
    design: ElaboratedDesign,
    stack: Vec<String>,
}

impl Builder<'_> {
    fn build(
        &mut self,
        module: &str,
        path: String,
        parent: Option<usize>,
        overrides: IndexMap<String, u64>,
        span: Span,
    ) -> Result<usize, VerilogError> {
        let m = match self.modules.get(module) {
            Some(m) => m,
            None => return Err(VerilogError::elab(span, format!("unknown module {module}"))),
        };
        if self.stack.iter().any(|s| s == module) {
            return Err(VerilogError::elab(
                span,
                format!(
                    "recursive instantiation: {} -> {module}",
                    self.stack.join(" -> ")
                ),
            ));
        }
        self.stack.push(module.to_string());

        // parameters
        let mut params: IndexMap<String, u64> = IndexMap::new();
        for p in &m.params {
            if params.contains_key(&p.name) {
                return Err(VerilogError::elab(m.span, format!("duplicate parameter `{}`", p.name)));
            }
            let v = match overrides.get(&p.name) {
                Some(v) if !p.local => *v,
                _ => const_eval(&p.value, &|n| params.get(n).copied())?,
            };
            params.insert(p.name.clone(), v);
        }
        for k in overrides.keys() {
            if !m.params.iter().any(|p| !p.local && &p.name == k) {
                return Err(VerilogError::elab(
                    span,
                    format!("module {module} has no parameter `{k}`"),
                ));
            }
        }

        let idx = self.design.instances.len();
        self.design.instances.push(InstanceNode {
            path: path.clone(),
            module: module.to_string(),
            parent,
            children: vec![],
            params: params.clone(),
            bindings: vec![],
            span,
        });
        if let Some(p) = parent {
            self.design.instances[p].children.push(idx);
        }

        self.declare_signals(m, idx, &path, &params)?;
        self.check_references(m, idx)?;
        let mut drivers = self.collect_drivers(m, idx)?;

        for (k, inst) in m.instances.iter().enumerate() {
            let child_path = format!("{path}.{}", inst.name);
            if self
                .design
                .instances
                .iter()
                .any(|n| n.path == child_path)
            {
                return Err(VerilogError::elab(
                    inst.span,
                    format!("duplicate instance name `{}`", inst.name),
                ));
            }
            let child_mod = match self.modules.get(&inst.module) {
                Some(cm) => cm,
                None => {
                    return Err(VerilogError::elab(
                        inst.span,
                        format!("unknown module {}", inst.module),
                    ))
                }
            };
            let no_extra = HashMap::new();
            let mut ov = IndexMap::new();
            match &inst.params {
                Bindings::Named(v) => {
                    for (name, e) in v {
                        let e = e.as_ref().ok_or_else(|| {
                            VerilogError::elab(inst.span, format!("empty parameter override `{name}`"))
                        })?;
                        ov.insert(name.clone(), self.design.const_in(idx, e, &no_extra)?);
                    }
                }
                Bindings::Positional(v) => {
                    let names: Vec<&ParamDecl> =
                        child_mod.params.iter().filter(|p| !p.local).collect();
                    if v.len() > names.len() {
                        return Err(VerilogError::elab(inst.span, "too many parameter overrides"));
                    }
                    for (e, p) in v.iter().zip(names) {
                        ov.insert(p.name.clone(), self.design.const_in(idx, e, &no_extra)?);
                    }
                }
            }
            let child = self.build(&inst.module, child_path.clone(), Some(idx), ov, inst.span)?;
            let bindings = self.bind_ports(idx, child, inst, child_mod)?;
            for b in &bindings {
                if b.dir != Dir::Output {
                    continue;
                }
                match &b.actual {
                    None => {}
                    Some(ExprAst::Ident(n, s)) => {
                        let sig = self.design.signal(idx, n).ok_or_else(|| {
                            VerilogError::elab(*s, format!("`{n}` is not a signal"))
                        })?;
                        if sig.kind != SignalKind::Wire {
                            return Err(VerilogError::elab(
                                *s,
                                format!("output of instance `{}` drives non-wire `{n}`", inst.name),
                            ));
                        }
                        if sig.dir == Some(Dir::Input) {
                            return Err(VerilogError::elab(*s, format!("input `{n}` is driven inside its module")));
                        }
                        add_driver(&mut drivers, n, Driver::Instance(k), *s)?;
                    }
                    Some(other) => {
                        return Err(VerilogError::unsupported(
                            other.span(),
                            format!(
                                "output port `{}` connected to an expression (only plain signal names)",
                                b.formal
                            ),
                        ))
                    }
                }
            }
            self.design.instances[child].bindings = bindings;
        }
        self.stack.pop();
        Ok(idx)
    }

    fn declare_signals(
        &mut self,
        m: &ModuleAst,
        idx: usize,
        path: &str,
        params: &IndexMap<String, u64>,
    ) -> Result<(), VerilogError> {
        let width_of = |r: &Option<Range>, span: Span| -> Result<u32, VerilogError> {
            let Some(r) = r else { return Ok(1) };
            let lookup = |n: &str| params.get(n).copied();
            let msb = const_eval(&r.msb, &lookup)?;
            let lsb = const_eval(&r.lsb, &lookup)?;
            if lsb != 0 {
                return Err(VerilogError::unsupported(
                    span,
                    format!("range [{msb}:{lsb}] (vectors must be declared [N:0])"),
                ));
            }
            let w = msb + 1;
            if w > u64::from(MAX_WIDTH) {
                return Err(VerilogError::unsupported(
                    span,
                    format!("{w}-bit signal (limit is {MAX_WIDTH})"),
                ));
            }
            Ok(w as u32)
        };
        for p in &m.ports {
            if p.dir == Dir::Inout {
                return Err(VerilogError::unsupported(p.span, format!("inout port `{}`", p.name)));
            }
            if !m.port_order.contains(&p.name) {
                return Err(VerilogError::elab(
                    p.span,
                    format!("`{}` is declared as a port but not listed in the module header", p.name),
                ));
            }
            if m.ports.iter().filter(|q| q.name == p.name).count() > 1 {
                return Err(VerilogError::elab(p.span, format!("port `{}` declared twice", p.name)));
            }
        }
        let mut seen = HashSet::new();
        for n in &m.nets {
            if !seen.insert(&n.name) || m.param(&n.name).is_some() {
                return Err(VerilogError::elab(n.span, format!("`{}` declared twice", n.name)));
            }
        }
        for name in &m.port_order {
            let p = m.port(name).ok_or_else(|| {
                VerilogError::elab(m.span, format!("port `{name}` of {} has no direction declaration", m.name))
            })?;
            let net = m.net(name);
            let mut width = width_of(&p.range, p.span)?;
            let mut kind = if p.is_reg { SignalKind::Reg } else { SignalKind::Wire };
            if let Some(n) = net {
                if n.kind == NetKind::Integer {
                    return Err(VerilogError::unsupported(n.span, "integer port"));
                }
                if n.kind == NetKind::Reg {
                    kind = SignalKind::Reg;
                }
                if n.range.is_some() {
                    let w2 = width_of(&n.range, n.span)?;
                    if p.range.is_some() && w2 != width {
                        return Err(VerilogError::elab(
                            n.span,
                            format!("`{name}` declared with widths {width} and {w2}"),
                        ));
                    }
                    width = w2;
                }
            }
            if kind == SignalKind::Reg && p.dir == Dir::Input {
                return Err(VerilogError::elab(p.span, format!("input `{name}` declared reg")));
            }
            self.design.signals.insert(
                format!("{path}.{name}"),
                SignalInfo {
                    kind,
                    dir: Some(p.dir),
                    width,
                    instance: idx,
                    local: name.clone(),
                },
            );
        }
        for n in &m.nets {
            if m.port(&n.name).is_some() {
                continue;
            }
            let (kind, width) = match n.kind {
                NetKind::Wire => (SignalKind::Wire, width_of(&n.range, n.span)?),
                NetKind::Reg => (SignalKind::Reg, width_of(&n.range, n.span)?),
                NetKind::Integer => (SignalKind::Integer, 32),
            };
            self.design.signals.insert(
                format!("{path}.{}", n.name),
                SignalInfo {
                    kind,
                    dir: None,
                    width,
                    instance: idx,
                    local: n.name.clone(),
                },
            );
        }
        Ok(())
    }

    fn check_references(&self, m: &ModuleAst, idx: usize) -> Result<(), VerilogError> {
        let d = &self.design;
        let known = |n: &str| d.signal(idx, n).is_some() || d.param(idx, n).is_some();
        let mut ids = Vec::new();
        let check = |ids: &mut Vec<String>, span: Span| -> Result<(), VerilogError> {
            for n in ids.drain(..) {
                if !known(&n) {
                    return Err(VerilogError::elab(span, format!("undeclared identifier `{n}`")));
                }
            }
            Ok(())
        };
        for a in &m.assigns {
            a.rhs.idents(&mut ids);
            a.lhs.index_idents(&mut ids);
            check(&mut ids, a.span)?;
        }
        let mut exprs: Vec<&ExprAst> = Vec::new();
        let mut lvs: Vec<&LValue> = Vec::new();
        for a in &m.always {
            walk_stmt(&a.body, &mut |l, _| lvs.push(l), &mut |e| exprs.push(e));
            let mut fv = Vec::new();
            for_vars(&a.body, &mut fv);
            for v in fv {
                match d.signal(idx, &v) {
                    Some(s) if s.kind != SignalKind::Wire => {}
                    _ => {
                        return Err(VerilogError::elab(
                            a.span,
                            format!("loop variable `{v}` must be declared integer or reg"),
                        ))
                    }
                }
            }
            if let Trigger::Posedge(c) = &a.trigger {
                if d.signal(idx, c).is_none() {
                    return Err(VerilogError::elab(a.span, format!("undeclared clock `{c}`")));
                }
            }
        }
        for s in &m.initials {
            walk_stmt(s, &mut |l, _| lvs.push(l), &mut |e| exprs.push(e));
        }
        for inst in &m.instances {
            match &inst.ports {
                Bindings::Named(v) => exprs.extend(v.iter().filter_map(|(_, e)| e.as_ref())),
                Bindings::Positional(v) => exprs.extend(v.iter()),
            }
        }
        for e in exprs {
            e.idents(&mut ids);
            check(&mut ids, e.span())?;
        }
        for l in lvs {
            l.index_idents(&mut ids);
            check(&mut ids, l.span())?;
        }
        Ok(())
    }

    fn collect_drivers(
        &self,
        m: &ModuleAst,
        idx: usize,
    ) -> Result<HashMap<String, Driver>, VerilogError> {
        let d = &self.design;
        let mut drivers = HashMap::new();
        let mut targets = Vec::new();
        for a in &m.assigns {
            lvalue_targets(&a.lhs, &mut targets);
            for (n, s) in targets.drain(..) {
                let sig = d.signal(idx, &n).ok_or_else(|| {
                    VerilogError::elab(s, format!("assignment to undeclared `{n}`"))
                })?;
                if sig.kind != SignalKind::Wire {
                    return Err(VerilogError::elab(s, format!("continuous assignment to reg `{n}`")));
                }
                if sig.dir == Some(Dir::Input) {
                    return Err(VerilogError::elab(s, format!("input `{n}` is driven inside its module")));
                }
                add_driver(&mut drivers, &n, Driver::Assign, s)?;
            }
        }
        for (k, a) in m.always.iter().enumerate() {
            let mut lvs = Vec::new();
            walk_stmt(&a.body, &mut |l, _| lvs.push(l), &mut |_| {});
            let mut fv = Vec::new();
            for_vars(&a.body, &mut fv);
            for l in lvs {
                lvalue_targets(l, &mut targets);
            }
            for (n, s) in targets.drain(..) {
                let sig = d.signal(idx, &n).ok_or_else(|| {
                    VerilogError::elab(s, format!("assignment to undeclared `{n}`"))
                })?;
                if sig.kind == SignalKind::Wire {
                    return Err(VerilogError::elab(
                        s,
                        format!("procedural assignment to wire `{n}` (declare it reg)"),
                    ));
                }
                if fv.contains(&n) {
                    continue;
                }
                match drivers.get(&n) {
                    Some(Driver::Always(j)) if *j == k => {}
                    _ => add_driver(&mut drivers, &n, Driver::Always(k), s)?,
                }
            }
            for v in fv {
                drivers.entry(v).or_insert(Driver::Always(k));
            }
        }
        for s in &m.initials {
            let mut lvs = Vec::new();
            walk_stmt(s, &mut |l, _| lvs.push(l), &mut |_| {});
            for l in lvs {
                lvalue_targets(l, &mut targets);
            }
            for (n, sp) in targets.drain(..) {
                match d.signal(idx, &n) {
                    Some(sig) if sig.kind != SignalKind::Wire => {}
                    _ => {
                        return Err(VerilogError::elab(
                            sp,
                            format!("initial block may only set registers (`{n}`)"),
                        ))
                    }
                }
            }
        }
        Ok(drivers)
    }

    fn bind_ports(
        &self,
        parent: usize,
        child: usize,
        inst: &Instance,
        cm: &ModuleAst,
    ) -> Result<Vec<Binding>, VerilogError> {
        let d = &self.design;
        let mut actuals: IndexMap<String, Option<ExprAst>> = IndexMap::new();
        match &inst.ports {
            Bindings::Named(v) => {
                for (f, a) in v {
                    if !cm.port_order.contains(f) {
                        return Err(VerilogError::elab(
                            inst.span,
                            format!("module {} has no port `{f}`", cm.name),
                        ));
                    }
                    if actuals.insert(f.clone(), a.clone()).is_some() {
                        return Err(VerilogError::elab(inst.span, format!("port `{f}` bound twice")));
                    }
                }
            }
            Bindings::Positional(v) => {
                if v.len() > cm.port_order.len() {
                    return Err(VerilogError::elab(
                        inst.span,
                        format!("too many port connections for {}", cm.name),
                    ));
                }
                for (a, f) in v.iter().zip(&cm.port_order) {
                    actuals.insert(f.clone(), Some(a.clone()));
                }
            }
        }
        let mut out = Vec::new();
        let no_extra = HashMap::new();
        for f in &cm.port_order {
            let sig = d.signal(child, f).expect("declared port");
            let dir = sig.dir.expect("port");
            let actual = actuals.get(f).cloned().flatten();
            if actual.is_none() && dir == Dir::Input {
                return Err(VerilogError::elab(
                    inst.span,
                    format!("unbound port `{f}` of instance {}", d.instances[child].path),
                ));
            }
            if let Some(a) = &actual {
                let unsized_const = matches!(a, ExprAst::Const { width: None, .. });
                let w = d.width_in(parent, a, &no_extra)?;
                if !unsized_const && w != sig.width {
                    return Err(VerilogError::elab(
                        inst.span,
                        format!(
                            "width mismatch binding port `{f}` of {}: formal is {} bits, actual is {w}",
                            d.instances[child].path, sig.width
                        ),
                    ));
                }
            }
            out.push(Binding {
                formal: f.clone(),
                dir,
                width: sig.width,
                actual,
            });
        }
        Ok(out)
    }
}

fn add_driver(
    drivers: &mut HashMap<String, Driver>,
    n: &str,
    drv: Driver,
    span: Span,
) -> Result<(), VerilogError> {
    if let Some(prev) = drivers.get(n) {
        let what = match (prev, drv) {
            (Driver::Always(_), Driver::Always(_)) => "assigned in more than one always block",
            _ => "has multiple drivers",
        };
        return Err(VerilogError::elab(span, format!("`{n}` {what}")));
    }
    drivers.insert(n.to_string(), drv);
    Ok(())
}

/// Follows clock port bindings up to a top-level signal.
fn resolve_clock(d: &ElaboratedDesign, inst: usize, local: &str, span: Span) -> Result<String, VerilogError> {
    let (mut inst, mut local) = (inst, local.to_string());
    loop {
        let sig = d
            .signal(inst, &local)
            .ok_or_else(|| VerilogError::elab(span, format!("undeclared clock `{local}`")))?;
        if sig.width != 1 {
            return Err(VerilogError::elab(span, format!("clock `{local}` is not 1 bit wide")));
        }
        match (sig.dir, d.instances[inst].parent) {
            (Some(Dir::Input), None) => return Ok(d.hier(inst, &local)),
            (Some(Dir::Input), Some(p)) => {
                let b = d.instances[inst]
                    .bindings
                    .iter()
                    .find(|b| b.formal == local)
                    .expect("bound input");
                match &b.actual {
                    Some(ExprAst::Ident(n, _)) => {
                        inst = p;
                        local = n.clone();
                    }
                    _ => {
                        return Err(VerilogError::unsupported(
                            span,
                            "clock driven by an expression (derived clocks)",
                        ))
                    }
                }
            }
            _ => {
                return Err(VerilogError::unsupported(
                    span,
                    format!(
                        "clock `{}` is not a top-level input (derived or gated clocks)",
                        d.hier(inst, &local)
                    ),
                ))
            }
        }
    }
}

pub fn elaborate(modules: &[ModuleAst], top: &str) -> Result<ElaboratedDesign, VerilogError> {
    let mut map = IndexMap::new();
    for m in modules {
        if map.insert(m.name.clone(), m.clone()).is_some() {
            return Err(VerilogError::elab(m.span, format!("duplicate module `{}`", m.name)));
        }
    }
    let top_span = map.get(top).map(|m| m.span).unwrap_or_default();
    let mut b = Builder {
        modules: &map,
        design: ElaboratedDesign {
            top: top.to_string(),
            modules: IndexMap::new(),
            instances: vec![],
            signals: IndexMap::new(),
            clock: None,
        },
        stack: vec![],
    };
    b.build(top, top.to_string(), None, IndexMap::new(), top_span)?;
    let mut design = b.design;
    design.modules = map;

    let mut clocks: Vec<String> = Vec::new();
    for i in 0..design.instances.len() {
        for a in &design.module(i).always {
            if let Trigger::Posedge(c) = &a.trigger {
                let root = resolve_clock(&design, i, c, a.span)?;
                if !clocks.contains(&root) {
                    clocks.push(root);
                }
            }
        }
    }
    if clocks.len() > 1 {
        return Err(VerilogError::unsupported(
            top_span,
            format!("multiple clock signals: {}", clocks.join(", ")),
        ));
    }
    design.clock = clocks.pop();
    Ok(design)
}
