// SPDX-License-Identifier: Apache-2.0

//! Combinational dependency graph over the flattened design.

use std::collections::{HashMap, HashSet};

use indexmap::{IndexMap, IndexSet};

use crate::verilog::{
    AlwaysBlock, Dir, ElaboratedDesign, ExprAst, LValue, StmtAst, Trigger,
};

/// One source of combinational values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DriverKind {
    /// `assign` number `index` of instance `inst`.
    Assign { inst: usize, index: usize },
    /// `always @(*)` number `index` of instance `inst`.
    CombAlways { inst: usize, index: usize },
    /// Input port `port` of instance `child`, driven from the parent.
    BindIn { child: usize, port: usize },
    /// Output port `port` of instance `child`, driving a parent net.
    BindOut { child: usize, port: usize },
}

impl DriverKind {
    /// Instance whose body contains the driver (for bindings, the child).
    pub fn owner(&self) -> usize {
        match *self {
            DriverKind::Assign { inst, .. } | DriverKind::CombAlways { inst, .. } => inst,
            DriverKind::BindIn { child, .. } | DriverKind::BindOut { child, .. } => child,
        }
    }

    pub fn is_binding(&self) -> bool {
        matches!(self, DriverKind::BindIn { .. } | DriverKind::BindOut { .. })
    }
}

#[derive(Clone, Debug)]
pub struct CombDriver {
    pub kind: DriverKind,
    /// Hierarchical names written.
    pub outputs: Vec<String>,
    /// Hierarchical names read.
    pub reads: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct CombDepGraph {
    /// Sources (primary inputs, registers) and combinational signals.
    pub nodes: Vec<String>,
    /// `(u, v)`: the driver of `v` reads `u`.
    pub edges: Vec<(usize, usize)>,
    /// Strongly connected components in topological order.
    pub sccs: Vec<Vec<usize>>,
    pub drivers: Vec<CombDriver>,
    /// Signals assigned in clocked processes.
    pub registers: IndexSet<String>,
    /// Clock signal and every port it reaches.
    pub clock_tree: HashSet<String>,
}

impl CombDepGraph {
    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn nontrivial_sccs(&self) -> Vec<&Vec<usize>> {
        let mut self_loop = HashSet::new();
        for &(u, v) in &self.edges {
            if u == v {
                self_loop.insert(u);
            }
        }
        self.sccs
            .iter()
            .filter(|c| c.len() > 1 || self_loop.contains(&c[0]))
            .collect()
    }
}

/// Tarjan's algorithm. Components are returned so that every edge goes from
/// an earlier component to a later one (or stays inside one).
pub fn tarjan(n: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct St<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    // iterative to survive deep chains
    fn strong(st: &mut St, root: usize) {
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        st.index[root] = Some(st.next);
        st.low[root] = st.next;
        st.next += 1;
        st.stack.push(root);
        st.on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < st.adj[v].len() {
                let w = st.adj[v][*i];
                *i += 1;
                match st.index[w] {
                    None => {
                        st.index[w] = Some(st.next);
                        st.low[w] = st.next;
                        st.next += 1;
                        st.stack.push(w);
                        st.on_stack[w] = true;
                        call.push((w, 0));
                    }
                    Some(iw) if st.on_stack[w] => st.low[v] = st.low[v].min(iw),
                    _ => {}
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    st.low[u] = st.low[u].min(st.low[v]);
                }
                if Some(st.low[v]) == st.index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = st.stack.pop().expect("tarjan stack");
                        st.on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    st.out.push(comp);
                }
            }
        }
    }
    let mut st = St {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: vec![],
        next: 0,
        out: vec![],
    };
    for v in 0..n {
        if st.index[v].is_none() {
            strong(&mut st, v);
        }
    }
    // Tarjan emits sinks first.
    st.out.reverse();
    st.out
}

fn stmt_targets(s: &StmtAst, out: &mut Vec<String>, loop_vars: &mut Vec<String>) {
    match s {
        StmtAst::Block(v) => v.iter().for_each(|x| stmt_targets(x, out, loop_vars)),
        StmtAst::If {
            then_branch,
            else_branch,
            ..
        } => {
            stmt_targets(then_branch, out, loop_vars);
            if let Some(e) = else_branch {
                stmt_targets(e, out, loop_vars);
            }
        }
        StmtAst::Assign { lhs, .. } => {
            for b in lhs.bases() {
                if !out.iter().any(|o| o == b) {
                    out.push(b.to_string());
                }
            }
        }
        StmtAst::For { var, body, .. } => {
            loop_vars.push(var.clone());
            stmt_targets(body, out, loop_vars);
        }
        StmtAst::Empty => {}
    }
}

fn stmt_reads(s: &StmtAst, out: &mut Vec<String>) {
    match s {
        StmtAst::Block(v) => v.iter().for_each(|x| stmt_reads(x, out)),
        StmtAst::If {
            cond,
            then_branch,
            else_branch,
        } => {
            cond.idents(out);
            stmt_reads(then_branch, out);
            if let Some(e) = else_branch {
                stmt_reads(e, out);
            }
        }
        StmtAst::Assign { lhs, rhs, .. } => {
            rhs.idents(out);
            lhs.index_idents(out);
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
            stmt_reads(body, out);
        }
        StmtAst::Empty => {}
    }
}

/// Locally assigned names and loop variables of an always block.
pub fn block_targets(a: &AlwaysBlock) -> (Vec<String>, Vec<String>) {
    let mut t = Vec::new();
    let mut lv = Vec::new();
    stmt_targets(&a.body, &mut t, &mut lv);
    t.retain(|x| !lv.contains(x));
    (t, lv)
}

fn resolve_reads(d: &ElaboratedDesign, inst: usize, names: Vec<String>, skip: &[String]) -> Vec<String> {
    let mut out: IndexSet<String> = IndexSet::new();
    for n in names {
        if skip.contains(&n) || d.signal(inst, &n).is_none() {
            continue;
        }
        out.insert(d.hier(inst, &n));
    }
    out.into_iter().collect()
}

fn lvalue_bases(l: &LValue) -> Vec<String> {
    l.bases().into_iter().map(|s| s.to_string()).collect()
}

pub fn clock_tree(d: &ElaboratedDesign) -> HashSet<String> {
    let mut tree = HashSet::new();
    let Some(clk) = &d.clock else { return tree };
    tree.insert(clk.clone());
    // instances are in pre-order, so parents are visited first
    for (i, node) in d.instances.iter().enumerate().skip(1) {
        let parent = node.parent.expect("non-root");
        for b in &node.bindings {
            if b.dir != Dir::Input {
                continue;
            }
            if let Some(ExprAst::Ident(n, _)) = &b.actual {
                if tree.contains(&d.hier(parent, n)) {
                    tree.insert(d.hier(i, &b.formal));
                }
            }
        }
    }
    tree
}

pub fn build_comb_graph(d: &ElaboratedDesign) -> CombDepGraph {
    let ctree = clock_tree(d);
    let mut registers = IndexSet::new();
    let mut drivers = Vec::new();
    for (i, node) in d.instances.iter().enumerate() {
        let m = d.module(i);
        for (k, a) in m.assigns.iter().enumerate() {
            let mut reads = Vec::new();
            a.rhs.idents(&mut reads);
            a.lhs.index_idents(&mut reads);
            drivers.push(CombDriver {
                kind: DriverKind::Assign { inst: i, index: k },
                outputs: lvalue_bases(&a.lhs)
                    .iter()
                    .map(|b| d.hier(i, b))
                    .collect(),
                reads: resolve_reads(d, i, reads, &[]),
            });
        }
        for (k, a) in m.always.iter().enumerate() {
            let (targets, loop_vars) = block_targets(a);
            match a.trigger {
                Trigger::Posedge(_) => {
                    for t in targets {
                        registers.insert(d.hier(i, &t));
                    }
                }
                Trigger::Comb => {
                    let mut reads = Vec::new();
                    stmt_reads(&a.body, &mut reads);
                    drivers.push(CombDriver {
                        kind: DriverKind::CombAlways { inst: i, index: k },
                        outputs: targets.iter().map(|t| d.hier(i, t)).collect(),
                        reads: resolve_reads(d, i, reads, &loop_vars),
                    });
                }
            }
        }
        let Some(parent) = node.parent else { continue };
        for (p, b) in node.bindings.iter().enumerate() {
            let Some(actual) = &b.actual else { continue };
            let formal = d.hier(i, &b.formal);
            if ctree.contains(&formal) {
                continue;
            }
            match b.dir {
                Dir::Input => {
                    let mut reads = Vec::new();
                    actual.idents(&mut reads);
                    drivers.push(CombDriver {
                        kind: DriverKind::BindIn { child: i, port: p },
                        outputs: vec![formal],
                        reads: resolve_reads(d, parent, reads, &[]),
                    });
                }
                _ => {
                    if let ExprAst::Ident(n, _) = actual {
                        drivers.push(CombDriver {
                            kind: DriverKind::BindOut { child: i, port: p },
                            outputs: vec![d.hier(parent, n)],
                            reads: vec![formal],
                        });
                    }
                }
            }
        }
    }

    // nodes: sources first in signal-table order, then driven signals
    let mut nodes: IndexMap<String, ()> = IndexMap::new();
    for (name, _) in d.primary_inputs() {
        nodes.insert(name, ());
    }
    for r in &registers {
        nodes.insert(r.clone(), ());
    }
    for drv in &drivers {
        for r in &drv.reads {
            if !ctree.contains(r) {
                nodes.insert(r.clone(), ());
            }
        }
        for o in &drv.outputs {
            nodes.insert(o.clone(), ());
        }
    }
    let idx = |n: &str| nodes.get_index_of(n);
    let mut edges = Vec::new();
    for drv in &drivers {
        for r in &drv.reads {
            let Some(u) = idx(r) else { continue };
            for o in &drv.outputs {
                let v = idx(o).expect("output node");
                if !edges.contains(&(u, v)) {
                    edges.push((u, v));
                }
            }
        }
    }
    let n = nodes.len();
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &edges {
        adj[u].push(v);
    }
    let sccs = tarjan(n, &adj);
    CombDepGraph {
        nodes: nodes.into_keys().collect(),
        edges,
        sccs,
        drivers,
        registers,
        clock_tree: ctree,
    }
}

/// Groups of drivers that must be resolved together: instances whose
/// combinational logic feeds each other through port connections, plus any
/// signal-level cycle. Units are returned in topological order.
pub fn schedule(g: &CombDepGraph, d: &ElaboratedDesign) -> Vec<ScheduledUnit> {
    let nd = g.drivers.len();
    // union-find over drivers
    let mut parent: Vec<usize> = (0..nd).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[rb.max(ra)] = rb.min(ra);
        }
    };

    // instance-level feedback
    let mut driven_by: HashMap<&str, usize> = HashMap::new();
    for (k, drv) in g.drivers.iter().enumerate() {
        for o in &drv.outputs {
            driven_by.insert(o.as_str(), k);
        }
    }
    let ninst = d.instances.len();
    let mut inst_adj = vec![Vec::new(); ninst];
    for (k, drv) in g.drivers.iter().enumerate() {
        if drv.kind.is_binding() {
            continue;
        }
        let a = drv.kind.owner();
        // follow binding chains from this driver's outputs
        let mut seen: HashSet<&str> = HashSet::new();
        let mut work: Vec<&str> = drv.outputs.iter().map(|s| s.as_str()).collect();
        while let Some(s) = work.pop() {
            if !seen.insert(s) {
                continue;
            }
            for (k2, d2) in g.drivers.iter().enumerate() {
                if k2 == k || !d2.reads.iter().any(|r| r == s) {
                    continue;
                }
                if d2.kind.is_binding() {
                    work.extend(d2.outputs.iter().map(|x| x.as_str()));
                } else {
                    let b = d2.kind.owner();
                    if b != a && !inst_adj[a].contains(&b) {
                        inst_adj[a].push(b);
                    }
                }
            }
        }
    }
    let inst_sccs = tarjan(ninst, &inst_adj);
    for comp in inst_sccs.iter().filter(|c| c.len() > 1) {
        let members: Vec<usize> = (0..nd)
            .filter(|&k| comp.contains(&g.drivers[k].kind.owner()))
            .collect();
        for w in members.windows(2) {
            union(&mut parent, w[0], w[1]);
        }
    }

    // contract, then merge remaining cycles
    let mut rep_ids: IndexMap<usize, usize> = IndexMap::new();
    for k in 0..nd {
        let r = find(&mut parent, k);
        let len = rep_ids.len();
        rep_ids.entry(r).or_insert(len);
    }
    let nu = rep_ids.len();
    let unit_of = |p: &mut Vec<usize>, k: usize| rep_ids[&find(p, k)];
    let mut uadj = vec![Vec::new(); nu];
    let mut self_loop = vec![false; nu];
    for (k, drv) in g.drivers.iter().enumerate() {
        let v = unit_of(&mut parent, k);
        for r in &drv.reads {
            let Some(&src) = driven_by.get(r.as_str()) else { continue };
            let u = unit_of(&mut parent, src);
            if src == k {
                // reading its own output is sequencing inside an always block
                if matches!(drv.kind, DriverKind::Assign { .. }) {
                    self_loop[u] = true;
                }
            } else if u != v && !uadj[u].contains(&v) {
                uadj[u].push(v);
            }
        }
    }
    let comps = tarjan(nu, &uadj);
    let mut units: Vec<Vec<usize>> = vec![Vec::new(); nu];
    for k in 0..nd {
        let u = unit_of(&mut parent, k);
        units[u].push(k);
    }
    comps
        .into_iter()
        .map(|c| {
            let feedback = c.len() > 1 || units[c[0]].len() > 1 || self_loop[c[0]];
            let mut ds: Vec<usize> = c.iter().flat_map(|&u| units[u].clone()).collect();
            ds.sort_unstable();
            ScheduledUnit {
                drivers: ds,
                feedback,
            }
        })
        .collect()
}

/// A set of drivers evaluated together. Feedback units are encoded by
/// havocking their outputs and assuming the defining equalities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduledUnit {
    pub drivers: Vec<usize>,
    pub feedback: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verilog::{elaborate, parse_source};

    #[test]
    fn tarjan_orders_components() {
        // 0 -> 1 -> 2 -> 1, 2 -> 3
        let adj = vec![vec![1], vec![2], vec![1, 3], vec![]];
        let c = tarjan(4, &adj);
        assert_eq!(c, vec![vec![0], vec![1, 2], vec![3]]);
    }

    #[test]
    fn chain_is_topological() {
        let d = elaborate(
            &parse_source(
                "module m(i, o); input i; output o; wire a, b, c;
                 assign c = b; assign b = a; assign a = i; assign o = c; endmodule",
            )
            .unwrap(),
            "m",
        )
        .unwrap();
        let g = build_comb_graph(&d);
        let order: Vec<&str> = g.sccs.iter().map(|c| g.nodes[c[0]].as_str()).collect();
        let pos = |n: &str| order.iter().position(|x| *x == n).unwrap();
        assert!(pos("m.i") < pos("m.a") && pos("m.a") < pos("m.b") && pos("m.b") < pos("m.c"));
        assert!(g.sccs.iter().all(|c| c.len() == 1));
        assert!(g.nontrivial_sccs().is_empty());
    }

    #[test]
    fn empty_graph_without_assigns() {
        let d = elaborate(&parse_source("module E(); endmodule").unwrap(), "E").unwrap();
        let g = build_comb_graph(&d);
        assert!(g.nodes.is_empty() && g.drivers.is_empty());
    }
}
