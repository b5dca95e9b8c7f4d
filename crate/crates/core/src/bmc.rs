// SPDX-License-Identifier: Apache-2.0

//! Monolithic bounded model checking: the unwound program is converted to
//! guarded SSA with `ite` merges at joins and checked with one solver call.
//!
//! Every branch condition gets a guard variable. Each assert `j` becomes the
//! obligation `P_j && g_j && !c_j`, where `g_j` is its guard context and
//! `P_j` says that every earlier assume and assert held where it was
//! reached. An execution thus violates at most one obligation (its first
//! failing assert), and selector literals identify which one.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bv::BvExpr;
use crate::engine::{ms, EngineError, Status};
use crate::ir::{Program, Stmt};
use crate::sat::{write_dimacs, CnfInstance, Lit, SolveOutcome};
use crate::trace::Counterexample;

pub const GUARD_VAR: &str = "$guard";
pub const PREFIX_VAR: &str = "$prefix";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqKind {
    Def,
    Guard,
    Merge,
    Prefix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsaEq {
    pub name: Arc<str>,
    pub version: u32,
    pub value: BvExpr,
    pub kind: EqKind,
}

impl SsaEq {
    pub fn lhs(&self) -> BvExpr {
        BvExpr::var(self.name.clone(), self.version, self.value.width())
    }

    pub fn as_expr(&self) -> BvExpr {
        self.lhs().eq(&self.value)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub label: String,
    /// Earlier assumes and asserts all held.
    pub prefix: BvExpr,
    pub guard: BvExpr,
    pub cond: BvExpr,
}

#[derive(Clone, Debug, Default)]
pub struct SsaProgram {
    pub equalities: Vec<SsaEq>,
    pub obligations: Vec<Obligation>,
    /// `(havoc id, variable, version)` for every havoc.
    pub havocs: Vec<(u32, Arc<str>, u32)>,
    /// Program variables (version 1 is the initial value).
    pub vars: Vec<Arc<str>>,
}

impl SsaProgram {
    pub fn count(&self, kind: EqKind) -> usize {
        self.equalities.iter().filter(|e| e.kind == kind).count()
    }
}

struct Encoder<'a> {
    p: &'a Program,
    ssa: SsaProgram,
    cur: HashMap<Arc<str>, u32>,
    next: HashMap<Arc<str>, u32>,
    prefix: BvExpr,
    pending: Vec<BvExpr>,
}

impl Encoder<'_> {
    fn rename(&self, e: &BvExpr) -> BvExpr {
        e.map_vars(&mut |n, _, w| Some(BvExpr::var(n.clone(), self.cur.get(n).copied().unwrap_or(1), w)))
    }

    fn fresh(&mut self, name: &Arc<str>) -> u32 {
        let v = self.next.entry(name.clone()).or_insert(1);
        *v += 1;
        self.cur.insert(name.clone(), *v);
        *v
    }

    fn def(&mut self, name: &Arc<str>, value: BvExpr, kind: EqKind) -> u32 {
        let version = self.fresh(name);
        self.ssa.equalities.push(SsaEq {
            name: name.clone(),
            version,
            value,
            kind,
        });
        version
    }

    fn current_prefix(&mut self) -> BvExpr {
        if !self.pending.is_empty() {
            let mut parts = vec![self.prefix.clone()];
            parts.append(&mut self.pending);
            let value = BvExpr::and_all(&parts);
            let name: Arc<str> = Arc::from(PREFIX_VAR);
            let v = self.def(&name, value, EqKind::Prefix);
            self.prefix = BvExpr::var(name, v, 1);
        }
        self.prefix.clone()
    }

    fn block(&mut self, stmts: &[Stmt], ctx: &BvExpr) {
        for s in stmts {
            match s {
                Stmt::Assign { target, value } => {
                    let v = self.rename(value);
                    self.def(target, v, EqKind::Def);
                }
                Stmt::Havoc { target, id } => {
                    let v = self.fresh(target);
                    self.ssa.havocs.push((*id, target.clone(), v));
                }
                Stmt::Assume { cond } => {
                    let c = self.rename(cond);
                    self.pending.push(ctx.implies(&c));
                }
                Stmt::Assert { label, cond } => {
                    let c = self.rename(cond);
                    let prefix = self.current_prefix();
                    self.ssa.obligations.push(Obligation {
                        label: label.clone(),
                        prefix,
                        guard: ctx.clone(),
                        cond: c.clone(),
                    });
                    self.pending.push(ctx.implies(&c));
                }
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    let c = self.rename(cond);
                    let gname: Arc<str> = Arc::from(GUARD_VAR);
                    let gv = self.def(&gname, c, EqKind::Guard);
                    let g = BvExpr::var(gname, gv, 1);
                    let before = self.cur.clone();
                    self.block(then_branch, &ctx.and(&g));
                    let after_then = std::mem::replace(&mut self.cur, before.clone());
                    self.block(else_branch, &ctx.and(&g.not()));
                    let after_else = self.cur.clone();
                    let written: BTreeSet<&Arc<str>> = after_then
                        .iter()
                        .chain(after_else.iter())
                        .filter(|(n, v)| before.get(*n) != Some(v) && &***n != GUARD_VAR && &***n != PREFIX_VAR)
                        .map(|(n, _)| n)
                        .collect();
                    for n in written {
                        let w = self.p.vars[n];
                        let tv = after_then.get(n).copied().unwrap_or(1);
                        let ev = after_else.get(n).copied().unwrap_or(1);
                        let m = BvExpr::ite(&g, &BvExpr::var(n.clone(), tv, w), &BvExpr::var(n.clone(), ev, w));
                        self.def(n, m, EqKind::Merge);
                    }
                }
                Stmt::Loop { .. } => unreachable!("checked acyclic"),
            }
        }
    }
}

/// Converts the unwound program `p` to guarded SSA.
pub fn encode_ssa(p: &Program) -> Result<SsaProgram, EngineError> {
    if !p.is_acyclic() {
        return Err(EngineError::Program("loops must be unwound before encoding".into()));
    }
    let mut e = Encoder {
        p,
        ssa: SsaProgram {
            vars: p.vars.keys().cloned().collect(),
            ..Default::default()
        },
        cur: HashMap::new(),
        next: HashMap::new(),
        prefix: BvExpr::tt(),
        pending: Vec::new(),
    };
    e.block(&p.body, &BvExpr::tt());
    Ok(e.ssa)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BmcStats {
    pub equalities: usize,
    pub guards: usize,
    pub merges: usize,
    pub obligations: usize,
    pub cnf_vars: usize,
    pub cnf_clauses: usize,
    pub solver_calls: u64,
    pub solve_time_ms: f64,
    pub total_time_ms: f64,
}

#[derive(Clone, Debug)]
pub struct BmcResult {
    pub status: Status,
    pub stats: BmcStats,
    /// Final CNF, when requested.
    pub dimacs: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct BmcConfig {
    pub timeout: Option<Duration>,
    pub dump_dimacs: bool,
}

/// Solves all obligations of `ssa` in a single call.
pub fn check(ssa: &SsaProgram, cfg: &BmcConfig) -> Result<BmcResult, EngineError> {
    let start = Instant::now();
    let mut stats = BmcStats {
        equalities: ssa.equalities.len(),
        guards: ssa.count(EqKind::Guard),
        merges: ssa.count(EqKind::Merge),
        obligations: ssa.obligations.len(),
        ..Default::default()
    };
    let mut inst = CnfInstance::new();
    inst.set_timeout(cfg.timeout);
    for eq in &ssa.equalities {
        inst.define(&eq.name, eq.version, &eq.value);
    }
    let mut sels: Vec<Lit> = Vec::new();
    for ob in &ssa.obligations {
        let s = inst.fresh();
        let parts = [ob.prefix.clone(), ob.guard.clone(), ob.cond.not()];
        for part in &parts {
            let l = inst.lit(part);
            inst.add_clause(&[!s, l]);
        }
        sels.push(s);
    }
    inst.add_clause(&sels);
    stats.cnf_vars = inst.num_vars();
    stats.cnf_clauses = inst.num_clauses();
    let dimacs = cfg.dump_dimacs.then(|| write_dimacs(inst.num_vars(), inst.clauses()));
    let status = if sels.is_empty() {
        Status::Safe
    } else {
        let t = Instant::now();
        let r = inst.solve(&[]);
        stats.solve_time_ms = ms(t.elapsed());
        stats.solver_calls = 1;
        match r? {
            SolveOutcome::Unsat => Status::Safe,
            SolveOutcome::Sat => {
                let j = sels
                    .iter()
                    .position(|s| inst.model_lit(*s) == Some(true))
                    .expect("a selector is true in every model");
                let mut cex = Counterexample {
                    label: ssa.obligations[j].label.clone(),
                    ..Default::default()
                };
                for (id, name, v) in &ssa.havocs {
                    cex.havocs.insert(*id, inst.var_value(name, *v).unwrap_or(0));
                }
                for name in &ssa.vars {
                    if let Some(v) = inst.var_value(name, 1) {
                        cex.initial.insert(name.clone(), v);
                    }
                }
                Status::Unsafe(cex)
            }
        }
    };
    stats.total_time_ms = ms(start.elapsed());
    Ok(BmcResult { status, stats, dimacs })
}
