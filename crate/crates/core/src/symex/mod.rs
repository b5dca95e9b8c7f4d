// SPDX-License-Identifier: Apache-2.0

//! Path-based symbolic execution with eager infeasibility pruning.
//!
//! Paths are explored depth first, then-branch first. Each assignment gives
//! its target a new SSA version (numbered globally, so versions are never
//! reused across paths) and adds `x_v = rhs` to the path condition. At every
//! branch and assume the solver decides which directions are feasible; at
//! every assert it looks for a model of `S && !c`.
//!
//! Two solver disciplines are supported:
//! * partial incremental: one instance per path. Clauses for each new
//!   segment are added to the live instance; a path taken from the worklist
//!   gets a fresh instance holding its re-encoded prefix.
//! * full incremental: one instance for the whole run. Path conditions are
//!   added under per-segment activation literals passed as assumptions;
//!   once no pending path uses a segment its literal is fixed to false.

mod flat;

pub use flat::{flatten, Instr};

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bv::BvExpr;
use crate::engine::{ms, EngineError, Status};
use crate::ir::Program;
use crate::sat::{CnfInstance, Lit, SolveOutcome};
use crate::trace::Counterexample;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    #[serde(rename = "pi")]
    Partial,
    #[serde(rename = "fi")]
    Full,
}

#[derive(Clone, Debug)]
pub struct SymexConfig {
    pub mode: Mode,
    pub prune: bool,
    /// Keep the constraint list of every completed path.
    pub record_paths: bool,
    pub timeout: Option<Duration>,
    /// Stop with an unknown verdict once this many branches and assumes
    /// have been reached.
    pub max_branch_attempts: Option<u64>,
}

impl Default for SymexConfig {
    fn default() -> Self {
        SymexConfig {
            mode: Mode::Partial,
            prune: true,
            record_paths: false,
            timeout: None,
            max_branch_attempts: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExplorationStats {
    /// Branches and assumes reached.
    pub branch_attempts: u64,
    /// Branches and assumes where some direction was infeasible.
    pub pruned: u64,
    pub pruning_percent: f64,
    pub completed_paths: u64,
    /// Paths cut short by an infeasible assume.
    pub vacuous_paths: u64,
    pub solver_calls: u64,
    pub solver_instances: u64,
    pub statements: u64,
    pub solve_time_ms: f64,
    pub total_time_ms: f64,
}

impl ExplorationStats {
    fn finish(&mut self) {
        self.pruning_percent = pruning_percent(self.pruned, self.branch_attempts);
    }
}

/// `pruned / attempts` in percent, rounded to two decimals.
pub fn pruning_percent(pruned: u64, attempts: u64) -> f64 {
    if attempts == 0 {
        return 0.0;
    }
    (pruned as f64 * 10000.0 / attempts as f64).round() / 100.0
}

#[derive(Clone, Debug)]
pub struct SymexResult {
    pub status: Status,
    pub stats: ExplorationStats,
    /// Constraints of each completed path, when recorded.
    pub paths: Vec<Vec<BvExpr>>,
}

#[derive(Clone, Debug)]
enum Item {
    Def { var: usize, version: u32, value: BvExpr },
    Havoc { var: usize, version: u32, id: u32 },
    Cond(BvExpr),
}

struct Node {
    item: Item,
    next: Option<Rc<Node>>,
}

impl Drop for Node {
    // Long lists would otherwise drop recursively.
    fn drop(&mut self) {
        let mut next = self.next.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut n) => next = n.next.take(),
                Err(_) => break,
            }
        }
    }
}

fn items(list: &Option<Rc<Node>>) -> Vec<&Item> {
    let mut out = Vec::new();
    let mut cur = list.as_ref();
    while let Some(n) = cur {
        out.push(&n.item);
        cur = n.next.as_ref();
    }
    out.reverse();
    out
}

struct Seg {
    act: Lit,
    retired: Rc<RefCell<Vec<Lit>>>,
}

impl Drop for Seg {
    fn drop(&mut self) {
        self.retired.borrow_mut().push(self.act);
    }
}

#[derive(Clone)]
struct Path {
    pc: usize,
    versions: Vec<u32>,
    list: Option<Rc<Node>>,
    /// Activation segments (full incremental mode only).
    segs: Vec<Rc<Seg>>,
}

impl Path {
    fn push(&mut self, item: Item) {
        self.list = Some(Rc::new(Node {
            item,
            next: self.list.take(),
        }));
    }
}

struct Engine<'a> {
    cfg: &'a SymexConfig,
    code: Vec<Instr>,
    vars: Vec<(Arc<str>, u32)>,
    next_version: Vec<u32>,
    stats: ExplorationStats,
    shared: Option<CnfInstance>,
    retired: Rc<RefCell<Vec<Lit>>>,
    solve_time: Duration,
    paths: Vec<Vec<BvExpr>>,
    exhausted: bool,
}

impl Engine<'_> {
    fn attempt(&mut self) -> bool {
        self.stats.branch_attempts += 1;
        let over = self.cfg.max_branch_attempts.is_some_and(|m| self.stats.branch_attempts > m);
        self.exhausted |= over;
        !over
    }

    fn rename(&self, e: &BvExpr, versions: &[u32], index: &HashMap<Arc<str>, usize>) -> BvExpr {
        e.map_vars(&mut |n, _, w| Some(BvExpr::var(n.clone(), versions[index[n]], w)))
    }

    fn new_instance(&mut self) -> CnfInstance {
        self.stats.solver_instances += 1;
        let mut inst = CnfInstance::new();
        inst.set_timeout(self.cfg.timeout);
        inst
    }

    fn encode_item(&self, inst: &mut CnfInstance, item: &Item, act: Option<Lit>) {
        match item {
            Item::Def { var, version, value } => inst.define(&self.vars[*var].0, *version, value),
            Item::Havoc { .. } => {}
            Item::Cond(c) => match act {
                Some(a) => inst.assert_under(a, c),
                None => inst.assert(c),
            },
        }
    }

    /// Adds an item to `path` and to the live instance.
    fn extend(&mut self, inst: &mut CnfInstance, path: &mut Path, item: Item) {
        let act = match self.cfg.mode {
            Mode::Full => Some(self.open_seg(inst, path)),
            Mode::Partial => None,
        };
        self.encode_item(inst, &item, act);
        path.push(item);
    }

    fn open_seg(&self, inst: &mut CnfInstance, path: &mut Path) -> Lit {
        if path.segs.is_empty() {
            self.fork_seg(inst, path);
        }
        path.segs.last().expect("segment").act
    }

    fn fork_seg(&self, inst: &mut CnfInstance, path: &mut Path) {
        path.segs.push(Rc::new(Seg {
            act: inst.fresh(),
            retired: self.retired.clone(),
        }));
    }

    /// Is `S && extra` satisfiable for the path's condition `S`?
    fn sat(&mut self, inst: &mut CnfInstance, path: &Path, extra: Lit) -> Result<bool, EngineError> {
        for l in self.retired.borrow_mut().drain(..) {
            inst.add_clause(&[!l]);
        }
        let mut assumptions: Vec<Lit> = path.segs.iter().map(|s| s.act).collect();
        assumptions.push(extra);
        self.stats.solver_calls += 1;
        let t = Instant::now();
        let r = inst.solve(&assumptions);
        self.solve_time += t.elapsed();
        Ok(r? == SolveOutcome::Sat)
    }

    fn counterexample(&self, inst: &CnfInstance, path: &Path, label: &str) -> Counterexample {
        let mut cex = Counterexample {
            label: label.to_string(),
            ..Default::default()
        };
        for item in items(&path.list) {
            if let Item::Havoc { var, version, id } = item {
                let v = inst.var_value(&self.vars[*var].0, *version).unwrap_or(0);
                cex.havocs.insert(*id, v);
            }
        }
        for (name, _) in &self.vars {
            if let Some(v) = inst.var_value(name, 1) {
                cex.initial.insert(name.clone(), v);
            }
        }
        cex
    }

    fn record(&mut self, path: &Path) {
        if !self.cfg.record_paths {
            return;
        }
        let cs = items(&path.list)
            .into_iter()
            .filter_map(|it| match it {
                Item::Def { var, version, value } => {
                    let (n, w) = &self.vars[*var];
                    Some(BvExpr::var(n.clone(), *version, *w).eq(value))
                }
                Item::Cond(c) => Some(c.clone()),
                Item::Havoc { .. } => None,
            })
            .collect();
        self.paths.push(cs);
    }

    fn instance_for(&mut self, path: &Path) -> CnfInstance {
        match self.cfg.mode {
            Mode::Full => self.shared.take().expect("shared instance"),
            Mode::Partial => {
                let mut inst = self.new_instance();
                for item in items(&path.list) {
                    self.encode_item(&mut inst, item, None);
                }
                inst
            }
        }
    }

    /// Runs one path to its end, pushing deferred sibling paths.
    fn run_path(
        &mut self,
        mut path: Path,
        inst: &mut CnfInstance,
        worklist: &mut Vec<Path>,
        index: &HashMap<Arc<str>, usize>,
    ) -> Result<Option<Counterexample>, EngineError> {
        while path.pc < self.code.len() {
            self.stats.statements += 1;
            let instr = self.code[path.pc].clone();
            path.pc += 1;
            match instr {
                Instr::Assign { var, value } => {
                    let value = self.rename(&value, &path.versions, index);
                    self.next_version[var] += 1;
                    let version = self.next_version[var];
                    path.versions[var] = version;
                    self.extend(inst, &mut path, Item::Def { var, version, value });
                }
                Instr::Havoc { var, id } => {
                    self.next_version[var] += 1;
                    let version = self.next_version[var];
                    path.versions[var] = version;
                    path.push(Item::Havoc { var, version, id });
                }
                Instr::Jump(t) => path.pc = t,
                Instr::Assume(c) => {
                    let c = self.rename(&c, &path.versions, index);
                    if !self.attempt() {
                        return Ok(None);
                    }
                    if self.cfg.prune {
                        let l = inst.lit(&c);
                        if !self.sat(inst, &path, l)? {
                            self.stats.pruned += 1;
                            self.stats.vacuous_paths += 1;
                            return Ok(None);
                        }
                    }
                    self.extend(inst, &mut path, Item::Cond(c));
                }
                Instr::Assert { label, cond } => {
                    let c = self.rename(&cond, &path.versions, index);
                    let l = inst.lit(&c);
                    if self.sat(inst, &path, !l)? {
                        return Ok(Some(self.counterexample(inst, &path, &label)));
                    }
                    self.extend(inst, &mut path, Item::Cond(c));
                }
                Instr::Branch { cond, else_pc } => {
                    let c = self.rename(&cond, &path.versions, index);
                    if !self.attempt() {
                        return Ok(None);
                    }
                    let (then_ok, else_ok) = if self.cfg.prune {
                        let l = inst.lit(&c);
                        let t = self.sat(inst, &path, l)?;
                        // The path condition itself is satisfiable, so one
                        // direction always is.
                        let e = !t || self.sat(inst, &path, !l)?;
                        (t, e)
                    } else {
                        (true, true)
                    };
                    if !(then_ok && else_ok) {
                        self.stats.pruned += 1;
                    }
                    let not_c = c.not();
                    if then_ok && else_ok {
                        let mut other = path.clone();
                        other.pc = else_pc;
                        if self.cfg.mode == Mode::Full {
                            self.fork_seg(inst, &mut other);
                            self.fork_seg(inst, &mut path);
                            self.extend(inst, &mut other, Item::Cond(not_c));
                        } else {
                            // Encoded when the sibling gets its own instance.
                            other.push(Item::Cond(not_c));
                        }
                        worklist.push(other);
                        self.extend(inst, &mut path, Item::Cond(c));
                    } else if then_ok {
                        self.extend(inst, &mut path, Item::Cond(c));
                    } else {
                        path.pc = else_pc;
                        self.extend(inst, &mut path, Item::Cond(not_c));
                    }
                }
            }
        }
        self.stats.completed_paths += 1;
        self.record(&path);
        Ok(None)
    }
}

/// Explores every path of the unwound program `p`.
pub fn run(p: &Program, cfg: &SymexConfig) -> Result<SymexResult, EngineError> {
    let start = Instant::now();
    if !p.is_acyclic() {
        return Err(EngineError::Program("loops must be unwound before symbolic execution".into()));
    }
    let index: HashMap<Arc<str>, usize> = p.vars.keys().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    let code = flatten(&p.body, &|n| index[n]);
    let n = p.vars.len();
    let mut e = Engine {
        cfg,
        code,
        vars: p.vars.iter().map(|(k, w)| (k.clone(), *w)).collect(),
        next_version: vec![1; n],
        stats: ExplorationStats::default(),
        shared: None,
        retired: Rc::new(RefCell::new(Vec::new())),
        solve_time: Duration::ZERO,
        paths: Vec::new(),
        exhausted: false,
    };
    if cfg.mode == Mode::Full {
        e.shared = Some(e.new_instance());
    }
    let mut worklist = vec![Path {
        pc: 0,
        versions: vec![1; n],
        list: None,
        segs: Vec::new(),
    }];
    let mut status = Status::Safe;
    while let Some(path) = worklist.pop() {
        let mut inst = e.instance_for(&path);
        let r = e.run_path(path, &mut inst, &mut worklist, &index);
        if cfg.mode == Mode::Full {
            e.shared = Some(inst);
        }
        if let Some(cex) = r? {
            status = Status::Unsafe(cex);
            break;
        }
        if e.exhausted {
            e.stats.branch_attempts -= 1;
            status = Status::Unknown {
                reason: format!("branch budget of {} exhausted", e.stats.branch_attempts),
            };
            break;
        }
    }
    drop(worklist);
    e.stats.solve_time_ms = ms(e.solve_time);
    e.stats.total_time_ms = ms(start.elapsed());
    e.stats.finish();
    Ok(SymexResult {
        status,
        stats: e.stats,
        paths: e.paths,
    })
}
