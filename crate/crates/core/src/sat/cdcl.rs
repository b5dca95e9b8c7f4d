// SPDX-License-Identifier: Apache-2.0

//! Conflict-driven clause-learning SAT solver in the MiniSat mould:
//! two watched literals, first-UIP learning with basic minimisation, VSIDS
//! with phase saving, Luby restarts and activity-based learnt clause
//! deletion. Solving under assumptions leaves the instance reusable, so
//! clauses may be added between calls.

use std::time::Instant;

use super::{Lit, SatBackend, SolveOutcome, SolverError};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum LBool {
    True,
    False,
    Undef,
}

type CRef = u32;

#[derive(Clone, Copy)]
struct Watcher {
    cref: CRef,
    blocker: Lit,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

/// Max-heap of variables ordered by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    index: Vec<usize>,
}

const NOT_IN_HEAP: usize = usize::MAX;

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.index.resize(n, NOT_IN_HEAP);
    }

    fn contains(&self, v: u32) -> bool {
        self.index[v as usize] != NOT_IN_HEAP
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.index[v as usize] = self.heap.len();
        self.heap.push(v);
        self.up(self.heap.len() - 1, act);
    }

    fn increased(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            self.up(self.index[v as usize], act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.index[top as usize] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.index[self.heap[0] as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.index[pv as usize] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.index[v as usize] = i;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let cv = self.heap[child];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.index[cv as usize] = i;
            i = child;
        }
        self.heap[i] = v;
        self.index[v as usize] = i;
    }
}

/// Counters exposed for instrumentation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CdclStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

#[derive(Default)]
pub struct Cdcl {
    clauses: Vec<Clause>,
    learnts: Vec<CRef>,
    num_original: usize,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<LBool>,
    level: Vec<u32>,
    reason: Vec<Option<CRef>>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    seen: Vec<bool>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    order: VarHeap,
    var_inc: f64,
    cla_inc: f64,
    max_learnts: f64,
    ok: bool,
    model: Vec<bool>,
    conflict_budget: Option<u64>,
    deadline: Option<Instant>,
    pub stats: CdclStats,
}

const VAR_DECAY: f64 = 0.95;
const CLA_DECAY: f64 = 0.999;
const RESTART_FIRST: f64 = 100.0;

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

impl Cdcl {
    pub fn new() -> Self {
        Cdcl {
            var_inc: 1.0,
            cla_inc: 1.0,
            ok: true,
            ..Default::default()
        }
    }

    fn value(&self, l: Lit) -> LBool {
        lit_value(&self.assigns, l)
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, from: Option<CRef>) {
        let v = l.var() as usize;
        self.assigns[v] = if l.is_neg() { LBool::False } else { LBool::True };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = from;
        self.trail.push(l);
    }

    fn attach(&mut self, cr: CRef) {
        let c = &self.clauses[cr as usize].lits;
        let (a, b) = (c[0], c[1]);
        self.watches[(!a).index()].push(Watcher { cref: cr, blocker: b });
        self.watches[(!b).index()].push(Watcher { cref: cr, blocker: a });
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let start = self.trail_lim[lvl];
        for i in (start..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            self.assigns[v] = LBool::Undef;
            self.reason[v] = None;
            self.polarity[v] = l.is_neg();
            self.order.insert(v as u32, &self.activity);
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(lvl);
        self.qhead = start;
    }

    fn propagate(&mut self) -> Option<CRef> {
        let mut confl = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.index()]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if lit_value(&self.assigns, w.blocker) == LBool::True {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cr = w.cref;
                if self.clauses[cr as usize].deleted {
                    continue;
                }
                let lits = &mut self.clauses[cr as usize].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                let nw = Watcher {
                    cref: cr,
                    blocker: first,
                };
                if first != w.blocker && lit_value(&self.assigns, first) == LBool::True {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..lits.len() {
                    if lit_value(&self.assigns, lits[k]) != LBool::False {
                        lits.swap(1, k);
                        let nl = lits[1];
                        self.watches[(!nl).index()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if lit_value(&self.assigns, first) == LBool::False {
                    confl = Some(cr);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(cr));
                }
            }
            ws.truncate(j);
            self.watches[p.index()] = ws;
            if confl.is_some() {
                break;
            }
        }
        confl
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.increased(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cr: CRef) {
        let c = &mut self.clauses[cr as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: CRef) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit::from_index(0)];
        let mut path_c = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level() as u32;
        loop {
            self.bump_clause(confl);
            let start = if p.is_some() { 1 } else { 0 };
            let n = self.clauses[confl as usize].lits.len();
            for k in start..n {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path_c += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var() as usize] {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            self.seen[pl.var() as usize] = false;
            path_c -= 1;
            if path_c == 0 {
                break;
            }
            confl = self.reason[pl.var() as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict analysis visits at least one literal");

        // Drop literals implied by others already in the clause.
        let mut kept = vec![learnt[0]];
        for &l in &learnt[1..] {
            let v = l.var() as usize;
            let redundant = match self.reason[v] {
                None => false,
                Some(r) => self.clauses[r as usize].lits[1..].iter().all(|q| {
                    let qv = q.var() as usize;
                    self.seen[qv] || self.level[qv] == 0
                }),
            };
            if !redundant {
                kept.push(l);
            }
        }
        for &l in &learnt {
            self.seen[l.var() as usize] = false;
        }
        let mut learnt = kept;

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[max_i].var() as usize] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var() as usize] as usize
        };
        (learnt, bt)
    }

    fn locked(&self, cr: CRef) -> bool {
        let c = &self.clauses[cr as usize].lits;
        let v = c[0].var() as usize;
        self.reason[v] == Some(cr) && self.value(c[0]) == LBool::True
    }

    fn reduce_db(&mut self) {
        let mut ls = std::mem::take(&mut self.learnts);
        ls.sort_by(|a, b| {
            self.clauses[*a as usize]
                .activity
                .total_cmp(&self.clauses[*b as usize].activity)
        });
        let half = ls.len() / 2;
        let mut keep = Vec::with_capacity(ls.len());
        for (i, cr) in ls.into_iter().enumerate() {
            let c = &self.clauses[cr as usize];
            if i < half && c.lits.len() > 2 && !self.locked(cr) {
                let c = &mut self.clauses[cr as usize];
                c.deleted = true;
                c.lits = Vec::new();
            } else {
                keep.push(cr);
            }
        }
        self.learnts = keep;
        let clauses = &self.clauses;
        for ws in self.watches.iter_mut() {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.assigns[v as usize] == LBool::Undef {
                self.stats.decisions += 1;
                return Some(Lit::new(v, self.polarity[v as usize]));
            }
        }
        None
    }

    fn out_of_budget(&self) -> bool {
        if let Some(b) = self.conflict_budget {
            if self.stats.conflicts >= b {
                return true;
            }
        }
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                return true;
            }
        }
        false
    }

    fn search(&mut self, nof_conflicts: u64, assumptions: &[Lit]) -> Result<LBool, SolverError> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                conflicts += 1;
                self.stats.conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Ok(LBool::False);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let cr = self.clauses.len() as CRef;
                    self.clauses.push(Clause {
                        lits: learnt.clone(),
                        learnt: true,
                        deleted: false,
                        activity: 0.0,
                    });
                    self.learnts.push(cr);
                    self.attach(cr);
                    self.bump_clause(cr);
                    self.enqueue(learnt[0], Some(cr));
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLA_DECAY;
                if self.stats.conflicts.is_multiple_of(128) && self.out_of_budget() {
                    self.cancel_until(0);
                    return Err(SolverError::ResourceLimit);
                }
            } else {
                if conflicts >= nof_conflicts {
                    self.cancel_until(0);
                    return Ok(LBool::Undef);
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let p = assumptions[self.decision_level()];
                    match self.value(p) {
                        LBool::True => self.trail_lim.push(self.trail.len()),
                        LBool::False => return Ok(LBool::False),
                        LBool::Undef => {
                            next = Some(p);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(p) => p,
                    None => match self.pick_branch() {
                        Some(p) => p,
                        None => return Ok(LBool::True),
                    },
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, None);
            }
        }
    }

    /// Caps the total number of conflicts across all future solves.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }
}

fn lit_value(assigns: &[LBool], l: Lit) -> LBool {
    match assigns[l.var() as usize] {
        LBool::Undef => LBool::Undef,
        LBool::True if l.is_neg() => LBool::False,
        LBool::False if l.is_neg() => LBool::True,
        b => b,
    }
}

impl SatBackend for Cdcl {
    fn new_var(&mut self) -> Lit {
        let v = self.assigns.len() as u32;
        self.assigns.push(LBool::Undef);
        self.level.push(0);
        self.reason.push(None);
        self.polarity.push(true);
        self.activity.push(0.0);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.order.grow(v as usize + 1);
        self.order.insert(v, &self.activity);
        Lit::new(v, false)
    }

    fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        if !self.ok {
            return;
        }
        debug_assert_eq!(self.decision_level(), 0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == !l {
                return; // tautology
            }
            match self.value(l) {
                LBool::True => return,
                LBool::False => {}
                LBool::Undef => out.push(l),
            }
        }
        match out.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(out[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let cr = self.clauses.len() as CRef;
                self.clauses.push(Clause {
                    lits: out,
                    learnt: false,
                    deleted: false,
                    activity: 0.0,
                });
                self.num_original += 1;
                self.attach(cr);
            }
        }
    }

    fn solve(&mut self, assumptions: &[Lit], deadline: Option<Instant>) -> Result<SolveOutcome, SolverError> {
        self.stats.solves += 1;
        self.model.clear();
        if !self.ok {
            return Ok(SolveOutcome::Unsat);
        }
        self.deadline = deadline;
        self.max_learnts = (self.num_original as f64 / 3.0).max(2000.0);
        let mut restarts = 0u64;
        let result = loop {
            let budget = (luby(2.0, restarts) * RESTART_FIRST) as u64;
            let r = self.search(budget, assumptions);
            let r = match r {
                Ok(r) => r,
                Err(e) => {
                    self.cancel_until(0);
                    return Err(e);
                }
            };
            if r != LBool::Undef {
                break r;
            }
            restarts += 1;
            self.stats.restarts += 1;
            self.max_learnts *= 1.05;
        };
        let outcome = if result == LBool::True {
            self.model = self.assigns.iter().map(|a| *a == LBool::True).collect();
            SolveOutcome::Sat
        } else {
            SolveOutcome::Unsat
        };
        self.cancel_until(0);
        Ok(outcome)
    }

    fn model_value(&self, l: Lit) -> Option<bool> {
        self.model.get(l.var() as usize).map(|b| *b != l.is_neg())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(s: &mut Cdcl, n: usize) -> Vec<Lit> {
        (0..n).map(|_| s.new_var()).collect()
    }

    #[test]
    fn luby_sequence() {
        let seq: Vec<f64> = (0..9).map(|i| luby(2.0, i)).collect();
        assert_eq!(seq, vec![1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 4.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_instance_is_sat() {
        let mut s = Cdcl::new();
        assert_eq!(s.solve(&[], None).unwrap(), SolveOutcome::Sat);
    }

    #[test]
    fn activation_literal() {
        let mut s = Cdcl::new();
        let v = lits(&mut s, 2);
        let (b, x) = (v[0], v[1]);
        s.add_clause(&[!b, x]);
        s.add_clause(&[!b, !x]);
        assert_eq!(s.solve(&[b], None).unwrap(), SolveOutcome::Unsat);
        assert_eq!(s.solve(&[], None).unwrap(), SolveOutcome::Sat);
        assert_eq!(s.model_value(b), Some(false));
    }

    #[test]
    fn pigeonhole_is_unsat() {
        // 5 pigeons, 4 holes.
        let mut s = Cdcl::new();
        let p: Vec<Vec<Lit>> = (0..5).map(|_| lits(&mut s, 4)).collect();
        for row in &p {
            s.add_clause(row);
        }
        for h in 0..4 {
            for i in 0..5 {
                for j in (i + 1)..5 {
                    s.add_clause(&[!p[i][h], !p[j][h]]);
                }
            }
        }
        assert_eq!(s.solve(&[], None).unwrap(), SolveOutcome::Unsat);
    }

    #[test]
    fn conflict_budget_is_an_error() {
        let mut s = Cdcl::new();
        let p: Vec<Vec<Lit>> = (0..9).map(|_| lits(&mut s, 8)).collect();
        for row in &p {
            s.add_clause(row);
        }
        for h in 0..8 {
            for i in 0..9 {
                for j in (i + 1)..9 {
                    s.add_clause(&[!p[i][h], !p[j][h]]);
                }
            }
        }
        s.set_conflict_budget(Some(200));
        assert_eq!(s.solve(&[], None), Err(SolverError::ResourceLimit));
    }
}
