// SPDX-License-Identifier: Apache-2.0

//! Concrete execution of an acyclic [`Program`]. Havoc values come from a
//! [`HavocSource`]; replaying a counterexample uses the id-keyed values
//! stored in the trace.

use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::bv::{eval, mask, EvalError};
use crate::feedback::match_block;
use crate::ir::{Program, Stmt, CYCLE_VAR};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("no input value for havoc #{id} ({name})")]
    MissingHavoc { id: u32, name: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("program still contains loops; unwind it first")]
    NotUnwound,
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("input list exhausted at havoc #{id} ({name}): only {given} values given")]
    InputsExhausted { id: u32, name: String, given: usize },
}

/// Supplies the value of each executed havoc.
pub trait HavocSource {
    fn value(&mut self, id: u32, name: &Arc<str>, width: u32) -> Result<u64, SimError>;
}

/// Values keyed by havoc id.
impl HavocSource for HashMap<u32, u64> {
    fn value(&mut self, id: u32, name: &Arc<str>, _width: u32) -> Result<u64, SimError> {
        self.get(&id).copied().ok_or_else(|| SimError::MissingHavoc {
            id,
            name: name.to_string(),
        })
    }
}

/// Values consumed in execution order, one per executed havoc.
#[derive(Clone, Debug, Default)]
pub struct Sequential {
    values: Vec<u64>,
    next: usize,
}

impl Sequential {
    pub fn new(values: Vec<u64>) -> Self {
        Sequential { values, next: 0 }
    }
}

impl HavocSource for Sequential {
    fn value(&mut self, id: u32, name: &Arc<str>, _width: u32) -> Result<u64, SimError> {
        let v = self.values.get(self.next).copied().ok_or_else(|| SimError::InputsExhausted {
            id,
            name: name.to_string(),
            given: self.values.len(),
        })?;
        self.next += 1;
        Ok(v)
    }
}

/// Id-keyed values where a missing id reads as 0.
#[derive(Clone, Debug, Default)]
pub struct DefaultZero(pub HashMap<u32, u64>);

impl HavocSource for DefaultZero {
    fn value(&mut self, id: u32, _name: &Arc<str>, _width: u32) -> Result<u64, SimError> {
        Ok(self.0.get(&id).copied().unwrap_or(0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Ran to the end without violating an assertion.
    Completed,
    /// First violated assertion.
    Violated { label: String },
    /// An assume evaluated to false; the run is vacuous.
    Vacuous,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HavocEvent {
    pub id: u32,
    pub name: Arc<str>,
    pub cycle: u64,
    pub value: u64,
}

#[derive(Clone, Debug)]
pub struct SimResult {
    pub outcome: Outcome,
    /// Final value of every variable.
    pub env: IndexMap<Arc<str>, u64>,
    pub havocs: Vec<HavocEvent>,
    /// State at the start of each clock step, i.e. just before every update
    /// of the cycle counter.
    pub snapshots: Vec<IndexMap<Arc<str>, u64>>,
}

struct Exec<'a, H: HavocSource> {
    widths: &'a IndexMap<Arc<str>, u32>,
    env: HashMap<Arc<str>, u64>,
    src: H,
    havocs: Vec<HavocEvent>,
    snapshots: Vec<IndexMap<Arc<str>, u64>>,
    record_snapshots: bool,
    resolve_feedback: bool,
}

impl<H: HavocSource> Exec<'_, H> {
    fn snapshot(&self) -> IndexMap<Arc<str>, u64> {
        self.widths
            .keys()
            .map(|k| (k.clone(), self.env.get(k).copied().unwrap_or(0)))
            .collect()
    }

    fn width(&self, name: &Arc<str>) -> Result<u32, SimError> {
        self.widths
            .get(name)
            .copied()
            .ok_or_else(|| SimError::Undeclared(name.to_string()))
    }

    /// Evaluates an acyclic feedback block at `stmts[i]`, recording each
    /// target as a havoc event. Returns the number of havocs consumed.
    fn resolve_block(&mut self, stmts: &[Stmt], i: usize) -> Result<usize, SimError> {
        let Some((b, _)) = match_block(stmts, i) else { return Ok(0) };
        let Some(order) = b.topo_order() else { return Ok(0) };
        for k in order {
            let v = eval(&b.equations[k], &self.env)?;
            self.env.insert(b.targets[k].clone(), v);
        }
        let cycle = self.env.get(CYCLE_VAR).copied().unwrap_or(0);
        for s in &stmts[i..i + b.targets.len()] {
            if let Stmt::Havoc { target, id } = s {
                self.havocs.push(HavocEvent {
                    id: *id,
                    name: target.clone(),
                    cycle,
                    value: self.env[target],
                });
            }
        }
        Ok(b.targets.len())
    }

    fn run(&mut self, stmts: &[Stmt]) -> Result<Option<Outcome>, SimError> {
        let mut skip = 0;
        for (i, s) in stmts.iter().enumerate() {
            if skip > 0 {
                skip -= 1;
                continue;
            }
            if self.resolve_feedback && matches!(s, Stmt::Havoc { .. }) {
                skip = self.resolve_block(stmts, i)?;
                if skip > 0 {
                    skip -= 1;
                    continue;
                }
            }
            match s {
                Stmt::Assign { target, value } => {
                    if self.record_snapshots && &**target == CYCLE_VAR {
                        let snap = self.snapshot();
                        self.snapshots.push(snap);
                    }
                    let v = eval(value, &self.env)?;
                    self.env.insert(target.clone(), v);
                }
                Stmt::Havoc { target, id } => {
                    let w = self.width(target)?;
                    let v = self.src.value(*id, target, w)? & mask(w);
                    let cycle = self.env.get(CYCLE_VAR).copied().unwrap_or(0);
                    self.havocs.push(HavocEvent {
                        id: *id,
                        name: target.clone(),
                        cycle,
                        value: v,
                    });
                    self.env.insert(target.clone(), v);
                }
                Stmt::Assume { cond } => {
                    if eval(cond, &self.env)? == 0 {
                        return Ok(Some(Outcome::Vacuous));
                    }
                }
                Stmt::Assert { label, cond } => {
                    if eval(cond, &self.env)? == 0 {
                        return Ok(Some(Outcome::Violated {
                            label: label.clone(),
                        }));
                    }
                }
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    let taken = if eval(cond, &self.env)? != 0 {
                        then_branch
                    } else {
                        else_branch
                    };
                    if let Some(o) = self.run(taken)? {
                        return Ok(Some(o));
                    }
                }
                Stmt::Loop { .. } => return Err(SimError::NotUnwound),
            }
        }
        Ok(None)
    }
}

/// Runs `program` from the given initial values (missing ones are 0).
pub fn run_with<H: HavocSource>(
    program: &Program,
    initial: &HashMap<Arc<str>, u64>,
    src: H,
    record_snapshots: bool,
) -> Result<SimResult, SimError> {
    execute(program, initial, src, record_snapshots, false)
}

/// Like [`run_with`], but the havocs of acyclic feedback blocks take the
/// values their equations define instead of reading `src`.
pub fn run_resolving<H: HavocSource>(
    program: &Program,
    initial: &HashMap<Arc<str>, u64>,
    src: H,
    record_snapshots: bool,
) -> Result<SimResult, SimError> {
    execute(program, initial, src, record_snapshots, true)
}

fn execute<H: HavocSource>(
    program: &Program,
    initial: &HashMap<Arc<str>, u64>,
    src: H,
    record_snapshots: bool,
    resolve_feedback: bool,
) -> Result<SimResult, SimError> {
    let mut env = HashMap::with_capacity(program.vars.len());
    for (name, w) in &program.vars {
        env.insert(
            name.clone(),
            initial.get(name).copied().unwrap_or(0) & mask(*w),
        );
    }
    let mut ex = Exec {
        widths: &program.vars,
        env,
        src,
        havocs: Vec::new(),
        snapshots: Vec::new(),
        record_snapshots,
        resolve_feedback,
    };
    let outcome = ex.run(&program.body)?.unwrap_or(Outcome::Completed);
    Ok(SimResult {
        outcome,
        env: ex.snapshot(),
        havocs: ex.havocs,
        snapshots: ex.snapshots,
    })
}

/// Replays havoc values keyed by id.
pub fn simulate(
    program: &Program,
    initial: &HashMap<Arc<str>, u64>,
    havocs: &HashMap<u32, u64>,
) -> Result<SimResult, SimError> {
    run_with(program, initial, havocs.clone(), true)
}
