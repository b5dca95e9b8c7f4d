// SPDX-License-Identifier: Apache-2.0

//! Exhaustive concrete enumeration: the ground-truth verdict for small
//! unwound programs. Every havoc and every upward-exposed variable is an
//! input; all combinations of their bits are run through the interpreter.
//! The program is unsafe iff some run ends in a violated assert.
//!
//! Feedback blocks whose equations are acyclic are first replaced by their
//! ordered assignments, so their havocs are not counted as inputs.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::bv::mask;
use crate::engine::Status;
use crate::feedback::resolve_acyclic;
use crate::interp::{run_with, Outcome, SimError};
use crate::ir::{Program, Stmt};
use crate::trace::Counterexample;

pub const DEFAULT_MAX_BITS: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EnumError {
    #[error("{bits} input bits exceed the enumeration limit of {limit}")]
    TooManyBits { bits: u32, limit: u32 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        return Exec::Parallel;
        #[cfg(not(feature = "parallel"))]
        Exec::Sequential
    }
}

#[derive(Clone, Debug)]
enum Slot {
    Havoc(u32),
    Initial(Arc<str>),
}

/// The enumeration space of a program.
#[derive(Clone, Debug)]
pub struct InputSpace {
    program: Program,
    slots: Vec<(Slot, u32)>,
}

impl InputSpace {
    pub fn new(p: &Program) -> Self {
        let program = Program {
            vars: p.vars.clone(),
            body: resolve_acyclic(&p.body),
        };
        let mut slots = Vec::new();
        for n in program.upward_exposed() {
            let w = program.vars[&n];
            slots.push((Slot::Initial(n), w));
        }
        let mut havocs = BTreeMap::new();
        program.walk(|s| {
            if let Stmt::Havoc { target, id } = s {
                havocs.insert(*id, program.vars[target]);
            }
        });
        slots.extend(havocs.into_iter().map(|(id, w)| (Slot::Havoc(id), w)));
        InputSpace { program, slots }
    }

    pub fn bits(&self) -> u32 {
        self.slots.iter().map(|(_, w)| *w).sum()
    }

    fn decode(&self, mut index: u64) -> Counterexample {
        let mut cex = Counterexample::default();
        for (slot, w) in &self.slots {
            let v = index & mask(*w);
            index = index.checked_shr(*w).unwrap_or(0);
            match slot {
                Slot::Havoc(id) => {
                    cex.havocs.insert(*id, v);
                }
                Slot::Initial(n) => {
                    cex.initial.insert(n.clone(), v);
                }
            }
        }
        cex
    }

    /// Outcome of run number `index`.
    pub fn run(&self, index: u64) -> Result<(Outcome, Counterexample), SimError> {
        let mut cex = self.decode(index);
        let initial: HashMap<Arc<str>, u64> = cex.initial.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let havocs: HashMap<u32, u64> = cex.havocs.iter().map(|(k, v)| (*k, *v)).collect();
        let r = run_with(&self.program, &initial, havocs, false)?;
        if let Outcome::Violated { label } = &r.outcome {
            cex.label = label.clone();
        }
        Ok((r.outcome, cex))
    }
}

#[derive(Clone, Debug)]
pub struct EnumResult {
    pub status: Status,
    pub runs: u64,
    pub bits: u32,
}

fn first_violation(space: &InputSpace, i: u64) -> Option<Result<Counterexample, SimError>> {
    match space.run(i) {
        Ok((Outcome::Violated { .. }, cex)) => Some(Ok(cex)),
        Ok(_) => None,
        Err(e) => Some(Err(e)),
    }
}

/// Enumerates all inputs of `p` (at most `max_bits` of them). The reported
/// counterexample is the lowest-numbered violating run.
pub fn enumerate(p: &Program, max_bits: u32, exec: Exec) -> Result<EnumResult, EnumError> {
    let space = InputSpace::new(p);
    let bits = space.bits();
    if bits > max_bits || bits >= 64 {
        return Err(EnumError::TooManyBits { bits, limit: max_bits });
    }
    let runs = 1u64 << bits;
    let found = match exec {
        Exec::Sequential => (0..runs).find_map(|i| first_violation(&space, i)),
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..runs).into_par_iter().find_map_first(|i| first_violation(&space, i))
        }
    };
    let status = match found.transpose()? {
        Some(cex) => Status::Unsafe(cex),
        None => Status::Safe,
    };
    Ok(EnumResult { status, runs, bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bv::BvExpr;

    #[test]
    fn finds_the_single_violating_input() {
        let mut p = Program::new();
        p.declare("x", 4);
        p.declare("y", 4);
        let (x, y) = (p.var("x"), p.var("y"));
        p.body = vec![
            Stmt::havoc("x"),
            Stmt::assume(x.ult(&BvExpr::konst(12, 4))),
            Stmt::assert("ne", x.add(&y).ne(&BvExpr::konst(15, 4))),
        ];
        p.number_havocs();
        for exec in [Exec::Sequential, Exec::default()] {
            let r = enumerate(&p, 16, exec).unwrap();
            assert_eq!(r.bits, 8);
            let Status::Unsafe(cex) = r.status else { panic!("expected unsafe") };
            assert_eq!(cex.label, "ne");
            assert_eq!((cex.havocs[&0] + cex.initial[&Arc::from("y")]) % 16, 15);
        }
        p.body.insert(0, Stmt::assign("y", BvExpr::konst(0, 4)));
        assert!(enumerate(&p, 16, Exec::default()).unwrap().status.is_safe());
        assert!(matches!(enumerate(&p, 3, Exec::Sequential), Err(EnumError::TooManyBits { bits: 4, .. })));
    }
}
