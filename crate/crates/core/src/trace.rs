// SPDX-License-Identifier: Apache-2.0

//! Counterexamples and their concrete replay.
//!
//! An engine reports the value of every havoc it saw by id, plus the initial
//! values of upward-exposed variables. Replay runs the unsliced program with
//! those values (havocs removed by slicing read 0) and records the inputs per
//! clock cycle.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::interp::{run_resolving, run_with, DefaultZero, Outcome, Sequential, SimError, SimResult};
use crate::ir::Program;

/// Raw model data from an engine.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counterexample {
    pub label: String,
    pub havocs: BTreeMap<u32, u64>,
    pub initial: BTreeMap<Arc<str>, u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HavocRecord {
    pub id: u32,
    pub name: String,
    pub cycle: u64,
    pub value: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleInputs {
    pub cycle: u64,
    pub inputs: IndexMap<String, u64>,
}

/// Trace file contents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub violated_assert: Option<String>,
    pub cycles: Vec<CycleInputs>,
    #[serde(default)]
    pub initial: BTreeMap<String, u64>,
    /// Every executed havoc in execution order.
    pub havocs: Vec<HavocRecord>,
}

impl Trace {
    fn from_run(r: &SimResult, initial: &BTreeMap<Arc<str>, u64>) -> Trace {
        let mut cycles: Vec<CycleInputs> = Vec::new();
        for h in &r.havocs {
            if cycles.last().is_none_or(|c| c.cycle != h.cycle) {
                cycles.push(CycleInputs {
                    cycle: h.cycle,
                    inputs: IndexMap::new(),
                });
            }
            let c = cycles.last_mut().expect("pushed above");
            c.inputs.insert(h.name.to_string(), h.value);
        }
        Trace {
            violated_assert: match &r.outcome {
                Outcome::Violated { label } => Some(label.clone()),
                _ => None,
            },
            cycles,
            initial: initial.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            havocs: r
                .havocs
                .iter()
                .map(|h| HavocRecord {
                    id: h.id,
                    name: h.name.to_string(),
                    cycle: h.cycle,
                    value: h.value,
                })
                .collect(),
        }
    }

    /// Havoc values in execution order, as consumed by [`simulate_trace`].
    pub fn values(&self) -> Vec<u64> {
        self.havocs.iter().map(|h| h.value).collect()
    }

    pub fn initial_env(&self) -> HashMap<Arc<str>, u64> {
        self.initial.iter().map(|(k, v)| (Arc::from(k.as_str()), *v)).collect()
    }
}

/// Replays `cex` on `program`; returns the trace and the concrete outcome.
/// Acyclic feedback blocks are evaluated rather than read from `cex`, since
/// their solution is unique and the enumeration oracle never assigns them.
pub fn replay(program: &Program, cex: &Counterexample) -> Result<(Trace, Outcome), SimError> {
    let initial: HashMap<Arc<str>, u64> = cex.initial.iter().map(|(k, v)| (k.clone(), *v)).collect();
    let r = run_resolving(program, &initial, DefaultZero(cex.havocs.iter().map(|(k, v)| (*k, *v)).collect()), false)?;
    Ok((Trace::from_run(&r, &cex.initial), r.outcome))
}

/// Runs `program` consuming the trace's havoc values in execution order.
pub fn simulate_trace(program: &Program, trace: &Trace) -> Result<SimResult, SimError> {
    run_with(program, &trace.initial_env(), Sequential::new(trace.values()), true)
}

/// True if replaying `cex` violates exactly the assert it names.
pub fn confirms(program: &Program, cex: &Counterexample) -> bool {
    matches!(replay(program, cex), Ok((_, Outcome::Violated { label })) if label == cex.label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bv::BvExpr;
    use crate::ir::{Stmt, CYCLE_VAR};

    #[test]
    fn replay_groups_inputs_by_cycle_and_round_trips() {
        let mut p = Program::new();
        p.declare(CYCLE_VAR, 32);
        p.declare("a", 4);
        let a = p.var("a");
        let cyc = p.var(CYCLE_VAR);
        p.body = vec![
            Stmt::assign(CYCLE_VAR, BvExpr::konst(0, 32)),
            Stmt::havoc("a"),
            Stmt::assign(CYCLE_VAR, cyc.add(&BvExpr::konst(1, 32))),
            Stmt::havoc("a"),
            Stmt::assert("a", a.ne(&BvExpr::konst(3, 4))),
        ];
        p.number_havocs();
        let cex = Counterexample {
            label: "a".into(),
            havocs: [(0, 9), (1, 3)].into(),
            initial: BTreeMap::new(),
        };
        let (t, o) = replay(&p, &cex).unwrap();
        assert!(confirms(&p, &cex));
        assert_eq!(o, Outcome::Violated { label: "a".into() });
        assert_eq!(t.cycles.len(), 2);
        assert_eq!(t.cycles[1].inputs["a"], 3);
        let json = serde_json::to_string(&t).unwrap();
        let back: Trace = serde_json::from_str(&json).unwrap();
        let r = simulate_trace(&p, &back).unwrap();
        assert_eq!(r.outcome, o);

        let mut short = back.clone();
        short.havocs.pop();
        assert!(matches!(
            simulate_trace(&p, &short),
            Err(SimError::InputsExhausted { id: 1, .. })
        ));
    }
}
