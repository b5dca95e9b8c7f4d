// SPDX-License-Identifier: Apache-2.0

//! Propositional layer: literals, the backend interface, the embedded CDCL
//! solver and the Tseitin bit-blaster that maps [`crate::bv::BvExpr`]
//! constraints onto it.

mod blast;
mod cdcl;
mod dimacs;

use std::fmt;
use std::time::Instant;

pub use blast::{CnfInstance, SatResult};
pub use cdcl::{Cdcl, CdclStats};
pub use dimacs::{parse_dimacs, write_dimacs};

/// Variable index plus sign, packed as `var << 1 | negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, negated: bool) -> Lit {
        Lit(var << 1 | negated as u32)
    }

    pub fn from_index(i: usize) -> Lit {
        Lit(i as u32)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// DIMACS form: 1-based, negative when negated.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_neg() {
            -v
        } else {
            v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat,
    Unsat,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error("SAT solver resource limit reached")]
    ResourceLimit,
    #[error("bit-vector width {0} exceeds the supported maximum")]
    WidthOverflow(u32),
}

/// Incremental SAT interface: add clauses monotonically, solve under
/// assumption literals, read the model of the last satisfiable call.
///
/// Any solver with these semantics can stand in for [`Cdcl`]; the engines
/// only ever talk to a `Box<dyn SatBackend>`.
pub trait SatBackend {
    fn new_var(&mut self) -> Lit;
    fn num_vars(&self) -> usize;
    fn add_clause(&mut self, lits: &[Lit]);
    fn solve(&mut self, assumptions: &[Lit], deadline: Option<Instant>) -> Result<SolveOutcome, SolverError>;
    /// Value of `l` in the most recent model, `None` if the last call was
    /// not satisfiable or `l` is unknown.
    fn model_value(&self, l: Lit) -> Option<bool>;
}
