// SPDX-License-Identifier: Apache-2.0

//! Types shared by the verification engines.

use std::time::Duration;

use crate::sat::SolverError;
use crate::trace::Counterexample;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Safe,
    Unsafe(Counterexample),
    /// Exploration stopped before a verdict was reached.
    Unknown { reason: String },
}

impl Status {
    pub fn is_safe(&self) -> bool {
        matches!(self, Status::Safe)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Status::Safe => "Safe",
            Status::Unsafe(_) => "Unsafe",
            Status::Unknown { .. } => "Unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid program: {0}")]
    Program(String),
}

pub(crate) fn ms(d: Duration) -> f64 {
    (d.as_secs_f64() * 1e5).round() / 100.0
}
