// SPDX-License-Identifier: Apache-2.0

//! Firmware language: a closed C-like subset with explicit bit widths,
//! constant-size arrays, inlined functions and hardware intrinsics
//! (`step()`, `set_input`, `read_output`, `nondet`, `assume`, `assert`,
//! `property`). [`compose`] inlines a firmware program and a software netlist
//! into one sequential IR program.

pub mod ast;
mod compose;
mod parser;
mod property;

pub use ast::{FirmwareProgram, FwExpr, FwStmt, Pos, PropertySpec};
pub use compose::{compose, default_harness};
pub use parser::{parse_firmware, parse_property};
pub use property::lower_property;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct FwError {
    pub pos: Pos,
    pub msg: String,
}

impl FwError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> Self {
        FwError { pos, msg: msg.into() }
    }
}
