// SPDX-License-Identifier: Apache-2.0

//! Software netlist: the sequential program synthesized from a design.

mod emit_c;
pub mod graph;
mod synth;

pub use emit_c::emit_c;
pub use graph::{build_comb_graph, CombDepGraph, CombDriver, DriverKind};
pub use synth::{synthesize, FeedbackGroup, SwNetlistProgram};
