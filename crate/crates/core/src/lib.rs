// SPDX-License-Identifier: Apache-2.0

//! Bounded hardware/software co-verification: a Verilog subset is compiled
//! into a sequential software netlist, composed with firmware, and checked by
//! path-based symbolic execution or monolithic bounded model checking.

pub mod bv;
pub mod sat;
pub mod interp;
pub mod ir;
pub mod verilog;
pub mod netlist;
pub mod feedback;
pub mod refsim;
pub mod firmware;
pub mod unwind;
pub mod slice;
pub mod engine;
pub mod trace;
pub mod symex;
pub mod bmc;
pub mod enumerate;
pub mod pipeline;
pub mod benchmarks;
