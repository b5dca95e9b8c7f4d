// SPDX-License-Identifier: Apache-2.0

//! End-to-end flow shared by the CLI, the tests and the acceptance runner:
//! Verilog source to software netlist, composition with firmware, unwinding,
//! optional slicing, one engine, and concrete replay of any counterexample
//! on the unsliced program.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bmc::{self, BmcConfig, BmcStats};
use crate::engine::{EngineError, Status};
use crate::enumerate::{self, EnumError, Exec};
use crate::firmware::{compose, default_harness, parse_firmware, FwError};
use crate::interp::{Outcome, SimError};
use crate::ir::Program;
use crate::netlist::{synthesize, SwNetlistProgram};
use crate::slice::slice;
use crate::symex::{self, ExplorationStats, Mode, SymexConfig};
use crate::trace::{replay, Trace};
use crate::unwind::unwind;
use crate::verilog::{elaborate, parse_source, VerilogError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Verilog(#[from] VerilogError),
    #[error("firmware {0}")]
    Firmware(#[from] FwError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Enumerate(#[from] EnumError),
    #[error("replay: {0}")]
    Sim(#[from] SimError),
}

pub fn translate(verilog: &str, top: &str) -> Result<SwNetlistProgram, VerilogError> {
    let mods = parse_source(verilog)?;
    let d = elaborate(&mods, top)?;
    synthesize(&d)
}

/// Composed, unwound and (optionally) sliced program.
#[derive(Clone, Debug)]
pub struct Built {
    pub hw: SwNetlistProgram,
    pub composed: Program,
    /// Unwound program; counterexamples are replayed on this one.
    pub unwound: Program,
    /// What the engine sees: `unwound`, sliced if requested.
    pub checked: Program,
    pub warnings: Vec<String>,
}

pub fn build(verilog: &str, top: &str, firmware: Option<&str>, k: usize, do_slice: bool) -> Result<Built, PipelineError> {
    let hw = translate(verilog, top)?;
    let fw = match firmware {
        Some(src) => parse_firmware(src)?,
        None => default_harness(),
    };
    let composed = compose(&fw, &hw)?;
    let mut warnings = Vec::new();
    if k == 0 && hw.sequential {
        warnings.push("unwinding bound 0 on a sequential design: the clock never advances".to_string());
    }
    let u = unwind(&composed, k);
    warnings.extend(u.warnings);
    let unwound = u.program;
    let checked = if do_slice { slice(&unwound) } else { unwound.clone() };
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Built {
        hw,
        composed,
        unwound,
        checked,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Symex(Mode),
    Mono,
    /// Exhaustive concrete enumeration (small programs only).
    Enumerate,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Symex(Mode::Partial) => "symex-pi",
            Engine::Symex(Mode::Full) => "symex-fi",
            Engine::Mono => "mono",
            Engine::Enumerate => "enumerate",
        }
    }

    pub const ALL: [Engine; 4] = [
        Engine::Symex(Mode::Partial),
        Engine::Symex(Mode::Full),
        Engine::Mono,
        Engine::Enumerate,
    ];
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub engine: Engine,
    pub prune: bool,
    pub timeout: Option<Duration>,
    pub dump_dimacs: bool,
    pub max_enum_bits: u32,
    /// Symbolic execution budget (see [`SymexConfig::max_branch_attempts`]).
    pub max_branch_attempts: Option<u64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            engine: Engine::Symex(Mode::Partial),
            prune: true,
            timeout: None,
            dump_dimacs: false,
            max_enum_bits: enumerate::DEFAULT_MAX_BITS,
            max_branch_attempts: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumStats {
    pub runs: u64,
    pub bits: u32,
}

/// Stats JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub engine: String,
    pub verdict: String,
    pub violated_assert: Option<String>,
    pub prune: bool,
    pub statements_unwound: usize,
    pub statements_checked: usize,
    /// Counterexample replay on the unsliced program hit the named assert.
    pub trace_confirmed: Option<bool>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symex: Option<ExplorationStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bmc: Option<BmcStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enumeration: Option<EnumStats>,
}

#[derive(Clone, Debug)]
pub struct Verified {
    pub status: Status,
    pub report: Report,
    pub trace: Option<Trace>,
    pub dimacs: Option<String>,
}

/// Runs one engine on `b.checked` and replays a counterexample on
/// `b.unwound`.
pub fn verify(b: &Built, cfg: &VerifyConfig) -> Result<Verified, PipelineError> {
    let mut report = Report {
        engine: cfg.engine.name().to_string(),
        verdict: String::new(),
        violated_assert: None,
        prune: cfg.prune,
        statements_unwound: b.unwound.stmt_count(),
        statements_checked: b.checked.stmt_count(),
        trace_confirmed: None,
        warnings: b.warnings.clone(),
        symex: None,
        bmc: None,
        enumeration: None,
    };
    let mut dimacs = None;
    let status = match cfg.engine {
        Engine::Symex(mode) => {
            let r = symex::run(
                &b.checked,
                &SymexConfig {
                    mode,
                    prune: cfg.prune,
                    record_paths: false,
                    timeout: cfg.timeout,
                    max_branch_attempts: cfg.max_branch_attempts,
                },
            )?;
            report.symex = Some(r.stats);
            r.status
        }
        Engine::Mono => {
            let ssa = bmc::encode_ssa(&b.checked)?;
            let r = bmc::check(
                &ssa,
                &BmcConfig {
                    timeout: cfg.timeout,
                    dump_dimacs: cfg.dump_dimacs,
                },
            )?;
            report.bmc = Some(r.stats);
            dimacs = r.dimacs;
            r.status
        }
        Engine::Enumerate => {
            let r = enumerate::enumerate(&b.checked, cfg.max_enum_bits, Exec::default())?;
            report.enumeration = Some(EnumStats { runs: r.runs, bits: r.bits });
            r.status
        }
    };
    report.verdict = status.name().to_string();
    if let Status::Unknown { reason } = &status {
        report.warnings.push(reason.clone());
    }
    let mut trace = None;
    if let Status::Unsafe(cex) = &status {
        report.violated_assert = Some(cex.label.clone());
        let (t, outcome) = replay(&b.unwound, cex)?;
        let ok = matches!(&outcome, Outcome::Violated { label } if *label == cex.label);
        if !ok {
            log::error!("counterexample for `{}` does not replay: {outcome:?}", cex.label);
        }
        report.trace_confirmed = Some(ok);
        trace = Some(t);
    }
    Ok(Verified {
        status,
        report,
        trace,
        dimacs,
    })
}
