// SPDX-License-Identifier: Apache-2.0

//! `coverif`: translate a Verilog design to a software netlist, verify it
//! together with firmware, or replay a counterexample trace.
//!
//! Exit codes: 0 safe (or trace replay without violation), 10 unsafe (or
//! replay hits an assertion), 1 usage, input or engine error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use coverif_core::benchmarks;
use coverif_core::engine::Status;
use coverif_core::interp::Outcome;
use coverif_core::netlist::emit_c;
use coverif_core::pipeline::{build, translate, verify, Engine, PipelineError, VerifyConfig};
use coverif_core::symex::Mode;
use coverif_core::trace::{simulate_trace, Trace};

const EXIT_SAFE: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_UNSAFE: u8 = 10;

const TIMEOUT_ENV: &str = "COVERIF_SOLVER_TIMEOUT_MS";

#[derive(Parser, Debug)]
#[command(name = "coverif", version, about = "Bounded hardware/firmware co-verification")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print the software netlist of a design as C, or a program as IR JSON.
    Translate(TranslateArgs),
    /// Check the assertions of a design and its firmware up to a bound.
    Verify(VerifyArgs),
    /// Replay a trace file on the composed, unwound program.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct Input {
    /// Verilog source file.
    #[arg(required_unless_present = "bench")]
    design: Option<PathBuf>,
    /// Top module.
    #[arg(long, default_value = "top")]
    top: String,
    /// Firmware driver (default: step the design forever with free inputs).
    #[arg(long)]
    fw: Option<PathBuf>,
    /// Use a bundled benchmark instead of files (`--bench list` to list).
    #[arg(long, conflicts_with_all = ["design", "fw"])]
    bench: Option<String>,
    /// Unwinding bound for the outermost firmware loops.
    #[arg(long, default_value_t = 1)]
    unwind: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Emit {
    /// C code of the software netlist.
    C,
    /// Software netlist as JSON.
    Netlist,
    /// Composed and unwound program as IR JSON.
    Ir,
    /// Composed and unwound program as indented text.
    Text,
}

#[derive(Args, Debug)]
struct TranslateArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value_t = Emit::C)]
    emit: Emit,
    /// Apply slicing before emitting IR.
    #[arg(long)]
    slice: bool,
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Symex,
    Mono,
    /// Exhaustive concrete enumeration (at most 16 input bits by default).
    Enumerate,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Partial incremental: a solver instance per path.
    Pi,
    /// Full incremental: one instance with activation literals.
    Fi,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value_t = EngineArg::Symex)]
    engine: EngineArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Pi)]
    mode: ModeArg,
    /// Do not check branch feasibility during symbolic execution.
    #[arg(long)]
    no_prune: bool,
    /// Slice the program before checking (the default).
    #[arg(long, overrides_with = "no_slice")]
    slice: bool,
    #[arg(long, overrides_with = "slice")]
    no_slice: bool,
    /// Write stats JSON to this file (`-` for stdout).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write the counterexample trace JSON to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the monolithic CNF in DIMACS format to this file.
    #[arg(long)]
    dump_dimacs: Option<PathBuf>,
    /// Stop symbolic execution after this many branches and assumes.
    #[arg(long)]
    max_branches: Option<u64>,
    /// Input-bit limit of the enumeration engine.
    #[arg(long, default_value_t = coverif_core::enumerate::DEFAULT_MAX_BITS)]
    max_enum_bits: u32,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    input: Input,
    /// Trace JSON written by `verify --trace`.
    #[arg(long)]
    trace: PathBuf,
    /// Print every variable after the run as JSON.
    #[arg(long)]
    dump_state: bool,
}

struct Sources {
    name: String,
    verilog: String,
    top: String,
    firmware: Option<String>,
    fw_name: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn sources(input: &Input) -> Result<Sources> {
    if let Some(name) = &input.bench {
        let names: Vec<String> = benchmarks::all().into_iter().map(|b| b.name).collect();
        let b = benchmarks::by_name(name)
            .ok_or_else(|| anyhow!("unknown benchmark `{name}`; available: {}", names.join(", ")))?;
        return Ok(Sources {
            name: format!("<{name}>"),
            verilog: b.verilog,
            top: b.top,
            firmware: Some(b.firmware),
            fw_name: format!("<{name}>"),
        });
    }
    let path = input.design.as_ref().expect("required by clap");
    Ok(Sources {
        name: path.display().to_string(),
        verilog: read(path)?,
        top: input.top.clone(),
        firmware: input.fw.as_deref().map(read).transpose()?,
        fw_name: input.fw.as_ref().map_or_else(|| "<firmware>".into(), |p| p.display().to_string()),
    })
}

fn describe(e: PipelineError, src: &Sources) -> anyhow::Error {
    match e {
        PipelineError::Verilog(v) => anyhow!("{}", v.render(&src.name)),
        PipelineError::Firmware(f) => anyhow!("{}:{f}", src.fw_name),
        e => anyhow!(e),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) if p.as_os_str() == "-" => {
            print!("{text}");
            Ok(())
        }
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
    }
}

fn solver_timeout() -> Result<Option<Duration>> {
    match std::env::var(TIMEOUT_ENV) {
        Err(_) => Ok(None),
        Ok(s) => {
            let ms: u64 = s.trim().parse().with_context(|| format!("{TIMEOUT_ENV}={s} is not a number"))?;
            Ok((ms > 0).then(|| Duration::from_millis(ms)))
        }
    }
}

fn run_translate(a: &TranslateArgs) -> Result<u8> {
    let src = sources(&a.input)?;
    let text = match a.emit {
        Emit::C | Emit::Netlist => {
            let hw = translate(&src.verilog, &src.top).map_err(|e| anyhow!("{}", e.render(&src.name)))?;
            match a.emit {
                Emit::C => emit_c(&hw),
                _ => serde_json::to_string_pretty(&hw)? + "\n",
            }
        }
        Emit::Ir | Emit::Text => {
            let b = build(&src.verilog, &src.top, src.firmware.as_deref(), a.input.unwind, a.slice)
                .map_err(|e| describe(e, &src))?;
            match a.emit {
                Emit::Ir => serde_json::to_string_pretty(&b.checked)? + "\n",
                _ => b.checked.pretty(),
            }
        }
    };
    write_out(a.output.as_deref(), &text)?;
    Ok(EXIT_SAFE)
}

fn run_verify(a: &VerifyArgs) -> Result<u8> {
    let src = sources(&a.input)?;
    let k = a.input.unwind;
    let b = build(&src.verilog, &src.top, src.firmware.as_deref(), k, !a.no_slice).map_err(|e| describe(e, &src))?;
    let engine = match (a.engine, a.mode) {
        (EngineArg::Symex, ModeArg::Pi) => Engine::Symex(Mode::Partial),
        (EngineArg::Symex, ModeArg::Fi) => Engine::Symex(Mode::Full),
        (EngineArg::Mono, _) => Engine::Mono,
        (EngineArg::Enumerate, _) => Engine::Enumerate,
    };
    if a.dump_dimacs.is_some() && engine != Engine::Mono {
        bail!("--dump-dimacs requires --engine mono");
    }
    let cfg = VerifyConfig {
        engine,
        prune: !a.no_prune,
        timeout: solver_timeout()?,
        dump_dimacs: a.dump_dimacs.is_some(),
        max_enum_bits: a.max_enum_bits,
        max_branch_attempts: a.max_branches,
    };
    let v = verify(&b, &cfg).map_err(|e| describe(e, &src))?;
    let r = &v.report;
    match &v.status {
        Status::Safe => println!("{} k={k}: Safe", engine.name()),
        Status::Unsafe(cex) => println!("{} k={k}: Unsafe, assertion `{}` violated", engine.name(), cex.label),
        Status::Unknown { reason } => println!("{} k={k}: Unknown ({reason})", engine.name()),
    }
    if let Some(s) = &r.symex {
        println!(
            "paths {}, branch attempts {}, pruned {} ({:.2}%), solver calls {}, instances {}, time {:.2} ms",
            s.completed_paths,
            s.branch_attempts,
            s.pruned,
            s.pruning_percent,
            s.solver_calls,
            s.solver_instances,
            s.total_time_ms
        );
    }
    if let Some(s) = &r.bmc {
        println!(
            "equalities {}, guards {}, merges {}, obligations {}, cnf {} vars / {} clauses, time {:.2} ms",
            s.equalities, s.guards, s.merges, s.obligations, s.cnf_vars, s.cnf_clauses, s.total_time_ms
        );
    }
    if let Some(s) = &r.enumeration {
        println!("runs {}, input bits {}", s.runs, s.bits);
    }
    if let Some(p) = &a.stats {
        write_out(Some(p), &(serde_json::to_string_pretty(r)? + "\n"))?;
    }
    if let (Some(p), Some(d)) = (&a.dump_dimacs, &v.dimacs) {
        write_out(Some(p), d)?;
    }
    if let (Some(p), Some(t)) = (&a.trace, &v.trace) {
        write_out(Some(p), &(serde_json::to_string_pretty(t)? + "\n"))?;
    }
    if r.trace_confirmed == Some(false) {
        log::error!("the counterexample does not replay on the unsliced program");
        return Ok(EXIT_ERROR);
    }
    Ok(match v.status {
        Status::Safe => EXIT_SAFE,
        Status::Unsafe(_) => EXIT_UNSAFE,
        Status::Unknown { .. } => EXIT_ERROR,
    })
}

fn run_simulate(a: &SimulateArgs) -> Result<u8> {
    let src = sources(&a.input)?;
    let trace: Trace = serde_json::from_str(&read(&a.trace)?).with_context(|| format!("bad trace {}", a.trace.display()))?;
    let b = build(&src.verilog, &src.top, src.firmware.as_deref(), a.input.unwind, false).map_err(|e| describe(e, &src))?;
    let r = simulate_trace(&b.unwound, &trace)?;
    if a.dump_state {
        println!("{}", serde_json::to_string_pretty(&r.env)?);
    }
    Ok(match r.outcome {
        Outcome::Completed => {
            println!("completed without violation");
            EXIT_SAFE
        }
        Outcome::Vacuous => {
            println!("vacuous: an assumption is false on this trace");
            EXIT_SAFE
        }
        Outcome::Violated { label } => {
            println!("assertion `{label}` violated");
            if trace.violated_assert.as_deref().is_some_and(|l| l != label) {
                log::warn!("trace file names assertion `{}`", trace.violated_assert.as_deref().unwrap_or(""));
            }
            EXIT_UNSAFE
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_SAFE };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let input = match &cli.cmd {
        Cmd::Translate(a) => &a.input,
        Cmd::Verify(a) => &a.input,
        Cmd::Simulate(a) => &a.input,
    };
    if input.bench.as_deref() == Some("list") {
        for b in benchmarks::all() {
            println!("{}", b.name);
        }
        return ExitCode::from(EXIT_SAFE);
    }
    let r = match &cli.cmd {
        Cmd::Translate(a) => run_translate(a),
        Cmd::Verify(a) => run_verify(a),
        Cmd::Simulate(a) => run_simulate(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
