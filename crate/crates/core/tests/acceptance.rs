// SPDX-License-Identifier: Apache-2.0

//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{ref_bit_assign, ref_concat, Bits, ExprGen};
use coverif_core::benchmarks::{self, uart, TxData, UartBug};
use coverif_core::bmc::{self, EqKind};
use coverif_core::bv::{
    eval, lower_bit_assign, lower_concat, lower_indexed_part_select, lower_part_select, mask, BinOp, BvExpr,
    ConcreteEnv, ExprKind,
};
use coverif_core::engine::Status;
use coverif_core::enumerate::InputSpace;
use coverif_core::interp::Outcome;
use coverif_core::ir::{Program, Stmt};
use coverif_core::netlist::emit_c;
use coverif_core::pipeline::{build, translate, verify, Engine, VerifyConfig};
use coverif_core::sat::{CnfInstance, SolveOutcome};
use coverif_core::symex::{self, Mode, SymexConfig};
use coverif_core::trace::{simulate_trace, Trace};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const MAX_BITS: u32 = 16;
const MAX_BOUND: usize = 4;
const SUITE_LIMIT: Duration = Duration::from_secs(600);

macro_rules! ensure {
    ($c:expr, $($fmt:tt)+) => {
        if !$c {
            return Err(format!($($fmt)+));
        }
    };
}

// ---- benchmark sweep shared by the verdict, replay and slicing criteria ----

struct Run {
    bench: String,
    bound: usize,
    slice: bool,
    engine: Engine,
    verdict: &'static str,
    stmts_unwound: usize,
    stmts_checked: usize,
    /// For Unsafe: did `simulate` on the JSON-round-tripped trace hit the
    /// named assert?
    replayed: Option<bool>,
}

struct Sweep {
    runs: Vec<Run>,
    skipped: Vec<String>,
    elapsed: Duration,
}

fn sweep() -> &'static Result<Sweep, String> {
    static SWEEP: OnceLock<Result<Sweep, String>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let mut runs = Vec::new();
        let mut skipped = Vec::new();
        for b in benchmarks::all() {
            for k in 1..=MAX_BOUND {
                for do_slice in [false, true] {
                    let built = build(&b.verilog, &b.top, Some(&b.firmware), k, do_slice)
                        .map_err(|e| format!("{} k={k}: {e}", b.name))?;
                    let bits = InputSpace::new(&built.unwound).bits();
                    if bits > MAX_BITS {
                        if !do_slice {
                            skipped.push(format!("{} k={k} ({bits} bits)", b.name));
                        }
                        continue;
                    }
                    for engine in Engine::ALL {
                        let v = verify(
                            &built,
                            &VerifyConfig {
                                engine,
                                max_enum_bits: MAX_BITS,
                                ..Default::default()
                            },
                        )
                        .map_err(|e| format!("{} k={k} {}: {e}", b.name, engine.name()))?;
                        let replayed = v.trace.as_ref().map(|t| {
                            let json = serde_json::to_string(t).expect("trace serializes");
                            let t: Trace = serde_json::from_str(&json).expect("trace parses");
                            let label = t.violated_assert.clone();
                            matches!(simulate_trace(&built.unwound, &t),
                                Ok(r) if matches!(&r.outcome, Outcome::Violated { label: l } if Some(l) == label.as_ref()))
                        });
                        runs.push(Run {
                            bench: b.name.clone(),
                            bound: k,
                            slice: do_slice,
                            engine,
                            verdict: v.status.name(),
                            stmts_unwound: built.unwound.stmt_count(),
                            stmts_checked: built.checked.stmt_count(),
                            replayed,
                        });
                    }
                }
            }
        }
        Ok(Sweep {
            runs,
            skipped,
            elapsed: start.elapsed(),
        })
    })
}

fn verdict_agreement() -> Check {
    let s = sweep().as_ref().map_err(Clone::clone)?;
    let mut cases = 0;
    for r in s.runs.iter().filter(|r| !r.slice && r.engine == Engine::Enumerate) {
        cases += 1;
        for e in [Engine::Symex(Mode::Partial), Engine::Symex(Mode::Full), Engine::Mono] {
            let other = s
                .runs
                .iter()
                .find(|o| o.bench == r.bench && o.bound == r.bound && !o.slice && o.engine == e)
                .ok_or("missing run")?;
            ensure!(
                other.verdict == r.verdict,
                "{} k={}: {} says {}, enumeration says {}",
                r.bench,
                r.bound,
                e.name(),
                other.verdict,
                r.verdict
            );
        }
    }
    ensure!(cases > 0, "no benchmark within {MAX_BITS} bits");
    ensure!(s.elapsed < SUITE_LIMIT, "sweep took {:?}", s.elapsed);
    let unsafe_n = s
        .runs
        .iter()
        .filter(|r| !r.slice && r.engine == Engine::Enumerate && r.verdict == "Unsafe")
        .count();
    Ok(format!(
        "{cases} benchmark/bound cases ({unsafe_n} unsafe), 4 deciders agree; sweep {:.1}s; beyond {MAX_BITS} bits: {}",
        s.elapsed.as_secs_f64(),
        if s.skipped.is_empty() { "none".to_string() } else { s.skipped.join(", ") }
    ))
}

fn trace_replay() -> Check {
    let s = sweep().as_ref().map_err(Clone::clone)?;
    let unsafe_runs: Vec<&Run> = s.runs.iter().filter(|r| r.verdict == "Unsafe").collect();
    ensure!(!unsafe_runs.is_empty(), "no Unsafe verdict in the suite");
    for r in &unsafe_runs {
        ensure!(
            r.replayed == Some(true),
            "{} k={} slice={} {}: trace does not replay",
            r.bench,
            r.bound,
            r.slice,
            r.engine.name()
        );
    }
    Ok(format!("{}/{} Unsafe traces confirmed by simulate", unsafe_runs.len(), unsafe_runs.len()))
}

fn slicing_soundness() -> Check {
    let s = sweep().as_ref().map_err(Clone::clone)?;
    let mut pairs = 0;
    let (mut before, mut after) = (0, 0);
    for r in s.runs.iter().filter(|r| r.slice) {
        let plain = s
            .runs
            .iter()
            .find(|o| o.bench == r.bench && o.bound == r.bound && !o.slice && o.engine == r.engine)
            .ok_or("missing unsliced run")?;
        ensure!(
            plain.verdict == r.verdict,
            "{} k={} {}: sliced {} vs unsliced {}",
            r.bench,
            r.bound,
            r.engine.name(),
            r.verdict,
            plain.verdict
        );
        ensure!(
            r.stmts_checked <= r.stmts_unwound,
            "{} k={}: slice grew {} -> {}",
            r.bench,
            r.bound,
            r.stmts_unwound,
            r.stmts_checked
        );
        pairs += 1;
        before += r.stmts_unwound;
        after += r.stmts_checked;
    }
    ensure!(pairs > 0, "no sliced runs");
    Ok(format!("{pairs} engine runs identical; statements {before} -> {after} in total"))
}

// ---- translation goldens ------------------------------------------------------

fn conjuncts(e: &BvExpr, out: &mut Vec<BvExpr>) {
    match e.kind() {
        ExprKind::Binary(BinOp::And, a, b) if e.width() == 1 => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        _ => out.push(e.clone()),
    }
}

fn translation_goldens() -> Check {
    let p = translate(benchmarks::EX1_V, "top").map_err(|e| e.to_string())?;
    let c = emit_c(&p);
    let st = c.find("struct state_elements_top {").ok_or("no state struct")?;
    let body = &c[st..st + c[st..].find("};").ok_or("unterminated struct")?];
    let members: Vec<&str> = body
        .lines()
        .skip(1)
        .filter_map(|l| l.trim().trim_end_matches(';').rsplit(' ').next())
        .collect();
    ensure!(members == ["b", "d", "e"], "state members {members:?}");
    let shadows = ["b_old = stop.b;", "d_old = stop.d;", "e_old = stop.e;"];
    ensure!(shadows.iter().all(|s| c.contains(s)), "shadow captures missing\n{c}");
    ensure!(c.contains("c = (e_old ? 0 : d_old);"), "no ite for c\n{c}");

    let p = translate(benchmarks::TOP_AB_V, "top").map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    conjuncts(p.comb_constraint.as_ref().ok_or("no combinational constraint")?, &mut parts);
    let mut got = BTreeSet::new();
    for e in &parts {
        let ExprKind::Binary(BinOp::Eq, a, b) = e.kind() else {
            return Err(format!("not an equality: {e}"));
        };
        let side = |x: &BvExpr| -> Result<String, String> {
            let (n, _) = x.as_var().ok_or(format!("not a variable: {x}"))?;
            Ok(n.strip_prefix("top.").unwrap_or(n).to_string())
        };
        got.insert(BTreeSet::from([side(a)?, side(b)?]));
    }
    let want: BTreeSet<BTreeSet<String>> = [
        ("a.foo", "a.x"),
        ("a.y", "a.bar"),
        ("a.x", "x"),
        ("a.foo", "foo"),
        ("a.bar", "bar"),
        ("a.y", "y"),
        ("b.bar", "b.foo"),
        ("b.foo", "foo"),
        ("b.bar", "bar"),
        ("msg", "a.msg"),
        ("a.q", "a.msg"),
    ]
    .iter()
    .map(|(a, b)| BTreeSet::from([a.to_string(), b.to_string()]))
    .collect();
    ensure!(parts.len() == 11 && got == want, "A_comb equalities {got:?}");
    Ok("ex1: members b,d,e, 3 shadows, ite for c; top/A/B: 11 equalities".into())
}

// ---- bit lowering ---------------------------------------------------------------

const LOWERING_CASES: usize = 10_000;

fn env_of(pairs: &[(&str, u32, u64)]) -> ConcreteEnv {
    let mut env = ConcreteEnv::new();
    for (n, w, v) in pairs {
        env.bind(*n, 0, *w, *v);
    }
    env
}

fn bit_lowering() -> Check {
    let mut rng = StdRng::seed_from_u64(0xacce);
    for _ in 0..LOWERING_CASES {
        let w = rng.gen_range(1..=64u32);
        let lo = rng.gen_range(0..w);
        let hi = rng.gen_range(lo..w);
        let rw = rng.gen_range((hi - lo + 1)..=64);
        let (old, rhs) = (rng.gen::<u64>() & mask(w), rng.gen::<u64>() & mask(rw));
        let e = lower_bit_assign(&BvExpr::var("d", 0, w), hi, lo, &BvExpr::var("s", 0, rw)).map_err(|e| e.to_string())?;
        let got = eval(&e, &env_of(&[("d", w, old), ("s", rw, rhs)])).map_err(|e| e.to_string())?;
        let want = ref_bit_assign(&Bits::from_u64(old, w), hi, lo, &Bits::from_u64(rhs, rw)).to_u64();
        ensure!(got == want, "bit assign w={w} [{hi}:{lo}]: {got:#x} vs {want:#x}");
    }
    for _ in 0..LOWERING_CASES {
        let w = rng.gen_range(1..=64u32);
        let lo = rng.gen_range(0..w);
        let hi = rng.gen_range(lo..w);
        let v = rng.gen::<u64>() & mask(w);
        let e = lower_part_select(&BvExpr::var("x", 0, w), hi, lo).map_err(|e| e.to_string())?;
        let got = eval(&e, &env_of(&[("x", w, v)])).map_err(|e| e.to_string())?;
        ensure!(got == Bits::from_u64(v, w).slice(hi, lo).to_u64(), "part select w={w} [{hi}:{lo}]");
    }
    for _ in 0..LOWERING_CASES {
        let w = rng.gen_range(1..=64u32);
        let pw = rng.gen_range(1..=w);
        let off = rng.gen_range(0..=(w - pw));
        let v = rng.gen::<u64>() & mask(w);
        let e = lower_indexed_part_select(&BvExpr::var("x", 0, w), &BvExpr::konst(off as u64, 32), pw)
            .map_err(|e| e.to_string())?;
        let got = eval(&e, &env_of(&[("x", w, v)])).map_err(|e| e.to_string())?;
        ensure!(got == Bits::from_u64(v, w).slice(off + pw - 1, off).to_u64(), "indexed select w={w} +{off}:{pw}");
    }
    for _ in 0..LOWERING_CASES {
        let n = rng.gen_range(1..=4);
        let (mut ops, mut parts, mut env) = (Vec::new(), Vec::new(), ConcreteEnv::new());
        for i in 0..n {
            let w = rng.gen_range(1..=16u32);
            let lo = rng.gen_range(0..w);
            let hi = rng.gen_range(lo..w);
            let v = rng.gen::<u64>() & mask(w);
            let name = format!("x{i}");
            env.bind(name.as_str(), 0, w, v);
            ops.push((BvExpr::var(name.as_str(), 0, w), hi, lo));
            parts.push(Bits::from_u64(v, w).slice(hi, lo));
        }
        let e = lower_concat(&ops).map_err(|e| e.to_string())?;
        ensure!(eval(&e, &env).map_err(|e| e.to_string())? == ref_concat(&parts).to_u64(), "concat {ops:?}");
    }
    let (in1, in2) = (BvExpr::var("in1", 0, 8), BvExpr::var("in2", 0, 8));
    let sel = |e: &BvExpr, h, l| lower_part_select(e, h, l).map_err(|e| e.to_string());
    let a = lower_bit_assign(&BvExpr::var("out1", 0, 8), 7, 5, &sel(&in1, 4, 2)?).map_err(|e| e.to_string())?;
    let b = lower_bit_assign(&BvExpr::var("out2", 0, 8), 6, 6, &sel(&in2, 4, 4)?).map_err(|e| e.to_string())?;
    let c = lower_concat(&[(in2.clone(), 5, 2), (in1.clone(), 6, 1)]).map_err(|e| e.to_string())?;
    ensure!(a.to_string() == "((out1 & 0x1f) | (((in1 & 0x1c) >> 0x2) << 0x5))", "pattern 1: {a}");
    ensure!(b.to_string() == "((out2 & 0xbf) | (((in2 & 0x10) >> 0x4) << 0x6))", "pattern 2: {b}");
    ensure!(c.width() == 10, "pattern 3 width {}", c.width());
    for _ in 0..LOWERING_CASES {
        let (x, y) = (rng.gen::<u8>() as u64, rng.gen::<u8>() as u64);
        let env = env_of(&[("in1", 8, x), ("in2", 8, y)]);
        let want = ref_concat(&[Bits::from_u64(y, 8).slice(5, 2), Bits::from_u64(x, 8).slice(6, 1)]).to_u64();
        ensure!(eval(&c, &env).map_err(|e| e.to_string())? == want, "pattern 3 in1={x} in2={y}");
    }
    Ok(format!("{LOWERING_CASES} cases each: bit assign, part select, indexed select, concat; 3 literal patterns"))
}

// ---- monolithic encoding shape --------------------------------------------------

fn v8(n: &str, version: u32) -> BvExpr {
    BvExpr::var(n, version, 8)
}

fn k8(x: u64) -> BvExpr {
    BvExpr::konst(x, 8)
}

fn fragment() -> Program {
    let mut p = Program::new();
    for n in ["reset", "c", "d", "m", "t"] {
        p.declare(n, 8);
    }
    let v = |n: &str| v8(n, 0);
    p.body = vec![
        Stmt::ite(
            v("reset").to_bool(),
            vec![Stmt::assign("m", k8(0)), Stmt::assign("t", k8(0))],
            vec![Stmt::ite(
                v("c").ugt(&v("d")),
                vec![Stmt::assign("m", v("c").add(&v("d")))],
                vec![Stmt::assign("t", v("c").and(&k8(3)).shl(&v("d")))],
            )],
        ),
        Stmt::assert("end", BvExpr::tt()),
    ];
    p
}

fn equivalent(a: &BvExpr, b: &BvExpr) -> bool {
    let mut inst = CnfInstance::new();
    inst.assert(&a.ne(b));
    matches!(inst.solve(&[]), Ok(SolveOutcome::Unsat))
}

fn monolithic_shape() -> Check {
    let p = fragment();
    let ssa = bmc::encode_ssa(&p).map_err(|e| e.to_string())?;
    let guards = ssa.count(EqKind::Guard);
    let merges: Vec<&str> = ssa
        .equalities
        .iter()
        .filter(|e| e.kind == EqKind::Merge && matches!(e.value.kind(), ExprKind::Ite(..)))
        .map(|e| &*e.name)
        .collect();
    ensure!(guards == 2, "{guards} guards");
    ensure!(merges.contains(&"m") && merges.contains(&"t"), "merges {merges:?}");
    ensure!(ssa.equalities.len() <= 12, "{} equalities", ssa.equalities.len());

    let c1 = v8("reset", 1).ne(&k8(0)).and(&v8("m", 2).eq(&k8(0))).and(&v8("t", 2).eq(&k8(0)));
    let c2 = v8("reset", 1)
        .eq(&k8(0))
        .and(&v8("d", 1).uge(&v8("c", 1)).not())
        .and(&v8("m", 3).eq(&v8("c", 1).add(&v8("d", 1))));
    let c3 = v8("reset", 1)
        .eq(&k8(0))
        .and(&v8("d", 1).uge(&v8("c", 1)))
        .and(&v8("t", 3).eq(&v8("c", 1).and(&k8(3)).shl(&v8("d", 1))));
    for mode in [Mode::Partial, Mode::Full] {
        let r = symex::run(
            &p,
            &SymexConfig {
                mode,
                record_paths: true,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        ensure!(r.paths.len() == 3, "{mode:?}: {} paths", r.paths.len());
        for (i, (got, want)) in r.paths.iter().zip([&c1, &c2, &c3]).enumerate() {
            ensure!(equivalent(&BvExpr::and_all(got), want), "{mode:?}: path {} differs from C{}", i + 1, i + 1);
        }
    }
    Ok(format!(
        "{guards} guards, ite merges {merges:?}, {} equalities; 3 paths match C1-C3 (pi, fi)",
        ssa.equalities.len()
    ))
}

// ---- pruning ----------------------------------------------------------------------

const PRUNE_BOUND: usize = 16;
/// The unpruned search is exponential in the number of branches, so it runs
/// under a budget of this many times the pruned search's branch attempts.
const NO_PRUNE_BUDGET_FACTOR: u64 = 4;

fn pruning_effect() -> Check {
    let b = uart("uart4_det", 4, UartBug::None, PRUNE_BOUND as u32, TxData::Fixed, false);
    let built = build(&b.verilog, &b.top, Some(&b.firmware), PRUNE_BOUND, false).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for mode in [Mode::Partial, Mode::Full] {
        let on = verify(
            &built,
            &VerifyConfig {
                engine: Engine::Symex(mode),
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let son = on.report.symex.clone().ok_or("no stats")?;
        ensure!(on.status.is_safe(), "{mode:?}: loopback not safe: {}", on.status.name());
        let pct = son.pruning_percent;
        ensure!(pct.total_cmp(&90.0).is_ge(), "{mode:?}: pruning {pct}%");
        let off = verify(
            &built,
            &VerifyConfig {
                engine: Engine::Symex(mode),
                prune: false,
                max_branch_attempts: Some(son.branch_attempts * NO_PRUNE_BUDGET_FACTOR),
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let soff = off.report.symex.clone().ok_or("no stats")?;
        ensure!(
            soff.branch_attempts > son.branch_attempts,
            "{mode:?}: no-prune attempts {} <= {}",
            soff.branch_attempts,
            son.branch_attempts
        );
        let finished = match off.status {
            Status::Unknown { .. } => "budget hit",
            _ => "finished",
        };
        out.push(format!(
            "{}: {:.2}% ({}/{}), no-prune {} attempts ({finished})",
            Engine::Symex(mode).name(),
            son.pruning_percent,
            son.pruned,
            son.branch_attempts,
            soff.branch_attempts
        ));
    }
    Ok(out.join("; "))
}

// ---- solver soundness ------------------------------------------------------------

const SOLVER_CASES: u64 = 10_000;

fn solver_soundness() -> Check {
    let mut sat = 0;
    for seed in 0..SOLVER_CASES {
        let mut rng = StdRng::seed_from_u64(seed ^ 0x5a75);
        let g = ExprGen::random(&mut rng, 3, 6);
        let f = g.gen(&mut rng, 1, 4);
        let expected = g.any_assignment(|env| eval(&f, env).unwrap() == 1);
        let mut inst = CnfInstance::new();
        inst.assert(&f);
        let got = inst.solve(&[]).map_err(|e| e.to_string())? == SolveOutcome::Sat;
        ensure!(got == expected, "seed {seed}: solver {got}, enumeration {expected}: {f}");
        if got {
            sat += 1;
            let mut env = ConcreteEnv::new();
            for (n, w) in &g.vars {
                env.bind(n.as_str(), 0, *w, inst.var_value(&n.as_str().into(), 0).unwrap_or(0));
            }
            ensure!(eval(&f, &env).map_err(|e| e.to_string())? == 1, "seed {seed}: model falsifies {f}");
        }
    }
    Ok(format!("{SOLVER_CASES} formulas agree with enumeration ({sat} sat, all models valid)"))
}

fn main() {
    let start = Instant::now();
    let criteria: [Criterion; 8] = [
        ("verdict cross-validation", verdict_agreement),
        ("translation goldens", translation_goldens),
        ("bit-lowering equivalence", bit_lowering),
        ("monolithic encoding shape", monolithic_shape),
        ("pruning effect", pruning_effect),
        ("trace replay", trace_replay),
        ("slicing soundness", slicing_soundness),
        ("solver soundness", solver_soundness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    let total = start.elapsed();
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        total.as_secs_f64()
    );
    if failed > 0 || total > SUITE_LIMIT {
        std::process::exit(1);
    }
}
