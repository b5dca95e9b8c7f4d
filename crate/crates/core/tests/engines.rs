// SPDX-License-Identifier: Apache-2.0

mod common;

use std::sync::Arc;

use common::ExprGen;
use coverif_core::bmc::{self, BmcConfig, EqKind};
use coverif_core::bv::{BvExpr, ExprKind};
use coverif_core::engine::Status;
use coverif_core::enumerate::{enumerate, Exec, InputSpace};
use coverif_core::ir::{Program, Stmt};
use coverif_core::sat::{parse_dimacs, Cdcl, CnfInstance, SatBackend, SolveOutcome};
use coverif_core::slice::slice;
use coverif_core::symex::{self, Mode, SymexConfig};
use coverif_core::trace::confirms;
use coverif_core::unwind::unwind;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn v8(n: &str, version: u32) -> BvExpr {
    BvExpr::var(n, version, 8)
}

fn k8(x: u64) -> BvExpr {
    BvExpr::konst(x, 8)
}

/// `if (reset) { m = 0; t = 0; } else if (c > d) m = c + d; else t = (c & 3) << d;`
fn fragment(tail: Vec<Stmt>) -> Program {
    let mut p = Program::new();
    for n in ["reset", "c", "d", "m", "t"] {
        p.declare(n, 8);
    }
    let v = |n: &str| v8(n, 0);
    p.body = vec![Stmt::ite(
        v("reset").to_bool(),
        vec![Stmt::assign("m", k8(0)), Stmt::assign("t", k8(0))],
        vec![Stmt::ite(
            v("c").ugt(&v("d")),
            vec![Stmt::assign("m", v("c").add(&v("d")))],
            vec![Stmt::assign("t", v("c").and(&k8(3)).shl(&v("d")))],
        )],
    )];
    p.body.extend(tail);
    p
}

fn equivalent(a: &BvExpr, b: &BvExpr) -> bool {
    let mut inst = CnfInstance::new();
    inst.assert(&a.ne(b));
    inst.solve(&[]).unwrap() == SolveOutcome::Unsat
}

fn sym(p: &Program, mode: Mode, prune: bool) -> symex::SymexResult {
    let cfg = SymexConfig {
        mode,
        prune,
        record_paths: true,
        ..Default::default()
    };
    symex::run(p, &cfg).unwrap()
}

#[test]
fn fragment_paths_match_c1_c2_c3() {
    let p = fragment(vec![Stmt::assert("true", BvExpr::tt())]);
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
        let r = sym(&p, mode, true);
        assert!(r.status.is_safe());
        assert_eq!(r.stats.completed_paths, 3);
        assert_eq!(r.paths.len(), 3);
        for (got, want) in r.paths.iter().zip([&c1, &c2, &c3]) {
            assert!(equivalent(&BvExpr::and_all(got), want), "{mode:?}: {got:?}");
        }
        match mode {
            Mode::Full => assert_eq!(r.stats.solver_instances, 1),
            Mode::Partial => assert!(r.stats.solver_instances >= 2),
        }
    }
}

#[test]
fn fragment_monolithic_shape() {
    let p = fragment(vec![Stmt::assert("m", BvExpr::tt())]);
    let ssa = bmc::encode_ssa(&p).unwrap();
    assert_eq!(ssa.count(EqKind::Guard), 2);
    assert!(ssa.equalities.len() <= 12, "{}", ssa.equalities.len());
    let merged: Vec<&str> = ssa
        .equalities
        .iter()
        .filter(|e| e.kind == EqKind::Merge)
        .map(|e| {
            assert!(matches!(e.value.kind(), ExprKind::Ite(..)));
            &*e.name
        })
        .collect();
    assert_eq!(merged.iter().filter(|n| **n == "m").count(), 2);
    assert_eq!(merged.iter().filter(|n| **n == "t").count(), 2);
    assert!(ssa.equalities.iter().all(|e| e.kind != EqKind::Prefix));

    // Unsigned non-negativity holds.
    let p = fragment(vec![Stmt::assert("m>=0", v8("m", 0).uge(&k8(0)))]);
    let r = bmc::check(&bmc::encode_ssa(&p).unwrap(), &BmcConfig::default()).unwrap();
    assert!(r.status.is_safe());
}

#[test]
fn branch_writing_one_variable_merges_only_it() {
    let mut p = Program::new();
    p.declare("m", 8);
    p.declare("t", 8);
    p.declare("c", 1);
    p.body = vec![
        Stmt::assign("t", k8(1)),
        Stmt::ite(BvExpr::var("c", 0, 1), vec![Stmt::assign("m", k8(2))], vec![]),
    ];
    let ssa = bmc::encode_ssa(&p).unwrap();
    let merges: Vec<&str> = ssa.equalities.iter().filter(|e| e.kind == EqKind::Merge).map(|e| &*e.name).collect();
    assert_eq!(merges, ["m"]);
}

#[test]
fn assert_false_is_unsafe_everywhere() {
    let mut p = Program::new();
    p.body = vec![Stmt::assert("f", BvExpr::ff())];
    for mode in [Mode::Partial, Mode::Full] {
        let Status::Unsafe(cex) = sym(&p, mode, true).status else { panic!() };
        assert!(cex.havocs.is_empty());
        assert!(confirms(&p, &cex));
    }
    let r = bmc::check(&bmc::encode_ssa(&p).unwrap(), &BmcConfig::default()).unwrap();
    assert!(!r.status.is_safe());
}

#[test]
fn fragment_asserts_match_enumeration() {
    let shifted = v8("c", 0).and(&k8(3)).shl(&v8("d", 0));
    let below = v8("t", 0).ule(&shifted);
    for (cond, safe) in [(below.clone(), false), (below.or(&v8("c", 0).ugt(&v8("d", 0))), true)] {
        let mut p = fragment(vec![Stmt::assert("t", cond)]);
        p.body.insert(0, Stmt::assign("reset", k8(0)));
        p.body.insert(0, Stmt::assign("t", k8(255)));
        let truth = enumerate(&p, 16, Exec::default()).unwrap();
        assert_eq!(truth.bits, 16);
        assert_eq!(truth.status.is_safe(), safe);
        let mono = bmc::check(&bmc::encode_ssa(&p).unwrap(), &BmcConfig::default()).unwrap();
        let mut verdicts = vec![mono.status];
        for mode in [Mode::Partial, Mode::Full] {
            verdicts.push(sym(&p, mode, true).status);
        }
        for v in verdicts {
            assert_eq!(v.is_safe(), safe);
            if let Status::Unsafe(cex) = v {
                assert!(confirms(&p, &cex));
            }
        }
    }
}

#[test]
fn infeasible_first_branch_is_never_entered() {
    let mut p = Program::new();
    p.declare("x", 4);
    let x = p.var("x");
    let inner: Vec<Stmt> = (0..10).map(|i| Stmt::assign("x", BvExpr::konst(i, 4))).collect();
    p.body = vec![
        Stmt::assign("x", BvExpr::konst(0, 4)),
        Stmt::ite(x.eq(&BvExpr::konst(1, 4)), inner, vec![]),
        Stmt::assert("x", x.ne(&BvExpr::konst(1, 4))),
    ];
    let on = sym(&p, Mode::Partial, true);
    let off = sym(&p, Mode::Partial, false);
    assert!(on.status.is_safe() && off.status.is_safe());
    assert_eq!(on.stats.statements, 3);
    assert_eq!(on.stats.pruned, 1);
    assert!(off.stats.statements > on.stats.statements);
    assert_eq!(off.stats.pruned, 0);
}

#[test]
fn dimacs_dump_reproduces_the_verdict() {
    let cond = v8("m", 0).ne(&k8(7));
    let p = fragment(vec![Stmt::assert("m", cond)]);
    let cfg = BmcConfig {
        dump_dimacs: true,
        ..Default::default()
    };
    let r = bmc::check(&bmc::encode_ssa(&p).unwrap(), &cfg).unwrap();
    let (n, clauses) = parse_dimacs(r.dimacs.as_deref().unwrap()).unwrap();
    let mut s = Cdcl::new();
    for _ in 0..n {
        s.new_var();
    }
    for c in &clauses {
        s.add_clause(c);
    }
    let want = if r.status.is_safe() { SolveOutcome::Unsat } else { SolveOutcome::Sat };
    assert_eq!(s.solve(&[], None).unwrap(), want);
    assert!(!r.status.is_safe());
}

// ---- random programs -------------------------------------------------------

struct ProgGen {
    exprs: ExprGen,
    labels: usize,
}

impl ProgGen {
    fn block(&mut self, rng: &mut StdRng, len: usize, depth: u32, out: &mut Vec<Stmt>) {
        for _ in 0..len {
            let (name, w) = self.exprs.vars[rng.gen_range(0..self.exprs.vars.len())].clone();
            match rng.gen_range(0..20) {
                0..=6 => out.push(Stmt::assign(name, self.exprs.gen(rng, w, 2))),
                7..=8 => out.push(Stmt::havoc(name)),
                9 => out.push(Stmt::assume(self.exprs.gen(rng, 1, 2))),
                10..=12 => {
                    self.labels += 1;
                    out.push(Stmt::assert(format!("a{}", self.labels), self.exprs.gen(rng, 1, 2)));
                }
                13..=17 if depth > 0 => {
                    let mut t = Vec::new();
                    let mut e = Vec::new();
                    let (lt, le) = (rng.gen_range(0..4), rng.gen_range(0..3));
                    self.block(rng, lt, depth - 1, &mut t);
                    self.block(rng, le, depth - 1, &mut e);
                    out.push(Stmt::ite(self.exprs.gen(rng, 1, 2), t, e));
                }
                18 if depth > 0 => {
                    let mut b = Vec::new();
                    let lb = rng.gen_range(1..3);
                    self.block(rng, lb, depth - 1, &mut b);
                    out.push(Stmt::Loop {
                        cond: self.exprs.gen(rng, 1, 1),
                        body: b,
                    });
                }
                _ => out.push(Stmt::assign(name, self.exprs.gen(rng, w, 1))),
            }
        }
    }
}

fn random_program(rng: &mut StdRng) -> Program {
    let mut g = ProgGen {
        exprs: ExprGen::random(rng, 3, 4),
        labels: 0,
    };
    let mut p = Program::new();
    for (n, w) in &g.exprs.vars {
        p.declare(n.as_str(), *w);
    }
    let len = rng.gen_range(2..8);
    g.block(rng, len, 2, &mut p.body);
    g.labels += 1;
    p.body.push(Stmt::assert(format!("a{}", g.labels), g.exprs.gen(rng, 1, 2)));
    p.number_havocs();
    p
}

#[test]
fn random_programs_all_engines_agree_with_enumeration() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut checked = 0;
    let mut unsafe_count = 0;
    while checked < 300 {
        let src = random_program(&mut rng);
        let k = rng.gen_range(0..3);
        let u = unwind(&src, k).program;
        if InputSpace::new(&u).bits() > 12 {
            continue;
        }
        checked += 1;
        let truth = enumerate(&u, 16, Exec::default()).unwrap().status.is_safe();
        unsafe_count += usize::from(!truth);
        let sliced = slice(&u);
        assert!(sliced.stmt_count() <= u.stmt_count());
        for prog in [&u, &sliced] {
            for mode in [Mode::Partial, Mode::Full] {
                for prune in [true, false] {
                    let r = sym(prog, mode, prune);
                    assert_eq!(r.status.is_safe(), truth, "{mode:?} prune={prune}\n{}", prog.pretty());
                    if let Status::Unsafe(cex) = &r.status {
                        assert!(confirms(&u, cex), "{cex:?}\n{}", u.pretty());
                    }
                    assert!(r.stats.pruned <= r.stats.branch_attempts);
                }
            }
            let m = bmc::check(&bmc::encode_ssa(prog).unwrap(), &BmcConfig::default()).unwrap();
            assert_eq!(m.status.is_safe(), truth, "mono\n{}", prog.pretty());
            if let Status::Unsafe(cex) = &m.status {
                assert!(confirms(&u, cex), "{cex:?}\n{}", u.pretty());
            }
        }
        assert_eq!(slice(&sliced), sliced);
    }
    assert!(unsafe_count > 30 && unsafe_count < 270, "{unsafe_count}");
}

#[test]
fn enumeration_parallel_matches_sequential() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..40 {
        let u = unwind(&random_program(&mut rng), 1).program;
        if InputSpace::new(&u).bits() > 12 {
            continue;
        }
        let a = enumerate(&u, 16, Exec::Sequential).unwrap();
        let b = enumerate(&u, 16, Exec::default()).unwrap();
        assert_eq!(a.status, b.status);
    }
}

#[test]
fn initial_values_of_unwritten_vars_are_free() {
    let mut p = Program::new();
    p.declare("x", 4);
    p.body = vec![Stmt::assert("x", p.var("x").ne(&BvExpr::konst(9, 4)))];
    let Status::Unsafe(cex) = sym(&p, Mode::Full, true).status else { panic!() };
    assert_eq!(cex.initial[&Arc::from("x")], 9);
}
