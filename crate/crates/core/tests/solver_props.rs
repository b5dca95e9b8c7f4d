// SPDX-License-Identifier: Apache-2.0

mod common;

use common::ExprGen;
use coverif_core::bv::{eval, BvExpr, ConcreteEnv};
use coverif_core::sat::{Cdcl, CnfInstance, Lit, SatBackend, SolveOutcome};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn check_formula(seed: u64) {
    let mut rng = StdRng::seed_from_u64(seed);
    let g = ExprGen::random(&mut rng, 3, 6);
    let f = g.gen(&mut rng, 1, 4);
    let expected = g.any_assignment(|env| eval(&f, env).unwrap() == 1);
    let mut inst = CnfInstance::new();
    inst.assert(&f);
    let got = inst.solve(&[]).unwrap();
    assert_eq!(got == SolveOutcome::Sat, expected, "seed {seed}: {f}");
    if got == SolveOutcome::Sat {
        let mut env = ConcreteEnv::new();
        for (n, w) in &g.vars {
            let v = inst.var_value(&n.as_str().into(), 0).unwrap_or(0);
            env.bind(n.as_str(), 0, *w, v);
        }
        assert_eq!(eval(&f, &env).unwrap(), 1, "seed {seed}: model does not satisfy {f}");
    }
}

#[test]
fn random_formulas_agree_with_enumeration() {
    for seed in 0..10_000 {
        check_formula(seed);
    }
}

#[test]
fn two_step_addition_matches_batch() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..300 {
        let g = ExprGen::random(&mut rng, 3, 5);
        let a = g.gen(&mut rng, 1, 3);
        let b = g.gen(&mut rng, 1, 3);
        let mut inc = CnfInstance::new();
        inc.assert(&a);
        let _ = inc.solve(&[]).unwrap();
        inc.assert(&b);
        let r_inc = inc.solve(&[]).unwrap();
        let mut batch = CnfInstance::new();
        batch.assert(&a.and(&b));
        assert_eq!(r_inc, batch.solve(&[]).unwrap(), "{a} /\\ {b}");
    }
}

#[test]
fn activation_guarded_segments() {
    // Segments guarded by activation literals behave like plain constraints
    // while the literal is assumed and vanish once it is retired.
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..300 {
        let g = ExprGen::random(&mut rng, 3, 5);
        let a = g.gen(&mut rng, 1, 3);
        let b = g.gen(&mut rng, 1, 3);
        let mut inst = CnfInstance::new();
        let ba = inst.fresh();
        inst.assert_under(ba, &a);
        let bb = inst.fresh();
        inst.assert_under(bb, &b);
        let both = inst.solve(&[ba, bb]).unwrap();
        let mut batch = CnfInstance::new();
        batch.assert(&a.and(&b));
        assert_eq!(both, batch.solve(&[]).unwrap());
        inst.add_clause(&[!bb]);
        let only_a = inst.solve(&[ba]).unwrap();
        let mut batch = CnfInstance::new();
        batch.assert(&a);
        assert_eq!(only_a, batch.solve(&[]).unwrap());
    }
}

#[test]
fn random_3sat_models_are_valid() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.gen_range(5..40u32);
        let m = (n as f64 * 4.26) as usize;
        let mut s = Cdcl::new();
        let vars: Vec<Lit> = (0..n).map(|_| s.new_var()).collect();
        let mut cls = Vec::new();
        for _ in 0..m {
            let c: Vec<Lit> = (0..3)
                .map(|_| {
                    let v = vars[rng.gen_range(0..n as usize)];
                    if rng.gen_bool(0.5) {
                        !v
                    } else {
                        v
                    }
                })
                .collect();
            s.add_clause(&c);
            cls.push(c);
        }
        if s.solve(&[], None).unwrap() == SolveOutcome::Sat {
            for c in &cls {
                assert!(c.iter().any(|l| s.model_value(*l) == Some(true)));
            }
        } else if n <= 20 {
            // brute force confirms
            let sat = (0..1u64 << n).any(|code| {
                cls.iter().all(|c| {
                    c.iter()
                        .any(|l| ((code >> l.var()) & 1 == 1) != l.is_neg())
                })
            });
            assert!(!sat);
        }
    }
}

proptest! {
    #[test]
    fn equal_widths_roundtrip(x in 0u64..256, y in 0u64..256) {
        // x + y = z has the obvious model
        let (a, b) = (BvExpr::var("a", 0, 8), BvExpr::var("b", 0, 8));
        let mut inst = CnfInstance::new();
        inst.assert(&a.eq(&BvExpr::konst(x, 8)));
        inst.assert(&b.eq(&BvExpr::konst(y, 8)));
        let s = a.add(&b);
        inst.assert(&s.eq(&BvExpr::konst((x + y) & 0xff, 8)));
        prop_assert_eq!(inst.solve(&[]).unwrap(), SolveOutcome::Sat);
    }
}
