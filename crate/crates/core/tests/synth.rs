// SPDX-License-Identifier: Apache-2.0

//! Software-netlist synthesis: golden shapes for the two worked designs and
//! cycle-by-cycle equivalence against the reference simulator.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use coverif_core::bv::{BinOp, BvExpr, ExprKind};
use coverif_core::feedback::resolve_acyclic;
use coverif_core::interp::{run_with, Outcome};
use coverif_core::netlist::{emit_c, synthesize, SwNetlistProgram};
use coverif_core::refsim::RefSim;
use coverif_core::verilog::{elaborate, parse_source, ElaboratedDesign, SignalKind};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const EX1: &str = include_str!("../benchmarks/ex1.v");
const TOP_AB: &str = include_str!("../benchmarks/top_ab.v");

fn design(src: &str, top: &str) -> ElaboratedDesign {
    let mods = parse_source(src).unwrap_or_else(|e| panic!("{}\n{src}", e.render("<src>")));
    elaborate(&mods, top).unwrap_or_else(|e| panic!("{}\n{src}", e.render("<src>")))
}

fn conjuncts(e: &BvExpr, out: &mut Vec<BvExpr>) {
    match e.kind() {
        ExprKind::Binary(BinOp::And, a, b) if e.width() == 1 => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        _ => out.push(e.clone()),
    }
}

#[test]
fn ex1_golden_shape() {
    let p = synthesize(&design(EX1, "top")).unwrap();
    let regs: Vec<&str> = p.state_vars.iter().map(|(n, _)| &**n).collect();
    assert_eq!(regs, ["top.b", "top.d", "top.e"]);
    assert_eq!(p.shadows.len(), 3);
    assert!(p.feedback.is_empty());
    let c = emit_c(&p);
    let st = c.find("struct state_elements_top {").unwrap();
    let body = &c[st..st + c[st..].find("};").unwrap()];
    let members: Vec<&str> = body
        .lines()
        .skip(1)
        .map(|l| l.trim().trim_end_matches(';').rsplit(' ').next().unwrap())
        .collect();
    assert_eq!(members, ["b", "d", "e"]);
    assert!(c.contains("c = (e_old ? 0 : d_old);"), "{c}");
    for s in ["b_old = stop.b;", "d_old = stop.d;", "e_old = stop.e;"] {
        assert!(c.contains(s), "missing {s}\n{c}");
    }
}

#[test]
fn top_ab_comb_constraint_has_the_eleven_equalities() {
    let p = synthesize(&design(TOP_AB, "top")).unwrap();
    let mut parts = Vec::new();
    conjuncts(p.comb_constraint.as_ref().unwrap(), &mut parts);
    let strip = |e: &BvExpr| e.as_var().unwrap().0.strip_prefix("top.").unwrap().to_string();
    let got: BTreeSet<BTreeSet<String>> = parts
        .iter()
        .map(|e| match e.kind() {
            ExprKind::Binary(BinOp::Eq, a, b) => [strip(a), strip(b)].into_iter().collect(),
            _ => panic!("not an equality: {e}"),
        })
        .collect();
    let expected: BTreeSet<BTreeSet<String>> = [
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
    .map(|(a, b)| [a.to_string(), b.to_string()].into_iter().collect())
    .collect();
    assert_eq!(parts.len(), 11);
    assert_eq!(got, expected);
}

#[test]
fn pure_combinational_design_has_no_state() {
    let p = synthesize(&design(
        "module top(a, b, y); input [3:0] a, b; output [3:0] y; assign y = a & b; endmodule",
        "top",
    ))
    .unwrap();
    assert!(p.state_vars.is_empty());
    assert!(!p.sequential);
    assert!(!emit_c(&p).contains("while (1)"));
}

#[test]
fn empty_module_synthesizes() {
    let p = synthesize(&design("module top; endmodule", "top")).unwrap();
    assert!(p.state_vars.is_empty());
    assert!(p.step.is_empty());
}

#[test]
fn synthesis_is_deterministic() {
    for (src, top) in [(EX1, "top"), (TOP_AB, "top")] {
        let a = synthesize(&design(src, top)).unwrap();
        let b = synthesize(&design(src, top)).unwrap();
        assert_eq!(a, b);
        assert_eq!(emit_c(&a), emit_c(&b));
    }
}

/// Values of every netlist variable that names a design signal, after the
/// initial block and after each cycle.
fn netlist_trace(p: &SwNetlistProgram, d: &ElaboratedDesign, seq: &[HashMap<String, u64>]) -> Vec<Vec<(String, u64)>> {
    let cycles: Vec<HashMap<Arc<str>, u64>> = seq
        .iter()
        .map(|c| c.iter().map(|(k, v)| (p.resolve(k).unwrap(), *v)).collect())
        .collect();
    (0..=seq.len())
        .map(|k| {
            let mut prog = p.with_inputs(&cycles[..k]);
            prog.body = resolve_acyclic(&prog.body);
            let r = run_with(&prog, &HashMap::new(), HashMap::new(), false).unwrap();
            assert_eq!(r.outcome, Outcome::Completed);
            observed(d, |h| p.resolve(h).map(|n| r.env[&n]))
        })
        .collect()
}

fn observed(d: &ElaboratedDesign, get: impl Fn(&str) -> Option<u64>) -> Vec<(String, u64)> {
    d.signals
        .iter()
        .filter(|(_, s)| s.kind != SignalKind::Integer)
        .filter_map(|(h, _)| get(h).map(|v| (h.clone(), v)))
        .collect()
}

fn refsim_trace(d: &ElaboratedDesign, p: &SwNetlistProgram, seq: &[HashMap<String, u64>]) -> Vec<Vec<(String, u64)>> {
    let mut sim = RefSim::new(d).unwrap();
    let mut out = vec![observed(d, |h| p.resolve(h).map(|_| sim.value(h)))];
    for c in seq {
        sim.cycle(c).unwrap();
        out.push(observed(d, |h| p.resolve(h).map(|_| sim.value(h))));
    }
    out
}

fn random_inputs(d: &ElaboratedDesign, rng: &mut StdRng, max_len: usize) -> Vec<HashMap<String, u64>> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            d.primary_inputs()
                .into_iter()
                .map(|(n, w)| (n, rng.gen::<u64>() & coverif_core::bv::mask(w)))
                .collect()
        })
        .collect()
}

fn check_equivalence(src: &str, top: &str, runs: usize, seed: u64) {
    let d = design(src, top);
    let p = synthesize(&d).unwrap_or_else(|e| panic!("{}\n{src}", e.render("<src>")));
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..runs {
        let seq = random_inputs(&d, &mut rng, 8);
        let want = refsim_trace(&d, &p, &seq);
        let got = netlist_trace(&p, &d, &seq);
        assert_eq!(got, want, "inputs {seq:?}\n{src}");
    }
}

#[test]
fn ex1_matches_reference_simulation() {
    check_equivalence(EX1, "top", 1000, 1);
}

#[test]
fn top_ab_matches_reference_simulation() {
    check_equivalence(TOP_AB, "top", 1000, 2);
}

#[test]
fn ex1_two_cycles_of_a() {
    let d = design(EX1, "top");
    let p = synthesize(&d).unwrap();
    let seq = vec![HashMap::from([("top.a".to_string(), 1)]); 2];
    let t = netlist_trace(&p, &d, &seq);
    let get = |k: usize, n: &str| t[k].iter().find(|(h, _)| h == n).unwrap().1;
    assert_eq!((get(1, "top.b"), get(1, "top.e"), get(1, "top.d")), (1, 0, 0));
    assert_eq!((get(2, "top.b"), get(2, "top.e"), get(2, "top.d")), (1, 1, 0));
}

const HANDWRITTEN: &[(&str, &str)] = &[
    (
        "module top(clk, i, o);
           input clk; input [3:0] i; output [3:0] o;
           reg [3:0] r1, r2, r3;
           assign o = r3;
           always @(posedge clk) r1 <= r2 + i;
           always @(posedge clk) begin r2 = r1 ^ i; r3 <= r2; end
         endmodule",
        "top",
    ),
    (
        "module top(clk, d, sel);
           input clk; input [7:0] d; input [2:0] sel;
           reg [7:0] sh; reg [3:0] cnt; reg par; integer k;
           wire [3:0] nib;
           assign nib = sel[0] ? sh[7:4] : sh[3:0];
           always @(posedge clk) begin
             sh <= {sh[6:0], d[sel]};
             cnt[sel[1:0]] <= ^d;
             par = 0;
             for (k = 0; k < 8; k = k + 1) par = par ^ d[k];
             if (par) cnt <= cnt + nib;
           end
         endmodule",
        "top",
    ),
    (
        "module inc #(parameter W = 4) (input [W-1:0] a, output [W-1:0] y);
           assign y = a + 1;
         endmodule
         module top(input clk, input [3:0] x, output [3:0] q);
           reg [3:0] st; wire [3:0] n1, n2; reg [3:0] m;
           inc #(4) u1(.a(st), .y(n1));
           inc u2(n1, n2);
           always @(*) begin
             m = n2;
             if (x[3]) m = m ^ x;
           end
           assign q = st;
           always @(posedge clk) st <= m;
         endmodule",
        "top",
    ),
    (
        "module top(clk, a, b);
           input clk; input [5:0] a; input [2:0] b;
           reg [5:0] r; reg [1:0] t; reg f;
           initial begin r = 6'd5; f = 1; end
           always @(posedge clk) begin
             r[b +: 2] <= a[1:0];
             {t, f} <= {a[5:4], ~f};
             if (r > a && !(b == 3)) r <= (a << b) - r;
           end
         endmodule",
        "top",
    ),
];

#[test]
fn handwritten_designs_match_reference_simulation() {
    for (k, (src, top)) in HANDWRITTEN.iter().enumerate() {
        check_equivalence(src, top, 300, 10 + k as u64);
    }
}

#[test]
fn swapping_clocked_blocks_keeps_the_trajectory() {
    for (src, top) in HANDWRITTEN.iter().chain([(EX1, "top")].iter()) {
        let mods = parse_source(src).unwrap();
        let base = elaborate(&mods, top).unwrap();
        let p0 = synthesize(&base).unwrap();
        let mut swapped = mods.clone();
        for m in &mut swapped {
            m.always.reverse();
        }
        let d1 = elaborate(&swapped, top).unwrap();
        let p1 = synthesize(&d1).unwrap();
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..100 {
            let seq = random_inputs(&base, &mut rng, 6);
            assert_eq!(netlist_trace(&p0, &base, &seq), netlist_trace(&p1, &d1, &seq));
        }
    }
}

// ---- random designs ------------------------------------------------------

struct Gen {
    rng: StdRng,
    sigs: Vec<(String, u32)>,
}

impl Gen {
    fn operand(&mut self) -> String {
        let (n, w) = self.sigs[self.rng.gen_range(0..self.sigs.len())].clone();
        match self.rng.gen_range(0..5) {
            0 if w > 1 => {
                let hi = self.rng.gen_range(0..w);
                let lo = self.rng.gen_range(0..=hi);
                format!("{n}[{hi}:{lo}]")
            }
            1 => format!("{n}[{}]", self.rng.gen_range(0..w)),
            2 => format!("{}'d{}", w, self.rng.gen_range(0..(1u64 << w.min(16)))),
            _ => n,
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.operand();
        }
        let a = self.expr(depth - 1);
        let b = self.expr(depth - 1);
        match self.rng.gen_range(0..12) {
            0 => format!("({a} + {b})"),
            1 => format!("({a} - {b})"),
            2 => format!("({a} & {b})"),
            3 => format!("({a} | {b})"),
            4 => format!("({a} ^ {b})"),
            5 => format!("(~{a})"),
            6 => format!("({a} == {b})"),
            7 => format!("({a} < {b})"),
            8 => format!("({a} ? {b} : {})", self.expr(depth - 1)),
            9 => format!("{{{a}, {b}}}"),
            10 => format!("({a} >> {})", self.rng.gen_range(0..4)),
            _ => format!("(^{a})"),
        }
    }
}

fn random_design(seed: u64) -> String {
    let mut g = Gen {
        rng: StdRng::seed_from_u64(seed),
        sigs: Vec::new(),
    };
    let n_in = g.rng.gen_range(1..=2);
    let n_reg = g.rng.gen_range(1..=3);
    let n_wire = g.rng.gen_range(0..=3);
    let mut decl = String::new();
    let mut ports = vec!["clk".to_string()];
    decl.push_str("  input clk;\n");
    for k in 0..n_in {
        let w = g.rng.gen_range(1..=6);
        decl.push_str(&format!("  input [{}:0] i{k};\n", w - 1));
        ports.push(format!("i{k}"));
        g.sigs.push((format!("i{k}"), w));
    }
    let mut regs = Vec::new();
    for k in 0..n_reg {
        let w = g.rng.gen_range(1..=6);
        decl.push_str(&format!("  reg [{}:0] r{k};\n", w - 1));
        g.sigs.push((format!("r{k}"), w));
        regs.push((format!("r{k}"), w));
    }
    let mut body = String::new();
    for k in 0..n_wire {
        let w = g.rng.gen_range(1..=6);
        let e = g.expr(2);
        decl.push_str(&format!("  wire [{}:0] w{k};\n", w - 1));
        body.push_str(&format!("  assign w{k} = {e};\n"));
        g.sigs.push((format!("w{k}"), w));
    }
    body.push_str("  always @(posedge clk) begin\n");
    for (r, _) in &regs {
        let c = g.expr(1);
        let a = g.expr(2);
        let b = g.expr(2);
        body.push_str(&format!("    if ({c}) {r} <= {a}; else {r} <= {b};\n"));
    }
    body.push_str("  end\n");
    format!("module top({});\n{decl}{body}endmodule\n", ports.join(", "))
}

#[test]
fn random_designs_match_reference_simulation() {
    for seed in 0..150 {
        check_equivalence(&random_design(seed), "top", 20, seed);
    }
}
