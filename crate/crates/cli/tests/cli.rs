// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn coverif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coverif"))
        .args(args)
        .env_remove("COVERIF_SOLVER_TIMEOUT_MS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const COMB: &str = "module top(a, b, y);\n  input [3:0] a, b;\n  output [3:0] y;\n  assign y = a & b;\nendmodule\n";

#[test]
fn combinational_assert_true_is_safe() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "comb.v", COMB);
    let fw = write(dir.path(), "t.fw", "void main() { assert(1, \"t\"); }\n");
    let o = coverif(&["verify", &v, "--fw", &fw, "--engine", "mono", "--unwind", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("mono k=1: Safe"));
}

#[test]
fn injected_bug_exits_10_and_its_trace_replays() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let stats = dir.path().join("stats.json");
    let t = trace.to_str().unwrap();
    let o = coverif(&[
        "verify", "--bench", "uart4_bug_rxindex", "--unwind", "2", "--mode", "fi", "--trace", t, "--stats",
        stats.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(10));
    assert!(stdout(&o).contains("Unsafe"));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(s["verdict"], "Unsafe");
    assert_eq!(s["trace_confirmed"], true);
    let pct = s["symex"]["pruning_percent"].as_f64().unwrap();
    let (p, a) = (s["symex"]["pruned"].as_f64().unwrap(), s["symex"]["branch_attempts"].as_f64().unwrap());
    assert_eq!(pct, (p * 10000.0 / a).round() / 100.0);
    let tj: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(tj["violated_assert"], "loopback");
    assert!(tj["cycles"].is_array());

    let o = coverif(&["simulate", "--bench", "uart4_bug_rxindex", "--unwind", "2", "--trace", t]);
    assert_eq!(o.status.code(), Some(10));
    assert!(stdout(&o).contains("assertion `loopback` violated"));
}

#[test]
fn files_and_engines_agree() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "ex1.v", coverif_core::benchmarks::EX1_V);
    let fw = write(dir.path(), "d.fw", "void main() { while (1) { step(); assert(e == 0, \"e\"); } }\n");
    for engine in [&["--engine", "symex", "--mode", "pi"][..], &["--engine", "symex", "--mode", "fi"], &["--engine", "mono"], &["--engine", "enumerate"]] {
        for (k, code) in [("1", 0), ("3", 10)] {
            let mut args = vec!["verify", v.as_str(), "--top", "top", "--fw", fw.as_str(), "--unwind", k];
            args.extend_from_slice(engine);
            let o = coverif(&args);
            assert_eq!(o.status.code(), Some(code), "{args:?}\n{}", stdout(&o));
        }
    }
}

#[test]
fn translate_emits_c_and_ir() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "ex1.v", coverif_core::benchmarks::EX1_V);
    let o = coverif(&["translate", &v]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("struct state_elements_top"));
    let out = dir.path().join("p.json");
    let o = coverif(&["translate", &v, "--emit", "ir", "--unwind", "2", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let p: coverif_core::ir::Program = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(p.is_acyclic());
}

#[test]
fn dimacs_dump_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.cnf");
    let o = coverif(&["verify", "--bench", "top_ab_msg_ne_5", "--engine", "mono", "--unwind", "2", "--dump-dimacs", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(10));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("p cnf"));
}

#[test]
fn errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.v", "module top(a); input a; assign b = ; endmodule\n");
    let o = coverif(&["verify", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.v:1:"));
    assert_eq!(coverif(&["verify", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(coverif(&["frobnicate"]).status.code(), Some(1));
    let missing = coverif(&["verify", "/nonexistent.v"]);
    assert_eq!(missing.status.code(), Some(1));
    let o = coverif(&["verify", "--bench", "uart4", "--unwind", "2", "--no-prune", "--max-branches", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Unknown"));
}

#[test]
fn bench_list_names_every_benchmark() {
    let o = coverif(&["verify", "--bench", "list"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "uart4_bug_decode"));
}
