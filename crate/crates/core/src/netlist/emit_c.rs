// SPDX-License-Identifier: Apache-2.0

//! C rendering of a software netlist: a state struct holding the registers,
//! an `initial_block()`, one step function named after the top module, and
//! a `main()` that drives it with nondeterministic inputs.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;
use std::sync::Arc;

use super::SwNetlistProgram;
use crate::bv::{mask, BinOp, BvExpr, ExprKind, UnOp};
use crate::ir::Stmt;

struct Names {
    c: HashMap<Arc<str>, String>,
}

impl Names {
    fn new(p: &SwNetlistProgram) -> Names {
        let regs: HashSet<&Arc<str>> = p.state_vars.iter().map(|(n, _)| n).collect();
        let prefix = format!("{}.", p.top);
        let mut c = HashMap::new();
        for name in p.vars.keys() {
            let local = name.strip_prefix(prefix.as_str()).unwrap_or(name);
            let ident: String = local
                .chars()
                .map(|ch| if ch.is_ascii_alphanumeric() || ch == '_' { ch } else { '_' })
                .collect();
            let rendered = if regs.contains(name) {
                format!("s{}.{ident}", p.top)
            } else {
                ident
            };
            c.insert(name.clone(), rendered);
        }
        Names { c }
    }

    fn get(&self, n: &str) -> String {
        self.c.get(n).cloned().unwrap_or_else(|| n.replace('.', "_"))
    }
}

fn ctype(w: u32) -> &'static str {
    match w {
        1 => "_Bool",
        2..=8 => "uint8_t",
        9..=16 => "uint16_t",
        17..=32 => "uint32_t",
        _ => "uint64_t",
    }
}

fn hex(v: u64) -> String {
    format!("0x{v:x}ULL")
}

fn masked(s: String, w: u32) -> String {
    if w == 64 {
        s
    } else {
        format!("({s} & {})", hex(mask(w)))
    }
}

fn expr(e: &BvExpr, nm: &Names) -> String {
    let w = e.width();
    match e.kind() {
        ExprKind::Var { name, .. } => nm.get(name),
        ExprKind::Const(v) => {
            if w == 1 {
                v.to_string()
            } else {
                hex(*v)
            }
        }
        ExprKind::Unary(op, a) => {
            let x = expr(a, nm);
            match op {
                UnOp::Not => masked(format!("~(uint64_t){x}"), w),
                UnOp::Neg => masked(format!("-(uint64_t){x}"), w),
                UnOp::RedOr => format!("({x} != 0)"),
                UnOp::RedAnd => format!("({x} == {})", hex(mask(a.width()))),
                UnOp::RedXor => format!("parity64({x})"),
            }
        }
        ExprKind::Binary(op, a, b) => {
            let (x, y) = (expr(a, nm), expr(b, nm));
            match op {
                BinOp::And => format!("({x} & {y})"),
                BinOp::Or => format!("({x} | {y})"),
                BinOp::Xor => format!("({x} ^ {y})"),
                BinOp::Add => masked(format!("((uint64_t){x} + {y})"), w),
                BinOp::Sub => masked(format!("((uint64_t){x} - {y})"), w),
                BinOp::Mul => masked(format!("((uint64_t){x} * {y})"), w),
                BinOp::Shl => masked(
                    format!("({y} >= {w} ? 0 : (uint64_t){x} << {y})"),
                    w,
                ),
                BinOp::Lshr => format!("({y} >= {w} ? 0 : (uint64_t){x} >> {y})"),
                BinOp::Eq => format!("({x} == {y})"),
                BinOp::Ult => format!("({x} < {y})"),
                BinOp::Ule => format!("({x} <= {y})"),
                BinOp::Slt => {
                    let s = hex(1u64 << (a.width() - 1));
                    format!("(({x} ^ {s}) < ({y} ^ {s}))")
                }
                BinOp::Concat => format!("(((uint64_t){x} << {}) | {y})", b.width()),
            }
        }
        ExprKind::Ite(c, a, b) => format!("({} ? {} : {})", expr(c, nm), expr(a, nm), expr(b, nm)),
        ExprKind::Extract { hi: _, lo, arg } => {
            let x = expr(arg, nm);
            if *lo == 0 {
                masked(x, w)
            } else {
                masked(format!("({x} >> {lo})"), w)
            }
        }
        ExprKind::Zext(a) => expr(a, nm),
        ExprKind::Sext(a) => {
            let s = hex(1u64 << (a.width() - 1));
            masked(format!("(((uint64_t){} ^ {s}) - {s})", expr(a, nm)), w)
        }
    }
}

fn stmts(out: &mut String, ss: &[Stmt], nm: &Names, p: &SwNetlistProgram, level: usize) {
    let ind = "  ".repeat(level);
    for s in ss {
        match s {
            Stmt::Assign { target, value } => {
                let _ = writeln!(out, "{ind}{} = {};", nm.get(target), expr(value, nm));
            }
            Stmt::Havoc { target, .. } => {
                let w = p.vars.get(target).copied().unwrap_or(64);
                let _ = writeln!(out, "{ind}{} = {};", nm.get(target), masked("nondet()".into(), w));
            }
            Stmt::Assume { cond } => {
                let _ = writeln!(out, "{ind}assume({});", expr(cond, nm));
            }
            Stmt::Assert { label, cond } => {
                let _ = writeln!(out, "{ind}assert({}); /* {label} */", expr(cond, nm));
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let _ = writeln!(out, "{ind}if ({}) {{", expr(cond, nm));
                stmts(out, then_branch, nm, p, level + 1);
                if else_branch.is_empty() {
                    let _ = writeln!(out, "{ind}}}");
                } else {
                    let _ = writeln!(out, "{ind}}} else {{");
                    stmts(out, else_branch, nm, p, level + 1);
                    let _ = writeln!(out, "{ind}}}");
                }
            }
            Stmt::Loop { cond, body } => {
                let _ = writeln!(out, "{ind}while ({}) {{", expr(cond, nm));
                stmts(out, body, nm, p, level + 1);
                let _ = writeln!(out, "{ind}}}");
            }
        }
    }
}

pub fn emit_c(p: &SwNetlistProgram) -> String {
    let nm = Names::new(p);
    let top = &p.top;
    let regs: HashSet<&Arc<str>> = p.state_vars.iter().map(|(n, _)| n).collect();
    let shadows: HashSet<&Arc<str>> = p.shadows.iter().map(|(_, s)| s).collect();
    let inputs: HashSet<&Arc<str>> = p.inputs.iter().map(|(n, _)| n).collect();
    let mut o = String::new();
    let _ = writeln!(o, "/* software netlist of module {top} */");
    o.push_str("#include <stdint.h>\n\n");
    o.push_str("extern uint64_t nondet(void);\n");
    o.push_str("extern void assume(_Bool cond);\n");
    o.push_str("extern void assert(_Bool cond);\n\n");
    o.push_str("static _Bool parity64(uint64_t x) {\n  _Bool p = 0;\n  while (x) {\n    p ^= (_Bool)(x & 1);\n    x >>= 1;\n  }\n  return p;\n}\n\n");

    let _ = writeln!(o, "struct state_elements_{top} {{");
    for (n, w) in &p.state_vars {
        let member = nm.get(n);
        let member = member.rsplit('.').next().unwrap_or(&member).to_string();
        let _ = writeln!(o, "  {} {member};", ctype(*w));
    }
    let _ = writeln!(o, "}};");
    let _ = writeln!(o, "struct state_elements_{top} s{top};\n");

    for (n, w) in &p.vars {
        if regs.contains(n) || shadows.contains(n) {
            continue;
        }
        let _ = writeln!(o, "{} {};", ctype(*w), nm.get(n));
    }
    o.push('\n');

    if !p.feedback.is_empty() {
        let _ = writeln!(o, "void {top}_comb(void) {{");
        let mut members = Vec::new();
        for g in &p.feedback {
            members.extend(g.members());
        }
        for m in &members {
            let w = p.vars[m];
            let _ = writeln!(o, "  {} = {};", nm.get(m), masked("nondet()".into(), w));
        }
        if let Some(c) = &p.comb_constraint {
            let _ = writeln!(o, "  assume({});", expr(c, &nm));
        }
        o.push_str("}\n\n");
    }

    o.push_str("void initial_block(void) {\n");
    stmts(&mut o, &p.init, &nm, p, 1);
    o.push_str("}\n\n");

    let _ = writeln!(o, "void {top}(void) {{");
    for (_, s) in &p.shadows {
        let _ = writeln!(o, "  {} {};", ctype(p.vars[s]), nm.get(s));
    }
    stmts(&mut o, &p.step, &nm, p, 1);
    o.push_str("}\n\n");

    o.push_str("int main(void) {\n  initial_block();\n");
    let body_ind = if p.sequential {
        o.push_str("  while (1) {\n");
        "    "
    } else {
        "  "
    };
    let _ = writeln!(o, "{body_ind}/* nondeterministically assign inputs */");
    for (n, w) in &p.inputs {
        if inputs.contains(n) {
            let _ = writeln!(o, "{body_ind}{} = {};", nm.get(n), masked("nondet()".into(), *w));
        }
    }
    let _ = writeln!(o, "{body_ind}{top}();");
    for (label, c) in &p.asserts {
        let _ = writeln!(o, "{body_ind}assert({}); /* {label} */", expr(c, &nm));
    }
    if p.sequential {
        o.push_str("  }\n");
    }
    o.push_str("  return 0;\n}\n");
    o
}
