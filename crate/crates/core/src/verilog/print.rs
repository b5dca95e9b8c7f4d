// SPDX-License-Identifier: Apache-2.0

//! Pretty printer. The output re-parses to an equal AST.

use std::fmt::Write;

use super::ast::*;

pub fn print_source(mods: &[ModuleAst]) -> String {
    mods.iter().map(print_module).collect::<Vec<_>>().join("\n")
}

fn range(r: &Option<Range>) -> String {
    match r {
        Some(r) => format!(" [{}:{}]", print_expr(&r.msb), print_expr(&r.lsb)),
        None => String::new(),
    }
}

pub fn print_module(m: &ModuleAst) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "module {}({});", m.name, m.port_order.join(", "));
    for p in &m.params {
        let kw = if p.local { "localparam" } else { "parameter" };
        let _ = writeln!(s, "  {kw} {} = {};", p.name, print_expr(&p.value));
    }
    for p in &m.ports {
        let dir = match p.dir {
            Dir::Input => "input",
            Dir::Output => "output",
            Dir::Inout => "inout",
        };
        let reg = if p.is_reg { " reg" } else { "" };
        let _ = writeln!(s, "  {dir}{reg}{} {};", range(&p.range), p.name);
    }
    for n in &m.nets {
        let kind = match n.kind {
            NetKind::Wire => "wire",
            NetKind::Reg => "reg",
            NetKind::Integer => "integer",
        };
        let _ = writeln!(s, "  {kind}{} {};", range(&n.range), n.name);
    }
    for a in &m.assigns {
        let _ = writeln!(s, "  assign {} = {};", print_lvalue(&a.lhs), print_expr(&a.rhs));
    }
    for i in &m.instances {
        let params = match &i.params {
            Bindings::Positional(v) if v.is_empty() => String::new(),
            b => format!(" #{}", bindings(b)),
        };
        let _ = writeln!(s, "  {}{params} {} {};", i.module, i.name, bindings(&i.ports));
    }
    for st in &m.initials {
        s.push_str("  initial ");
        stmt(&mut s, st, 1);
    }
    for a in &m.always {
        match &a.trigger {
            Trigger::Posedge(c) => {
                let _ = write!(s, "  always @(posedge {c}) ");
            }
            Trigger::Comb => s.push_str("  always @(*) "),
        }
        stmt(&mut s, &a.body, 1);
    }
    s.push_str("endmodule\n");
    s
}

fn bindings(b: &Bindings) -> String {
    match b {
        Bindings::Named(v) => {
            let parts: Vec<String> = v
                .iter()
                .map(|(f, a)| format!(".{f}({})", a.as_ref().map(print_expr).unwrap_or_default()))
                .collect();
            format!("({})", parts.join(", "))
        }
        Bindings::Positional(v) => {
            let parts: Vec<String> = v.iter().map(print_expr).collect();
            format!("({})", parts.join(", "))
        }
    }
}

fn indent(s: &mut String, level: usize) {
    for _ in 0..level {
        s.push_str("  ");
    }
}

// Writes `st` starting at the current cursor and ending with a newline.
fn stmt(s: &mut String, st: &StmtAst, level: usize) {
    match st {
        StmtAst::Block(v) => {
            s.push_str("begin\n");
            for x in v {
                indent(s, level + 1);
                stmt(s, x, level + 1);
            }
            indent(s, level);
            s.push_str("end\n");
        }
        StmtAst::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = write!(s, "if ({}) ", print_expr(cond));
            stmt(s, then_branch, level);
            if let Some(e) = else_branch {
                indent(s, level);
                s.push_str("else ");
                stmt(s, e, level);
            }
        }
        StmtAst::Assign {
            lhs, rhs, blocking, ..
        } => {
            let op = if *blocking { "=" } else { "<=" };
            let _ = writeln!(s, "{} {op} {};", print_lvalue(lhs), print_expr(rhs));
        }
        StmtAst::For {
            var,
            init,
            cond,
            step,
            body,
            ..
        } => {
            let _ = write!(
                s,
                "for ({var} = {}; {}; {var} = {}) ",
                print_expr(init),
                print_expr(cond),
                print_expr(step)
            );
            stmt(s, body, level);
        }
        StmtAst::Empty => s.push_str(";\n"),
    }
}

pub fn print_lvalue(l: &LValue) -> String {
    match l {
        LValue::Ident(n, _) => n.clone(),
        LValue::BitSelect { base, index, .. } => format!("{base}[{}]", print_expr(index)),
        LValue::PartSelect { base, msb, lsb, .. } => {
            format!("{base}[{}:{}]", print_expr(msb), print_expr(lsb))
        }
        LValue::IndexedPartSelect {
            base,
            offset,
            width,
            up,
            ..
        } => format!(
            "{base}[{} {} {}]",
            print_expr(offset),
            if *up { "+:" } else { "-:" },
            print_expr(width)
        ),
        LValue::Concat(ps) => {
            let v: Vec<String> = ps.iter().map(print_lvalue).collect();
            format!("{{{}}}", v.join(", "))
        }
    }
}

pub fn print_expr(e: &ExprAst) -> String {
    match e {
        ExprAst::Ident(n, _) => n.clone(),
        ExprAst::Const { value, width } => match width {
            Some(w) => format!("{w}'d{value}"),
            None => value.to_string(),
        },
        ExprAst::BitSelect { base, index, .. } => format!("{base}[{}]", print_expr(index)),
        ExprAst::PartSelect { base, msb, lsb, .. } => {
            format!("{base}[{}:{}]", print_expr(msb), print_expr(lsb))
        }
        ExprAst::IndexedPartSelect {
            base,
            offset,
            width,
            up,
            ..
        } => format!(
            "{base}[{} {} {}]",
            print_expr(offset),
            if *up { "+:" } else { "-:" },
            print_expr(width)
        ),
        ExprAst::Concat(ps) => {
            let v: Vec<String> = ps.iter().map(print_expr).collect();
            format!("{{{}}}", v.join(", "))
        }
        ExprAst::Repeat { count, parts } => {
            let v: Vec<String> = parts.iter().map(print_expr).collect();
            format!("{{{}{{{}}}}}", print_expr(count), v.join(", "))
        }
        ExprAst::Unary(op, a) => {
            let o = match op {
                UnaryOp::Not => "~",
                UnaryOp::LogNot => "!",
                UnaryOp::Neg => "-",
                UnaryOp::Plus => "+",
            };
            format!("({o}{})", print_expr(a))
        }
        ExprAst::Reduction(op, a) => {
            let o = match op {
                RedOp::And => "&",
                RedOp::Or => "|",
                RedOp::Xor => "^",
                RedOp::Nand => "~&",
                RedOp::Nor => "~|",
                RedOp::Xnor => "~^",
            };
            format!("({o}{})", print_expr(a))
        }
        ExprAst::Binary(op, a, b) => {
            format!("({} {} {})", print_expr(a), op.symbol(), print_expr(b))
        }
        ExprAst::Ternary(c, a, b) => {
            format!("({} ? {} : {})", print_expr(c), print_expr(a), print_expr(b))
        }
    }
}
