// SPDX-License-Identifier: Apache-2.0

//! The sequential intermediate program all engines consume.
//!
//! Statements read and write named variables whose widths are fixed in
//! [`Program::vars`]. Expressions inside statements always use version 0;
//! versions only appear once an engine puts the program into SSA form.
//! `Loop` exists only until [`crate::unwind`] has run.

use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::bv::BvExpr;

/// Variable incremented at the start of every clock step; traces use it to
/// group nondeterministic choices into cycles.
pub const CYCLE_VAR: &str = "$cycle";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stmt {
    Assign {
        target: Arc<str>,
        value: BvExpr,
    },
    /// Fresh unconstrained value. `id` is unique within an unwound program
    /// and keys the value in traces.
    Havoc {
        target: Arc<str>,
        #[serde(default)]
        id: u32,
    },
    Assume {
        cond: BvExpr,
    },
    Assert {
        label: String,
        cond: BvExpr,
    },
    If {
        cond: BvExpr,
        #[serde(rename = "then")]
        then_branch: Vec<Stmt>,
        #[serde(rename = "else", default)]
        else_branch: Vec<Stmt>,
    },
    Loop {
        cond: BvExpr,
        body: Vec<Stmt>,
    },
}

impl Stmt {
    pub fn assign(target: impl Into<Arc<str>>, value: BvExpr) -> Stmt {
        Stmt::Assign {
            target: target.into(),
            value,
        }
    }

    pub fn havoc(target: impl Into<Arc<str>>) -> Stmt {
        Stmt::Havoc {
            target: target.into(),
            id: 0,
        }
    }

    pub fn assume(cond: BvExpr) -> Stmt {
        Stmt::Assume { cond }
    }

    pub fn assert(label: impl Into<String>, cond: BvExpr) -> Stmt {
        Stmt::Assert {
            label: label.into(),
            cond,
        }
    }

    pub fn ite(cond: BvExpr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt>) -> Stmt {
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    /// Every variable with its width, in declaration order.
    pub vars: IndexMap<Arc<str>, u32>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IrError {
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("width mismatch for `{name}`: declared {declared}, used at {used}")]
    Width { name: String, declared: u32, used: u32 },
    #[error("{0} condition must be 1 bit wide")]
    CondWidth(&'static str),
}

fn visit<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        match s {
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                visit(then_branch, f);
                visit(else_branch, f);
            }
            Stmt::Loop { body, .. } => visit(body, f),
            _ => {}
        }
    }
}

fn visit_mut(stmts: &mut [Stmt], f: &mut impl FnMut(&mut Stmt)) {
    for s in stmts {
        f(s);
        match s {
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                visit_mut(then_branch, f);
                visit_mut(else_branch, f);
            }
            Stmt::Loop { body, .. } => visit_mut(body, f),
            _ => {}
        }
    }
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: impl Into<Arc<str>>, width: u32) {
        self.vars.insert(name.into(), width);
    }

    pub fn width_of(&self, name: &str) -> Option<u32> {
        self.vars.get(name).copied()
    }

    /// Version-0 variable expression for a declared variable.
    pub fn var(&self, name: &str) -> BvExpr {
        let (k, w) = self
            .vars
            .get_key_value(name)
            .unwrap_or_else(|| panic!("undeclared variable {name}"));
        BvExpr::var(k.clone(), 0, *w)
    }

    /// Pre-order walk over every statement, including nested ones.
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&'a Stmt)) {
        visit(&self.body, &mut f);
    }

    pub fn walk_mut(&mut self, mut f: impl FnMut(&mut Stmt)) {
        visit_mut(&mut self.body, &mut f);
    }

    pub fn stmt_count(&self) -> usize {
        let mut n = 0;
        self.walk(|_| n += 1);
        n
    }

    pub fn is_acyclic(&self) -> bool {
        let mut ok = true;
        self.walk(|s| ok &= !matches!(s, Stmt::Loop { .. }));
        ok
    }

    pub fn assert_labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(|s| {
            if let Stmt::Assert { label, .. } = s {
                out.push(label.clone());
            }
        });
        out
    }

    pub fn has_asserts(&self) -> bool {
        !self.assert_labels().is_empty()
    }

    /// Gives every havoc a distinct id in textual order.
    pub fn number_havocs(&mut self) {
        let mut next = 0;
        self.walk_mut(|s| {
            if let Stmt::Havoc { id, .. } = s {
                *id = next;
                next += 1;
            }
        });
    }

    /// Checks declarations and widths of every statement.
    pub fn validate(&self) -> Result<(), IrError> {
        let check_expr = |e: &BvExpr| -> Result<(), IrError> {
            let mut err = None;
            e.for_each_var(&mut |n, _, w| {
                if err.is_some() {
                    return;
                }
                match self.vars.get(&**n) {
                    None => err = Some(IrError::Undeclared(n.to_string())),
                    Some(d) if *d != w => {
                        err = Some(IrError::Width {
                            name: n.to_string(),
                            declared: *d,
                            used: w,
                        })
                    }
                    _ => {}
                }
            });
            err.map_or(Ok(()), Err)
        };
        let check_target = |t: &Arc<str>, w: Option<u32>| -> Result<(), IrError> {
            match (self.vars.get(&**t), w) {
                (None, _) => Err(IrError::Undeclared(t.to_string())),
                (Some(d), Some(w)) if *d != w => Err(IrError::Width {
                    name: t.to_string(),
                    declared: *d,
                    used: w,
                }),
                _ => Ok(()),
            }
        };
        let mut result = Ok(());
        self.walk(|s| {
            if result.is_err() {
                return;
            }
            result = match s {
                Stmt::Assign { target, value } => {
                    check_target(target, Some(value.width())).and_then(|_| check_expr(value))
                }
                Stmt::Havoc { target, .. } => check_target(target, None),
                Stmt::Assume { cond } => {
                    if cond.width() != 1 {
                        Err(IrError::CondWidth("assume"))
                    } else {
                        check_expr(cond)
                    }
                }
                Stmt::Assert { cond, .. } => {
                    if cond.width() != 1 {
                        Err(IrError::CondWidth("assert"))
                    } else {
                        check_expr(cond)
                    }
                }
                Stmt::If { cond, .. } | Stmt::Loop { cond, .. } => {
                    if cond.width() != 1 {
                        Err(IrError::CondWidth("branch"))
                    } else {
                        check_expr(cond)
                    }
                }
            };
        });
        result
    }

    /// Variables that may be read before any write along some path. Their
    /// initial values are free inputs to the program.
    pub fn upward_exposed(&self) -> Vec<Arc<str>> {
        fn go(
            stmts: &[Stmt],
            written: &mut std::collections::HashSet<Arc<str>>,
            out: &mut IndexMap<Arc<str>, ()>,
        ) {
            let read = |e: &BvExpr, written: &std::collections::HashSet<Arc<str>>,
                            out: &mut IndexMap<Arc<str>, ()>| {
                e.for_each_var(&mut |n, _, _| {
                    if !written.contains(n) {
                        out.insert(n.clone(), ());
                    }
                });
            };
            for s in stmts {
                match s {
                    Stmt::Assign { target, value } => {
                        read(value, written, out);
                        written.insert(target.clone());
                    }
                    Stmt::Havoc { target, .. } => {
                        written.insert(target.clone());
                    }
                    Stmt::Assume { cond } | Stmt::Assert { cond, .. } => read(cond, written, out),
                    Stmt::If {
                        cond,
                        then_branch,
                        else_branch,
                    } => {
                        read(cond, written, out);
                        let mut wt = written.clone();
                        go(then_branch, &mut wt, out);
                        let mut we = written.clone();
                        go(else_branch, &mut we, out);
                        written.extend(wt.intersection(&we).cloned().collect::<Vec<_>>());
                    }
                    Stmt::Loop { cond, body } => {
                        read(cond, written, out);
                        let mut wb = written.clone();
                        go(body, &mut wb, out);
                    }
                }
            }
        }
        let mut out = IndexMap::new();
        go(&self.body, &mut Default::default(), &mut out);
        // report in declaration order
        self.vars
            .keys()
            .filter(|k| out.contains_key(*k))
            .cloned()
            .collect()
    }

    /// Indented text listing, one statement per line.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for s in &self.body {
            write_stmt(&mut out, s, 0);
        }
        out
    }
}

fn write_stmt(out: &mut String, s: &Stmt, indent: usize) {
    use std::fmt::Write;
    let pad = "  ".repeat(indent);
    match s {
        Stmt::Assign { target, value } => {
            let _ = writeln!(out, "{pad}{target} := {value}");
        }
        Stmt::Havoc { target, id } => {
            let _ = writeln!(out, "{pad}havoc {target} #{id}");
        }
        Stmt::Assume { cond } => {
            let _ = writeln!(out, "{pad}assume {cond}");
        }
        Stmt::Assert { label, cond } => {
            let _ = writeln!(out, "{pad}assert[{label}] {cond}");
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = writeln!(out, "{pad}if {cond} {{");
            for t in then_branch {
                write_stmt(out, t, indent + 1);
            }
            if !else_branch.is_empty() {
                let _ = writeln!(out, "{pad}}} else {{");
                for t in else_branch {
                    write_stmt(out, t, indent + 1);
                }
            }
            let _ = writeln!(out, "{pad}}}");
        }
        Stmt::Loop { cond, body } => {
            let _ = writeln!(out, "{pad}while {cond} {{");
            for t in body {
                write_stmt(out, t, indent + 1);
            }
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fragment() -> Program {
        let mut p = Program::new();
        for (n, w) in [("reset", 1), ("c", 8), ("d", 8), ("m", 8), ("t", 8)] {
            p.declare(n, w);
        }
        let z = BvExpr::konst(0, 8);
        let (c, d) = (p.var("c"), p.var("d"));
        p.body = vec![Stmt::ite(
            p.var("reset"),
            vec![Stmt::assign("m", z.clone()), Stmt::assign("t", z)],
            vec![Stmt::ite(
                c.ugt(&d),
                vec![Stmt::assign("m", c.add(&d))],
                vec![Stmt::assign(
                    "t",
                    c.and(&BvExpr::konst(3, 8)).shl(&d),
                )],
            )],
        )];
        p
    }

    #[test]
    fn validate_and_exposure() {
        let p = fragment();
        p.validate().unwrap();
        let exposed: Vec<String> = p.upward_exposed().iter().map(|s| s.to_string()).collect();
        assert_eq!(exposed, vec!["reset", "c", "d"]);
        assert_eq!(p.stmt_count(), 6);
        assert!(p.is_acyclic());
    }

    #[test]
    fn json_round_trip() {
        let mut p = fragment();
        p.body.push(Stmt::havoc("c"));
        p.body.push(Stmt::assert("a0", p.var("m").ule(&p.var("t"))));
        p.number_havocs();
        let j = serde_json::to_string(&p).unwrap();
        let back: Program = serde_json::from_str(&j).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_width_mismatch() {
        let mut p = fragment();
        p.body.push(Stmt::assign("reset", BvExpr::konst(0, 8)));
        assert!(matches!(p.validate(), Err(IrError::Width { .. })));
    }
}
