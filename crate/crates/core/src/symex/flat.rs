// SPDX-License-Identifier: Apache-2.0

//! Flattening of a structured acyclic program into a jump-based
//! instruction list, so a path state is just a program counter.

use std::sync::Arc;

use crate::bv::BvExpr;
use crate::ir::Stmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr {
    Assign { var: usize, value: BvExpr },
    Havoc { var: usize, id: u32 },
    Assume(BvExpr),
    Assert { label: String, cond: BvExpr },
    /// Falls through when `cond` holds, otherwise jumps to `else_pc`.
    Branch { cond: BvExpr, else_pc: usize },
    Jump(usize),
}

/// Flattens `stmts`; `index` maps a variable name to its slot.
pub fn flatten(stmts: &[Stmt], index: &impl Fn(&Arc<str>) -> usize) -> Vec<Instr> {
    let mut out = Vec::new();
    emit(stmts, index, &mut out);
    out
}

fn emit(stmts: &[Stmt], index: &impl Fn(&Arc<str>) -> usize, out: &mut Vec<Instr>) {
    for s in stmts {
        match s {
            Stmt::Assign { target, value } => out.push(Instr::Assign {
                var: index(target),
                value: value.clone(),
            }),
            Stmt::Havoc { target, id } => out.push(Instr::Havoc {
                var: index(target),
                id: *id,
            }),
            Stmt::Assume { cond } => out.push(Instr::Assume(cond.clone())),
            Stmt::Assert { label, cond } => out.push(Instr::Assert {
                label: label.clone(),
                cond: cond.clone(),
            }),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let br = out.len();
                out.push(Instr::Jump(usize::MAX));
                emit(then_branch, index, out);
                if else_branch.is_empty() {
                    out[br] = Instr::Branch {
                        cond: cond.clone(),
                        else_pc: out.len(),
                    };
                } else {
                    let j = out.len();
                    out.push(Instr::Jump(usize::MAX));
                    out[br] = Instr::Branch {
                        cond: cond.clone(),
                        else_pc: out.len(),
                    };
                    emit(else_branch, index, out);
                    out[j] = Instr::Jump(out.len());
                }
            }
            Stmt::Loop { .. } => panic!("flatten: program must be unwound first"),
        }
    }
}
