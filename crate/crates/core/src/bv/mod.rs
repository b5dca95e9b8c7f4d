// SPDX-License-Identifier: Apache-2.0

//! Width-annotated bit-vector expressions shared by every engine.

mod eval;
mod expr;
mod json;
mod lower;

pub use eval::{eval, ConcreteEnv, Env, EvalError};
pub use expr::{mask, BinOp, BvExpr, ExprKind, UnOp, MAX_WIDTH};
pub use lower::{
    lower_bit_assign, lower_concat, lower_indexed_part_select, lower_part_select, LowerError,
};
