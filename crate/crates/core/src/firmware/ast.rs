// SPDX-License-Identifier: Apache-2.0

//! Syntax tree of the firmware language.

use indexmap::IndexMap;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FwUnOp {
    Not,
    LogNot,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FwBinOp {
    Mul,
    Add,
    Sub,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Xor,
    Or,
    LogAnd,
    LogOr,
}

impl FwBinOp {
    pub fn symbol(self) -> &'static str {
        use FwBinOp::*;
        match self {
            Mul => "*",
            Add => "+",
            Sub => "-",
            Shl => "<<",
            Shr => ">>",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            And => "&",
            Xor => "^",
            Or => "|",
            LogAnd => "&&",
            LogOr => "||",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FwExpr {
    Num(u64),
    /// A firmware variable, or a netlist signal when no variable of that
    /// name is in scope.
    Ident(String, Pos),
    Index(String, Box<FwExpr>, Pos),
    Unary(FwUnOp, Box<FwExpr>),
    Binary(FwBinOp, Box<FwExpr>, Box<FwExpr>),
    Ternary(Box<FwExpr>, Box<FwExpr>, Box<FwExpr>),
    Cast(u32, Box<FwExpr>),
    Nondet(u32, Pos),
    /// `read_output(name)`; `name` may be hierarchical (`a.q`).
    ReadOutput(String, Pos),
    Call(String, Vec<FwExpr>, Pos),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FwLValue {
    Var(String, Pos),
    Elem(String, FwExpr, Pos),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub width: u32,
    /// Element count for arrays.
    pub len: Option<u32>,
    pub init: Option<FwExpr>,
    pub pos: Pos,
}

/// `antecedent |-> (immediate && ##delay delayed)`; either consequent part
/// may be absent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertySpec {
    pub antecedent: FwExpr,
    pub immediate: Option<FwExpr>,
    pub delay: u32,
    pub delayed: Option<FwExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FwStmt {
    Decl(VarDecl),
    Assign { target: FwLValue, value: FwExpr },
    If { cond: FwExpr, then_branch: Vec<FwStmt>, else_branch: Vec<FwStmt> },
    While { cond: FwExpr, body: Vec<FwStmt> },
    For { init: Vec<FwStmt>, cond: FwExpr, step: Vec<FwStmt>, body: Vec<FwStmt> },
    Block(Vec<FwStmt>),
    Assume(FwExpr),
    Assert { cond: FwExpr, label: String },
    Step,
    SetInput { name: String, value: FwExpr, pos: Pos },
    Call { name: String, args: Vec<FwExpr>, pos: Pos },
    Return(Option<FwExpr>, Pos),
    Property(PropertySpec, Pos),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    /// Return width; `None` for `void`.
    pub ret: Option<u32>,
    pub params: Vec<(String, u32)>,
    pub body: Vec<FwStmt>,
    pub pos: Pos,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FirmwareProgram {
    pub globals: Vec<VarDecl>,
    pub functions: IndexMap<String, Function>,
}
