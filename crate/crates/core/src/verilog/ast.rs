// SPDX-License-Identifier: Apache-2.0

//! Syntax tree of the supported Verilog subset. Spans are carried for
//! diagnostics but ignored by equality, so a pretty-printed and re-parsed
//! module compares equal to the original.

use std::fmt;

#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    Input,
    Output,
    Inout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetKind {
    Wire,
    Reg,
    Integer,
}

/// `[msb:lsb]`; both bounds are constant expressions over parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Range {
    pub msb: ExprAst,
    pub lsb: ExprAst,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub dir: Dir,
    /// Declared `reg` in the port declaration (`output reg [3:0] q`).
    pub is_reg: bool,
    pub range: Option<Range>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetDecl {
    pub name: String,
    pub kind: NetKind,
    pub range: Option<Range>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub value: ExprAst,
    pub local: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    LogNot,
    Neg,
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RedOp {
    And,
    Or,
    Xor,
    Nand,
    Nor,
    Xnor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Xnor,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    LogAnd,
    LogOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
            BinaryOp::Xnor => "~^",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::LogAnd => "&&",
            BinaryOp::LogOr => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Mul => 10,
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Shl | BinaryOp::Shr => 8,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Eq | BinaryOp::Ne => 6,
            BinaryOp::And => 5,
            BinaryOp::Xor | BinaryOp::Xnor => 4,
            BinaryOp::Or => 3,
            BinaryOp::LogAnd => 2,
            BinaryOp::LogOr => 1,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprAst {
    Ident(String, Span),
    /// `width` is `None` for unsized literals.
    Const { value: u64, width: Option<u32> },
    BitSelect { base: String, index: Box<ExprAst>, span: Span },
    PartSelect { base: String, msb: Box<ExprAst>, lsb: Box<ExprAst>, span: Span },
    /// `base[offset +: width]` (or `-:` when `up` is false).
    IndexedPartSelect { base: String, offset: Box<ExprAst>, width: Box<ExprAst>, up: bool, span: Span },
    Concat(Vec<ExprAst>),
    Repeat { count: Box<ExprAst>, parts: Vec<ExprAst> },
    Unary(UnaryOp, Box<ExprAst>),
    Reduction(RedOp, Box<ExprAst>),
    Binary(BinaryOp, Box<ExprAst>, Box<ExprAst>),
    Ternary(Box<ExprAst>, Box<ExprAst>, Box<ExprAst>),
}

impl ExprAst {
    pub fn ident(name: &str) -> ExprAst {
        ExprAst::Ident(name.to_string(), Span::default())
    }

    pub fn num(value: u64) -> ExprAst {
        ExprAst::Const { value, width: None }
    }

    /// Every identifier mentioned, including select bases.
    pub fn idents(&self, out: &mut Vec<String>) {
        match self {
            ExprAst::Ident(n, _) => out.push(n.clone()),
            ExprAst::Const { .. } => {}
            ExprAst::BitSelect { base, index, .. } => {
                out.push(base.clone());
                index.idents(out);
            }
            ExprAst::PartSelect { base, msb, lsb, .. } => {
                out.push(base.clone());
                msb.idents(out);
                lsb.idents(out);
            }
            ExprAst::IndexedPartSelect { base, offset, width, .. } => {
                out.push(base.clone());
                offset.idents(out);
                width.idents(out);
            }
            ExprAst::Concat(ps) => ps.iter().for_each(|p| p.idents(out)),
            ExprAst::Repeat { count, parts } => {
                count.idents(out);
                parts.iter().for_each(|p| p.idents(out));
            }
            ExprAst::Unary(_, a) | ExprAst::Reduction(_, a) => a.idents(out),
            ExprAst::Binary(_, a, b) => {
                a.idents(out);
                b.idents(out);
            }
            ExprAst::Ternary(c, a, b) => {
                c.idents(out);
                a.idents(out);
                b.idents(out);
            }
        }
    }

    pub fn span(&self) -> Span {
        match self {
            ExprAst::Ident(_, s)
            | ExprAst::BitSelect { span: s, .. }
            | ExprAst::PartSelect { span: s, .. }
            | ExprAst::IndexedPartSelect { span: s, .. } => *s,
            ExprAst::Unary(_, a) | ExprAst::Reduction(_, a) => a.span(),
            ExprAst::Binary(_, a, _) | ExprAst::Ternary(a, _, _) => a.span(),
            ExprAst::Concat(ps) => ps.first().map(|p| p.span()).unwrap_or_default(),
            ExprAst::Repeat { count, .. } => count.span(),
            ExprAst::Const { .. } => Span::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LValue {
    Ident(String, Span),
    BitSelect { base: String, index: ExprAst, span: Span },
    PartSelect { base: String, msb: ExprAst, lsb: ExprAst, span: Span },
    IndexedPartSelect { base: String, offset: ExprAst, width: ExprAst, up: bool, span: Span },
    Concat(Vec<LValue>),
}

impl LValue {
    /// Base names written, most significant first.
    pub fn bases(&self) -> Vec<&str> {
        match self {
            LValue::Ident(n, _)
            | LValue::BitSelect { base: n, .. }
            | LValue::PartSelect { base: n, .. }
            | LValue::IndexedPartSelect { base: n, .. } => vec![n.as_str()],
            LValue::Concat(ps) => ps.iter().flat_map(|p| p.bases()).collect(),
        }
    }

    pub fn span(&self) -> Span {
        match self {
            LValue::Ident(_, s)
            | LValue::BitSelect { span: s, .. }
            | LValue::PartSelect { span: s, .. }
            | LValue::IndexedPartSelect { span: s, .. } => *s,
            LValue::Concat(ps) => ps.first().map(|p| p.span()).unwrap_or_default(),
        }
    }

    /// Identifiers read by index expressions.
    pub fn index_idents(&self, out: &mut Vec<String>) {
        match self {
            LValue::Ident(..) => {}
            LValue::BitSelect { index, .. } => index.idents(out),
            LValue::PartSelect { msb, lsb, .. } => {
                msb.idents(out);
                lsb.idents(out);
            }
            LValue::IndexedPartSelect { offset, width, .. } => {
                offset.idents(out);
                width.idents(out);
            }
            LValue::Concat(ps) => ps.iter().for_each(|p| p.index_idents(out)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtAst {
    Block(Vec<StmtAst>),
    If {
        cond: ExprAst,
        then_branch: Box<StmtAst>,
        else_branch: Option<Box<StmtAst>>,
    },
    Assign {
        lhs: LValue,
        rhs: ExprAst,
        blocking: bool,
        span: Span,
    },
    /// `for (var = init; cond; var = step) body`
    For {
        var: String,
        init: ExprAst,
        cond: ExprAst,
        step: ExprAst,
        body: Box<StmtAst>,
        span: Span,
    },
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trigger {
    Posedge(String),
    Comb,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlwaysBlock {
    pub trigger: Trigger,
    pub body: StmtAst,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContAssign {
    pub lhs: LValue,
    pub rhs: ExprAst,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bindings {
    /// `.formal(actual)`; `None` for an explicitly empty `.formal()`.
    Named(Vec<(String, Option<ExprAst>)>),
    Positional(Vec<ExprAst>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub module: String,
    pub name: String,
    pub params: Bindings,
    pub ports: Bindings,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleAst {
    pub name: String,
    /// Port names in header order.
    pub port_order: Vec<String>,
    pub ports: Vec<PortDecl>,
    pub nets: Vec<NetDecl>,
    pub params: Vec<ParamDecl>,
    pub assigns: Vec<ContAssign>,
    pub always: Vec<AlwaysBlock>,
    pub initials: Vec<StmtAst>,
    pub instances: Vec<Instance>,
    pub span: Span,
}

impl ModuleAst {
    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn net(&self, name: &str) -> Option<&NetDecl> {
        self.nets.iter().find(|n| n.name == name)
    }

    pub fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.params.iter().find(|p| p.name == name)
    }
}
