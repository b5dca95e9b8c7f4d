// SPDX-License-Identifier: Apache-2.0

//! Front end for the synthesizable Verilog subset: lexer, parser, pretty
//! printer and elaboration into a hierarchy-resolved design.

pub mod ast;
mod elaborate;
mod lexer;
mod parser;
mod print;
mod width;

pub use ast::*;
pub use elaborate::{
    elaborate, Binding, ElaboratedDesign, InstanceNode, SignalInfo, SignalKind,
};
pub use parser::{parse_expr, parse_source};
pub use print::{print_expr, print_module, print_source};
pub use width::{const_eval, self_width};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerilogError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: unsupported construct: {what}")]
    Unsupported { span: Span, what: String },
    #[error("{span}: {msg}")]
    Elab { span: Span, msg: String },
}

impl VerilogError {
    pub fn syntax(span: Span, msg: impl Into<String>) -> Self {
        VerilogError::Syntax {
            span,
            msg: msg.into(),
        }
    }

    pub fn unsupported(span: Span, what: impl Into<String>) -> Self {
        VerilogError::Unsupported {
            span,
            what: what.into(),
        }
    }

    pub fn elab(span: Span, msg: impl Into<String>) -> Self {
        VerilogError::Elab {
            span,
            msg: msg.into(),
        }
    }

    pub fn span(&self) -> Span {
        match self {
            VerilogError::Syntax { span, .. }
            | VerilogError::Unsupported { span, .. }
            | VerilogError::Elab { span, .. } => *span,
        }
    }

    /// The message without its position prefix.
    pub fn message(&self) -> String {
        match self {
            VerilogError::Syntax { msg, .. } => format!("syntax error: {msg}"),
            VerilogError::Unsupported { what, .. } => format!("unsupported construct: {what}"),
            VerilogError::Elab { msg, .. } => msg.clone(),
        }
    }

    /// `file:line:col: message`
    pub fn render(&self, file: &str) -> String {
        let s = self.span();
        format!("{file}:{}:{}: {}", s.line, s.col, self.message())
    }
}
