// SPDX-License-Identifier: Apache-2.0

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::VerilogError;

pub fn parse_source(text: &str) -> Result<Vec<ModuleAst>, VerilogError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut mods: Vec<ModuleAst> = Vec::new();
    while !p.at_eof() {
        let m = p.module()?;
        if mods.iter().any(|o| o.name == m.name) {
            return Err(VerilogError::syntax(
                m.span,
                format!("duplicate module `{}`", m.name),
            ));
        }
        mods.push(m);
    }
    Ok(mods)
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "case", "casez", "casex", "function", "task", "generate", "genvar", "fork", "join", "real",
    "time", "realtime", "wait", "forever", "repeat", "while", "negedge", "tri", "supply0",
    "supply1", "specify", "primitive", "signed", "event",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number { value, .. } => format!("number {value}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), VerilogError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(VerilogError::syntax(
                self.span(),
                format!("expected `{s}`, found {}", self.describe()),
            ))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), VerilogError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(VerilogError::syntax(
                self.span(),
                format!("expected `{k}`, found {}", self.describe()),
            ))
        }
    }

    fn ident(&mut self) -> Result<String, VerilogError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) {
                    return Err(VerilogError::unsupported(self.span(), s));
                }
                self.bump();
                Ok(s)
            }
            _ => Err(VerilogError::syntax(
                self.span(),
                format!("expected identifier, found {}", self.describe()),
            )),
        }
    }

    fn reject_unsupported_kw(&self) -> Result<(), VerilogError> {
        if let Tok::Ident(s) = self.peek() {
            if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) {
                return Err(VerilogError::unsupported(self.span(), s.clone()));
            }
        }
        Ok(())
    }

    // ---- module level -------------------------------------------------

    fn module(&mut self) -> Result<ModuleAst, VerilogError> {
        let span = self.span();
        if self.is_kw("macromodule") || self.is_kw("primitive") {
            return Err(VerilogError::unsupported(span, self.describe()));
        }
        self.expect_kw("module")?;
        let name = self.ident()?;
        let mut m = ModuleAst {
            name,
            port_order: vec![],
            ports: vec![],
            nets: vec![],
            params: vec![],
            assigns: vec![],
            always: vec![],
            initials: vec![],
            instances: vec![],
            span,
        };
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            loop {
                self.eat_kw("parameter");
                let _ = self.opt_range()?;
                let pname = self.ident()?;
                self.expect_sym("=")?;
                let value = self.expr()?;
                m.params.push(ParamDecl {
                    name: pname,
                    value,
                    local: false,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        if self.eat_sym("(") {
            if !self.is_sym(")") {
                if self.is_kw("input") || self.is_kw("output") || self.is_kw("inout") {
                    self.ansi_ports(&mut m)?;
                } else {
                    loop {
                        m.port_order.push(self.ident()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
            }
            self.expect_sym(")")?;
        }
        self.expect_sym(";")?;
        while !self.eat_kw("endmodule") {
            if self.at_eof() {
                return Err(VerilogError::syntax(self.span(), "missing `endmodule`"));
            }
            self.item(&mut m)?;
        }
        Ok(m)
    }

    fn ansi_ports(&mut self, m: &mut ModuleAst) -> Result<(), VerilogError> {
        let mut dir = Dir::Input;
        let mut is_reg = false;
        let mut range = None;
        loop {
            let span = self.span();
            if let Some(d) = self.opt_dir() {
                dir = d;
                is_reg = false;
                if self.eat_kw("reg") {
                    is_reg = true;
                } else {
                    self.eat_kw("wire");
                }
                range = self.opt_range()?;
            }
            let name = self.ident()?;
            m.port_order.push(name.clone());
            m.ports.push(PortDecl {
                name,
                dir,
                is_reg,
                range: range.clone(),
                span,
            });
            if !self.eat_sym(",") {
                return Ok(());
            }
        }
    }

    fn opt_dir(&mut self) -> Option<Dir> {
        if self.eat_kw("input") {
            Some(Dir::Input)
        } else if self.eat_kw("output") {
            Some(Dir::Output)
        } else if self.eat_kw("inout") {
            Some(Dir::Inout)
        } else {
            None
        }
    }

    fn opt_range(&mut self) -> Result<Option<Range>, VerilogError> {
        if !self.eat_sym("[") {
            return Ok(None);
        }
        let msb = self.expr()?;
        self.expect_sym(":")?;
        let lsb = self.expr()?;
        self.expect_sym("]")?;
        Ok(Some(Range { msb, lsb }))
    }

    fn item(&mut self, m: &mut ModuleAst) -> Result<(), VerilogError> {
        let span = self.span();
        self.reject_unsupported_kw()?;
        if let Some(dir) = self.opt_dir() {
            let is_reg = if self.eat_kw("reg") {
                true
            } else {
                self.eat_kw("wire");
                false
            };
            let range = self.opt_range()?;
            loop {
                let span = self.span();
                let name = self.ident()?;
                m.ports.push(PortDecl {
                    name,
                    dir,
                    is_reg,
                    range: range.clone(),
                    span,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
            return self.expect_sym(";");
        }
        if self.is_kw("wire") || self.is_kw("reg") || self.is_kw("integer") {
            let kind = match self.bump().tok {
                Tok::Ident(s) if s == "wire" => NetKind::Wire,
                Tok::Ident(s) if s == "reg" => NetKind::Reg,
                _ => NetKind::Integer,
            };
            let range = if kind == NetKind::Integer {
                None
            } else {
                self.opt_range()?
            };
            loop {
                let nspan = self.span();
                let name = self.ident()?;
                if self.is_sym("[") {
                    return Err(VerilogError::unsupported(self.span(), "memory array"));
                }
                m.nets.push(NetDecl {
                    name: name.clone(),
                    kind,
                    range: range.clone(),
                    span: nspan,
                });
                if self.eat_sym("=") {
                    let rhs = self.expr()?;
                    let lhs = LValue::Ident(name, nspan);
                    if kind == NetKind::Wire {
                        m.assigns.push(ContAssign { lhs, rhs, span: nspan });
                    } else {
                        m.initials.push(StmtAst::Assign {
                            lhs,
                            rhs,
                            blocking: true,
                            span: nspan,
                        });
                    }
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
            return self.expect_sym(";");
        }
        if self.is_kw("parameter") || self.is_kw("localparam") {
            let local = self.is_kw("localparam");
            self.bump();
            let _ = self.opt_range()?;
            loop {
                let name = self.ident()?;
                self.expect_sym("=")?;
                let value = self.expr()?;
                m.params.push(ParamDecl { name, value, local });
                if !self.eat_sym(",") {
                    break;
                }
            }
            return self.expect_sym(";");
        }
        if self.eat_kw("assign") {
            loop {
                let span = self.span();
                let lhs = self.lvalue()?;
                self.expect_sym("=")?;
                let rhs = self.expr()?;
                m.assigns.push(ContAssign { lhs, rhs, span });
                if !self.eat_sym(",") {
                    break;
                }
            }
            return self.expect_sym(";");
        }
        if self.eat_kw("always") {
            let trigger = self.sensitivity()?;
            let body = self.stmt()?;
            m.always.push(AlwaysBlock { trigger, body, span });
            return Ok(());
        }
        if self.eat_kw("initial") {
            let body = self.stmt()?;
            m.initials.push(body);
            return Ok(());
        }
        if let Tok::Ident(_) = self.peek() {
            return self.instance(m);
        }
        Err(VerilogError::syntax(
            span,
            format!("unexpected {} in module body", self.describe()),
        ))
    }

    fn sensitivity(&mut self) -> Result<Trigger, VerilogError> {
        self.expect_sym("@")?;
        if self.eat_sym("*") {
            return Ok(Trigger::Comb);
        }
        self.expect_sym("(")?;
        if self.eat_sym("*") {
            self.expect_sym(")")?;
            return Ok(Trigger::Comb);
        }
        if self.eat_kw("posedge") {
            let clk = self.ident()?;
            if !self.is_sym(")") {
                return Err(VerilogError::unsupported(
                    self.span(),
                    "multi-edge sensitivity list (asynchronous reset)",
                ));
            }
            self.expect_sym(")")?;
            return Ok(Trigger::Posedge(clk));
        }
        self.reject_unsupported_kw()?;
        // explicit level-sensitive list: treated like @(*)
        loop {
            self.ident()?;
            if !(self.eat_kw("or") || self.eat_sym(",")) {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(Trigger::Comb)
    }

    fn bindings(&mut self) -> Result<Bindings, VerilogError> {
        self.expect_sym("(")?;
        if self.eat_sym(")") {
            return Ok(Bindings::Positional(vec![]));
        }
        if self.is_sym(".") {
            let mut v = Vec::new();
            loop {
                self.expect_sym(".")?;
                let formal = self.ident()?;
                self.expect_sym("(")?;
                let actual = if self.is_sym(")") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_sym(")")?;
                v.push((formal, actual));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
            Ok(Bindings::Named(v))
        } else {
            let mut v = Vec::new();
            loop {
                v.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
            Ok(Bindings::Positional(v))
        }
    }

    fn instance(&mut self, m: &mut ModuleAst) -> Result<(), VerilogError> {
        let span = self.span();
        let module = self.ident()?;
        let params = if self.eat_sym("#") {
            self.bindings()?
        } else {
            Bindings::Positional(vec![])
        };
        loop {
            let name = self.ident()?;
            let ports = self.bindings()?;
            m.instances.push(Instance {
                module: module.clone(),
                name,
                params: params.clone(),
                ports,
                span,
            });
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")
    }

    // ---- statements ---------------------------------------------------

    fn stmt(&mut self) -> Result<StmtAst, VerilogError> {
        let span = self.span();
        self.reject_unsupported_kw()?;
        if self.is_sym("#") {
            return Err(VerilogError::unsupported(span, "delay control"));
        }
        if self.eat_sym(";") {
            return Ok(StmtAst::Empty);
        }
        if self.eat_kw("begin") {
            if self.eat_sym(":") {
                self.ident()?;
            }
            let mut v = Vec::new();
            while !self.eat_kw("end") {
                if self.at_eof() {
                    return Err(VerilogError::syntax(self.span(), "missing `end`"));
                }
                v.push(self.stmt()?);
            }
            return Ok(StmtAst::Block(v));
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then_branch = Box::new(self.stmt()?);
            let else_branch = if self.eat_kw("else") {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(StmtAst::If {
                cond,
                then_branch,
                else_branch,
            });
        }
        if self.eat_kw("for") {
            self.expect_sym("(")?;
            let var = self.ident()?;
            self.expect_sym("=")?;
            let init = self.expr()?;
            self.expect_sym(";")?;
            let cond = self.expr()?;
            self.expect_sym(";")?;
            let v2 = self.ident()?;
            if v2 != var {
                return Err(VerilogError::unsupported(
                    self.span(),
                    "for-loop stepping a different variable",
                ));
            }
            self.expect_sym("=")?;
            let step = self.expr()?;
            self.expect_sym(")")?;
            let body = Box::new(self.stmt()?);
            return Ok(StmtAst::For {
                var,
                init,
                cond,
                step,
                body,
                span,
            });
        }
        let lhs = self.lvalue()?;
        let blocking = if self.eat_sym("=") {
            true
        } else if self.eat_sym("<=") {
            false
        } else {
            return Err(VerilogError::syntax(
                self.span(),
                format!("expected `=` or `<=`, found {}", self.describe()),
            ));
        };
        if self.is_sym("#") {
            return Err(VerilogError::unsupported(self.span(), "delay control"));
        }
        let rhs = self.expr()?;
        self.expect_sym(";")?;
        Ok(StmtAst::Assign {
            lhs,
            rhs,
            blocking,
            span,
        })
    }

    fn lvalue(&mut self) -> Result<LValue, VerilogError> {
        let span = self.span();
        if self.eat_sym("{") {
            let mut v = Vec::new();
            loop {
                v.push(self.lvalue()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
            return Ok(LValue::Concat(v));
        }
        let name = self.ident()?;
        if !self.eat_sym("[") {
            return Ok(LValue::Ident(name, span));
        }
        let first = self.expr()?;
        let lv = if self.eat_sym(":") {
            let lsb = self.expr()?;
            LValue::PartSelect {
                base: name,
                msb: first,
                lsb,
                span,
            }
        } else if self.is_sym("+:") || self.is_sym("-:") {
            let up = self.is_sym("+:");
            self.bump();
            let width = self.expr()?;
            LValue::IndexedPartSelect {
                base: name,
                offset: first,
                width,
                up,
                span,
            }
        } else {
            LValue::BitSelect {
                base: name,
                index: first,
                span,
            }
        };
        self.expect_sym("]")?;
        Ok(lv)
    }

    // ---- expressions --------------------------------------------------

    pub fn expr(&mut self) -> Result<ExprAst, VerilogError> {
        let c = self.binary(1)?;
        if self.eat_sym("?") {
            let a = self.expr()?;
            self.expect_sym(":")?;
            let b = self.expr()?;
            return Ok(ExprAst::Ternary(Box::new(c), Box::new(a), Box::new(b)));
        }
        Ok(c)
    }

    fn peek_binop(&self) -> Option<BinaryOp> {
        let s = match self.peek() {
            Tok::Sym(s) => *s,
            _ => return None,
        };
        Some(match s {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "&" => BinaryOp::And,
            "|" => BinaryOp::Or,
            "^" => BinaryOp::Xor,
            "~^" | "^~" => BinaryOp::Xnor,
            "<<" | "<<<" => BinaryOp::Shl,
            ">>" => BinaryOp::Shr,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "==" | "===" => BinaryOp::Eq,
            "!=" | "!==" => BinaryOp::Ne,
            "&&" => BinaryOp::LogAnd,
            "||" => BinaryOp::LogOr,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<ExprAst, VerilogError> {
        let mut lhs = self.unary()?;
        loop {
            if self.is_sym("/") || self.is_sym("%") {
                return Err(VerilogError::unsupported(self.span(), "division/modulo"));
            }
            if self.is_sym(">>>") {
                return Err(VerilogError::unsupported(self.span(), "arithmetic shift"));
            }
            let op = match self.peek_binop() {
                Some(op) if op.precedence() >= min_prec => op,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<ExprAst, VerilogError> {
        let op = match self.peek() {
            Tok::Sym(s) => *s,
            _ => "",
        };
        let red = |r| Some(r);
        let reduction = match op {
            "&" => red(RedOp::And),
            "|" => red(RedOp::Or),
            "^" => red(RedOp::Xor),
            "~&" => red(RedOp::Nand),
            "~|" => red(RedOp::Nor),
            "~^" | "^~" => red(RedOp::Xnor),
            _ => None,
        };
        if let Some(r) = reduction {
            self.bump();
            let a = self.unary()?;
            return Ok(ExprAst::Reduction(r, Box::new(a)));
        }
        let un = match op {
            "~" => Some(UnaryOp::Not),
            "!" => Some(UnaryOp::LogNot),
            "-" => Some(UnaryOp::Neg),
            "+" => Some(UnaryOp::Plus),
            _ => None,
        };
        if let Some(u) = un {
            self.bump();
            let a = self.unary()?;
            return Ok(ExprAst::Unary(u, Box::new(a)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<ExprAst, VerilogError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number { value, width } => {
                self.bump();
                Ok(ExprAst::Const { value, width })
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.bump();
                let first = self.expr()?;
                if self.eat_sym("{") {
                    let mut parts = Vec::new();
                    loop {
                        parts.push(self.expr()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym("}")?;
                    self.expect_sym("}")?;
                    return Ok(ExprAst::Repeat {
                        count: Box::new(first),
                        parts,
                    });
                }
                let mut parts = vec![first];
                while self.eat_sym(",") {
                    parts.push(self.expr()?);
                }
                self.expect_sym("}")?;
                Ok(ExprAst::Concat(parts))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_sym("(") {
                    return Err(VerilogError::unsupported(span, "function call"));
                }
                if !self.eat_sym("[") {
                    return Ok(ExprAst::Ident(name, span));
                }
                let first = self.expr()?;
                let e = if self.eat_sym(":") {
                    let lsb = self.expr()?;
                    ExprAst::PartSelect {
                        base: name,
                        msb: Box::new(first),
                        lsb: Box::new(lsb),
                        span,
                    }
                } else if self.is_sym("+:") || self.is_sym("-:") {
                    let up = self.is_sym("+:");
                    self.bump();
                    let width = self.expr()?;
                    ExprAst::IndexedPartSelect {
                        base: name,
                        offset: Box::new(first),
                        width: Box::new(width),
                        up,
                        span,
                    }
                } else {
                    ExprAst::BitSelect {
                        base: name,
                        index: Box::new(first),
                        span,
                    }
                };
                self.expect_sym("]")?;
                if self.is_sym("[") {
                    return Err(VerilogError::unsupported(self.span(), "multi-dimensional select"));
                }
                Ok(e)
            }
            _ => Err(VerilogError::syntax(
                span,
                format!("expected expression, found {}", self.describe()),
            )),
        }
    }
}

/// Parses a standalone expression (used by tests and the property parser).
pub fn parse_expr(text: &str) -> Result<ExprAst, VerilogError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(VerilogError::syntax(
            p.span(),
            format!("trailing input {}", p.describe()),
        ));
    }
    Ok(e)
}
