// SPDX-License-Identifier: Apache-2.0

//! Lexer and recursive-descent parser for `.fw` files.

use super::ast::*;
use super::FwError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Str(String),
    Punct(&'static str),
    Eof,
}

const PUNCT: &[&str] = &[
    "|->", "|=>", "<<=", ">>=", "##", "&&", "||", "==", "!=", "<=", ">=", "<<", ">>", "++", "--", "+=", "-=",
    "&=", "|=", "^=", "*=", "(", ")", "{", "}", "[", "]", ";", ",", "=", "+", "-", "*", "&", "|", "^", "~", "!",
    "<", ">", "?", ":", ".", "/", "%",
];

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, FwError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let adv = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for k in 0..n {
            if b[*i + k] == b'\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < b.len() {
        let c = b[i];
        let pos = Pos { line, col };
        if c.is_ascii_whitespace() {
            adv(&mut i, &mut line, &mut col, 1);
        } else if src[i..].starts_with("//") {
            let n = src[i..].find('\n').unwrap_or(b.len() - i);
            adv(&mut i, &mut line, &mut col, n);
        } else if src[i..].starts_with("/*") {
            let n = src[i + 2..]
                .find("*/")
                .ok_or_else(|| FwError::new(pos, "unterminated comment"))?;
            adv(&mut i, &mut line, &mut col, n + 4);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let n = src[i..]
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(b.len() - i);
            out.push((Tok::Ident(src[i..i + n].to_string()), pos));
            adv(&mut i, &mut line, &mut col, n);
        } else if c.is_ascii_digit() {
            let n = src[i..]
                .find(|ch: char| !ch.is_ascii_alphanumeric())
                .unwrap_or(b.len() - i);
            let text = src[i..i + n].trim_end_matches(['u', 'U', 'l', 'L']);
            let v = if let Some(h) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
                u64::from_str_radix(h, 16)
            } else if let Some(bits) = text.strip_prefix("0b").or_else(|| text.strip_prefix("0B")) {
                u64::from_str_radix(bits, 2)
            } else {
                text.parse()
            }
            .map_err(|_| FwError::new(pos, format!("bad number `{}`", &src[i..i + n])))?;
            out.push((Tok::Num(v), pos));
            adv(&mut i, &mut line, &mut col, n);
        } else if c == b'"' {
            let n = src[i + 1..]
                .find('"')
                .ok_or_else(|| FwError::new(pos, "unterminated string"))?;
            out.push((Tok::Str(src[i + 1..i + 1 + n].to_string()), pos));
            adv(&mut i, &mut line, &mut col, n + 2);
        } else if let Some(p) = PUNCT.iter().find(|p| src[i..].starts_with(**p)) {
            out.push((Tok::Punct(p), pos));
            adv(&mut i, &mut line, &mut col, p.len());
        } else {
            return Err(FwError::new(pos, format!("unexpected character `{}`", c as char)));
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Width named by a type keyword; `Some(None)` for `void`.
fn type_width(name: &str) -> Option<Option<u32>> {
    match name {
        "void" => Some(None),
        "bool" => Some(Some(1)),
        "char" => Some(Some(8)),
        "int" | "unsigned" => Some(Some(32)),
        _ => {
            let n: u32 = name.strip_prefix('u')?.parse().ok()?;
            (1..=64).contains(&n).then_some(Some(n))
        }
    }
}

const INTRINSICS: &[&str] = &["assume", "assert", "step", "set_input", "property", "nondet", "read_output"];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    pos: usize,
}

type Res<T> = Result<T, FwError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn here(&self) -> Pos {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Res<()> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{p}`")))
        }
    }

    fn err(&self, msg: impl Into<String>) -> FwError {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => n.to_string(),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        };
        FwError::new(self.here(), format!("{}, found {found}", msg.into()))
    }

    fn ident(&mut self) -> Res<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn number(&mut self) -> Res<u64> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.err("expected number")),
        }
    }

    fn at_type(&self) -> Option<Option<u32>> {
        match self.peek() {
            Tok::Ident(s) => type_width(s),
            _ => None,
        }
    }

    fn value_type(&mut self) -> Res<u32> {
        match self.at_type() {
            Some(Some(w)) => {
                self.bump();
                Ok(w)
            }
            _ => Err(self.err("expected a value type")),
        }
    }

    fn program(&mut self) -> Res<FirmwareProgram> {
        let mut prog = FirmwareProgram::default();
        while *self.peek() != Tok::Eof {
            let pos = self.here();
            let ty = self.at_type().ok_or_else(|| self.err("expected a declaration"))?;
            self.bump();
            let name = self.ident()?;
            if self.eat("(") {
                let mut params = Vec::new();
                if !self.eat(")") {
                    if matches!(self.peek(), Tok::Ident(s) if s == "void") && matches!(self.peek2(), Tok::Punct(")")) {
                        self.bump();
                        self.bump();
                    } else {
                        loop {
                            let w = self.value_type()?;
                            params.push((self.ident()?, w));
                            if self.eat(")") {
                                break;
                            }
                            self.expect(",")?;
                        }
                    }
                }
                let body = self.block()?;
                if prog.functions.contains_key(&name) {
                    return Err(FwError::new(pos, format!("function `{name}` defined twice")));
                }
                prog.functions.insert(
                    name.clone(),
                    Function {
                        name,
                        ret: ty,
                        params,
                        body,
                        pos,
                    },
                );
            } else {
                let w = ty.ok_or_else(|| FwError::new(pos, "variable of type void"))?;
                let mut out = Vec::new();
                self.declarators(w, name, pos, &mut out)?;
                for s in out {
                    if let FwStmt::Decl(d) = s {
                        prog.globals.push(d);
                    }
                }
            }
        }
        Ok(prog)
    }

    /// Rest of `type name [N] = init, name2 ... ;` after the first name.
    fn declarators(&mut self, w: u32, first: String, pos: Pos, out: &mut Vec<FwStmt>) -> Res<()> {
        let mut name = first;
        let mut pos = pos;
        loop {
            let len = if self.eat("[") {
                let n = self.number()?;
                self.expect("]")?;
                if n == 0 || n > 4096 {
                    return Err(FwError::new(pos, "array size must be between 1 and 4096"));
                }
                Some(n as u32)
            } else {
                None
            };
            let init = if self.eat("=") {
                if len.is_some() {
                    return Err(self.err("array initializers are not supported"));
                }
                Some(self.expr()?)
            } else {
                None
            };
            out.push(FwStmt::Decl(VarDecl {
                name,
                width: w,
                len,
                init,
                pos,
            }));
            if self.eat(";") {
                return Ok(());
            }
            self.expect(",")?;
            pos = self.here();
            name = self.ident()?;
        }
    }

    fn block(&mut self) -> Res<Vec<FwStmt>> {
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.eat("}") {
            if *self.peek() == Tok::Eof {
                return Err(self.err("expected `}`"));
            }
            self.stmt(&mut out)?;
        }
        Ok(out)
    }

    /// A statement used as a loop or branch body.
    fn body(&mut self) -> Res<Vec<FwStmt>> {
        if self.is("{") {
            return self.block();
        }
        let mut out = Vec::new();
        self.stmt(&mut out)?;
        Ok(out)
    }

    fn stmt(&mut self, out: &mut Vec<FwStmt>) -> Res<()> {
        let pos = self.here();
        if self.is("{") {
            let b = self.block()?;
            out.push(FwStmt::Block(b));
            return Ok(());
        }
        if self.eat(";") {
            return Ok(());
        }
        if let Some(ty) = self.at_type() {
            self.bump();
            let w = ty.ok_or_else(|| FwError::new(pos, "variable of type void"))?;
            let name = self.ident()?;
            return self.declarators(w, name, pos, out);
        }
        let Tok::Ident(kw) = self.peek().clone() else {
            return Err(self.err("expected a statement"));
        };
        match kw.as_str() {
            "if" => {
                self.bump();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let then_branch = self.body()?;
                let else_branch = if matches!(self.peek(), Tok::Ident(s) if s == "else") {
                    self.bump();
                    self.body()?
                } else {
                    Vec::new()
                };
                out.push(FwStmt::If {
                    cond,
                    then_branch,
                    else_branch,
                });
            }
            "while" => {
                self.bump();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let body = self.body()?;
                out.push(FwStmt::While { cond, body });
            }
            "for" => {
                self.bump();
                self.expect("(")?;
                let mut init = Vec::new();
                if !self.eat(";") {
                    if let Some(ty) = self.at_type() {
                        let dpos = self.here();
                        self.bump();
                        let w = ty.ok_or_else(|| FwError::new(dpos, "variable of type void"))?;
                        let name = self.ident()?;
                        self.declarators(w, name, dpos, &mut init)?;
                    } else {
                        loop {
                            self.simple(&mut init)?;
                            if self.eat(";") {
                                break;
                            }
                            self.expect(",")?;
                        }
                    }
                }
                let cond = if self.is(";") { FwExpr::Num(1) } else { self.expr()? };
                self.expect(";")?;
                let mut step = Vec::new();
                if !self.eat(")") {
                    loop {
                        self.simple(&mut step)?;
                        if self.eat(")") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                let body = self.body()?;
                out.push(FwStmt::For {
                    init,
                    cond,
                    step,
                    body,
                });
            }
            "return" => {
                self.bump();
                let v = if self.is(";") { None } else { Some(self.expr()?) };
                self.expect(";")?;
                out.push(FwStmt::Return(v, pos));
            }
            "else" => return Err(self.err("`else` without `if`")),
            "assume" => {
                self.bump();
                self.expect("(")?;
                let c = self.expr()?;
                self.expect(")")?;
                self.expect(";")?;
                out.push(FwStmt::Assume(c));
            }
            "assert" => {
                self.bump();
                self.expect("(")?;
                let cond = self.expr()?;
                let label = if self.eat(",") {
                    match self.bump() {
                        Tok::Str(s) => s,
                        _ => return Err(FwError::new(pos, "assert label must be a string")),
                    }
                } else {
                    format!("assert@{pos}")
                };
                self.expect(")")?;
                self.expect(";")?;
                out.push(FwStmt::Assert { cond, label });
            }
            "step" => {
                self.bump();
                self.expect("(")?;
                self.expect(")")?;
                self.expect(";")?;
                out.push(FwStmt::Step);
            }
            "set_input" => {
                self.bump();
                self.expect("(")?;
                let name = self.signal_name()?;
                self.expect(",")?;
                let value = self.expr()?;
                self.expect(")")?;
                self.expect(";")?;
                out.push(FwStmt::SetInput { name, value, pos });
            }
            "property" => {
                self.bump();
                self.expect("(")?;
                let p = self.property()?;
                self.expect(")")?;
                self.expect(";")?;
                out.push(FwStmt::Property(p, pos));
            }
            _ if matches!(self.peek2(), Tok::Punct("(")) => {
                let name = self.ident()?;
                if INTRINSICS.contains(&name.as_str()) {
                    return Err(FwError::new(pos, format!("`{name}` cannot be used as a statement")));
                }
                let args = self.args()?;
                self.expect(";")?;
                out.push(FwStmt::Call { name, args, pos });
            }
            _ => {
                self.simple(out)?;
                self.expect(";")?;
            }
        }
        Ok(())
    }

    /// Assignment, compound assignment, `x++` or `x--`, without the `;`.
    fn simple(&mut self, out: &mut Vec<FwStmt>) -> Res<()> {
        let pos = self.here();
        let name = self.ident()?;
        let (target, read) = if self.eat("[") {
            let i = self.expr()?;
            self.expect("]")?;
            (
                FwLValue::Elem(name.clone(), i.clone(), pos),
                FwExpr::Index(name, Box::new(i), pos),
            )
        } else {
            (FwLValue::Var(name.clone(), pos), FwExpr::Ident(name, pos))
        };
        let op = match self.bump() {
            Tok::Punct("=") => None,
            Tok::Punct("+=") => Some(FwBinOp::Add),
            Tok::Punct("-=") => Some(FwBinOp::Sub),
            Tok::Punct("*=") => Some(FwBinOp::Mul),
            Tok::Punct("&=") => Some(FwBinOp::And),
            Tok::Punct("|=") => Some(FwBinOp::Or),
            Tok::Punct("^=") => Some(FwBinOp::Xor),
            Tok::Punct("<<=") => Some(FwBinOp::Shl),
            Tok::Punct(">>=") => Some(FwBinOp::Shr),
            Tok::Punct("++") => {
                out.push(FwStmt::Assign {
                    target,
                    value: FwExpr::Binary(FwBinOp::Add, Box::new(read), Box::new(FwExpr::Num(1))),
                });
                return Ok(());
            }
            Tok::Punct("--") => {
                out.push(FwStmt::Assign {
                    target,
                    value: FwExpr::Binary(FwBinOp::Sub, Box::new(read), Box::new(FwExpr::Num(1))),
                });
                return Ok(());
            }
            _ => return Err(FwError::new(pos, "expected an assignment")),
        };
        let rhs = self.expr()?;
        let value = match op {
            None => rhs,
            Some(op) => FwExpr::Binary(op, Box::new(read), Box::new(rhs)),
        };
        out.push(FwStmt::Assign { target, value });
        Ok(())
    }

    fn args(&mut self) -> Res<Vec<FwExpr>> {
        self.expect("(")?;
        let mut v = Vec::new();
        if self.eat(")") {
            return Ok(v);
        }
        loop {
            v.push(self.expr()?);
            if self.eat(")") {
                return Ok(v);
            }
            self.expect(",")?;
        }
    }

    /// `name`, `a.b.c` or a string literal.
    fn signal_name(&mut self) -> Res<String> {
        if let Tok::Str(s) = self.peek().clone() {
            self.bump();
            return Ok(s);
        }
        let mut n = self.ident()?;
        while self.eat(".") {
            n.push('.');
            n.push_str(&self.ident()?);
        }
        Ok(n)
    }

    fn property(&mut self) -> Res<PropertySpec> {
        let antecedent = self.expr()?;
        if self.is("|=>") {
            return Err(self.err("unsupported temporal operator `|=>`"));
        }
        if !self.eat("|->") {
            return Err(self.err("expected `|->`"));
        }
        let grouped = self.is("(") && self.paren_contains_delay();
        if grouped {
            self.bump();
        }
        let mut immediate = None;
        let mut delay = 0;
        let mut delayed = None;
        if !self.is("##") {
            immediate = Some(self.expr()?);
        }
        if immediate.is_none() || self.eat("&&") {
            if !self.eat("##") {
                return Err(self.err("expected `##`"));
            }
            if self.is("[") {
                return Err(self.err("unsupported temporal operator: delay ranges"));
            }
            delay = u32::try_from(self.number()?).map_err(|_| self.err("delay too large"))?;
            delayed = Some(self.expr()?);
        }
        if grouped {
            self.expect(")")?;
        }
        if self.is("##") || self.is("|->") || self.is("&&") {
            return Err(self.err("unsupported temporal operator"));
        }
        Ok(PropertySpec {
            antecedent,
            immediate,
            delay,
            delayed,
        })
    }

    fn paren_contains_delay(&self) -> bool {
        let mut depth = 0;
        for (t, _) in &self.toks[self.pos..] {
            match t {
                Tok::Punct("(") => depth += 1,
                Tok::Punct(")") => {
                    depth -= 1;
                    if depth == 0 {
                        return false;
                    }
                }
                Tok::Punct("##") if depth == 1 => return true,
                Tok::Eof => return false,
                _ => {}
            }
        }
        false
    }

    fn expr(&mut self) -> Res<FwExpr> {
        let c = self.binary(1)?;
        if self.eat("?") {
            let a = self.expr()?;
            self.expect(":")?;
            let b = self.expr()?;
            return Ok(FwExpr::Ternary(Box::new(c), Box::new(a), Box::new(b)));
        }
        Ok(c)
    }

    fn binop(&self) -> Option<(FwBinOp, u8)> {
        use FwBinOp::*;
        let Tok::Punct(p) = self.peek() else { return None };
        Some(match *p {
            "||" => (LogOr, 1),
            "&&" => (LogAnd, 2),
            "|" => (Or, 3),
            "^" => (Xor, 4),
            "&" => (And, 5),
            "==" => (Eq, 6),
            "!=" => (Ne, 6),
            "<" => (Lt, 7),
            "<=" => (Le, 7),
            ">" => (Gt, 7),
            ">=" => (Ge, 7),
            "<<" => (Shl, 8),
            ">>" => (Shr, 8),
            "+" => (Add, 9),
            "-" => (Sub, 9),
            "*" => (Mul, 10),
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> Res<FwExpr> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.binop() {
            if prec < min {
                break;
            }
            if op == FwBinOp::LogAnd && matches!(self.peek2(), Tok::Punct("##")) {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = FwExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        if self.is("/") || self.is("%") {
            return Err(self.err("division is not supported"));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Res<FwExpr> {
        if self.eat("!") {
            return Ok(FwExpr::Unary(FwUnOp::LogNot, Box::new(self.unary()?)));
        }
        if self.eat("~") {
            return Ok(FwExpr::Unary(FwUnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat("-") {
            return Ok(FwExpr::Unary(FwUnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat("+") {
            return self.unary();
        }
        if self.is("(") {
            if let Tok::Ident(s) = self.peek2() {
                if let Some(Some(w)) = type_width(s) {
                    self.bump();
                    self.bump();
                    self.expect(")")?;
                    return Ok(FwExpr::Cast(w, Box::new(self.unary()?)));
                }
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Res<FwExpr> {
        let pos = self.here();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(FwExpr::Num(n))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "true" => return Ok(FwExpr::Num(1)),
                    "false" => return Ok(FwExpr::Num(0)),
                    "nondet" => {
                        self.expect("(")?;
                        let w = self.number()?;
                        self.expect(")")?;
                        if !(1..=64).contains(&w) {
                            return Err(FwError::new(pos, "nondet width must be between 1 and 64"));
                        }
                        return Ok(FwExpr::Nondet(w as u32, pos));
                    }
                    "read_output" => {
                        self.expect("(")?;
                        let n = self.signal_name()?;
                        self.expect(")")?;
                        return Ok(FwExpr::ReadOutput(n, pos));
                    }
                    _ => {}
                }
                if self.is("(") {
                    if INTRINSICS.contains(&name.as_str()) {
                        return Err(FwError::new(pos, format!("`{name}` has no value")));
                    }
                    let args = self.args()?;
                    return Ok(FwExpr::Call(name, args, pos));
                }
                if self.eat("[") {
                    let i = self.expr()?;
                    self.expect("]")?;
                    return Ok(FwExpr::Index(name, Box::new(i), pos));
                }
                Ok(FwExpr::Ident(name, pos))
            }
            _ => Err(self.err("expected an expression")),
        }
    }
}

pub fn parse_firmware(src: &str) -> Result<FirmwareProgram, FwError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let prog = p.program()?;
    if !prog.functions.contains_key("main") {
        return Err(FwError::new(Pos::default(), "no `main` function"));
    }
    Ok(prog)
}

/// Parses a single property such as `ack==1 |-> (valid==1 && ##2 empty==0)`.
pub fn parse_property(src: &str) -> Result<PropertySpec, FwError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let spec = p.property()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_driver_shapes() {
        let src = r#"
            u8 tx_b[4];
            u8 inb(u8 port) { set_input(adr_i, port); step(); return read_output(dat_o); }
            void main() {
                u8 i, s = 0;
                for (i = 0; i < 4; i++) {
                    tx_b[i] = nondet(8);
                    s |= inb(2) & 0x0c;
                    if (s == 0x0c) step(); else { s = (u4)s; }
                }
                assert(s != 3, "never three");
                property(ack == 1 |-> (valid == 1 && ##2 empty == 0));
            }
        "#;
        let p = parse_firmware(src).unwrap();
        assert_eq!(p.globals.len(), 1);
        assert_eq!(p.globals[0].len, Some(4));
        assert_eq!(p.functions["inb"].ret, Some(8));
        let main = &p.functions["main"].body;
        assert!(matches!(&main[3], FwStmt::Assert { label, .. } if label == "never three"));
        let FwStmt::Property(spec, _) = &main[4] else { panic!() };
        assert_eq!(spec.delay, 2);
        assert!(spec.immediate.is_some() && spec.delayed.is_some());
    }

    #[test]
    fn property_forms() {
        let p = parse_property("a |-> b").unwrap();
        assert_eq!((p.delay, p.delayed.is_none()), (0, true));
        let p = parse_property("a |-> ##3 b == 1").unwrap();
        assert_eq!((p.delay, p.immediate.is_none()), (3, true));
        assert!(parse_property("a |=> b").is_err());
        assert!(parse_property("a |-> ##[1:2] b").is_err());
        assert!(parse_property("a |-> b ##1 c").is_err());
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_firmware("void main() {\n  x = ;\n}").unwrap_err();
        assert_eq!(e.pos, Pos { line: 2, col: 7 });
        assert!(parse_firmware("void f() {}").is_err());
        assert!(parse_firmware("void main() { x = a / 2; }").is_err());
    }
}
