// SPDX-License-Identifier: Apache-2.0

use super::ast::Span;
use super::VerilogError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `width` is `None` for unsized literals.
    Number { value: u64, width: Option<u32> },
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first so that greedy matching works.
const SYMBOLS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "~&", "~|", "~^", "^~", "<<", ">>", "<=", ">=", "==", "!=", "&&",
    "||", "+:", "-:", "(", ")", "[", "]", "{", "}", ";", ",", ".", ":", "=", "+", "-", "*", "/",
    "%", "&", "|", "^", "~", "!", "<", ">", "?", "#", "@",
];

pub fn lex(src: &str) -> Result<Vec<Token>, VerilogError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for k in 0..n {
            if bytes[*i + k] == b'\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < bytes.len() {
        let c = bytes[i];
        let span = Span { line, col };
        if c.is_ascii_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if src[i..].starts_with("//") {
            let n = src[i..].find('\n').unwrap_or(src.len() - i);
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        if src[i..].starts_with("/*") {
            let n = src[i + 2..]
                .find("*/")
                .ok_or_else(|| VerilogError::syntax(span, "unterminated block comment"))?;
            advance(&mut i, &mut line, &mut col, n + 4);
            continue;
        }
        if c == b'`' {
            return Err(VerilogError::unsupported(span, "compiler directive"));
        }
        if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$')
            {
                i += 1;
                col += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                span,
            });
            continue;
        }
        if c.is_ascii_digit() || c == b'\'' {
            let (tok, n) = lex_number(&src[i..], span)?;
            advance(&mut i, &mut line, &mut col, n);
            out.push(Token { tok, span });
            continue;
        }
        if c == b'"' {
            return Err(VerilogError::unsupported(span, "string literal"));
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) => {
                advance(&mut i, &mut line, &mut col, s.len());
                out.push(Token {
                    tok: Tok::Sym(s),
                    span,
                });
            }
            None => {
                return Err(VerilogError::syntax(
                    span,
                    format!("unexpected character `{}`", c as char),
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok(out)
}

fn lex_number(s: &str, span: Span) -> Result<(Tok, usize), VerilogError> {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
        i += 1;
    }
    let size_digits: String = s[..i].chars().filter(|c| *c != '_').collect();
    // allow `8 'hff` but not across other tokens
    let mut j = i;
    while j < b.len() && b[j] == b' ' {
        j += 1;
    }
    if j < b.len() && b[j] == b'\'' {
        let width = if size_digits.is_empty() {
            None
        } else {
            let w: u32 = size_digits
                .parse()
                .map_err(|_| VerilogError::syntax(span, "bad literal size"))?;
            if w == 0 || w > 64 {
                return Err(VerilogError::unsupported(
                    span,
                    format!("{w}-bit literal (limit is 64)"),
                ));
            }
            Some(w)
        };
        j += 1;
        if j < b.len() && (b[j] == b's' || b[j] == b'S') {
            return Err(VerilogError::unsupported(span, "signed literal"));
        }
        let radix = match b.get(j).map(|c| c.to_ascii_lowercase()) {
            Some(b'h') => 16,
            Some(b'd') => 10,
            Some(b'o') => 8,
            Some(b'b') => 2,
            _ => return Err(VerilogError::syntax(span, "missing literal base")),
        };
        j += 1;
        while j < b.len() && b[j] == b' ' {
            j += 1;
        }
        let start = j;
        while j < b.len() && (b[j].is_ascii_alphanumeric() || b[j] == b'_') {
            j += 1;
        }
        let digits: String = s[start..j].chars().filter(|c| *c != '_').collect();
        if digits.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
            return Err(VerilogError::unsupported(span, "x/z literal"));
        }
        let value = u64::from_str_radix(&digits, radix)
            .map_err(|_| VerilogError::syntax(span, format!("bad digits `{digits}`")))?;
        if let Some(w) = width {
            if w < 64 && value >> w != 0 {
                return Err(VerilogError::syntax(
                    span,
                    format!("literal value {value} does not fit {w} bits"),
                ));
            }
        }
        Ok((Tok::Number { value, width }, j))
    } else {
        let value: u64 = size_digits
            .parse()
            .map_err(|_| VerilogError::syntax(span, "bad number"))?;
        Ok((Tok::Number { value, width: None }, i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers() {
        assert_eq!(
            toks("3'b101 8'hF_F 'd7 42 1'b0"),
            vec![
                Tok::Number { value: 5, width: Some(3) },
                Tok::Number { value: 255, width: Some(8) },
                Tok::Number { value: 7, width: None },
                Tok::Number { value: 42, width: None },
                Tok::Number { value: 0, width: Some(1) },
                Tok::Eof
            ]
        );
        assert!(lex("2'b111").is_err());
        assert!(lex("4'bx1").is_err());
    }

    #[test]
    fn symbols_and_comments() {
        let t = toks("a <= b; // hi\n /* x */ c[8*i +: 8]");
        assert_eq!(t[1], Tok::Sym("<="));
        assert!(t.contains(&Tok::Sym("+:")));
        let spans: Vec<_> = lex("a\n  b").unwrap().iter().map(|t| t.span).collect();
        assert_eq!(spans[1], Span { line: 2, col: 3 });
    }
}
