//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' integer)?
//! base   := number | 'x' | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'log' | 'sin' | 'cos' | 'sqrt'
//! ```
//!
//! The parser builds nodes directly (no folding), so printing a parsed tree
//! and parsing it again gives back the same tree. A minus sign directly in
//! front of a bare number literal produces a negative literal.

use std::sync::Arc;

use thiserror::Error;

use super::expr::{Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: source.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Arc::new(lhs), Arc::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Arc::new(lhs), Arc::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Arc::new(lhs), Arc::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Arc::new(lhs), Arc::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
                let v = self.number()?;
                if self.peek() != Some(b'^') {
                    return Ok(Expr::Num(-v));
                }
                let k = self.exponent()?;
                return Ok(Expr::Neg(Arc::new(Expr::Pow(Arc::new(Expr::Num(v)), k))));
            }
            return Ok(Expr::Neg(Arc::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            let k = self.exponent()?;
            return Ok(Expr::Pow(Arc::new(base), k));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        self.expect(b'^')?;
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<i32>()
            .map_err(|_| ParseError::Syntax { offset: start, message: "expected integer exponent".into() })
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Num(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                if name == "x" {
                    return Ok(Expr::X);
                }
                let Some(func) = Func::from_name(name) else {
                    return Err(ParseError::UnknownIdentifier { offset: start, name: name.into() });
                };
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Call(func, Arc::new(arg)))
            }
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map_err(|_| ParseError::Syntax { offset: start, message: format!("malformed number `{text}`") })
    }
}
