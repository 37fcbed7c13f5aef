//! Coordinate expressions for metric components.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' exponent)?
//! exponent:= '-'? INTEGER ('^' exponent)?
//! atom    := NUMBER | 'x' | 'y' | 'z' | FUNC '(' sum ')' | '(' sum ')'
//! ```
//!
//! Exponents must be integer literals; a chain `a^2^3` is right associative
//! and folds to `a^8`.

use std::fmt;

use thiserror::Error;

use crate::jets::{Jet, JetError, UnaryOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    const ALL: [Func; 4] = [Func::Sin, Func::Cos, Func::Exp, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    fn op(self) -> UnaryOp {
        match self {
            Func::Sin => UnaryOp::Sin,
            Func::Cos => UnaryOp::Cos,
            Func::Exp => UnaryOp::Exp,
            Func::Sqrt => UnaryOp::Sqrt,
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

/// Expression tree. Literals produced by the parser are never negative;
/// a leading minus is always a [`Expr::Neg`] node.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Coordinate 0, 1 or 2 (`x`, `y`, `z`).
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax { expected: Vec<&'static str> },
    UnknownIdentifier(String),
    NonIntegerExponent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax { expected } => {
                write!(f, "syntax error at offset {}: expected ", self.offset)?;
                for (i, e) in expected.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" or ")?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown identifier `{name}` at offset {}", self.offset)
            }
            ParseErrorKind::NonIntegerExponent => {
                write!(f, "exponent at offset {} is not an integer literal", self.offset)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and its starting offset.
    fn next(&mut self) -> Result<(Token, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Token::End, start));
        };
        let single = match c {
            '+' => Some(Token::Plus),
            '-' => Some(Token::Minus),
            '*' => Some(Token::Star),
            '/' => Some(Token::Slash),
            '^' => Some(Token::Caret),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == '.' {
            let bytes = rest.as_bytes();
            let mut end = 0;
            let mut integral = true;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end < bytes.len() && bytes[end] == b'.' {
                integral = false;
                end += 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    integral = false;
                    end = k;
                }
            }
            let text = &rest[..end];
            let value: f64 = text.parse().map_err(|_| ParseError {
                offset: start,
                kind: ParseErrorKind::Syntax { expected: vec!["number"] },
            })?;
            self.pos += end;
            return Ok((Token::Num(value, integral), start));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let end = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            self.pos += end;
            return Ok((Token::Ident(rest[..end].to_string()), start));
        }
        Err(ParseError {
            offset: start,
            kind: ParseErrorKind::Syntax { expected: vec!["expression"] },
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Token,
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (tok, at) = lexer.next()?;
        Ok(Parser { lexer, tok, at })
    }

    fn bump(&mut self) -> Result<Token, ParseError> {
        let (next, at) = self.lexer.next()?;
        self.at = at;
        Ok(std::mem::replace(&mut self.tok, next))
    }

    fn fail<T>(&self, expected: Vec<&'static str>) -> Result<T, ParseError> {
        Err(ParseError { offset: self.at, kind: ParseErrorKind::Syntax { expected } })
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.tok {
                Token::Plus => {
                    self.bump()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Token::Minus => {
                    self.bump()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Token::Star => {
                    self.bump()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.bump()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Token::Minus {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.tok == Token::Caret {
            self.bump()?;
            let e = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let start = self.at;
        let negative = if self.tok == Token::Minus {
            self.bump()?;
            true
        } else {
            false
        };
        let value = match self.tok {
            Token::Num(v, true) if v <= i32::MAX as f64 => v as i32,
            Token::Num(..) | Token::Ident(_) | Token::LParen => {
                return Err(ParseError { offset: start, kind: ParseErrorKind::NonIntegerExponent })
            }
            _ => return self.fail(vec!["integer exponent"]),
        };
        self.bump()?;
        let mut value = if negative { -value } else { value };
        if self.tok == Token::Caret {
            self.bump()?;
            let inner = self.exponent()?;
            if inner < 0 {
                return Err(ParseError { offset: start, kind: ParseErrorKind::NonIntegerExponent });
            }
            value = value
                .checked_pow(inner as u32)
                .ok_or(ParseError { offset: start, kind: ParseErrorKind::NonIntegerExponent })?;
        }
        Ok(value)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.at;
        match self.tok.clone() {
            Token::Num(v, _) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Token::Ident(name) => {
                self.bump()?;
                match name.as_str() {
                    "x" => return Ok(Expr::Var(0)),
                    "y" => return Ok(Expr::Var(1)),
                    "z" => return Ok(Expr::Var(2)),
                    _ => {}
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError { offset: at, kind: ParseErrorKind::UnknownIdentifier(name) });
                };
                if self.tok != Token::LParen {
                    return self.fail(vec!["("]);
                }
                self.bump()?;
                let arg = self.sum()?;
                self.expect_rparen()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Token::LParen => {
                self.bump()?;
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            _ => self.fail(vec!["number", "variable", "function", "("]),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.tok != Token::RParen {
            return self.fail(vec![")"]);
        }
        self.bump()?;
        Ok(())
    }
}

/// Parses one expression; trailing input is a syntax error.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.sum()?;
    if p.tok != Token::End {
        return p.fail(vec!["operator", "end of input"]);
    }
    Ok(e)
}

// binding strength used by Display
const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => PREC_SUM,
            Expr::Mul(..) | Expr::Div(..) => PREC_PRODUCT,
            Expr::Neg(_) => PREC_UNARY,
            Expr::Pow(..) => PREC_POWER,
            Expr::Num(v) if *v < 0.0 => PREC_UNARY,
            _ => PREC_ATOM,
        }
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    /// Plain `f64` evaluation at a point.
    pub fn eval(&self, p: [f64; 3]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => p[*i],
            Expr::Neg(a) => -a.eval(p),
            Expr::Add(a, b) => a.eval(p) + b.eval(p),
            Expr::Sub(a, b) => a.eval(p) - b.eval(p),
            Expr::Mul(a, b) => a.eval(p) * b.eval(p),
            Expr::Div(a, b) => a.eval(p) / b.eval(p),
            Expr::Pow(a, n) => a.eval(p).powi(*n),
            Expr::Call(func, a) => func.apply(a.eval(p)),
        }
    }

    /// Taylor expansion of the expression at `p` to the given order.
    pub fn eval_jet(&self, p: [f64; 3], order: u8) -> Result<Jet, JetError> {
        if order > crate::jets::MAX_ORDER {
            return Err(JetError::InvalidOrder(order));
        }
        Ok(match self {
            Expr::Num(v) => Jet::constant(*v, order),
            Expr::Var(i) => Jet::seed(p[*i], *i, order)?,
            Expr::Neg(a) => -a.eval_jet(p, order)?,
            Expr::Add(a, b) => a.eval_jet(p, order)? + b.eval_jet(p, order)?,
            Expr::Sub(a, b) => a.eval_jet(p, order)? - b.eval_jet(p, order)?,
            Expr::Mul(a, b) => a.eval_jet(p, order)? * b.eval_jet(p, order)?,
            Expr::Div(a, b) => a.eval_jet(p, order)?.div(&b.eval_jet(p, order)?)?,
            Expr::Pow(a, n) => a.eval_jet(p, order)?.pow_int(*n)?,
            Expr::Call(func, a) => a.eval_jet(p, order)?.unary(func.op())?,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(i) => f.write_str(["x", "y", "z"][*i]),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_operand(f, PREC_UNARY)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_operand(f, PREC_SUM)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.write_operand(f, PREC_PRODUCT)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_operand(f, PREC_PRODUCT)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.write_operand(f, PREC_UNARY)
            }
            Expr::Pow(a, n) => {
                a.write_operand(f, PREC_ATOM)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// See [`Expr::eval_jet`].
pub fn eval_expr_jet(e: &Expr, point: [f64; 3], order: u8) -> Result<Jet, JetError> {
    e.eval_jet(point, order)
}
