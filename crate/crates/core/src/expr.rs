//! Closed-form scalar expressions.
//!
//! Grammar: `+ - * /`, `^` with integer exponents, parentheses, decimal
//! literals and the variables `x`, `y`, `z` (aliases `x1`, `x2`, `x3`, ...).
//! A number directly followed by a variable or a parenthesis multiplies
//! (`3x^2` reads as `3*x^2`). Expressions are rational functions, so
//! [`Expr::diff`] is exact.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if let Some(t) = p.peek() {
            return Err(Error::Parse {
                pos: t.1,
                msg: "unexpected trailing input".into(),
            });
        }
        Ok(e)
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var(i) => v.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Neg(a) => -a.eval(v),
            Expr::Add(a, b) => a.eval(v) + b.eval(v),
            Expr::Sub(a, b) => a.eval(v) - b.eval(v),
            Expr::Mul(a, b) => a.eval(v) * b.eval(v),
            Expr::Div(a, b) => a.eval(v) / b.eval(v),
            Expr::Pow(a, k) => a.eval(v).powi(*k),
        }
    }

    /// Largest variable index referenced plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    pub fn is_polynomial(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => true,
            Expr::Neg(a) => a.is_polynomial(),
            Expr::Pow(a, k) => *k >= 0 && a.is_polynomial(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.is_polynomial() && b.is_polynomial()
            }
            Expr::Div(a, b) => a.is_polynomial() && matches!(**b, Expr::Num(_)),
        }
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(var)),
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(
                mul(a.diff(var), (**b).clone()),
                mul((**a).clone(), b.diff(var)),
            ),
            Div(a, b) => {
                let num = sub(
                    mul(a.diff(var), (**b).clone()),
                    mul((**a).clone(), b.diff(var)),
                );
                div(num, pow((**b).clone(), 2))
            }
            Pow(a, k) => match *k {
                0 => Num(0.0),
                1 => a.diff(var),
                k => mul(
                    mul(Num(k as f64), pow((**a).clone(), k - 1)),
                    a.diff(var),
                ),
            },
        }
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(c) => Expr::Num(-c),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (Expr::Num(0.0), e) | (e, Expr::Num(0.0)) => e,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (e, Expr::Num(0.0)) => e,
        (Expr::Num(0.0), e) => neg(e),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (Expr::Num(0.0), _) | (_, Expr::Num(0.0)) => Expr::Num(0.0),
        (Expr::Num(1.0), e) | (e, Expr::Num(1.0)) => e,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(0.0), _) => Expr::Num(0.0),
        (e, Expr::Num(1.0)) => e,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, k: i32) -> Expr {
    match (a, k) {
        (_, 0) => Expr::Num(1.0),
        (e, 1) => e,
        (Expr::Num(c), k) => Expr::Num(c.powi(k)),
        (a, k) => Expr::Pow(Box::new(a), k),
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Expr> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var(i) => match i {
                0 => write!(f, "x"),
                1 => write!(f, "y"),
                2 => write!(f, "z"),
                i => write!(f, "x{}", i + 1),
            },
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
            Expr::Pow(a, k) => write!(f, "({a})^({k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push((Tok::Plus, pos));
                i += 1
            }
            '-' | '\u{2212}' => {
                out.push((Tok::Minus, pos));
                i += 1
            }
            '*' | '\u{00b7}' => {
                out.push((Tok::Star, pos));
                i += 1
            }
            '/' => {
                out.push((Tok::Slash, pos));
                i += 1
            }
            '^' => {
                out.push((Tok::Caret, pos));
                i += 1
            }
            '(' => {
                out.push((Tok::LParen, pos));
                i += 1
            }
            ')' => {
                out.push((Tok::RParen, pos));
                i += 1
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                // exponent part, e.g. 1e-3
                if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].1.is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().map(|(_, c)| c).collect();
                let v = text.parse::<f64>().map_err(|_| Error::Parse {
                    pos,
                    msg: format!("bad number '{text}'"),
                })?;
                out.push((Tok::Num(v), pos));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_alphanumeric() {
                    i += 1;
                }
                let name: String = chars[start..i].iter().map(|(_, c)| c).collect();
                let idx = match name.as_str() {
                    "x" => 0,
                    "y" => 1,
                    "z" => 2,
                    n if n.len() > 1 && n.starts_with('x') => {
                        let k: usize = n[1..].parse().map_err(|_| Error::Parse {
                            pos,
                            msg: format!("unknown identifier '{n}'"),
                        })?;
                        if k == 0 {
                            return Err(Error::Parse {
                                pos,
                                msg: "coordinates are numbered from x1".into(),
                            });
                        }
                        k - 1
                    }
                    n => {
                        return Err(Error::Parse {
                            pos,
                            msg: format!("unknown identifier '{n}'"),
                        })
                    }
                };
                out.push((Tok::Var(idx), pos));
            }
            c => {
                return Err(Error::Parse {
                    pos,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek()
            .map(|t| t.1)
            .or_else(|| self.tokens.last().map(|t| t.1 + 1))
            .unwrap_or(0)
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().map(|t| &t.0) {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().map(|t| &t.0) {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Num(_)) | Some(Tok::Var(_)) | Some(Tok::LParen) => {
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek().map(|t| &t.0) {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if matches!(self.peek().map(|t| &t.0), Some(Tok::Caret)) {
            self.pos += 1;
            let k = self.int_exponent()?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn int_exponent(&mut self) -> Result<i32> {
        let (paren, sign) = {
            let mut paren = false;
            if matches!(self.peek().map(|t| &t.0), Some(Tok::LParen)) {
                paren = true;
                self.pos += 1;
            }
            let mut sign = 1;
            if matches!(self.peek().map(|t| &t.0), Some(Tok::Minus)) {
                sign = -1;
                self.pos += 1;
            }
            (paren, sign)
        };
        let k = match self.peek().map(|t| &t.0) {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() < 1e6 => *v as i32,
            _ => return self.err("exponent must be an integer literal"),
        };
        self.pos += 1;
        if paren {
            if !matches!(self.peek().map(|t| &t.0), Some(Tok::RParen)) {
                return self.err("expected ')'");
            }
            self.pos += 1;
        }
        Ok(sign * k)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().map(|t| t.0.clone()) {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Var(i)) => {
                self.pos += 1;
                Ok(Expr::Var(i))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if !matches!(self.peek().map(|t| &t.0), Some(Tok::RParen)) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(e)
            }
            _ => self.err("expected a number, variable or '('"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, v: &[f64]) -> f64 {
        Expr::parse(s).unwrap().eval(v)
    }

    #[test]
    fn precedence_and_unary_minus() {
        assert_eq!(ev("1+2*3", &[]), 7.0);
        assert_eq!(ev("-x^2", &[3.0]), -9.0);
        assert_eq!(ev("2^-1", &[]), 0.5);
        assert_eq!(ev("(1-x)/(1+x)", &[0.5]), 0.5 / 1.5);
        assert_eq!(ev("1e-3*x", &[2.0]), 2e-3);
    }

    #[test]
    fn implicit_multiplication_and_aliases() {
        assert_eq!(ev("3x1^2 - 5x1^4 + x1^6 - 1 + 4y^4", &[1.0, 0.5]), 3.0 - 5.0 + 1.0 - 1.0 + 0.25);
        assert_eq!(ev("x1^2+10(x2^3+x1)^2-1", &[0.5, 0.0]), 0.25 + 2.5 - 1.0);
        assert_eq!(ev("2(x+1)", &[1.0]), 4.0);
    }

    #[test]
    fn unicode_minus() {
        assert_eq!(ev("5x1\u{2212}4x2", &[1.0, 1.0]), 1.0);
    }

    #[test]
    fn parse_errors() {
        assert!(Expr::parse("x^1.5").is_err());
        assert!(Expr::parse("(x+1").is_err());
        assert!(Expr::parse("sin(x)").is_err());
        assert!(Expr::parse("x +").is_err());
    }

    #[test]
    fn symbolic_derivative_matches_central_difference() {
        let e = Expr::parse("(x^3 - 2x*y)/(1 + y^2) + 4y^4").unwrap();
        let p = [0.7, -0.3];
        for var in 0..2 {
            let d = e.diff(var).eval(&p);
            let h = 1e-6;
            let mut a = p;
            let mut b = p;
            a[var] += h;
            b[var] -= h;
            let fd = (e.eval(&a) - e.eval(&b)) / (2.0 * h);
            assert!((d - fd).abs() < 1e-8, "var {var}: {d} vs {fd}");
        }
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("-(x - 2)^3/(y + 0.5) * 3").unwrap();
        let back = Expr::parse(&e.to_string()).unwrap();
        for p in [[0.1, 0.2], [1.5, -0.3]] {
            assert_eq!(e.eval(&p), back.eval(&p));
        }
    }

    #[test]
    fn polynomial_detection() {
        assert!(Expr::parse("x + 0.25x^2").unwrap().is_polynomial());
        assert!(!Expr::parse("1/(1+x)").unwrap().is_polynomial());
    }
}
