//! Element expressions: integers, names, `+ - * / ^`, parentheses.
//!
//! Juxtaposition multiplies (`2t`, `√a√b(1+√a)^{-2}`). Names start with a
//! letter or underscore, or with one or more radical signs (`√2`, `√√2`,
//! `∛t`). Exponents are signed integers, optionally wrapped in `()` or `{}`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i128),
    Name(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
}

/// Target algebra for [`Expr::eval`].
pub trait Algebra {
    type Value: Clone;
    fn int(&self, n: i128) -> Result<Self::Value>;
    fn name(&self, name: &str) -> Result<Self::Value>;
    fn add(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn sub(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn div(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn neg(&self, a: &Self::Value) -> Result<Self::Value>;
    fn pow(&self, a: &Self::Value, k: i64) -> Result<Self::Value>;
}

impl Expr {
    pub fn parse(s: &str) -> Result<Expr> {
        let toks = lex(s)?;
        let mut p = Parser { toks, i: 0, len: s.len() };
        let e = p.expr()?;
        if p.i < p.toks.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval<A: Algebra>(&self, alg: &A) -> Result<A::Value> {
        Ok(match self {
            Expr::Int(n) => alg.int(*n)?,
            Expr::Name(s) => alg.name(s)?,
            Expr::Neg(a) => alg.neg(&a.eval(alg)?)?,
            Expr::Add(a, b) => alg.add(&a.eval(alg)?, &b.eval(alg)?)?,
            Expr::Sub(a, b) => alg.sub(&a.eval(alg)?, &b.eval(alg)?)?,
            Expr::Mul(a, b) => alg.mul(&a.eval(alg)?, &b.eval(alg)?)?,
            Expr::Div(a, b) => alg.div(&a.eval(alg)?, &b.eval(alg)?)?,
            Expr::Pow(a, k) => alg.pow(&a.eval(alg)?, *k)?,
        })
    }

    /// Names occurring in the expression.
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut Vec<String>) {
        match self {
            Expr::Int(_) => {}
            Expr::Name(s) => {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_names(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i128),
    Name(String),
    Op(char),
}

pub(crate) fn is_radical(c: char) -> bool {
    matches!(c, '√' | '∛' | '∜')
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let mut n: i128 = 0;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add(chars[i].1.to_digit(10).unwrap() as i128))
                    .ok_or(Error::Parse { pos, msg: "integer literal too large".into() })?;
                i += 1;
            }
            out.push((pos, Tok::Int(n)));
        } else if c.is_alphabetic() || c == '_' || is_radical(c) {
            let mut name = String::new();
            while i < chars.len() && is_radical(chars[i].1) {
                name.push(chars[i].1);
                i += 1;
            }
            let body_start = name.len();
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') && !is_radical(chars[i].1) {
                // a radical-prefixed name made of digits stops at the first letter (`√2t` is √2·t)
                if body_start > 0
                    && name.len() > body_start
                    && name[body_start..].chars().all(|d| d.is_ascii_digit())
                    && !chars[i].1.is_ascii_digit()
                {
                    break;
                }
                name.push(chars[i].1);
                i += 1;
            }
            if name.len() == body_start {
                return Err(Error::Parse { pos, msg: "radical sign must be followed by a name or integer".into() });
            }
            out.push((pos, Tok::Name(name)));
        } else if "+-*/^(){}".contains(c) {
            out.push((pos, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Parse { pos, msg: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map_or(self.len, |t| t.0)
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos(), msg: msg.into() }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else if matches!(self.peek(), Some(Tok::Int(_) | Tok::Name(_) | Tok::Op('('))) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let k = self.exponent()?;
            Ok(Expr::Pow(Box::new(base), k))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<i64> {
        let close = if self.eat('(') {
            Some(')')
        } else if self.eat('{') {
            Some('}')
        } else {
            None
        };
        let neg = self.eat('-');
        let k = match self.peek() {
            Some(Tok::Int(n)) => {
                let n = i64::try_from(*n).map_err(|_| self.err("exponent too large"))?;
                self.i += 1;
                n
            }
            _ => return Err(self.err("expected integer exponent")),
        };
        if let Some(c) = close {
            if !self.eat(c) {
                return Err(self.err("unclosed exponent"));
            }
        }
        Ok(if neg { -k } else { k })
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.i += 1;
                Ok(Expr::Int(n))
            }
            Some(Tok::Name(s)) => {
                self.i += 1;
                Ok(Expr::Name(s))
            }
            Some(Tok::Op('(')) => {
                self.i += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            _ => Err(self.err("expected a number, name or '('")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Ints;
    impl Algebra for Ints {
        type Value = i128;
        fn int(&self, n: i128) -> Result<i128> {
            Ok(n)
        }
        fn name(&self, n: &str) -> Result<i128> {
            match n {
                "t" => Ok(3),
                "√a" => Ok(5),
                "√b" => Ok(7),
                _ => Err(Error::Parse { pos: 0, msg: n.into() }),
            }
        }
        fn add(&self, a: &i128, b: &i128) -> Result<i128> {
            Ok(a + b)
        }
        fn sub(&self, a: &i128, b: &i128) -> Result<i128> {
            Ok(a - b)
        }
        fn mul(&self, a: &i128, b: &i128) -> Result<i128> {
            Ok(a * b)
        }
        fn div(&self, a: &i128, b: &i128) -> Result<i128> {
            Ok(a / b)
        }
        fn neg(&self, a: &i128) -> Result<i128> {
            Ok(-a)
        }
        fn pow(&self, a: &i128, k: i64) -> Result<i128> {
            Ok(a.pow(k as u32))
        }
    }

    fn ev(s: &str) -> i128 {
        Expr::parse(s).unwrap().eval(&Ints).unwrap()
    }

    #[test]
    fn precedence_and_juxtaposition() {
        assert_eq!(ev("1+2*3"), 7);
        assert_eq!(ev("-t^2"), -9);
        assert_eq!(ev("2t+1"), 7);
        assert_eq!(ev("√a√b(1+t)^{2}"), 5 * 7 * 16);
        assert_eq!(ev("(t-1)^(2)"), 4);
    }

    #[test]
    fn radical_names() {
        assert_eq!(Expr::parse("√2").unwrap(), Expr::Name("√2".into()));
        assert_eq!(Expr::parse("√√2").unwrap(), Expr::Name("√√2".into()));
        assert_eq!(
            Expr::parse("√2t").unwrap(),
            Expr::Mul(Box::new(Expr::Name("√2".into())), Box::new(Expr::Name("t".into())))
        );
        assert!(Expr::parse("√").is_err());
    }

    #[test]
    fn negative_exponents() {
        assert_eq!(
            Expr::parse("x^{-2}").unwrap(),
            Expr::Pow(Box::new(Expr::Name("x".into())), -2)
        );
        assert_eq!(Expr::parse("x^-1").unwrap(), Expr::Pow(Box::new(Expr::Name("x".into())), -1));
    }

    #[test]
    fn errors_carry_positions() {
        match Expr::parse("1 + $") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("(1+2").is_err());
    }
}
