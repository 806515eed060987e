//! Text grammar for polynomials:
//!
//! ```text
//! expr  := ['+'|'-'] term (('+'|'-') term)*
//! term  := power (['*'|'/'] power)*        juxtaposition multiplies
//! power := atom ['^' integer]
//! atom  := number ['i'] | 'i' | 'x' | 'y' | '(' expr ')'
//! ```
//!
//! Numbers are decimals with an optional exponent and are converted exactly.
//! Division is only allowed by constants.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, One, Zero};

use super::poly::{BivarPoly, Coeff};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("polynomial parse error at column {column}: {message}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

pub fn parse_poly(text: &str) -> Result<BivarPoly, ParseError> {
    let mut p = Parser { chars: text.chars().collect(), pos: 0 };
    p.skip_ws();
    if p.peek().is_none() {
        return Err(p.error("empty polynomial"));
    }
    let out = p.expr()?;
    p.skip_ws();
    if p.peek().is_some() {
        return Err(p.error(&format!("unexpected character '{}'", p.peek().unwrap())));
    }
    Ok(out)
}

/// Exact coefficient from text: `3`, `-1.25`, `2/3`, `1+2i`, `(0.5-i)`.
pub fn parse_coeff(text: &str) -> Result<Coeff, ParseError> {
    let p = parse_poly(text)?;
    if !p.is_constant() {
        return Err(ParseError { column: 1, message: "expected a constant".into() });
    }
    Ok(p.coeff(0, 0))
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: &str) -> ParseError {
        ParseError { column: self.pos + 1, message: message.into() }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn expr(&mut self) -> Result<BivarPoly, ParseError> {
        self.skip_ws();
        let mut negate = false;
        if let Some(ch @ ('+' | '-')) = self.peek() {
            negate = ch == '-';
            self.pos += 1;
        }
        let first = self.term()?;
        let mut acc = if negate { -&first } else { first };
        loop {
            self.skip_ws();
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some('-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<BivarPoly, ParseError> {
        let mut acc = self.power()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc = &acc * &self.power()?;
                }
                Some('/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.power()?;
                    if !d.is_constant() || d.is_zero() {
                        self.pos = at;
                        return Err(self.error("division only by a nonzero constant"));
                    }
                    let inv = Coeff::one() / d.coeff(0, 0);
                    acc = acc.scale(&inv);
                }
                Some(ch) if ch.is_ascii_digit() || ch == '.' || matches!(ch, 'x' | 'y' | 'i' | '(') => {
                    acc = &acc * &self.power()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<BivarPoly, ParseError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("expected integer exponent"));
            }
            let digits: String = self.chars[start..self.pos].iter().collect();
            let n: u32 = digits.parse().map_err(|_| self.error("exponent too large"))?;
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<BivarPoly, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('x') => {
                self.pos += 1;
                Ok(BivarPoly::x())
            }
            Some('y') => {
                self.pos += 1;
                Ok(BivarPoly::y())
            }
            Some('i') => {
                self.pos += 1;
                Ok(BivarPoly::constant(Complex::new(BigRational::zero(), BigRational::one())))
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(ch) if ch.is_ascii_digit() || ch == '.' => {
                let value = self.number()?;
                if self.peek() == Some('i') {
                    self.pos += 1;
                    return Ok(BivarPoly::constant(Complex::new(BigRational::zero(), value)));
                }
                Ok(BivarPoly::constant(Complex::new(value, BigRational::zero())))
            }
            Some(ch) => Err(self.error(&format!("unexpected character '{ch}'"))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<BigRational, ParseError> {
        let start = self.pos;
        let mut int_digits = String::new();
        let mut frac_digits = String::new();
        while let Some(ch) = self.peek().filter(|c| c.is_ascii_digit()) {
            int_digits.push(ch);
            self.pos += 1;
        }
        if self.peek() == Some('.') {
            self.pos += 1;
            while let Some(ch) = self.peek().filter(|c| c.is_ascii_digit()) {
                frac_digits.push(ch);
                self.pos += 1;
            }
        }
        if int_digits.is_empty() && frac_digits.is_empty() {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        let mut exponent: i64 = 0;
        if self.peek() == Some('e') || self.peek() == Some('E') {
            let save = self.pos;
            self.pos += 1;
            let mut sign = 1;
            if let Some(ch @ ('+' | '-')) = self.peek() {
                sign = if ch == '-' { -1 } else { 1 };
                self.pos += 1;
            }
            let es = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if es == self.pos {
                self.pos = save;
                return Err(self.error("malformed exponent"));
            }
            let digits: String = self.chars[es..self.pos].iter().collect();
            exponent = sign * digits.parse::<i64>().map_err(|_| self.error("exponent too large"))?;
        }
        let mantissa = format!("{int_digits}{frac_digits}");
        let numer = BigInt::from_str_radix(&mantissa, 10).map_err(|_| self.error("malformed number"))?;
        let scale = exponent - frac_digits.len() as i64;
        let ten = BigInt::from(10);
        let value = if scale >= 0 {
            BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(value)
    }
}
