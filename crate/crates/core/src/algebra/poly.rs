use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::numeric::{UniPoly, C64};

/// Exact Gaussian-rational coefficient.
pub type Coeff = Complex<BigRational>;

pub fn coeff_int(n: i64) -> Coeff {
    Complex::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
}

pub fn coeff_rat(num: i64, den: i64) -> Coeff {
    Complex::new(
        BigRational::new(BigInt::from(num), BigInt::from(den)),
        BigRational::zero(),
    )
}

pub fn coeff_to_c64(c: &Coeff) -> C64 {
    C64::new(
        c.re.to_f64().unwrap_or(f64::NAN),
        c.im.to_f64().unwrap_or(f64::NAN),
    )
}

/// Nearest exact coefficient to a float pair (exact binary expansion).
pub fn coeff_from_c64(z: C64) -> Coeff {
    let re = BigRational::from_float(z.re).unwrap_or_else(BigRational::zero);
    let im = BigRational::from_float(z.im).unwrap_or_else(BigRational::zero);
    Complex::new(re, im)
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Canonical text of a coefficient: `3`, `-3/2`, `2i`, `(1+2i)`.
pub fn fmt_coeff(c: &Coeff) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => fmt_rational(&c.re),
        (true, false) => {
            if c.im.is_one() {
                "i".into()
            } else if (-c.im.clone()).is_one() {
                "-i".into()
            } else {
                format!("{}i", fmt_rational(&c.im))
            }
        }
        (false, false) => {
            let sign = if c.im.is_negative() { "-" } else { "+" };
            format!("({}{}{}i)", fmt_rational(&c.re), sign, fmt_rational(&c.im.abs()))
        }
    }
}

/// Sparse bivariate polynomial with exact Gaussian-rational coefficients.
///
/// Keys are exponent pairs `(i, j)` of `x^i y^j`; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct BivarPoly {
    terms: BTreeMap<(u32, u32), Coeff>,
}

impl BivarPoly {
    pub fn zero() -> Self {
        BivarPoly::default()
    }

    pub fn constant(c: Coeff) -> Self {
        BivarPoly::monomial(c, 0, 0)
    }

    pub fn x() -> Self {
        BivarPoly::monomial(coeff_int(1), 1, 0)
    }

    pub fn y() -> Self {
        BivarPoly::monomial(coeff_int(1), 0, 1)
    }

    pub fn monomial(c: Coeff, i: u32, j: u32) -> Self {
        let mut p = BivarPoly::zero();
        p.add_term(i, j, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = ((u32, u32), Coeff)>>(terms: I) -> Self {
        let mut p = BivarPoly::zero();
        for ((i, j), c) in terms {
            p.add_term(i, j, c);
        }
        p
    }

    pub fn add_term(&mut self, i: u32, j: u32, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((i, j)).or_insert_with(Coeff::zero);
        *entry = &*entry + c;
        if entry.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, i: u32, j: u32) -> Coeff {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` stands for the degree of the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|(i, j)| i + j).max()
    }

    pub fn is_constant(&self) -> bool {
        self.degree().is_none_or(|d| d == 0)
    }

    pub fn degree_in_x(&self) -> Option<u32> {
        self.terms.keys().map(|(i, _)| *i).max()
    }

    pub fn degree_in_y(&self) -> Option<u32> {
        self.terms.keys().map(|(_, j)| *j).max()
    }

    pub fn scale(&self, c: &Coeff) -> BivarPoly {
        BivarPoly::from_terms(self.terms.iter().map(|(k, v)| (*k, v * c)))
    }

    pub fn derivative_x(&self) -> BivarPoly {
        BivarPoly::from_terms(
            self.terms
                .iter()
                .filter(|((i, _), _)| *i > 0)
                .map(|((i, j), c)| ((i - 1, *j), c * coeff_int(*i as i64))),
        )
    }

    pub fn derivative_y(&self) -> BivarPoly {
        BivarPoly::from_terms(
            self.terms
                .iter()
                .filter(|((_, j), _)| *j > 0)
                .map(|((i, j), c)| ((*i, j - 1), c * coeff_int(*j as i64))),
        )
    }

    /// Homogeneous component of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> BivarPoly {
        BivarPoly::from_terms(
            self.terms
                .iter()
                .filter(|((i, j), _)| i + j == d)
                .map(|(k, c)| (*k, c.clone())),
        )
    }

    pub fn pow(&self, n: u32) -> BivarPoly {
        (0..n).fold(BivarPoly::constant(coeff_int(1)), |acc, _| &acc * self)
    }

    /// Coefficients of `x^i` when the polynomial does not involve `y`.
    pub fn as_univariate_x(&self) -> Option<Vec<Coeff>> {
        if self.terms.keys().any(|(_, j)| *j > 0) {
            return None;
        }
        let n = self.degree_in_x().unwrap_or(0) as usize;
        let mut out = vec![Coeff::zero(); n + 1];
        for ((i, _), c) in &self.terms {
            out[*i as usize] = c.clone();
        }
        Some(out)
    }

    /// Coefficients in `y` as polynomials in `x`: entry `j` holds the coefficient of `y^j`.
    pub fn coefficients_in_y(&self) -> Vec<BivarPoly> {
        let n = self.degree_in_y().map_or(0, |d| d as usize + 1);
        let mut out = vec![BivarPoly::zero(); n];
        for ((i, j), c) in &self.terms {
            out[*j as usize].add_term(*i, 0, c.clone());
        }
        out
    }

    /// Exact substitution `x = x0` giving a polynomial in `y` (ascending coefficients).
    pub fn eval_x_exact(&self, x0: &Coeff) -> Vec<Coeff> {
        let n = self.degree_in_y().map_or(0, |d| d as usize + 1);
        let mut out = vec![Coeff::zero(); n.max(1)];
        for ((i, j), c) in &self.terms {
            out[*j as usize] = &out[*j as usize] + c * pow_coeff(x0, *i);
        }
        out
    }

    /// Horner evaluation in `x` within each power of `y`, then in `y`.
    pub fn evaluate(&self, x: C64, y: C64) -> C64 {
        NumPoly::from(self).eval(x, y)
    }

    pub fn gradient(&self, x: C64, y: C64) -> (C64, C64) {
        (self.derivative_x().evaluate(x, y), self.derivative_y().evaluate(x, y))
    }
}

fn pow_coeff(c: &Coeff, n: u32) -> Coeff {
    (0..n).fold(coeff_int(1), |acc, _| acc * c)
}

impl fmt::Display for BivarPoly {
    /// Canonical order: descending total degree, then descending power of `x`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut keys: Vec<_> = self.terms.keys().copied().collect();
        keys.sort_by(|a, b| (b.0 + b.1, b.0).cmp(&(a.0 + a.1, a.0)));
        for (n, (i, j)) in keys.iter().enumerate() {
            let c = &self.terms[&(*i, *j)];
            let (negative, mag) = if c.im.is_zero() && c.re.is_negative() {
                (true, -c.clone())
            } else {
                (false, c.clone())
            };
            if n == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut factors = Vec::new();
            let unit = mag.re.is_one() && mag.im.is_zero();
            if !unit || (*i == 0 && *j == 0) {
                factors.push(fmt_coeff(&mag));
            }
            match i {
                0 => {}
                1 => factors.push("x".into()),
                k => factors.push(format!("x^{k}")),
            }
            match j {
                0 => {}
                1 => factors.push("y".into()),
                k => factors.push(format!("y^{k}")),
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BivarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BivarPoly({self})")
    }
}

impl Add for &BivarPoly {
    type Output = BivarPoly;
    fn add(self, rhs: &BivarPoly) -> BivarPoly {
        let mut out = self.clone();
        for ((i, j), c) in &rhs.terms {
            out.add_term(*i, *j, c.clone());
        }
        out
    }
}

impl Sub for &BivarPoly {
    type Output = BivarPoly;
    fn sub(self, rhs: &BivarPoly) -> BivarPoly {
        self + &(-rhs)
    }
}

impl Neg for &BivarPoly {
    type Output = BivarPoly;
    fn neg(self) -> BivarPoly {
        BivarPoly::from_terms(self.terms.iter().map(|(k, c)| (*k, -c.clone())))
    }
}

impl Mul for &BivarPoly {
    type Output = BivarPoly;
    fn mul(self, rhs: &BivarPoly) -> BivarPoly {
        let mut out = BivarPoly::zero();
        for ((i1, j1), c1) in &self.terms {
            for ((i2, j2), c2) in &rhs.terms {
                out.add_term(i1 + i2, j1 + j2, c1 * c2);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for BivarPoly {
            type Output = BivarPoly;
            fn $m(self, rhs: BivarPoly) -> BivarPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Floating-point snapshot of a [`BivarPoly`] for repeated evaluation.
#[derive(Clone, Debug)]
pub struct NumPoly {
    /// `rows[j]` is the coefficient of `y^j`, a polynomial in `x`.
    rows: Vec<UniPoly>,
}

impl From<&BivarPoly> for NumPoly {
    fn from(p: &BivarPoly) -> Self {
        let ny = p.degree_in_y().map_or(1, |d| d as usize + 1);
        let nx = p.degree_in_x().map_or(1, |d| d as usize + 1);
        let mut dense = vec![vec![C64::new(0.0, 0.0); nx]; ny];
        for ((i, j), c) in p.terms() {
            dense[*j as usize][*i as usize] = coeff_to_c64(c);
        }
        NumPoly {
            rows: dense.into_iter().map(UniPoly::new).collect(),
        }
    }
}

impl NumPoly {
    pub fn eval(&self, x: C64, y: C64) -> C64 {
        self.rows
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, row| acc * y + row.eval(x))
    }

    /// Univariate polynomial in `y` obtained by fixing `x`.
    pub fn at_x(&self, x: C64) -> UniPoly {
        UniPoly::new(self.rows.iter().map(|r| r.eval(x)).collect())
    }
}

/// A polynomial with its numeric partial derivatives up to order two.
#[derive(Clone, Debug)]
pub struct NumPolyJet {
    pub f: NumPoly,
    pub fx: NumPoly,
    pub fy: NumPoly,
    pub fxx: NumPoly,
    pub fxy: NumPoly,
    pub fyy: NumPoly,
}

impl From<&BivarPoly> for NumPolyJet {
    fn from(p: &BivarPoly) -> Self {
        let px = p.derivative_x();
        let py = p.derivative_y();
        NumPolyJet {
            f: NumPoly::from(p),
            fxx: NumPoly::from(&px.derivative_x()),
            fxy: NumPoly::from(&px.derivative_y()),
            fyy: NumPoly::from(&py.derivative_y()),
            fx: NumPoly::from(&px),
            fy: NumPoly::from(&py),
        }
    }
}

impl NumPolyJet {
    pub fn gradient(&self, x: C64, y: C64) -> (C64, C64) {
        (self.fx.eval(x, y), self.fy.eval(x, y))
    }

    pub fn hessian_det(&self, x: C64, y: C64) -> C64 {
        let fxy = self.fxy.eval(x, y);
        self.fxx.eval(x, y) * self.fyy.eval(x, y) - fxy * fxy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::c;

    fn reference() -> BivarPoly {
        // y^2 - x^3 + 3x
        BivarPoly::from_terms([
            ((0, 2), coeff_int(1)),
            ((3, 0), coeff_int(-1)),
            ((1, 0), coeff_int(3)),
        ])
    }

    #[test]
    fn evaluate_examples() {
        let p = &(&BivarPoly::x() * &BivarPoly::x()) + &(&BivarPoly::y() * &BivarPoly::y());
        assert_eq!(p.evaluate(c(1.0, 0.0), c(2.0, 0.0)), c(5.0, 0.0));
        assert_eq!(BivarPoly::zero().evaluate(c(3.0, 1.0), c(-2.0, 0.5)), c(0.0, 0.0));
        assert_eq!(reference().evaluate(c(1.0, 0.0), c(0.0, 0.0)), c(2.0, 0.0));
    }

    #[test]
    fn gradient_examples() {
        let f = reference();
        assert_eq!(f.gradient(c(1.0, 0.0), c(0.0, 0.0)), (c(0.0, 0.0), c(0.0, 0.0)));
        assert_eq!(f.gradient(c(0.0, 0.0), c(1.0, 0.0)), (c(3.0, 0.0), c(2.0, 0.0)));
        let k = BivarPoly::constant(coeff_int(7));
        assert_eq!(k.gradient(c(0.3, 0.1), c(2.0, 0.0)), (c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn zero_poly_has_no_degree() {
        assert_eq!(BivarPoly::zero().degree(), None);
        assert_eq!(reference().degree(), Some(3));
        let cancel = &reference() - &reference();
        assert!(cancel.is_zero());
        assert_eq!(cancel.len(), 0);
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(reference().to_string(), "-x^3 + y^2 + 3*x");
        let p = BivarPoly::from_terms([
            ((0, 0), coeff_rat(-3, 2)),
            ((1, 1), Complex::new(BigRational::one(), BigRational::from_integer(2.into()))),
        ]);
        assert_eq!(p.to_string(), "(1+2i)*x*y - 3/2");
    }
}
