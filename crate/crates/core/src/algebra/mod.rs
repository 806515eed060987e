//! Exact polynomial and 1-form arithmetic, critical loci, tameness checks and
//! the relative exactness solver.

pub mod critical;
pub mod exact;
pub mod exactness;
pub mod parse;
pub mod poly;
pub mod tameness;

use num_traits::Zero;

pub use critical::{critical_set, CriticalPoint, CriticalSet};
pub use exactness::{relative_exactness, DegreeBounds, ExactnessWitness};
pub use parse::{parse_coeff, parse_poly, ParseError};
pub use poly::{BivarPoly, Coeff, NumPoly, NumPolyJet};
pub use tameness::{tameness_report, TamenessReport};

use crate::numeric::C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgebraError {
    #[error("polynomial is constant")]
    ConstantPolynomial,
    #[error("critical locus is not isolated")]
    NonIsolatedCriticalLocus,
    #[error("root solver failed: {0}")]
    RootSolveFailure(String),
    #[error("no witness within bounds; one exists with deg P <= {p}, deg Q <= {q}")]
    BoundsTooSmall { p: u32, q: u32 },
}

/// Polynomial 1-form `A dx + B dy`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanarOneForm {
    pub a: BivarPoly,
    pub b: BivarPoly,
}

impl PlanarOneForm {
    pub fn new(a: BivarPoly, b: BivarPoly) -> Self {
        PlanarOneForm { a, b }
    }

    /// The differential `dP`.
    pub fn exact(p: &BivarPoly) -> Self {
        PlanarOneForm { a: p.derivative_x(), b: p.derivative_y() }
    }

    /// `max(deg A, deg B)`; `None` for the zero form.
    pub fn degree(&self) -> Option<u32> {
        match (self.a.degree(), self.b.degree()) {
            (Some(p), Some(q)) => Some(p.max(q)),
            (p, q) => p.or(q),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn evaluate(&self, x: C64, y: C64) -> (C64, C64) {
        (self.a.evaluate(x, y), self.b.evaluate(x, y))
    }
}

impl std::ops::Add for &PlanarOneForm {
    type Output = PlanarOneForm;
    fn add(self, rhs: &PlanarOneForm) -> PlanarOneForm {
        PlanarOneForm { a: &self.a + &rhs.a, b: &self.b + &rhs.b }
    }
}

impl PlanarOneForm {
    pub fn scale(&self, c: &Coeff) -> PlanarOneForm {
        PlanarOneForm { a: self.a.scale(c), b: self.b.scale(c) }
    }
}

/// Density of `dω` against `dx ∧ dy`: `∂B/∂x − ∂A/∂y`.
pub fn exterior_derivative_density(omega: &PlanarOneForm) -> BivarPoly {
    &omega.b.derivative_x() - &omega.a.derivative_y()
}

/// Coefficients of `g` when `f = y² − g(x)`, otherwise `None`.
pub fn hyperelliptic_part(f: &BivarPoly) -> Option<Vec<Coeff>> {
    let rows = f.coefficients_in_y();
    if rows.len() != 3 || !rows[1].is_zero() || rows[2] != BivarPoly::constant(poly::coeff_int(1)) {
        return None;
    }
    let g = rows[0].as_univariate_x()?;
    Some(g.into_iter().map(|c| -c).collect::<Vec<_>>()).filter(|g| !g.iter().all(Zero::is_zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::c;
    use poly::coeff_int;

    fn p(text: &str) -> BivarPoly {
        parse_poly(text).unwrap()
    }

    #[test]
    fn exterior_derivative_examples() {
        assert!(exterior_derivative_density(&PlanarOneForm::exact(&p("x^2*y"))).is_zero());
        let y_dx = PlanarOneForm::new(p("y"), BivarPoly::zero());
        assert_eq!(exterior_derivative_density(&y_dx), p("-1"));
        let x_dy = PlanarOneForm::new(BivarPoly::zero(), p("x"));
        assert_eq!(exterior_derivative_density(&x_dy), p("1"));
    }

    #[test]
    fn form_degree() {
        let w = PlanarOneForm::new(p("x^3 + y"), p("x*y"));
        assert_eq!(w.degree(), Some(3));
        assert_eq!(PlanarOneForm::default().degree(), None);
        let (a, b) = w.evaluate(c(1.0, 0.0), c(2.0, 0.0));
        assert_eq!((a, b), (c(3.0, 0.0), c(2.0, 0.0)));
    }

    #[test]
    fn hyperelliptic_detection() {
        let g = hyperelliptic_part(&p("y^2 - x^3 + 3x")).unwrap();
        assert_eq!(g, vec![coeff_int(0), coeff_int(-3), coeff_int(0), coeff_int(1)]);
        assert!(hyperelliptic_part(&p("2y^2 - x^3")).is_none());
        assert!(hyperelliptic_part(&p("y^2 - x^3 + x*y")).is_none());
        assert!(hyperelliptic_part(&p("x^2 + y^2")).is_some());
    }
}
