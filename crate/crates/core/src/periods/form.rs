use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::poly::coeff_to_c64;
use crate::algebra::PlanarOneForm;
use crate::fibration::Hyperelliptic;
use crate::numeric::C64;

/// `Σ c·x^i·y^j dx` on a fiber `y² = g(x) + t`; `j` may be negative.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FiberForm {
    terms: BTreeMap<(u32, i32), C64>,
}

impl FiberForm {
    pub fn zero() -> Self {
        FiberForm::default()
    }

    pub fn monomial(c: C64, i: u32, j: i32) -> Self {
        let mut f = FiberForm::zero();
        f.add_term(i, j, c);
        f
    }

    /// `y dx`.
    pub fn y_dx() -> Self {
        FiberForm::monomial(C64::new(1.0, 0.0), 0, 1)
    }

    pub fn add_term(&mut self, i: u32, j: i32, c: C64) {
        let entry = self.terms.entry((i, j)).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if *entry == C64::new(0.0, 0.0) {
            self.terms.remove(&(i, j));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, i32), &C64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Most negative power of `y`, or 0 when there are no poles.
    pub fn pole_order(&self) -> i32 {
        self.terms.keys().map(|(_, j)| (-j).max(0)).max().unwrap_or(0)
    }

    pub fn eval(&self, x: C64, y: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        let yinv = if self.pole_order() > 0 { y.inv() } else { C64::new(0.0, 0.0) };
        for (&(i, j), c) in &self.terms {
            let yj = if j >= 0 { y.powu(j as u32) } else { yinv.powu((-j) as u32) };
            acc += c * x.powu(i) * yj;
        }
        acc
    }

    pub fn scale(&self, s: C64) -> FiberForm {
        let mut out = FiberForm::zero();
        for (&(i, j), c) in &self.terms {
            out.add_term(i, j, c * s);
        }
        out
    }

    pub fn add(&self, other: &FiberForm) -> FiberForm {
        let mut out = self.clone();
        for (&(i, j), c) in &other.terms {
            out.add_term(i, j, *c);
        }
        out
    }
}

impl fmt::Display for FiberForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&(i, j), c)| format!("({}{:+}i)*x^{}*y^{} dx", c.re, c.im, i, j))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Pullback of `A dx + B dy` to the fiber: `A + B·g′(x)/(2y)`, without reducing `y²`.
pub fn restrict_to_fiber(omega: &PlanarOneForm, h: &Hyperelliptic) -> FiberForm {
    let mut out = FiberForm::zero();
    for (&(i, j), c) in omega.a.terms() {
        out.add_term(i, j as i32, coeff_to_c64(c));
    }
    for (&(i, j), c) in omega.b.terms() {
        let c = coeff_to_c64(c);
        for (k, d) in h.dg.coeffs().iter().enumerate() {
            if *d != C64::new(0.0, 0.0) {
                out.add_term(i + k as u32, j as i32 - 1, c * d * 0.5);
            }
        }
    }
    out
}

/// Gelfand-Leray derivative: `x^i y^j dx ↦ (j/2)·x^i y^(j−2) dx`.
pub fn gm_derivative(phi: &FiberForm) -> FiberForm {
    let mut out = FiberForm::zero();
    for (&(i, j), c) in &phi.terms {
        if j != 0 {
            out.add_term(i, j - 2, c * (j as f64 / 2.0));
        }
    }
    out
}
