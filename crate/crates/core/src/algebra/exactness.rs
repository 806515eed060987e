use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::exact::solve;
use super::poly::{coeff_int, BivarPoly, Coeff};
use super::{AlgebraError, PlanarOneForm};

/// Maximal total degrees of the unknowns `P` and `Q` in `ω = Q df + dP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeBounds {
    pub p: u32,
    pub q: u32,
}

impl DegreeBounds {
    pub fn default_for(omega: &PlanarOneForm, f: &BivarPoly) -> Self {
        let dw = omega.degree().unwrap_or(0);
        let df = f.degree().unwrap_or(0);
        DegreeBounds {
            p: dw + 1,
            q: (dw + 1).saturating_sub(df),
        }
    }
}

/// A decomposition `ω = Q df + dP`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessWitness {
    pub p: BivarPoly,
    pub q: BivarPoly,
    /// True when the decomposition was solved in exact arithmetic.
    pub certified: bool,
}

impl ExactnessWitness {
    /// `ω − Q df − dP`, which is identically zero for a valid witness.
    pub fn residual(&self, omega: &PlanarOneForm, f: &BivarPoly) -> PlanarOneForm {
        let fx = f.derivative_x();
        let fy = f.derivative_y();
        PlanarOneForm {
            a: &(&omega.a - &(&self.q * &fx)) - &self.p.derivative_x(),
            b: &(&omega.b - &(&self.q * &fy)) - &self.p.derivative_y(),
        }
    }
}

fn monomials(max_degree: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        for i in (0..=d).rev() {
            out.push((i, d - i));
        }
    }
    out
}

fn solve_within(omega: &PlanarOneForm, f: &BivarPoly, bounds: DegreeBounds) -> Option<ExactnessWitness> {
    let fx = f.derivative_x();
    let fy = f.derivative_y();
    let q_monos = monomials(bounds.q);
    let p_monos = monomials(bounds.p);
    let ncols = q_monos.len() + p_monos.len();

    // rows keyed by (component, monomial); component 0 = dx, 1 = dy
    let mut rows: BTreeMap<(u8, (u32, u32)), Vec<Coeff>> = BTreeMap::new();
    fn row(
        rows: &mut BTreeMap<(u8, (u32, u32)), Vec<Coeff>>,
        ncols: usize,
        key: (u8, (u32, u32)),
    ) -> &mut Vec<Coeff> {
        rows.entry(key).or_insert_with(|| vec![Coeff::zero(); ncols])
    }
    for (col, &(a, b)) in q_monos.iter().enumerate() {
        for ((i, j), c) in fx.terms() {
            let r = row(&mut rows, ncols, (0, (i + a, j + b)));
            r[col] = &r[col] + c;
        }
        for ((i, j), c) in fy.terms() {
            let r = row(&mut rows, ncols, (1, (i + a, j + b)));
            r[col] = &r[col] + c;
        }
    }
    for (k, &(a, b)) in p_monos.iter().enumerate() {
        let col = q_monos.len() + k;
        if a > 0 {
            let r = row(&mut rows, ncols, (0, (a - 1, b)));
            r[col] = &r[col] + coeff_int(a as i64);
        }
        if b > 0 {
            let r = row(&mut rows, ncols, (1, (a, b - 1)));
            r[col] = &r[col] + coeff_int(b as i64);
        }
    }
    for ((i, j), _) in omega.a.terms() {
        row(&mut rows, ncols, (0, (*i, *j)));
    }
    for ((i, j), _) in omega.b.terms() {
        row(&mut rows, ncols, (1, (*i, *j)));
    }
    let keys: Vec<_> = rows.keys().copied().collect();
    let matrix: Vec<Vec<Coeff>> = keys.iter().map(|k| rows[k].clone()).collect();
    let rhs: Vec<Coeff> = keys
        .iter()
        .map(|(comp, (i, j))| if *comp == 0 { omega.a.coeff(*i, *j) } else { omega.b.coeff(*i, *j) })
        .collect();
    let z = solve(&matrix, &rhs)?;
    let q = BivarPoly::from_terms(q_monos.iter().zip(&z).map(|(&m, c)| (m, c.clone())));
    let p = BivarPoly::from_terms(p_monos.iter().zip(&z[q_monos.len()..]).map(|(&m, c)| (m, c.clone())));
    Some(ExactnessWitness { p, q, certified: true })
}

/// Searches for `ω = Q df + dP` with `deg P ≤ bounds.p`, `deg Q ≤ bounds.q`.
///
/// Coefficients are exact, so the linear system is solved exactly. If no
/// solution exists within `bounds` but one appears at larger bounds,
/// [`AlgebraError::BoundsTooSmall`] suggests them.
pub fn relative_exactness(
    omega: &PlanarOneForm,
    f: &BivarPoly,
    bounds: Option<DegreeBounds>,
) -> Result<Option<ExactnessWitness>, AlgebraError> {
    let bounds = bounds.unwrap_or_else(|| DegreeBounds::default_for(omega, f));
    if let Some(w) = solve_within(omega, f, bounds) {
        return Ok(Some(w));
    }
    let wider = DegreeBounds { p: bounds.p + 2, q: bounds.q + 2 };
    if solve_within(omega, f, wider).is_some() {
        return Err(AlgebraError::BoundsTooSmall { p: wider.p, q: wider.q });
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse::parse_poly;

    fn form(a: &str, b: &str) -> PlanarOneForm {
        PlanarOneForm::new(parse_poly(a).unwrap(), parse_poly(b).unwrap())
    }

    fn reference() -> BivarPoly {
        parse_poly("y^2 - x^3 + 3x").unwrap()
    }

    #[test]
    fn exact_form_has_p_witness() {
        let omega = form("2*x*y", "x^2");
        let w = relative_exactness(&omega, &reference(), None).unwrap().unwrap();
        assert!(w.residual(&omega, &reference()).is_zero());
        assert_eq!(w.p, parse_poly("x^2*y").unwrap());
        assert!(w.q.is_zero());
    }

    #[test]
    fn f_df_is_relatively_exact() {
        let f = reference();
        let omega = PlanarOneForm::new(&f * &f.derivative_x(), &f * &f.derivative_y());
        let w = relative_exactness(&omega, &f, None).unwrap().unwrap();
        assert!(w.residual(&omega, &f).is_zero());
        assert!(w.certified);
    }

    #[test]
    fn y_dx_has_no_witness() {
        let omega = form("y", "0");
        assert_eq!(relative_exactness(&omega, &reference(), None).unwrap(), None);
        let big = DegreeBounds { p: 6, q: 4 };
        assert_eq!(relative_exactness(&omega, &reference(), Some(big)).unwrap(), None);
    }

    #[test]
    fn too_small_bounds_are_reported() {
        let f = reference();
        // Q = x y needs deg Q = 2
        let q = parse_poly("x*y").unwrap();
        let omega = PlanarOneForm::new(&q * &f.derivative_x(), &q * &f.derivative_y());
        let err = relative_exactness(&omega, &f, Some(DegreeBounds { p: 1, q: 0 })).unwrap_err();
        assert!(matches!(err, AlgebraError::BoundsTooSmall { .. }));
    }
}
