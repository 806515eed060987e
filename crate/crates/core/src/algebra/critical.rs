use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::exact::{determinant, interpolate, uni_degree, uni_gcd};
use super::poly::{coeff_int, coeff_to_c64, BivarPoly, Coeff, NumPolyJet};
use super::AlgebraError;
use crate::config::Tolerances;
use crate::numeric::{all_roots, cmp_lex, UniPoly, C64};

/// A critical point of `f` with its value and Hessian determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x: C64,
    pub y: C64,
    pub value: C64,
    pub hessian: C64,
    /// Set when the point came from a clustered (multiple) root or has a vanishing Hessian.
    pub degenerate: bool,
}

/// Isolated critical points of a polynomial, ordered by critical value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSet {
    pub points: Vec<CriticalPoint>,
}

impl CriticalSet {
    /// Milnor number: the number of critical points found.
    pub fn milnor(&self) -> usize {
        self.points.len()
    }

    pub fn values(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// Sylvester-matrix resultant of `p` and `q` with respect to `y`, evaluated at `x = x0`.
fn resultant_at(p: &BivarPoly, q: &BivarPoly, m: usize, n: usize, x0: &Coeff) -> Coeff {
    let pa = p.eval_x_exact(x0);
    let qa = q.eval_x_exact(x0);
    let size = m + n;
    if size == 0 {
        return coeff_int(1);
    }
    let mut rows = vec![vec![Coeff::zero(); size]; size];
    // rows of p shifted n times, coefficients from the leading one down
    for r in 0..n {
        for k in 0..=m {
            rows[r][r + k] = pa.get(m - k).cloned().unwrap_or_else(Coeff::zero);
        }
    }
    for r in 0..m {
        for k in 0..=n {
            rows[n + r][r + k] = qa.get(n - k).cloned().unwrap_or_else(Coeff::zero);
        }
    }
    determinant(rows)
}

/// Exact resultant `Res_y(p, q)` as a polynomial in `x`, by evaluation and interpolation.
pub fn resultant_y(p: &BivarPoly, q: &BivarPoly) -> Vec<Coeff> {
    let m = p.degree_in_y().unwrap_or(0) as usize;
    let n = q.degree_in_y().unwrap_or(0) as usize;
    let dp = p.degree().unwrap_or(0) as usize;
    let dq = q.degree().unwrap_or(0) as usize;
    let bound = (dp * dq).max(dp * n + dq * m) + 1;
    let xs: Vec<Coeff> = (0..bound as i64).map(coeff_int).collect();
    let vs: Vec<Coeff> = xs.iter().map(|x0| resultant_at(p, q, m, n, x0)).collect();
    interpolate(&xs, &vs)
}

fn to_uni(p: &[Coeff]) -> UniPoly {
    UniPoly::new(p.iter().map(coeff_to_c64).collect())
}

/// All isolated critical points of `f`.
///
/// The pipeline is: exact resultant of `(f_x, f_y)` in `y`, simultaneous root
/// extraction of the eliminant, back-substitution into the lower-degree partial,
/// then two-variable Newton polishing.
pub fn critical_set(f: &BivarPoly, tol: &Tolerances) -> Result<CriticalSet, AlgebraError> {
    if f.is_constant() {
        return Err(AlgebraError::ConstantPolynomial);
    }
    let fx = f.derivative_x();
    let fy = f.derivative_y();
    let jet = NumPolyJet::from(f);

    if fx.is_zero() || fy.is_zero() {
        let other = if fx.is_zero() { &fy } else { &fx };
        if other.is_constant() {
            return Ok(CriticalSet { points: vec![] });
        }
        return Err(AlgebraError::NonIsolatedCriticalLocus);
    }
    let both_free_of_y = fx.degree_in_y() == Some(0) && fy.degree_in_y() == Some(0);
    if both_free_of_y {
        let a = fx.as_univariate_x().unwrap_or_default();
        let b = fy.as_univariate_x().unwrap_or_default();
        return match uni_degree(&uni_gcd(&a, &b)) {
            Some(d) if d > 0 => Err(AlgebraError::NonIsolatedCriticalLocus),
            _ => Ok(CriticalSet { points: vec![] }),
        };
    }

    let res = resultant_y(&fx, &fy);
    match uni_degree(&res) {
        None => return Err(AlgebraError::NonIsolatedCriticalLocus),
        Some(0) => return Ok(CriticalSet { points: vec![] }),
        Some(_) => {}
    }
    let xroots = all_roots(&to_uni(&res), None, tol.root_cluster)
        .map_err(|e| AlgebraError::RootSolveFailure(e.to_string()))?;
    let mut distinct_x: Vec<(C64, bool)> = Vec::new();
    let mut seen = vec![false; xroots.roots.len()];
    for group in &xroots.clusters {
        for &k in group {
            seen[k] = true;
        }
        distinct_x.push((xroots.roots[group[0]], true));
    }
    for (k, r) in xroots.roots.iter().enumerate() {
        if !seen[k] {
            distinct_x.push((*r, false));
        }
    }

    let mut points: Vec<CriticalPoint> = Vec::new();
    for (x0, clustered) in distinct_x {
        let px = jet.fx.at_x(x0);
        let py = jet.fy.at_x(x0);
        let scale_x = px.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let scale_y = py.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let negligible = |u: &UniPoly, s: f64| u.coeffs().iter().all(|c| c.norm() <= 1e-9 * (1.0 + s));
        let fx_vanishes = negligible(&px, scale_x);
        let fy_vanishes = negligible(&py, scale_y);
        if fx_vanishes && fy_vanishes {
            return Err(AlgebraError::NonIsolatedCriticalLocus);
        }
        // numerically trailing coefficients may be tiny; drop them before root finding
        let prune = |u: &UniPoly| {
            let s = u.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
            let mut cs = u.coeffs().to_vec();
            while cs.len() > 1 && cs.last().is_some_and(|c| c.norm() <= 1e-12 * s) {
                cs.pop();
            }
            UniPoly::new(cs)
        };
        let candidates_from = if fy_vanishes {
            prune(&px)
        } else if fx_vanishes {
            prune(&py)
        } else {
            let (a, b) = (prune(&px), prune(&py));
            if a.degree() == 0 || (b.degree() > 0 && b.degree() <= a.degree()) {
                b
            } else {
                a
            }
        };
        if candidates_from.degree() == 0 {
            continue;
        }
        let ys = all_roots(&candidates_from, None, tol.root_cluster)
            .map_err(|e| AlgebraError::RootSolveFailure(e.to_string()))?;
        for y0 in ys.roots {
            let Some((x, y)) = newton_polish(&jet, x0, y0, tol.critical_residual) else {
                continue;
            };
            if points.iter().any(|p| (p.x - x).norm() + (p.y - y).norm() < 1e-8) {
                continue;
            }
            let hessian = jet.hessian_det(x, y);
            points.push(CriticalPoint {
                x,
                y,
                value: jet.f.eval(x, y),
                hessian,
                degenerate: clustered && hessian.norm() < tol.hessian_floor.max(1e-6)
                    || hessian.norm() < tol.hessian_floor,
            });
        }
    }
    points.sort_by(|a, b| {
        cmp_lex(a.value, b.value, 1e-12)
            .then(cmp_lex(a.x, b.x, 1e-12))
            .then(cmp_lex(a.y, b.y, 1e-12))
    });
    Ok(CriticalSet { points })
}

/// Two-variable Newton on `(f_x, f_y)`; `None` when the start is not near a common zero.
fn newton_polish(jet: &NumPolyJet, mut x: C64, mut y: C64, target: f64) -> Option<(C64, C64)> {
    let residual = |x: C64, y: C64| {
        let (gx, gy) = jet.gradient(x, y);
        gx.norm().max(gy.norm())
    };
    let start = residual(x, y);
    let scale = 1.0 + x.norm().max(y.norm());
    if start > 1e-4 * scale.powi(4) {
        return None;
    }
    for _ in 0..50 {
        let (gx, gy) = jet.gradient(x, y);
        let a = jet.fxx.eval(x, y);
        let b = jet.fxy.eval(x, y);
        let d = jet.fyy.eval(x, y);
        let det = a * d - b * b;
        if det.norm() < 1e-300 {
            break;
        }
        let dx = (d * gx - b * gy) / det;
        let dy = (a * gy - b * gx) / det;
        x -= dx;
        y -= dy;
        if dx.norm() + dy.norm() < 1e-16 * scale {
            break;
        }
    }
    let r = residual(x, y);
    // degenerate points converge linearly; accept them at a looser bound
    if r <= target.max(1e-14 * scale) || r <= 1e-7 {
        Some((x, y))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse::parse_poly;
    use crate::numeric::c;

    fn crit(text: &str) -> CriticalSet {
        critical_set(&parse_poly(text).unwrap(), &Tolerances::default()).unwrap()
    }

    #[test]
    fn reference_cubic() {
        let cs = crit("y^2 - x^3 + 3x");
        assert_eq!(cs.milnor(), 2);
        assert!((cs.points[0].x - c(-1.0, 0.0)).norm() < 1e-13);
        assert!((cs.points[0].value - c(-2.0, 0.0)).norm() < 1e-13);
        assert!((cs.points[1].x - c(1.0, 0.0)).norm() < 1e-13);
        assert!((cs.points[1].value - c(2.0, 0.0)).norm() < 1e-13);
        let jet = NumPolyJet::from(&parse_poly("y^2 - x^3 + 3x").unwrap());
        for p in &cs.points {
            let (gx, gy) = jet.gradient(p.x, p.y);
            assert!(gx.norm() <= 1e-12 && gy.norm() <= 1e-12);
            assert!(!p.degenerate);
        }
    }

    #[test]
    fn quadratic_and_linear() {
        let cs = crit("x^2 + y^2");
        assert_eq!(cs.milnor(), 1);
        assert!(cs.points[0].value.norm() < 1e-14);
        assert_eq!(crit("x").milnor(), 0);
    }

    #[test]
    fn product_of_cubics_has_four_points() {
        let cs = crit("x^3 - 3x + y^3 - 3y");
        assert_eq!(cs.milnor(), 4);
        let values: Vec<f64> = cs.values().iter().map(|v| v.re).collect();
        let expected = [-4.0, 0.0, 0.0, 4.0];
        for (v, e) in values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-10, "{values:?}");
        }
    }

    #[test]
    fn non_isolated_locus_is_rejected() {
        let f = parse_poly("x^2*y^2").unwrap();
        assert_eq!(
            critical_set(&f, &Tolerances::default()),
            Err(AlgebraError::NonIsolatedCriticalLocus)
        );
        let g = parse_poly("(x + y)^2").unwrap();
        assert_eq!(
            critical_set(&g, &Tolerances::default()),
            Err(AlgebraError::NonIsolatedCriticalLocus)
        );
        assert_eq!(
            critical_set(&parse_poly("3").unwrap(), &Tolerances::default()),
            Err(AlgebraError::ConstantPolynomial)
        );
    }
}
