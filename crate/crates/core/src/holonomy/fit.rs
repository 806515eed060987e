use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::numeric::C64;

use super::{HolonomyError, HolonomyMapSamples, HolonomySample};

const MAX_FIT_CONDITION: f64 = 1e12;

/// Coefficients of `h_ε(t₀) − t₀ = Σ_k M_k ε^k` fitted over ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelnikovFit {
    pub t0: C64,
    /// `coefficients[k]` estimates `M_{k+1}`; the last entry is the slack term.
    pub coefficients: Vec<C64>,
    /// Standard errors from the residuals (zero for an exact fit).
    pub errors: Vec<f64>,
    /// Change of `M_order` when the largest |ε| is dropped.
    pub consistency: f64,
    pub residual: f64,
}

impl MelnikovFit {
    pub fn m(&self, k: usize) -> C64 {
        self.coefficients[k - 1]
    }
}

/// Least-squares fit of `(h_ε − t₀)/ε = M₁ + M₂ε + M₃ε²`, with more terms for `order > 2`.
pub fn melnikov_fit(samples: &HolonomyMapSamples, t0: C64, order: usize) -> Result<MelnikovFit, HolonomyError> {
    let rows: Vec<&HolonomySample> = samples.at(t0);
    let mut distinct: Vec<C64> = Vec::new();
    for r in &rows {
        if !distinct.contains(&r.eps) {
            distinct.push(r.eps);
        }
    }
    let needed = order + 2;
    let (lo, hi) = distinct.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), e| (lo.min(e.norm()), hi.max(e.norm())));
    if distinct.len() < needed || hi < 10.0 * lo {
        return Err(HolonomyError::InsufficientSamples { needed, got: distinct.len() });
    }
    let terms = (order + 1).max(3).min(distinct.len());
    let (coefficients, errors, residual) = solve(&rows, terms)?;
    let consistency = {
        let mut trimmed = rows.clone();
        let top = trimmed.iter().enumerate().max_by(|a, b| a.1.eps.norm().total_cmp(&b.1.eps.norm())).map(|p| p.0).unwrap();
        trimmed.remove(top);
        if trimmed.len() >= terms {
            let (c, _, _) = solve(&trimmed, terms)?;
            (c[order - 1] - coefficients[order - 1]).norm()
        } else {
            f64::NAN
        }
    };
    Ok(MelnikovFit { t0, coefficients, errors, consistency, residual })
}

fn solve(rows: &[&HolonomySample], terms: usize) -> Result<(Vec<C64>, Vec<f64>, f64), HolonomyError> {
    let n = rows.len();
    let a = DMatrix::from_fn(n, terms, |i, k| rows[i].eps.powu(k as u32));
    let b = DMatrix::from_fn(n, 1, |i, _| (rows[i].t1 - rows[i].t0) / rows[i].eps);
    let svd = a.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    let condition = if smin == 0.0 { f64::INFINITY } else { smax / smin };
    if condition > MAX_FIT_CONDITION {
        return Err(HolonomyError::IllConditionedFit { condition });
    }
    let x = svd.solve(&b, 0.0).map_err(|_| HolonomyError::IllConditionedFit { condition })?;
    let r = &a * &x - &b;
    let rss: f64 = r.iter().map(|z| z.norm_sqr()).sum();
    let errors = if n > terms {
        let sigma2 = rss / (n - terms) as f64;
        let gram = a.adjoint() * &a;
        match gram.try_inverse() {
            Some(inv) => (0..terms).map(|k| (sigma2 * inv[(k, k)].re.abs()).sqrt()).collect(),
            None => vec![f64::INFINITY; terms],
        }
    } else {
        vec![0.0; terms]
    };
    Ok((x.iter().copied().collect(), errors, rss.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::c;

    fn synthetic(a: C64, b: C64, eps: &[f64]) -> HolonomyMapSamples {
        let t0 = c(0.1, 0.0);
        HolonomyMapSamples {
            word: vec![],
            samples: eps
                .iter()
                .map(|&e| {
                    let e = c(e, 0.0);
                    HolonomySample { eps: e, t0, t1: t0 + a * e + b * e * e, err: 0.0 }
                })
                .collect(),
        }
    }

    #[test]
    fn recovers_polynomial_maps() {
        let (a, b) = (c(0.3, -1.2), c(-2.5, 0.75));
        let s = synthetic(a, b, &[1e-2, 3e-3, 1e-3, 3e-4, 1e-4]);
        let fit = melnikov_fit(&s, c(0.1, 0.0), 2).unwrap();
        assert!((fit.m(1) - a).norm() < 1e-10);
        assert!((fit.m(2) - b).norm() < 1e-10);
        assert!(fit.m(3).norm() < 1e-4);
        let fit1 = melnikov_fit(&s, c(0.1, 0.0), 1).unwrap();
        assert!((fit1.m(1) - a).norm() < 1e-10);
    }

    #[test]
    fn rejects_poor_sampling() {
        let s = synthetic(c(1.0, 0.0), c(0.0, 0.0), &[1e-3, 2e-3, 3e-3, 4e-3]);
        assert!(matches!(melnikov_fit(&s, c(0.1, 0.0), 1), Err(HolonomyError::InsufficientSamples { .. })));
        let s = synthetic(c(1.0, 0.0), c(0.0, 0.0), &[1e-2, 1e-3]);
        assert!(matches!(melnikov_fit(&s, c(0.1, 0.0), 1), Err(HolonomyError::InsufficientSamples { .. })));
    }
}
