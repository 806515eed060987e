use crate::fibration::{FiberAt, Vertex};
use crate::numeric::{COLLOCATION, C64};

use super::{FiberForm, PeriodsError};

const MAX_DEPTH: usize = 12;
const POLE_GUARD: f64 = 1e-12;

/// Chen iterated integrals `J_m = ∫ η₁⋯η_m` along consecutive polylines,
/// with `J_0 = 1`. Returns all `J_m` and the accumulated error estimate.
///
/// On each segment the triangular system `J_m′ = J_{m−1}·η_m` is solved by
/// Gauss-Legendre collocation; a segment is halved until the whole and halved
/// results agree.
pub(crate) fn chen_integrals(
    fiber: &FiberAt<'_>,
    pieces: &[&[Vertex]],
    forms: &[FiberForm],
    tol: f64,
) -> Result<(Vec<C64>, f64), PeriodsError> {
    let segments: usize = pieces.iter().map(|p| p.len().saturating_sub(1)).sum();
    let per_segment = tol / segments.max(1) as f64;
    let poles = forms.iter().any(|f| f.pole_order() > 0);
    let mut j = vec![C64::new(0.0, 0.0); forms.len() + 1];
    j[0] = C64::new(1.0, 0.0);
    let mut err = 0.0;
    let solver = Segment { fiber, forms, poles };
    for piece in pieces {
        for w in piece.windows(2) {
            if w[0].x == w[1].x {
                continue;
            }
            let whole = solver.step(w[0], w[1], 0.0, 1.0, &j)?;
            let (next, e) = solver.adaptive(w[0], w[1], 0.0, 1.0, &j, whole, per_segment, 0)?;
            j = next;
            err += e;
        }
    }
    Ok((j, err))
}

struct Segment<'a, 'b> {
    fiber: &'a FiberAt<'b>,
    forms: &'a [FiberForm],
    poles: bool,
}

impl Segment<'_, '_> {
    fn step(&self, a: Vertex, b: Vertex, lo: f64, hi: f64, j0: &[C64]) -> Result<Vec<C64>, PeriodsError> {
        let col = &*COLLOCATION;
        let n = col.rule.nodes.len();
        let us: Vec<f64> = col.rule.nodes.iter().map(|s| lo + (hi - lo) * s).collect();
        let ys = self.fiber.lift(a.x, a.y, b.x, &us)?;
        let dx = (b.x - a.x) * (hi - lo);
        let xs: Vec<C64> = us.iter().map(|u| a.x + (b.x - a.x) * *u).collect();
        if self.poles {
            if let Some(l) = (0..n).find(|&l| ys[l].norm() < POLE_GUARD) {
                return Err(PeriodsError::PoleOnPath { x: xs[l] });
            }
        }
        let mut out = j0.to_vec();
        let mut prev = vec![j0[0]; n];
        for (m, form) in self.forms.iter().enumerate() {
            let g: Vec<C64> = (0..n).map(|l| prev[l] * form.eval(xs[l], ys[l]) * dx).collect();
            let start = j0[m + 1];
            out[m + 1] = start + (0..n).map(|l| g[l] * col.rule.weights[l]).sum::<C64>();
            if m + 1 < self.forms.len() {
                prev = (0..n)
                    .map(|k| start + (0..n).map(|l| g[l] * col.integration[k][l]).sum::<C64>())
                    .collect();
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive(
        &self,
        a: Vertex,
        b: Vertex,
        lo: f64,
        hi: f64,
        j0: &[C64],
        whole: Vec<C64>,
        tol: f64,
        depth: usize,
    ) -> Result<(Vec<C64>, f64), PeriodsError> {
        let mid = 0.5 * (lo + hi);
        let left = self.step(a, b, lo, mid, j0)?;
        let right = self.step(a, b, mid, hi, &left)?;
        let diff = whole.iter().zip(&right).skip(1).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        if diff <= tol || depth >= MAX_DEPTH {
            return Ok((right, diff));
        }
        let (left, e1) = self.adaptive(a, b, lo, mid, j0, left, 0.5 * tol, depth + 1)?;
        let right_whole = self.step(a, b, mid, hi, &left)?;
        let (right, e2) = self.adaptive(a, b, mid, hi, &left, right_whole, 0.5 * tol, depth + 1)?;
        Ok((right, e1 + e2))
    }
}
