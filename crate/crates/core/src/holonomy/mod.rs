//! Holonomy of the deformed foliation `df + εω = 0` along loops in a fiber,
//! and Melnikov coefficients fitted from its ε-expansion.
//!
//! The transversal at the first vertex of a loop is the vertical line through
//! it, parametrized by the value of `f`. Along the loop the leaf is written as
//! `(x(s), y(s))` with `x(s)` the loop's projection, and the displacement
//! `δt = f − t₀` solves
//!
//! `δt′ = −ε·x′·(A − B·f_x/f_y) / (1 + ε·B/f_y)`  for `ω = A dx + B dy`.

mod fit;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::poly::NumPoly;
use crate::algebra::PlanarOneForm;
use crate::fibration::{based_word, basis_at, CycleRealization, FiberAt, FibrationError, FibrationModel, LoopWord, Surface, Vertex};
use crate::numeric::{COLLOCATION, C64};

pub use fit::{melnikov_fit, MelnikovFit};

const MAX_DEPTH: usize = 10;
const MAX_PICARD: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HolonomyError {
    #[error("|ε·ω(∂t)| = {value} exceeds the divergence guard near x = {x}")]
    DenominatorSmall { x: C64, value: f64 },
    #[error("step underflow near x = {x}")]
    StepUnderflow { x: C64 },
    #[error("the leaf left the neighbourhood of the loop near x = {x}")]
    LeafEscaped { x: C64 },
    #[error("empty ε list")]
    NoEpsilon,
    #[error("fit needs at least {needed} distinct ε values spanning a decade, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("least-squares fit is ill-conditioned (condition {condition:e})")]
    IllConditionedFit { condition: f64 },
    #[error(transparent)]
    Fibration(#[from] FibrationError),
}

/// The deformation `ω` evaluated numerically together with the surface.
#[derive(Debug, Clone)]
pub struct LeafSystem<'a> {
    pub surface: &'a Surface,
    a: NumPoly,
    b: NumPoly,
    /// Bound on `|ε·B/f_y|` along the loop.
    pub guard: f64,
    /// Local error target per unit of `|ε|`.
    pub tol: f64,
}

impl<'a> LeafSystem<'a> {
    pub fn new(surface: &'a Surface, omega: &PlanarOneForm, guard: f64, tol: f64) -> Self {
        LeafSystem { surface, a: NumPoly::from(&omega.a), b: NumPoly::from(&omega.b), guard, tol }
    }

    // point of the fiber t₀ + δt over x that continues y₀ on t₀
    fn displaced_y(&self, x: C64, y0: C64, t0: C64, dt: C64) -> Result<C64, HolonomyError> {
        match self.surface {
            Surface::Hyperelliptic(_) => {
                let r = dt / (y0 * y0);
                if r.norm() > 0.5 {
                    return Err(HolonomyError::LeafEscaped { x });
                }
                Ok(y0 * (C64::new(1.0, 0.0) + r).sqrt())
            }
            Surface::General(_) => {
                let y = self.surface.project_y(x, y0, t0 + dt);
                if (y - y0).norm() > 0.25 * (1.0 + y0.norm()) {
                    return Err(HolonomyError::LeafEscaped { x });
                }
                Ok(y)
            }
        }
    }

    fn rate(&self, eps: C64, x: C64, y: C64, dx: C64) -> Result<C64, HolonomyError> {
        let (fx, fy) = self.surface.gradient(x, y);
        if fy.norm() == 0.0 {
            return Err(HolonomyError::StepUnderflow { x });
        }
        let a = self.a.eval(x, y);
        let b = self.b.eval(x, y);
        let denom_term = eps * b / fy;
        if denom_term.norm() > self.guard {
            return Err(HolonomyError::DenominatorSmall { x, value: denom_term.norm() });
        }
        Ok(-eps * dx * (a - b * fx / fy) / (C64::new(1.0, 0.0) + denom_term))
    }

    /// Collocation step of `δt` over `[lo, hi]` of the segment `p → q`.
    fn step(&self, fiber: &FiberAt<'_>, eps: C64, p: Vertex, q: Vertex, lo: f64, hi: f64, dt0: C64) -> Result<C64, HolonomyError> {
        let col = &*COLLOCATION;
        let n = col.rule.nodes.len();
        let us: Vec<f64> = col.rule.nodes.iter().map(|s| lo + (hi - lo) * s).collect();
        let y0s = fiber.lift(p.x, p.y, q.x, &us)?;
        let xs: Vec<C64> = us.iter().map(|u| p.x + (q.x - p.x) * *u).collect();
        let dx = (q.x - p.x) * (hi - lo);
        let mut dts = vec![dt0; n];
        let mut rates = vec![C64::new(0.0, 0.0); n];
        for _ in 0..MAX_PICARD {
            for l in 0..n {
                let y = self.displaced_y(xs[l], y0s[l], fiber.t, dts[l])?;
                rates[l] = self.rate(eps, xs[l], y, dx)?;
            }
            let mut change: f64 = 0.0;
            for k in 0..n {
                let v = dt0 + (0..n).map(|l| rates[l] * col.integration[k][l]).sum::<C64>();
                change = change.max((v - dts[k]).norm());
                dts[k] = v;
            }
            if change <= 1e-17 * (1.0 + dt0.norm()) + 1e-300 {
                break;
            }
        }
        Ok(dt0 + (0..n).map(|l| rates[l] * col.rule.weights[l]).sum::<C64>())
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive(
        &self,
        fiber: &FiberAt<'_>,
        eps: C64,
        p: Vertex,
        q: Vertex,
        lo: f64,
        hi: f64,
        dt0: C64,
        whole: C64,
        tol: f64,
        depth: usize,
    ) -> Result<(C64, f64), HolonomyError> {
        let mid = 0.5 * (lo + hi);
        let left = self.step(fiber, eps, p, q, lo, mid, dt0)?;
        let right = self.step(fiber, eps, p, q, mid, hi, left)?;
        let diff = (right - whole).norm();
        let floor = 64.0 * f64::EPSILON * (dt0.norm() + right.norm());
        if diff <= tol.max(floor) {
            return Ok((right, diff));
        }
        if depth >= MAX_DEPTH {
            return Err(HolonomyError::StepUnderflow { x: p.x + (q.x - p.x) * lo });
        }
        let (left, e1) = self.adaptive(fiber, eps, p, q, lo, mid, dt0, left, 0.5 * tol, depth + 1)?;
        let right_whole = self.step(fiber, eps, p, q, mid, hi, left)?;
        let (right, e2) = self.adaptive(fiber, eps, p, q, mid, hi, left, right_whole, 0.5 * tol, depth + 1)?;
        Ok((right, e1 + e2))
    }
}

/// `h_ε(t₀)` along a loop word lying on the fiber `t₀ = word.t`, with its error estimate.
pub fn leaf_transport(sys: &LeafSystem<'_>, eps: C64, word: &LoopWord) -> Result<(C64, f64), HolonomyError> {
    let t0 = word.t;
    if eps == C64::new(0.0, 0.0) {
        return Ok((t0, 0.0));
    }
    let fiber = sys.surface.fiber(t0, None)?;
    let segments: usize = word.pieces.iter().map(|p| p.len().saturating_sub(1)).sum();
    let per_segment = sys.tol * eps.norm() / segments.max(1) as f64;
    let mut dt = C64::new(0.0, 0.0);
    let mut err = 0.0;
    for piece in &word.pieces {
        for w in piece.windows(2) {
            if w[0].x == w[1].x {
                continue;
            }
            let whole = sys.step(&fiber, eps, w[0], w[1], 0.0, 1.0, dt)?;
            let (next, e) = sys.adaptive(&fiber, eps, w[0], w[1], 0.0, 1.0, dt, whole, per_segment, 0)?;
            dt = next;
            err += e;
        }
    }
    Ok((t0 + dt, err))
}

/// One evaluation `t₁ = h_ε(t₀)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomySample {
    pub eps: C64,
    pub t0: C64,
    pub t1: C64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HolonomyMapSamples {
    /// Letters of the word, `"d1"`, `"d2^-1"`, ...; read left to right as path order.
    pub word: Vec<String>,
    pub samples: Vec<HolonomySample>,
}

impl HolonomyMapSamples {
    /// CSV with columns `eps_re,eps_im,t0_re,t0_im,t1_re,t1_im,err`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps_re,eps_im,t0_re,t0_im,t1_re,t1_im,err\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                s.eps.re, s.eps.im, s.t0.re, s.t0.im, s.t1.re, s.t1.im, s.err
            ));
        }
        out
    }

    /// Samples at one base value, in ε order.
    pub fn at(&self, t0: C64) -> Vec<&HolonomySample> {
        self.samples.iter().filter(|s| s.t0 == t0).collect()
    }

    pub fn base_values(&self) -> Vec<C64> {
        let mut out: Vec<C64> = Vec::new();
        for s in &self.samples {
            if !out.contains(&s.t0) {
                out.push(s.t0);
            }
        }
        out
    }
}

/// A letter `δ_k` or `δ_k⁻¹` of a word in the distinguished basis (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Letter {
    pub cycle: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(cycle: usize, inverse: bool) -> Self {
        Letter { cycle, inverse }
    }

    pub fn label(&self) -> String {
        if self.inverse {
            format!("d{}^-1", self.cycle + 1)
        } else {
            format!("d{}", self.cycle + 1)
        }
    }
}

/// `a b a⁻¹ b⁻¹`.
pub fn commutator_letters(a: usize, b: usize) -> Vec<Letter> {
    vec![Letter::new(a, false), Letter::new(b, false), Letter::new(a, true), Letter::new(b, true)]
}

/// Holonomy of a deformation along words in the vanishing cycles of a model.
pub struct HolonomyTask<'a> {
    pub model: &'a FibrationModel,
    /// Basis cycles on the base fiber.
    pub basis: &'a [CycleRealization],
    pub omega: PlanarOneForm,
    pub eps: Vec<C64>,
    pub t0: Vec<C64>,
    pub guard: f64,
    pub tol: f64,
}

impl HolonomyTask<'_> {
    /// Basis cycles carried from the base value to `t` along the straight segment.
    pub fn cycles_at(&self, t: C64) -> Result<Vec<CycleRealization>, HolonomyError> {
        Ok(basis_at(self.model, self.basis, t)?)
    }

    pub fn word_at(&self, t: C64, letters: &[Letter]) -> Result<LoopWord, HolonomyError> {
        let cycles = self.cycles_at(t)?;
        let refs: Vec<(&CycleRealization, bool)> = letters.iter().map(|l| (&cycles[l.cycle], l.inverse)).collect();
        Ok(based_word(self.model, &refs)?)
    }
}

/// `h_ε` along `letters` for every `(ε, t₀)` of the task.
pub fn holonomy_word(task: &HolonomyTask<'_>, letters: &[Letter]) -> Result<HolonomyMapSamples, HolonomyError> {
    if task.eps.is_empty() {
        return Err(HolonomyError::NoEpsilon);
    }
    let sys = LeafSystem::new(&task.model.surface, &task.omega, task.guard, task.tol);
    let words: Vec<LoopWord> = task.t0.iter().map(|t| task.word_at(*t, letters)).collect::<Result<_, _>>()?;
    holonomy_on_words(&sys, &words, &task.eps, letters.iter().map(Letter::label).collect())
}

/// `h_ε` along explicit loop words, one per base value.
pub fn holonomy_on_words(
    sys: &LeafSystem<'_>,
    words: &[LoopWord],
    eps: &[C64],
    labels: Vec<String>,
) -> Result<HolonomyMapSamples, HolonomyError> {
    if eps.is_empty() {
        return Err(HolonomyError::NoEpsilon);
    }
    let jobs: Vec<(usize, C64)> = (0..words.len()).flat_map(|w| eps.iter().map(move |e| (w, *e))).collect();
    let samples = jobs
        .par_iter()
        .map(|&(w, e)| {
            let (t1, err) = leaf_transport(sys, e, &words[w])?;
            Ok(HolonomySample { eps: e, t0: words[w].t, t1, err })
        })
        .collect::<Result<Vec<_>, HolonomyError>>()?;
    Ok(HolonomyMapSamples { word: labels, samples })
}

/// Commutation defect of the holonomies along `d1` and `d2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutationDefect {
    pub eps: Vec<C64>,
    /// `max_{t₀} |h_{(δ₁,δ₂),ε}(t₀) − t₀|` per ε.
    pub defect: Vec<f64>,
    /// `max_{t₀} |c₀(t₀)|`, where `(h − t₀)/ε² ≈ c₀ + c₁ε` is fitted over ε.
    pub second_order: f64,
    pub tol: f64,
    pub commuting: bool,
    pub samples: HolonomyMapSamples,
}

/// Decides whether the commutator holonomy of basis cycles `d1`, `d2` has an `ε²` term.
pub fn commutation_defect(task: &HolonomyTask<'_>, d1: usize, d2: usize, tol: f64) -> Result<CommutationDefect, HolonomyError> {
    commutation_defect_word(task, &commutator_letters(d1, d2), tol)
}

/// As [`commutation_defect`] for an explicit commutator word.
pub fn commutation_defect_word(task: &HolonomyTask<'_>, letters: &[Letter], tol: f64) -> Result<CommutationDefect, HolonomyError> {
    let samples = holonomy_word(task, letters)?;
    let defect = task
        .eps
        .iter()
        .map(|e| samples.samples.iter().filter(|s| s.eps == *e).map(|s| (s.t1 - s.t0).norm()).fold(0.0, f64::max))
        .collect();
    let mut second_order: f64 = 0.0;
    for t0 in samples.base_values() {
        let rows = samples.at(t0);
        let scaled: Vec<C64> = rows.iter().map(|s| (s.t1 - s.t0) / (s.eps * s.eps)).collect();
        let c0 = if rows.len() >= 2 {
            let a = DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { C64::new(1.0, 0.0) } else { rows[i].eps });
            let b = DMatrix::from_fn(rows.len(), 1, |i, _| scaled[i]);
            a.svd(true, true).solve(&b, 1e-14).map(|x| x[0]).unwrap_or(scaled[0])
        } else {
            scaled[0]
        };
        second_order = second_order.max(c0.norm());
    }
    Ok(CommutationDefect {
        eps: task.eps.clone(),
        defect,
        second_order,
        tol,
        commuting: second_order <= tol,
        samples,
    })
}
