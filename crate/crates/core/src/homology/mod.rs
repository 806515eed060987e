//! Integer homology of the base fiber in the distinguished basis.

mod condition;

use std::collections::VecDeque;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibration::{CycleRealization, FibrationError, FibrationModel};
use crate::numeric::{cross, segment_crossing};

pub use condition::{condition_faca, condition_faca_bruteforce, ConditionBranch, ConditionVerdict, BRUTE_FORCE_BUDGET};

/// Sign in `δ ↦ δ + σ⟨δ, δ_i⟩δ_i` for a counterclockwise loop around `c_i`,
/// with crossings counted by `sign(dA × dB)`. Calibrated against numeric
/// period monodromy on the reference model.
pub const PL_SIGN: i64 = -1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomologyError {
    #[error("crossing count between cycles {i} and {j} is not near an integer (raw {raw})")]
    AmbiguousCrossing { i: usize, j: usize, raw: f64 },
    #[error("matrix is not antisymmetric with zero diagonal")]
    NotAntisymmetric,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("orbit start is the zero class")]
    ZeroStart,
    #[error("integer overflow in orbit enumeration")]
    Overflow,
    #[error("brute-force box has {size} points, budget is {budget}")]
    SizeLimit { size: u128, budget: u128 },
    #[error(transparent)]
    Fibration(#[from] FibrationError),
}

/// Integer coordinates in the distinguished basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CycleClass(pub Vec<i64>);

impl CycleClass {
    pub fn zero(mu: usize) -> Self {
        CycleClass(vec![0; mu])
    }

    /// The basis cycle `δ_k` (0-based).
    pub fn basis(k: usize, mu: usize) -> Self {
        let mut v = vec![0; mu];
        v[k] = 1;
        CycleClass(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `I[i][j] = ⟨δ_i, δ_j⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntersectionForm {
    matrix: Vec<Vec<i64>>,
}

impl IntersectionForm {
    pub fn new(matrix: Vec<Vec<i64>>) -> Result<Self, HomologyError> {
        let n = matrix.len();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(HomologyError::DimensionMismatch { expected: n, got: row.len() });
            }
            for j in 0..n {
                if row[j] != -matrix[j][i] {
                    return Err(HomologyError::NotAntisymmetric);
                }
            }
        }
        Ok(IntersectionForm { matrix })
    }

    pub fn zero(mu: usize) -> Self {
        IntersectionForm { matrix: vec![vec![0; mu]; mu] }
    }

    pub fn mu(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.matrix[i][j]
    }

    /// `⟨a, b⟩`.
    pub fn pair(&self, a: &CycleClass, b: &CycleClass) -> i64 {
        let mut s = 0;
        for (i, ai) in a.0.iter().enumerate() {
            if *ai != 0 {
                for (j, bj) in b.0.iter().enumerate() {
                    s += ai * self.matrix[i][j] * bj;
                }
            }
        }
        s
    }

    /// Row vector `δ ↦ ⟨d, δ⟩` on the basis.
    pub fn pairing_row(&self, d: &CycleClass) -> Vec<i64> {
        let n = self.mu();
        (0..n).map(|j| (0..n).map(|i| d.0[i] * self.matrix[i][j]).sum()).collect()
    }
}

/// Signed count of same-sheet crossings between two realized cycles on one fiber.
///
/// Each x-plane crossing is weighted by how well the two `y` values agree, so
/// the raw sum is an integer unless a crossing sits where the sheets are not
/// distinguishable, and that is reported through the returned raw value.
pub fn crossing_count(
    model: &FibrationModel,
    a: &CycleRealization,
    b: &CycleRealization,
) -> Result<f64, HomologyError> {
    let fiber = model.fiber(a.t)?;
    let mut raw = 0.0;
    for sa in a.vertices.windows(2) {
        let (a0, a1) = (sa[0], sa[1]);
        let (lo_re, hi_re) = (a0.x.re.min(a1.x.re), a0.x.re.max(a1.x.re));
        let (lo_im, hi_im) = (a0.x.im.min(a1.x.im), a0.x.im.max(a1.x.im));
        for sb in b.vertices.windows(2) {
            let (b0, b1) = (sb[0], sb[1]);
            if b0.x.re.max(b1.x.re) < lo_re
                || b0.x.re.min(b1.x.re) > hi_re
                || b0.x.im.max(b1.x.im) < lo_im
                || b0.x.im.min(b1.x.im) > hi_im
            {
                continue;
            }
            let Some((u, v)) = segment_crossing(a0.x, a1.x, b0.x, b1.x) else {
                continue;
            };
            let ya = fiber.lift(a0.x, a0.y, a1.x, &[u])?[0];
            let yb = fiber.lift(b0.x, b0.y, b1.x, &[v])?[0];
            let (same, opposite) = ((ya + yb).norm_sqr(), (ya - yb).norm_sqr());
            let weight = if same + opposite == 0.0 { 0.5 } else { same / (same + opposite) };
            raw += cross(a1.x - a0.x, b1.x - b0.x).signum() * weight;
        }
    }
    Ok(raw)
}

/// Intersection form of cycles realized on a common fiber.
pub fn intersection_from_cycles(
    model: &FibrationModel,
    cycles: &[CycleRealization],
) -> Result<IntersectionForm, HomologyError> {
    let n = cycles.len();
    let mut m = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let raw = crossing_count(model, &cycles[i], &cycles[j])?;
            let r = raw.round();
            if (raw - r).abs() > 0.25 {
                return Err(HomologyError::AmbiguousCrossing { i, j, raw });
            }
            m[i][j] = r as i64;
            m[j][i] = -(r as i64);
        }
    }
    IntersectionForm::new(m)
}

/// Intersection form of the distinguished basis over the base value.
pub fn intersection_matrix(
    model: &FibrationModel,
    tol: &crate::Tolerances,
) -> Result<IntersectionForm, HomologyError> {
    let cycles = crate::fibration::realize_basis(model, tol)?;
    intersection_from_cycles(model, &cycles)
}

/// Vertices are basis cycles, edges join cycles with nonzero intersection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynkinGraph {
    pub mu: usize,
    /// `(i, j, I[i][j])` with `i < j`, 0-based.
    pub edges: Vec<(usize, usize, i64)>,
    pub adjacency: Vec<Vec<usize>>,
    pub connected: bool,
}

impl DynkinGraph {
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph dynkin {\n");
        for v in 1..=self.mu {
            let _ = writeln!(s, "  {v};");
        }
        for (i, j, w) in &self.edges {
            let _ = writeln!(s, "  {} -- {} [label=\"{}\"];", i + 1, j + 1, w);
        }
        s.push_str("}\n");
        s
    }
}

pub fn dynkin(form: &IntersectionForm) -> DynkinGraph {
    let mu = form.mu();
    let mut edges = Vec::new();
    let mut adjacency = vec![Vec::new(); mu];
    for i in 0..mu {
        for j in 0..mu {
            if i != j && form.entry(i, j) != 0 {
                adjacency[i].push(j);
                if i < j {
                    edges.push((i, j, form.entry(i, j)));
                }
            }
        }
    }
    let mut seen = vec![false; mu];
    let mut queue = VecDeque::new();
    if mu > 0 {
        seen[0] = true;
        queue.push_back(0);
    }
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    DynkinGraph { mu, edges, adjacency, connected: seen.iter().all(|&s| s) }
}

/// Tame at the critical points and at infinity, with a connected diagram.
pub fn strongly_tame(tame: bool, graph: &DynkinGraph) -> bool {
    tame && graph.connected
}

/// Monodromy around one critical value; column `j` is the image of `δ_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PLOperator {
    pub index: usize,
    pub matrix: Vec<Vec<i64>>,
}

impl PLOperator {
    pub fn identity(mu: usize) -> Self {
        let matrix = (0..mu).map(|i| (0..mu).map(|j| i64::from(i == j)).collect()).collect();
        PLOperator { index: usize::MAX, matrix }
    }

    pub fn mu(&self) -> usize {
        self.matrix.len()
    }

    pub fn apply(&self, d: &CycleClass) -> CycleClass {
        CycleClass(self.matrix.iter().map(|row| row.iter().zip(&d.0).map(|(a, b)| a * b).sum()).collect())
    }

    fn checked_apply(&self, d: &[i64]) -> Option<Vec<i64>> {
        self.matrix
            .iter()
            .map(|row| {
                row.iter().zip(d).try_fold(0i64, |acc, (a, b)| acc.checked_add(a.checked_mul(*b)?))
            })
            .collect()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &PLOperator) -> PLOperator {
        let n = self.mu();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.matrix[i][k] * other.matrix[k][j]).sum()).collect())
            .collect();
        PLOperator { index: usize::MAX, matrix }
    }

    /// Inverse of a transvection `Id + N` with `N² = 0`.
    pub fn inverse(&self) -> PLOperator {
        let n = self.mu();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 2 - self.matrix[i][j] } else { -self.matrix[i][j] }).collect())
            .collect();
        PLOperator { index: self.index, matrix }
    }

    /// `Mᵀ I M = I`.
    pub fn preserves(&self, form: &IntersectionForm) -> bool {
        let n = self.mu();
        (0..n).all(|a| {
            (0..n).all(|b| {
                let mut s = 0;
                for i in 0..n {
                    for j in 0..n {
                        s += self.matrix[i][a] * form.entry(i, j) * self.matrix[j][b];
                    }
                }
                s == form.entry(a, b)
            })
        })
    }

    /// `(M − Id)² = 0`.
    pub fn is_unipotent(&self) -> bool {
        let n = self.mu();
        let nm = |i: usize, j: usize| self.matrix[i][j] - i64::from(i == j);
        (0..n).all(|i| (0..n).all(|j| (0..n).map(|k| nm(i, k) * nm(k, j)).sum::<i64>() == 0))
    }
}

/// `δ ↦ δ + σ⟨δ, δ_i⟩δ_i` in the distinguished basis.
pub fn picard_lefschetz(i: usize, form: &IntersectionForm) -> PLOperator {
    let mu = form.mu();
    let mut op = PLOperator::identity(mu);
    op.index = i;
    for j in 0..mu {
        op.matrix[i][j] += PL_SIGN * form.entry(j, i);
    }
    op
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitSpan {
    pub rank: usize,
    /// Depth levels explored.
    pub depth: usize,
    /// True when the depth bound was hit with the span still growing.
    pub depth_exhausted: bool,
}

/// Rank over `Q` of the orbit of `start` under `operators` and their inverses.
///
/// The search is breadth-first, but only vectors that enlarge the span are
/// expanded further, since the span of the orbit is the smallest invariant
/// subspace containing `start`.
pub fn monodromy_orbit_span(
    start: &CycleClass,
    operators: &[PLOperator],
    depth: Option<usize>,
) -> Result<OrbitSpan, HomologyError> {
    if start.is_zero() {
        return Err(HomologyError::ZeroStart);
    }
    let mu = start.len();
    let bound = depth.unwrap_or(2 * mu);
    let mut all = operators.to_vec();
    all.extend(operators.iter().map(PLOperator::inverse));
    let mut span = RationalSpan::default();
    span.insert(&start.0);
    let mut frontier = vec![start.0.clone()];
    let mut level = 0;
    while !frontier.is_empty() && span.rank() < mu && level < bound {
        level += 1;
        let mut next = Vec::new();
        for v in &frontier {
            for op in &all {
                let w = op.checked_apply(v).ok_or(HomologyError::Overflow)?;
                if span.insert(&w) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    let exhausted = span.rank() < mu && level >= bound && !frontier.is_empty();
    Ok(OrbitSpan { rank: span.rank(), depth: level, depth_exhausted: exhausted })
}

/// Reduced row echelon basis over `Q`.
#[derive(Default)]
struct RationalSpan {
    rows: Vec<(usize, Vec<BigRational>)>,
}

impl RationalSpan {
    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` if it is independent of the current rows.
    fn insert(&mut self, v: &[i64]) -> bool {
        let mut w: Vec<BigRational> = v.iter().map(|&a| BigRational::from_integer(BigInt::from(a))).collect();
        for (pivot, row) in &self.rows {
            let c = w[*pivot].clone();
            if !c.is_zero() {
                for (x, r) in w.iter_mut().zip(row) {
                    *x -= &c * r;
                }
            }
        }
        let Some(p) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let lead = w[p].clone();
        for x in w.iter_mut() {
            *x /= &lead;
        }
        for (_, row) in self.rows.iter_mut() {
            let c = row[p].clone();
            if !c.is_zero() {
                for (x, r) in row.iter_mut().zip(&w) {
                    *x -= &c * r;
                }
            }
        }
        debug_assert!(w[p].abs() == BigRational::from_integer(BigInt::from(1)));
        self.rows.push((p, w));
        true
    }
}

/// Integer rank over `Q` of a list of vectors.
pub fn rational_rank(vectors: &[Vec<i64>]) -> usize {
    let mut span = RationalSpan::default();
    for v in vectors {
        span.insert(v);
    }
    span.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(mu: usize) -> IntersectionForm {
        let mut m = vec![vec![0; mu]; mu];
        for i in 0..mu.saturating_sub(1) {
            m[i][i + 1] = 1;
            m[i + 1][i] = -1;
        }
        IntersectionForm::new(m).unwrap()
    }

    #[test]
    fn form_validation() {
        assert!(IntersectionForm::new(vec![vec![0, 1], vec![1, 0]]).is_err());
        assert!(IntersectionForm::new(vec![vec![1]]).is_err());
        let f = chain(3);
        assert_eq!(f.pair(&CycleClass(vec![1, 0, 0]), &CycleClass(vec![0, 1, 0])), 1);
        assert_eq!(f.pairing_row(&CycleClass(vec![0, 1, 0])), vec![-1, 0, 1]);
    }

    #[test]
    fn dynkin_examples() {
        let g = dynkin(&chain(2));
        assert!(g.connected);
        assert_eq!(g.edges, vec![(0, 1, 1)]);
        assert!(!dynkin(&IntersectionForm::zero(2)).connected);
        assert!(dynkin(&IntersectionForm::zero(1)).connected);
        let dot = g.to_dot();
        assert!(dot.contains("1 -- 2"));
        assert!(strongly_tame(true, &g) && !strongly_tame(false, &g));
    }

    #[test]
    fn picard_lefschetz_examples() {
        let f = chain(2);
        let m = picard_lefschetz(0, &f);
        assert_eq!(m.apply(&CycleClass::basis(0, 2)), CycleClass::basis(0, 2));
        let image = m.apply(&CycleClass::basis(1, 2));
        assert_eq!(image.0[1], 1);
        assert_eq!(image.0[0].abs(), 1);
        assert!(m.preserves(&f) && m.is_unipotent());
        assert_eq!(m.compose(&m.inverse()), PLOperator::identity(2));
        assert_eq!(picard_lefschetz(1, &IntersectionForm::zero(2)).matrix, PLOperator::identity(2).matrix);
    }

    #[test]
    fn orbit_span_examples() {
        let f = chain(2);
        let ops: Vec<PLOperator> = (0..2).map(|i| picard_lefschetz(i, &f)).collect();
        let r = monodromy_orbit_span(&CycleClass::basis(0, 2), &ops, None).unwrap();
        assert_eq!((r.rank, r.depth_exhausted), (2, false));
        let zero_ops: Vec<PLOperator> = (0..2).map(|i| picard_lefschetz(i, &IntersectionForm::zero(2))).collect();
        assert_eq!(monodromy_orbit_span(&CycleClass::basis(0, 2), &zero_ops, None).unwrap().rank, 1);
        assert_eq!(monodromy_orbit_span(&CycleClass(vec![1, 1]), &[PLOperator::identity(2)], None).unwrap().rank, 1);
        assert_eq!(monodromy_orbit_span(&CycleClass::zero(2), &ops, None), Err(HomologyError::ZeroStart));
        // a bound of zero levels stops before the orbit grows
        let r = monodromy_orbit_span(&CycleClass::basis(0, 2), &ops, Some(0)).unwrap();
        assert_eq!(r.rank, 1);
    }

    #[test]
    fn reference_model_is_an_a2_chain() {
        let model = crate::testing::reference_model();
        let tol = crate::Tolerances::default();
        let cycles = crate::fibration::realize_basis(&model, &tol).unwrap();
        let raw = crossing_count(&model, &cycles[0], &cycles[1]).unwrap();
        assert!((raw - raw.round()).abs() < 1e-6, "raw {raw}");
        let form = intersection_from_cycles(&model, &cycles).unwrap();
        assert_eq!(form.matrix(), &[vec![0, -1], vec![1, 0]]);
        // orientation reversal and sheet exchange both negate the pairing
        let rev = crossing_count(&model, &cycles[0], &cycles[1].reversed()).unwrap();
        let inv = crossing_count(&model, &cycles[0], &cycles[1].involuted()).unwrap();
        assert!((rev - 1.0).abs() < 1e-6 && (inv - 1.0).abs() < 1e-6);
        assert!(crossing_count(&model, &cycles[0], &cycles[0].involuted()).unwrap().abs() < 1e-6);
    }

    #[test]
    fn rank_over_rationals() {
        assert_eq!(rational_rank(&[vec![2, 4], vec![1, 2]]), 1);
        assert_eq!(rational_rank(&[vec![2, 4, 0], vec![1, 3, 0], vec![0, 0, 0]]), 2);
        assert_eq!(rational_rank(&[]), 0);
    }
}
