//! Floating-point building blocks: univariate complex polynomials, simultaneous
//! root extraction, Gauss-Legendre rules and the collocation integration matrix.

use std::cmp::Ordering;
use std::sync::LazyLock;

use num_complex::Complex;

pub type C64 = Complex<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Order of the per-segment Gauss-Legendre rule used by quadrature and collocation.
pub const GL_ORDER: usize = 16;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Lexicographic comparison on (Re, Im) where real parts closer than `tol` count as equal.
pub fn cmp_lex(a: C64, b: C64, tol: f64) -> Ordering {
    if (a.re - b.re).abs() > tol {
        a.re.partial_cmp(&b.re).unwrap_or(Ordering::Equal)
    } else if (a.im - b.im).abs() > tol {
        a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal)
    } else {
        Ordering::Equal
    }
}

/// Dense univariate polynomial with complex coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<C64>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C64::new(0.0, 0.0));
        }
        UniPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == C64::new(0.0, 0.0)
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// Value and first derivative by a single Horner sweep.
    pub fn eval_d(&self, x: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::new(vec![]);
        }
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Adds a constant to the polynomial.
    pub fn shifted(&self, t: C64) -> UniPoly {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] += t;
        UniPoly::new(coeffs)
    }

    /// Sum of |c_k| |x|^k, the scale used for relative residuals.
    pub fn magnitude_at(&self, x: C64) -> f64 {
        let r = x.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("root iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
}

/// Result of simultaneous root extraction.
#[derive(Clone, Debug)]
pub struct Roots {
    /// Roots sorted lexicographically on (Re, Im).
    pub roots: Vec<C64>,
    /// Groups of indices (into `roots`) whose members coincide to the clustering threshold.
    pub clusters: Vec<Vec<usize>>,
}

impl Roots {
    pub fn is_degenerate(&self) -> bool {
        !self.clusters.is_empty()
    }
}

const ABERTH_MAX_ITERS: usize = 500;

/// All roots of `p` by Aberth-Ehrlich iteration, optionally warm-started.
///
/// The raw iterates are polished by Newton; near-multiple roots are refined on
/// the appropriate derivative so that the copies of a multiple root land on the
/// same point, then grouped by `cluster_tol`.
pub fn all_roots(p: &UniPoly, initial: Option<&[C64]>, cluster_tol: f64) -> Result<Roots, RootError> {
    if p.is_zero() {
        return Err(RootError::ZeroPolynomial);
    }
    let n = p.degree();
    if n == 0 {
        return Ok(Roots { roots: vec![], clusters: vec![] });
    }
    let lead = p.coeffs[n];
    let monic = UniPoly::new(p.coeffs.iter().map(|c| c / lead).collect());
    let mut z = match initial {
        Some(init) if init.len() == n => init.to_vec(),
        _ => initial_guesses(&monic),
    };
    aberth_iterate(&monic, &mut z)?;
    let mut roots: Vec<C64> = z.iter().map(|&r| polish_root(&monic, r)).collect();
    roots.sort_by(|a, b| cmp_lex(*a, *b, 0.0));
    let clusters = cluster(&roots, cluster_tol);
    // snap multiple roots onto their common value
    for group in &clusters {
        let mean = group.iter().map(|&k| roots[k]).sum::<C64>() / group.len() as f64;
        for &k in group {
            roots[k] = mean;
        }
    }
    roots.sort_by(|a, b| cmp_lex(*a, *b, 0.0));
    let clusters = cluster(&roots, cluster_tol);
    Ok(Roots { roots, clusters })
}

fn initial_guesses(monic: &UniPoly) -> Vec<C64> {
    let n = monic.degree();
    // Fujiwara-type bound on root moduli
    let radius = monic.coeffs[..n]
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm().powf(1.0 / (n - k) as f64))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let centre = -monic.coeffs[n - 1] / n as f64;
    (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            centre + C64::from_polar(radius, angle)
        })
        .collect()
}

fn aberth_iterate(p: &UniPoly, z: &mut [C64]) -> Result<(), RootError> {
    let n = z.len();
    if n == 1 {
        z[0] = -p.coeffs[0];
        return Ok(());
    }
    for _ in 0..ABERTH_MAX_ITERS {
        let mut max_step: f64 = 0.0;
        let mut max_mod: f64 = 0.0;
        for k in 0..n {
            let (v, dv) = p.eval_d(z[k]);
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let ratio = v / dv;
            let repulsion: C64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| {
                    let d = z[k] - z[j];
                    if d == C64::new(0.0, 0.0) {
                        C64::new(1e300, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                max_step = max_step.max(step.norm());
            } else {
                // derivative vanished: nudge off the stationary point
                z[k] += C64::new(1e-8, 1e-8) * (1.0 + z[k].norm());
                max_step = f64::INFINITY;
            }
            max_mod = max_mod.max(z[k].norm());
        }
        if max_step <= 4.0 * f64::EPSILON * (1.0 + max_mod) {
            return Ok(());
        }
    }
    // Multiple roots slow the iteration down; accept if the residuals are small.
    let ok = z
        .iter()
        .all(|&r| p.eval(r).norm() <= 1e-6 * p.magnitude_at(r).max(1.0));
    if ok {
        Ok(())
    } else {
        Err(RootError::NoConvergence(ABERTH_MAX_ITERS))
    }
}

/// Newton polishing; for a near-multiple root, Newton on the first derivative
/// that does not vanish there.
pub fn polish_root(p: &UniPoly, mut r: C64) -> C64 {
    let mut target = p.clone();
    let mut d = p.derivative();
    // find multiplicity estimate m: p, p', ..., p^(m-1) small at r
    for _ in 0..p.degree() {
        let scale = d.magnitude_at(r).max(f64::MIN_POSITIVE);
        if d.eval(r).norm() > 1e-6 * scale || d.degree() == 0 {
            break;
        }
        target = d.clone();
        d = d.derivative();
    }
    for _ in 0..60 {
        let (v, dv) = target.eval_d(r);
        if dv == C64::new(0.0, 0.0) {
            break;
        }
        let step = v / dv;
        if !step.is_finite() {
            break;
        }
        r -= step;
        if step.norm() <= 1e-16 * (1.0 + r.norm()) {
            break;
        }
    }
    r
}

fn cluster(sorted: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = sorted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, k: usize) -> usize {
        let mut r = k;
        while p[r] != r {
            r = p[r];
        }
        p[k] = r;
        r
    }
    for a in 0..n {
        for b in a + 1..n {
            if (sorted[a] - sorted[b]).norm() <= tol * (1.0 + sorted[a].norm()) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[rb] = ra;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for k in 0..n {
        let r = find(&mut parent, k);
        groups.entry(r).or_default().push(k);
    }
    groups.into_values().filter(|g| g.len() > 1).collect()
}

/// Gauss-Legendre nodes and weights on [0, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn gauss_legendre(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // map [-1, 1] -> [0, 1], ascending
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    GaussRule { nodes, weights }
}

/// Gauss-Legendre rule together with the collocation matrix
/// `S[k][l] = ∫_0^{u_k} ℓ_l(u) du` for the Lagrange basis on the nodes.
#[derive(Debug, Clone)]
pub struct Collocation {
    pub rule: GaussRule,
    pub integration: Vec<Vec<f64>>,
}

impl Collocation {
    pub fn new(n: usize) -> Self {
        let rule = gauss_legendre(n);
        let u = &rule.nodes;
        let lagrange = |l: usize, v: f64| -> f64 {
            (0..n)
                .filter(|&m| m != l)
                .map(|m| (v - u[m]) / (u[l] - u[m]))
                .product()
        };
        let integration = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        rule.nodes
                            .iter()
                            .zip(&rule.weights)
                            .map(|(&q, &w)| w * u[k] * lagrange(l, u[k] * q))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Collocation { rule, integration }
    }
}

pub static COLLOCATION: LazyLock<Collocation> = LazyLock::new(|| Collocation::new(GL_ORDER));

/// Point closest to `guess` among the two square roots of `w`.
pub fn sqrt_near(w: C64, guess: C64) -> C64 {
    let r = w.sqrt();
    if (r - guess).norm_sqr() <= (r + guess).norm_sqr() {
        r
    } else {
        -r
    }
}

/// Distance from point `p` to the segment [a, b].
pub fn point_segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a) * d.conj()).re / len2;
    let s = s.clamp(0.0, 1.0);
    (p - (a + d * s)).norm()
}

/// Intersection parameters (s, u) of segments a0->a1 and b0->b1 when they cross
/// properly, with s, u in the half-open range [0, 1).
pub fn segment_crossing(a0: C64, a1: C64, b0: C64, b1: C64) -> Option<(f64, f64)> {
    let da = a1 - a0;
    let db = b1 - b0;
    let denom = cross(da, db);
    if denom == 0.0 {
        return None;
    }
    let w = b0 - a0;
    let s = cross(w, db) / denom;
    let u = cross(w, da) / denom;
    if (0.0..1.0).contains(&s) && (0.0..1.0).contains(&u) {
        Some((s, u))
    } else {
        None
    }
}

/// Planar cross product Im(conj(a) b).
pub fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Winding number of a closed polygon around `p`.
pub fn winding_number(poly: &[C64], p: C64) -> i64 {
    let n = poly.len();
    let mut total = 0.0;
    for k in 0..n {
        let a = poly[k] - p;
        let b = poly[(k + 1) % n] - p;
        total += (b / a).arg();
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let rule = gauss_legendre(GL_ORDER);
        for deg in 0..(2 * GL_ORDER) {
            let approx: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            assert!((approx - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn collocation_matrix_integrates_low_degree_exactly() {
        let col = &*COLLOCATION;
        for deg in 0..GL_ORDER {
            for (k, &uk) in col.rule.nodes.iter().enumerate() {
                let approx: f64 = col.integration[k]
                    .iter()
                    .zip(&col.rule.nodes)
                    .map(|(s, u)| s * u.powi(deg as i32))
                    .sum();
                let exact = uk.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cubic_roots_sorted() {
        // x^3 - 3x
        let p = UniPoly::new(vec![c(0.0, 0.0), c(-3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let r = all_roots(&p, None, 1e-8).unwrap();
        let s3 = 3f64.sqrt();
        let expected = [-s3, 0.0, s3];
        for (got, want) in r.roots.iter().zip(expected) {
            assert!((got - c(want, 0.0)).norm() < 1e-14);
        }
        assert!(!r.is_degenerate());
    }

    #[test]
    fn double_root_is_clustered() {
        // x^3 - 3x + 2 = (x - 1)^2 (x + 2)
        let p = UniPoly::new(vec![c(2.0, 0.0), c(-3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let r = all_roots(&p, None, 1e-8).unwrap();
        assert_eq!(r.clusters, vec![vec![1, 2]]);
        assert!((r.roots[0] - c(-2.0, 0.0)).norm() < 1e-14);
        assert!((r.roots[1] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn winding_and_crossing_helpers() {
        let square = [c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, -1.0)];
        assert_eq!(winding_number(&square, c(0.0, 0.0)), 1);
        assert_eq!(winding_number(&square, c(3.0, 0.0)), 0);
        let hit = segment_crossing(c(-1.0, 0.0), c(1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0));
        assert_eq!(hit, Some((0.5, 0.5)));
        assert!(cross(c(1.0, 0.0), c(0.0, 1.0)) > 0.0);
    }
}
