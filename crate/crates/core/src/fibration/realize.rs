use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::numeric::{cross, point_segment_distance, C64};

use super::{CycleRealization, FiberAt, FibrationError, FibrationModel, TPath, Vertex};

/// Below this distance to the critical value the vanishing pair comes from the quadratic model.
pub const NEAR_MODEL: f64 = 1e-6;

// segments longer than SPLIT × (distance to nearest branch point) are subdivided
const SPLIT: f64 = 0.5;
const MERGE: f64 = 0.2;
const MIN_VERTICES: usize = 24;
const MAX_VERTICES: usize = 200_000;

/// Distance from `c_k` at which the local loop is built before transport.
fn near_radius(model: &FibrationModel, k: usize) -> f64 {
    let c = model.value(k);
    let mut r = (c - model.base).norm();
    for (j, p) in model.critical.points.iter().enumerate() {
        if j != model.order[k] {
            r = r.min((p.value - c).norm());
        }
    }
    for (j, p) in model.paths.iter().enumerate() {
        if j != k {
            r = r.min(p.distance_to(c));
        }
    }
    let w = &model.paths[k].waypoints;
    r = r.min((w[w.len() - 2] - c).norm());
    0.25 * r
}

fn sheet_choice(y: C64) -> C64 {
    if y.re < -1e-14 * y.norm() || (y.re.abs() <= 1e-14 * y.norm() && y.im < 0.0) {
        -y
    } else {
        y
    }
}

/// Loop around the vanishing pair of cycle `k` on the fiber `t`, with `t` close to `c_k`.
///
/// The x-projection is an ellipse around the two branch points nearest to the
/// critical point, traversed counterclockwise from its point of largest real
/// part, starting on the sheet with `Re(y) ≥ 0`.
fn local_loop(model: &FibrationModel, k: usize, t: C64, vertices: usize) -> Result<CycleRealization, FibrationError> {
    let h = model.hyperelliptic()?;
    let c = model.value(k);
    let xc = model.critical_x(k);
    let mut fiber = model.fiber(t)?;
    let mut idx: Vec<usize> = (0..fiber.branch.len()).collect();
    idx.sort_by(|&a, &b| (fiber.branch[a] - xc).norm().total_cmp(&(fiber.branch[b] - xc).norm()));
    let (p, q) = (idx[0], idx[1]);
    if (t - c).norm() < NEAR_MODEL {
        let w = (-(t - c) * 2.0 / h.d2g.eval(xc)).sqrt();
        fiber.branch[p] = xc - w;
        fiber.branch[q] = xc + w;
    }
    let (e1, e2) = (fiber.branch[p], fiber.branch[q]);
    let hd = 0.5 * (e2 - e1).norm();
    if hd == 0.0 {
        return Err(FibrationError::ClearanceFailure(k));
    }
    let m = 0.5 * (e1 + e2);
    let u = (e2 - e1) / (2.0 * hd);
    let (a, b) = (2.0 * hd, 1.3 * hd);
    for (j, e) in fiber.branch.iter().enumerate() {
        if j == p || j == q {
            continue;
        }
        let w = (e - m) / u;
        if (w.re / a).powi(2) + (w.im / b).powi(2) < 2.25 {
            return Err(FibrationError::ClearanceFailure(k));
        }
    }
    let theta0 = (-b * u.im).atan2(a * u.re);
    let n = vertices.max(8);
    let xs: Vec<C64> = (0..n)
        .map(|j| {
            let th = theta0 + 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            m + u * C64::new(a * th.cos(), b * th.sin())
        })
        .collect();
    let y0 = sheet_choice((h.g.eval(xs[0]) + t).sqrt());
    let mut out = Vec::with_capacity(n + 1);
    out.push(Vertex { x: xs[0], y: y0 });
    for j in 1..=n {
        let prev = out[j - 1];
        let x = xs[j % n];
        let y = fiber.lift_to(prev.x, prev.y, x)?;
        out.push(Vertex { x, y });
    }
    if (out[n].y - y0).norm() > 1e-8 * (1.0 + y0.norm()) {
        return Err(FibrationError::ClearanceFailure(k));
    }
    out[n] = out[0];
    Ok(CycleRealization { t, vertices: out })
}

/// The vanishing cycle of path `k` on the fiber over `t ∈ γ_k`.
///
/// It is built near the critical value and transported back along `γ_k`.
pub fn realize_vanishing_cycle(
    model: &FibrationModel,
    k: usize,
    t: C64,
    tol: &Tolerances,
) -> Result<CycleRealization, FibrationError> {
    if k >= model.mu() {
        return Err(FibrationError::InvalidIndex(k));
    }
    let c = model.value(k);
    let path = &model.paths[k];
    if path.distance_to(t) > 1e-9 * (1.0 + t.norm()) || t == c {
        return Err(FibrationError::NotOnPath { index: k, t });
    }
    let mut rho = near_radius(model, k);
    if (t - c).norm() <= rho {
        if let Ok(cycle) = local_loop(model, k, t, tol.loop_samples) {
            return Ok(cycle);
        }
        rho = 0.5 * (t - c).norm();
    }
    let w = &path.waypoints;
    let back = (w[w.len() - 2] - c) / (w[w.len() - 2] - c).norm();
    for _ in 0..30 {
        let t_near = c + back * rho;
        match local_loop(model, k, t_near, tol.loop_samples) {
            Ok(cycle) => {
                let mut rev = path.reversed();
                rev.waypoints[0] = t_near;
                let route = rev.truncated_at(t);
                return transport_cycle(model, &cycle, &route);
            }
            Err(FibrationError::ClearanceFailure(_)) => rho *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(FibrationError::ClearanceFailure(k))
}

fn segment_branch_distance(fiber: &FiberAt<'_>, a: C64, b: C64) -> f64 {
    fiber.branch.iter().map(|e| point_segment_distance(*e, a, b)).fold(f64::INFINITY, f64::min)
}

fn triangle_contains(a: C64, b: C64, c: C64, p: C64) -> bool {
    let d1 = cross(b - a, p - a);
    let d2 = cross(c - b, p - b);
    let d3 = cross(a - c, p - c);
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

fn same_sheet(a: C64, b: C64) -> bool {
    (a - b).norm() < (a + b).norm()
}

/// All vanishing cycles of the distinguished basis on the base fiber.
pub fn realize_basis(model: &FibrationModel, tol: &Tolerances) -> Result<Vec<CycleRealization>, FibrationError> {
    (0..model.mu()).map(|k| realize_vanishing_cycle(model, k, model.base, tol)).collect()
}

/// Basis cycles carried from their fiber to `t` along the straight segment.
pub fn basis_at(
    model: &FibrationModel,
    basis: &[CycleRealization],
    t: C64,
) -> Result<Vec<CycleRealization>, FibrationError> {
    let Some(first) = basis.first() else {
        return Ok(Vec::new());
    };
    if t == first.t {
        return Ok(basis.to_vec());
    }
    let path = TPath::segment(first.t, t);
    basis.iter().map(|c| transport_cycle(model, c, &path)).collect()
}

/// Subdivides segments that are long compared with their distance to the
/// branch points, then merges runs of short segments where the triangle they
/// span contains no branch point. Both operations keep the homotopy class.
pub(crate) fn refine(fiber: &FiberAt<'_>, vertices: Vec<Vertex>, merge: bool) -> Result<Vec<Vertex>, FibrationError> {
    let mut out: Vec<Vertex> = Vec::with_capacity(vertices.len());
    out.push(vertices[0]);
    for w in vertices.windows(2) {
        let mut stack = vec![w[1]];
        let mut depth = 0;
        while let Some(b) = stack.last().copied() {
            let a = *out.last().unwrap();
            let len = (b.x - a.x).norm();
            let ds = segment_branch_distance(fiber, a.x, b.x);
            if len > SPLIT * ds {
                depth += 1;
                if depth > 4000 || out.len() + stack.len() > MAX_VERTICES || ds < 1e-14 {
                    return Err(FibrationError::LiftFailure { x: a.x });
                }
                let y = fiber.lift(a.x, a.y, b.x, &[0.5])?[0];
                stack.push(Vertex { x: 0.5 * (a.x + b.x), y });
            } else {
                out.push(b);
                stack.pop();
            }
        }
    }
    if !merge || out.len() <= MIN_VERTICES {
        return Ok(out);
    }
    let n = out.len();
    let mut kept: Vec<Vertex> = Vec::with_capacity(n);
    kept.push(out[0]);
    let mut remaining = n;
    for k in 1..n - 1 {
        let (p, v, q) = (*kept.last().unwrap(), out[k], out[k + 1]);
        if remaining > MIN_VERTICES {
            let len = (q.x - p.x).norm();
            let ds = segment_branch_distance(fiber, p.x, q.x);
            let empty = !fiber.branch.iter().any(|e| triangle_contains(p.x, v.x, q.x, *e));
            if len <= MERGE * ds && empty {
                let y = fiber.lift_to(p.x, p.y, q.x)?;
                if same_sheet(y, q.y) {
                    remaining -= 1;
                    continue;
                }
            }
        }
        kept.push(v);
    }
    kept.push(out[n - 1]);
    Ok(kept)
}

/// Moves a loop from the fiber `real.t` along `path` by the normal flow
/// `dZ/dt = conj(∇f)/|∇f|²`.
///
/// Steps are accepted only when no branch point can cross the polyline during
/// the step and every segment still lifts consistently onto the new fiber.
pub fn transport_cycle(
    model: &FibrationModel,
    real: &CycleRealization,
    path: &TPath,
) -> Result<CycleRealization, FibrationError> {
    model.hyperelliptic()?;
    if (path.start() - real.t).norm() > 1e-12 * (1.0 + real.t.norm()) {
        return Err(FibrationError::PathMismatch { start: path.start(), expected: real.t });
    }
    let mut vertices = real.vertices.clone();
    let mut branch = model.fiber(real.t)?.branch;
    let mut t = real.t;
    for w in path.waypoints.windows(2) {
        (vertices, branch) = transport_piece(model, vertices, branch, w[0], w[1])?;
        t = w[1];
    }
    let fiber = model.surface.fiber(t, Some(&branch))?;
    let vertices = refine(&fiber, vertices, false)?;
    Ok(CycleRealization { t, vertices })
}

fn flow_step(model: &FibrationModel, v: Vertex, dt: C64, t_new: C64) -> Vertex {
    let s = &model.surface;
    let field = |x: C64, y: C64| -> (C64, C64) {
        let (fx, fy) = s.gradient(x, y);
        let n = fx.norm_sqr() + fy.norm_sqr();
        (fx.conj() * dt / n, fy.conj() * dt / n)
    };
    let (x, y) = (v.x, v.y);
    let k1 = field(x, y);
    let k2 = field(x + k1.0 * 0.5, y + k1.1 * 0.5);
    let k3 = field(x + k2.0 * 0.5, y + k2.1 * 0.5);
    let k4 = field(x + k3.0, y + k3.1);
    let xn = x + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) / 6.0;
    let yn = y + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) / 6.0;
    Vertex { x: xn, y: s.project_y(xn, yn, t_new) }
}

fn transport_piece(
    model: &FibrationModel,
    mut vertices: Vec<Vertex>,
    mut branch: Vec<C64>,
    a: C64,
    b: C64,
) -> Result<(Vec<Vertex>, Vec<C64>), FibrationError> {
    let len = (b - a).norm();
    if len == 0.0 {
        return Ok((vertices, branch));
    }
    let mut s = 0.0f64;
    let mut h = 1.0f64;
    let mut t = a;
    while s < 1.0 {
        let fiber = model.surface.fiber(t, Some(&branch))?;
        vertices = refine(&fiber, vertices, true)?;
        let clearance = model.clearance(t);
        let step = h.min(1.0 - s).min(0.25 * clearance / len);
        let t_new = if s + step >= 1.0 { b } else { a + (b - a) * (s + step) };
        let dt = t_new - t;
        let moved: Vec<Vertex> = vertices.iter().map(|v| flow_step(model, *v, dt, t_new)).collect();
        let new_fiber = model.surface.fiber(t_new, Some(&branch))?;
        if step_is_safe(&fiber, &new_fiber, &vertices, &moved) {
            vertices = moved;
            branch = new_fiber.branch;
            t = t_new;
            s = if t_new == b { 1.0 } else { s + step };
            h = (2.0 * step).min(1.0);
        } else {
            h = 0.5 * step;
            if h * len < 1e-13 * (1.0 + t.norm()) {
                return Err(FibrationError::StepUnderflow { t });
            }
        }
    }
    Ok((vertices, branch))
}

fn step_is_safe(old: &FiberAt<'_>, new: &FiberAt<'_>, before: &[Vertex], after: &[Vertex]) -> bool {
    let disp: Vec<f64> = old
        .branch
        .iter()
        .map(|e| new.branch.iter().map(|f| (f - e).norm()).fold(f64::INFINITY, f64::min))
        .collect();
    for k in 0..before.len() - 1 {
        let sweep = (after[k].x - before[k].x).norm().max((after[k + 1].x - before[k + 1].x).norm());
        for (e, d) in old.branch.iter().zip(&disp) {
            if point_segment_distance(*e, before[k].x, before[k + 1].x) <= 2.0 * (sweep + d) {
                return false;
            }
        }
        match new.lift_to(after[k].x, after[k].y, after[k + 1].x) {
            Ok(y) if same_sheet(y, after[k + 1].y) => {}
            _ => return false,
        }
    }
    true
}

/// A formal product of paths on one fiber.
///
/// Each piece is an open polyline lifted like a [`CycleRealization`]; pieces
/// are traversed in order. Based words have consecutive pieces joined end to
/// start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopWord {
    pub t: C64,
    pub pieces: Vec<Vec<Vertex>>,
}

impl LoopWord {
    pub fn from_cycle(c: &CycleRealization) -> Self {
        LoopWord { t: c.t, pieces: vec![c.vertices.clone()] }
    }

    pub fn then(&self, other: &LoopWord) -> LoopWord {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        LoopWord { t: self.t, pieces }
    }

    pub fn inverse(&self) -> LoopWord {
        LoopWord {
            t: self.t,
            pieces: self.pieces.iter().rev().map(|p| p.iter().rev().copied().collect()).collect(),
        }
    }

    /// True when consecutive pieces join and the word closes up.
    pub fn is_continuous(&self, tol: f64) -> bool {
        let close = |a: &Vertex, b: &Vertex| (a.x - b.x).norm() + (a.y - b.y).norm() <= tol * (1.0 + a.y.norm());
        let n = self.pieces.len();
        (0..n).all(|k| close(self.pieces[k].last().unwrap(), &self.pieces[(k + 1) % n][0]))
    }

    /// The word as a single polyline; requires continuity.
    pub fn flattened(&self) -> Result<Vec<Vertex>, FibrationError> {
        if !self.is_continuous(1e-9) {
            return Err(FibrationError::DiscontinuousWord);
        }
        let mut out: Vec<Vertex> = Vec::new();
        for p in &self.pieces {
            let skip = usize::from(!out.is_empty());
            out.extend_from_slice(&p[skip..]);
        }
        Ok(out)
    }
}

fn tail_path(fiber: &FiberAt<'_>, p: Vertex, qx: C64) -> Result<Vec<Vertex>, FibrationError> {
    let d = qx - p.x;
    if d.norm() < 1e-14 * (1.0 + qx.norm()) {
        return Ok(vec![p]);
    }
    let mid = p.x + d * 0.5;
    let mut routes: Vec<Vec<C64>> = vec![vec![p.x, qx]];
    for s in [0.25, -0.25, 0.5, -0.5, 1.0, -1.0] {
        routes.push(vec![p.x, mid + d * C64::new(0.0, s), qx]);
    }
    let score = |r: &Vec<C64>| {
        r.windows(2).map(|w| segment_branch_distance(fiber, w[0], w[1])).fold(f64::INFINITY, f64::min)
    };
    let threshold = 0.05 * d.norm();
    let route = routes
        .iter()
        .find(|r| score(r) >= threshold)
        .or_else(|| routes.iter().max_by(|a, b| score(a).total_cmp(&score(b))))
        .unwrap();
    let mut vertices = vec![p];
    for w in route.windows(2) {
        let prev = *vertices.last().unwrap();
        let y = fiber.lift_to(prev.x, prev.y, w[1])?;
        vertices.push(Vertex { x: w[1], y });
    }
    refine(fiber, vertices, false)
}

/// Based loop for a word in cycles: every letter becomes a lasso from the
/// first vertex of the first letter's cycle. `letters[k].1` marks an inverse.
///
/// When a tail arrives on the other sheet the letter uses the loop `ι(c)⁻¹`,
/// which is homologous to `c` because the sheet exchange acts as `−1`.
pub fn based_word(
    model: &FibrationModel,
    letters: &[(&CycleRealization, bool)],
) -> Result<LoopWord, FibrationError> {
    let Some(first) = letters.first() else {
        return Err(FibrationError::DiscontinuousWord);
    };
    let t = first.0.t;
    let fiber = model.fiber(t)?;
    let p = first.0.vertices[0];
    let mut pieces = Vec::new();
    for (cycle, inverse) in letters {
        let q = cycle.vertices[0];
        let tail = tail_path(&fiber, p, q.x)?;
        let arrival = tail.last().unwrap().y;
        let mut lasso = if same_sheet(arrival, q.y) { (*cycle).clone() } else { cycle.involuted().reversed() };
        if *inverse {
            lasso = lasso.reversed();
        }
        let mut body = lasso.vertices;
        let n = body.len();
        body[0] = *tail.last().unwrap();
        body[n - 1] = body[0];
        if tail.len() > 1 {
            pieces.push(tail.clone());
        }
        pieces.push(body);
        if tail.len() > 1 {
            pieces.push(tail.iter().rev().copied().collect());
        }
    }
    Ok(LoopWord { t, pieces })
}

/// Based commutator `a b a⁻¹ b⁻¹`.
pub fn commutator(model: &FibrationModel, a: &CycleRealization, b: &CycleRealization) -> Result<LoopWord, FibrationError> {
    based_word(model, &[(a, false), (b, false), (a, true), (b, true)])
}
