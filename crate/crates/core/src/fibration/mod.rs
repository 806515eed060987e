//! Base geometry of the fibration: distinguished paths, branch points, and
//! vanishing cycles realized as loops on fibers.

pub mod branch;
pub mod realize;
pub mod surface;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{BivarPoly, CriticalSet};
use crate::config::Tolerances;
use crate::numeric::{cross, point_segment_distance, segment_crossing, C64};

pub use branch::{branch_points, track_branch_points, BranchTrace};
pub use realize::{based_word, basis_at, commutator, realize_basis, realize_vanishing_cycle, transport_cycle, LoopWord};
pub use surface::{FiberAt, Hyperelliptic, Surface};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FibrationError {
    #[error("base point within {distance:.3e} of critical value {index}")]
    BasePointTooClose { index: usize, distance: f64 },
    #[error("critical values {0} and {1} are not separated")]
    CoincidentCriticalValues(usize, usize),
    #[error("could not route a path to critical value {0} without crossings")]
    UnresolvableCrossing(usize),
    #[error("root solver failed: {0}")]
    RootSolveFailure(String),
    #[error("root labels ambiguous near t = {t}")]
    LabelAmbiguity { t: C64 },
    #[error("no admissible loop around the vanishing pair of cycle {0}")]
    ClearanceFailure(usize),
    #[error("transport step underflow near t = {t}")]
    StepUnderflow { t: C64 },
    #[error("sheet continuation failed near x = {x}")]
    LiftFailure { x: C64 },
    #[error("operation needs a fiber of the form y^2 = g(x) + t")]
    NotHyperelliptic,
    #[error("cycle index {0} out of range")]
    InvalidIndex(usize),
    #[error("t = {t} does not lie on the path of cycle {index}")]
    NotOnPath { index: usize, t: C64 },
    #[error("path starts at {start}, expected {expected}")]
    PathMismatch { start: C64, expected: C64 },
    #[error("loop pieces do not join")]
    DiscontinuousWord,
}

/// Polyline in the t-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TPath {
    pub waypoints: Vec<C64>,
}

impl TPath {
    /// Drops repeated consecutive waypoints.
    pub fn new(mut waypoints: Vec<C64>) -> Self {
        waypoints.dedup();
        TPath { waypoints }
    }

    pub fn segment(a: C64, b: C64) -> Self {
        TPath::new(vec![a, b])
    }

    /// Closed counterclockwise circle `center + r e^{iθ}`, from `θ = start`.
    pub fn circle(center: C64, radius: f64, start: f64, vertices: usize) -> Self {
        TPath::new(
            (0..=vertices)
                .map(|k| {
                    let th = if k == vertices { start } else { start + 2.0 * PI * k as f64 / vertices as f64 };
                    center + C64::from_polar(radius, th)
                })
                .collect(),
        )
    }

    pub fn start(&self) -> C64 {
        self.waypoints[0]
    }

    pub fn end(&self) -> C64 {
        *self.waypoints.last().unwrap()
    }

    pub fn then(&self, other: &TPath) -> TPath {
        let mut w = self.waypoints.clone();
        w.extend_from_slice(&other.waypoints);
        TPath::new(w)
    }

    pub fn reversed(&self) -> TPath {
        TPath { waypoints: self.waypoints.iter().rev().copied().collect() }
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn distance_to(&self, p: C64) -> f64 {
        if self.waypoints.len() == 1 {
            return (p - self.waypoints[0]).norm();
        }
        self.waypoints
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// The part of the path from its start up to the point closest to `p`.
    pub fn truncated_at(&self, p: C64) -> TPath {
        let mut best = (f64::INFINITY, 0);
        for (k, w) in self.waypoints.windows(2).enumerate() {
            let d = point_segment_distance(p, w[0], w[1]);
            if d < best.0 {
                best = (d, k);
            }
        }
        let mut pts: Vec<C64> = self.waypoints[..=best.1].to_vec();
        pts.push(p);
        TPath::new(pts)
    }
}

/// A point of a fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub x: C64,
    pub y: C64,
}

/// A closed loop on the fiber `t`.
///
/// The loop is the polyline through `vertices` in the x-plane (last vertex
/// equal to the first), lifted to the fiber by continuing `y` along each
/// straight segment from the stored value at its start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRealization {
    pub t: C64,
    pub vertices: Vec<Vertex>,
}

impl CycleRealization {
    pub fn xs(&self) -> Vec<C64> {
        self.vertices.iter().map(|v| v.x).collect()
    }

    /// Same loop traversed backwards.
    pub fn reversed(&self) -> CycleRealization {
        CycleRealization { t: self.t, vertices: self.vertices.iter().rev().copied().collect() }
    }

    /// Image under the sheet exchange `y ↦ −y`.
    pub fn involuted(&self) -> CycleRealization {
        CycleRealization {
            t: self.t,
            vertices: self.vertices.iter().map(|v| Vertex { x: v.x, y: -v.y }).collect(),
        }
    }

    pub fn closure_gap(&self) -> f64 {
        let (a, b) = (self.vertices[0], *self.vertices.last().unwrap());
        (a.x - b.x).norm() + (a.y - b.y).norm()
    }

    /// Winding number of the x-projection around `p`.
    pub fn winding_around(&self, p: C64) -> i64 {
        let xs = self.xs();
        crate::numeric::winding_number(&xs[..xs.len() - 1], p)
    }

    /// `n` points at uniform x-arclength, as `(s, vertex)` with `s ∈ [0, 1)`.
    pub fn samples(&self, fiber: &FiberAt<'_>, n: usize) -> Result<Vec<(f64, Vertex)>, FibrationError> {
        let segs: Vec<f64> = self.vertices.windows(2).map(|w| (w[1].x - w[0].x).norm()).collect();
        let total: f64 = segs.iter().sum();
        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        let mut before = 0.0;
        for k in 0..n {
            let s = k as f64 / n as f64;
            let target = s * total;
            while seg + 1 < segs.len() && before + segs[seg] < target {
                before += segs[seg];
                seg += 1;
            }
            let frac = if segs[seg] > 0.0 { ((target - before) / segs[seg]).clamp(0.0, 1.0) } else { 0.0 };
            let (a, b) = (self.vertices[seg], self.vertices[seg + 1]);
            let y = fiber.lift(a.x, a.y, b.x, &[frac])?[0];
            out.push((s, Vertex { x: a.x + (b.x - a.x) * frac, y }));
        }
        Ok(out)
    }

    /// CSV with columns `s,x_re,x_im,y_re,y_im`.
    pub fn to_csv(&self, fiber: &FiberAt<'_>, n: usize) -> Result<String, FibrationError> {
        let mut out = String::from("s,x_re,x_im,y_re,y_im\n");
        for (s, v) in self.samples(fiber, n)? {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                s, v.x.re, v.x.im, v.y.re, v.y.im
            ));
        }
        Ok(out)
    }
}

/// `f` with its critical data, a base value and a distinguished system of paths.
#[derive(Debug, Clone)]
pub struct FibrationModel {
    pub f: BivarPoly,
    pub surface: Surface,
    pub critical: CriticalSet,
    pub base: C64,
    /// `paths[k]` runs from the base to the critical value of basis cycle `k`.
    pub paths: Vec<TPath>,
    /// `order[k]` is the index into `critical.points` of basis cycle `k`.
    pub order: Vec<usize>,
}

impl FibrationModel {
    pub fn mu(&self) -> usize {
        self.order.len()
    }

    /// Critical value at the end of path `k`.
    pub fn value(&self, k: usize) -> C64 {
        self.critical.points[self.order[k]].value
    }

    pub fn values(&self) -> Vec<C64> {
        (0..self.mu()).map(|k| self.value(k)).collect()
    }

    pub fn critical_x(&self, k: usize) -> C64 {
        self.critical.points[self.order[k]].x
    }

    pub fn hyperelliptic(&self) -> Result<&Hyperelliptic, FibrationError> {
        self.surface.hyperelliptic().ok_or(FibrationError::NotHyperelliptic)
    }

    pub fn fiber(&self, t: C64) -> Result<FiberAt<'_>, FibrationError> {
        self.surface.fiber(t, None)
    }

    /// Distance from `t` to the nearest critical value.
    pub fn clearance(&self, t: C64) -> f64 {
        self.critical.points.iter().map(|p| (p.value - t).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Closed loop based at `b` going once counterclockwise around critical value `k` alone.
    pub fn simple_loop(&self, k: usize) -> TPath {
        let c = self.value(k);
        let path = &self.paths[k];
        let mut r = 0.5 * (c - self.base).norm();
        for (j, p) in self.paths.iter().enumerate() {
            if j != k {
                r = r.min(0.5 * p.distance_to(c));
            }
        }
        for p in &self.critical.points {
            if (p.value - c).norm() > 0.0 {
                r = r.min(0.5 * (p.value - c).norm());
            }
        }
        let n = path.waypoints.len();
        let before = path.waypoints[n - 2];
        let dir = (before - c) / (before - c).norm();
        let entry = c + dir * r;
        let approach = path.truncated_at(entry);
        let circle = TPath::circle(c, r, dir.arg(), 64);
        approach.then(&circle).then(&approach.reversed())
    }
}

/// Default base value: the centroid of the critical values, moved off their
/// diameter by 1.5 diameters in the perpendicular direction.
pub fn default_base_point(values: &[C64]) -> C64 {
    if values.is_empty() {
        return C64::new(0.0, 0.0);
    }
    let centroid = values.iter().sum::<C64>() / values.len() as f64;
    let mut diam = (0.0, values[0], values[0]);
    for a in values {
        for b in values {
            let d = (a - b).norm();
            if d > diam.0 {
                diam = (d, *a, *b);
            }
        }
    }
    if diam.0 == 0.0 {
        return centroid + C64::new(0.0, 1.0);
    }
    let perp = (diam.2 - diam.1) * C64::new(0.0, 1.0) / diam.0;
    centroid + perp * (1.5 * diam.0)
}

/// Straight paths from `base` to each critical value, bent around critical
/// values they would pass too close to, ordered counterclockwise by their
/// initial direction (angles in `[0, 2π)` from the positive real axis).
pub fn build_distinguished_system(
    f: &BivarPoly,
    critical: CriticalSet,
    base: Option<C64>,
    tol: &Tolerances,
) -> Result<FibrationModel, FibrationError> {
    let values = critical.values();
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            if (values[a] - values[b]).norm() < tol.value_separation {
                return Err(FibrationError::CoincidentCriticalValues(a, b));
            }
        }
    }
    let base = base.unwrap_or_else(|| default_base_point(&values));
    for (k, c) in values.iter().enumerate() {
        let d = (c - base).norm();
        if d < 10.0 * tol.path_clearance {
            return Err(FibrationError::BasePointTooClose { index: k, distance: d });
        }
    }
    let min_sep = values
        .iter()
        .enumerate()
        .flat_map(|(a, ca)| values[a + 1..].iter().map(move |cb| (ca - cb).norm()))
        .fold(f64::INFINITY, f64::min);
    let margin = tol.path_clearance.max(0.05 * min_sep.min(1e6));

    let mut paths = Vec::with_capacity(values.len());
    for (i, &target) in values.iter().enumerate() {
        paths.push(route(base, target, i, &values, margin)?);
    }
    // initial direction ordering
    let angle = |p: &TPath| {
        let d = p.waypoints[1] - p.waypoints[0];
        let a = d.im.atan2(d.re);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| angle(&paths[a]).total_cmp(&angle(&paths[b])));
    let paths: Vec<TPath> = order.iter().map(|&k| paths[k].clone()).collect();
    for a in 0..paths.len() {
        for b in a + 1..paths.len() {
            if paths_meet_away_from_base(&paths[a], &paths[b]) {
                return Err(FibrationError::UnresolvableCrossing(order[b]));
            }
        }
    }
    Ok(FibrationModel { f: f.clone(), surface: Surface::new(f), critical, base, paths, order })
}

fn route(base: C64, target: C64, index: usize, values: &[C64], margin: f64) -> Result<TPath, FibrationError> {
    let mut path = TPath::segment(base, target);
    for attempt in 0..8 {
        let offender = values.iter().enumerate().find(|(j, c)| {
            *j != index && (**c - target).norm() > 0.0 && path.distance_to(**c) < margin
        });
        let Some((_, &c)) = offender else {
            return Ok(path);
        };
        let dir = (target - base) / (target - base).norm();
        let side = if attempt % 2 == 0 { 1.0 } else { -1.0 };
        let r = (2.0 + attempt as f64) * margin;
        path = TPath::new(vec![base, c + dir * C64::new(0.0, side * r), target]);
    }
    Err(FibrationError::UnresolvableCrossing(index))
}

fn paths_meet_away_from_base(p: &TPath, q: &TPath) -> bool {
    let (pw, qw) = (&p.waypoints, &q.waypoints);
    for i in 0..pw.len() - 1 {
        for j in 0..qw.len() - 1 {
            let (a0, a1, b0, b1) = (pw[i], pw[i + 1], qw[j], qw[j + 1]);
            if i == 0 && j == 0 {
                let (da, db) = (a1 - a0, b1 - b0);
                let collinear = cross(da, db).abs() <= 1e-12 * da.norm() * db.norm();
                if collinear && (da * db.conj()).re > 0.0 {
                    return true;
                }
                continue;
            }
            if segment_crossing(a0, a1, b0, b1).is_some() {
                return true;
            }
            let touch = point_segment_distance(a1, b0, b1).min(point_segment_distance(b1, a0, a1));
            if touch < 1e-12 {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{critical_set, parse_poly, CriticalPoint};
    use crate::numeric::c;

    fn fake_critical(values: &[C64]) -> CriticalSet {
        CriticalSet {
            points: values
                .iter()
                .map(|&v| CriticalPoint { x: v, y: c(0.0, 0.0), value: v, hessian: c(1.0, 0.0), degenerate: false })
                .collect(),
        }
    }

    #[test]
    fn reference_system_is_two_opposite_segments() {
        let f = parse_poly("y^2 - x^3 + 3x").unwrap();
        let tol = Tolerances::default();
        let crit = critical_set(&f, &tol).unwrap();
        let m = build_distinguished_system(&f, crit, Some(c(0.0, 0.0)), &tol).unwrap();
        assert!((m.value(0) - c(2.0, 0.0)).norm() < 1e-13);
        assert!((m.value(1) - c(-2.0, 0.0)).norm() < 1e-13);
        assert_eq!(m.paths[0].waypoints.len(), 2);
        assert!((m.paths[0].end() - c(2.0, 0.0)).norm() < 1e-13);
        assert!((m.paths[1].end() - c(-2.0, 0.0)).norm() < 1e-13);
        assert!(m.hyperelliptic().is_ok());
    }

    #[test]
    fn single_and_degenerate_systems() {
        let f = BivarPoly::x();
        let tol = Tolerances::default();
        let m = build_distinguished_system(&f, fake_critical(&[c(1.0, 0.0)]), Some(c(0.0, 0.0)), &tol).unwrap();
        assert_eq!(m.paths.len(), 1);
        let err = build_distinguished_system(
            &f,
            fake_critical(&[c(1.0, 0.0), c(1.0 + 1e-12, 0.0)]),
            Some(c(0.0, 0.0)),
            &tol,
        )
        .unwrap_err();
        assert_eq!(err, FibrationError::CoincidentCriticalValues(0, 1));
        let err = build_distinguished_system(&f, fake_critical(&[c(1.0, 0.0)]), Some(c(1.0, 0.05)), &tol);
        assert!(matches!(err, Err(FibrationError::BasePointTooClose { .. })));
    }

    #[test]
    fn collinear_values_get_a_detour() {
        let f = BivarPoly::x();
        let tol = Tolerances::default();
        let m = build_distinguished_system(
            &f,
            fake_critical(&[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0)]),
            Some(c(0.0, 0.0)),
            &tol,
        )
        .unwrap();
        assert_eq!(m.values()[0], c(1.0, 0.0));
        let detour = m.paths.iter().find(|p| p.end() == c(2.0, 0.0)).unwrap();
        assert_eq!(detour.waypoints.len(), 3);
        assert!(detour.distance_to(c(1.0, 0.0)) >= 0.05);
        for a in 0..3 {
            for b in a + 1..3 {
                assert!(!paths_meet_away_from_base(&m.paths[a], &m.paths[b]));
            }
        }
    }

    #[test]
    fn default_base_is_off_the_diameter() {
        let b = default_base_point(&[c(2.0, 0.0), c(-2.0, 0.0)]);
        assert!((b - c(0.0, -6.0)).norm() < 1e-14 || (b - c(0.0, 6.0)).norm() < 1e-14);
    }
}
