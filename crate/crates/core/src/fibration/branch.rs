use serde::{Deserialize, Serialize};

use crate::numeric::{all_roots, Roots, UniPoly, C64};

use super::{FibrationError, TPath};

/// Roots of `g(x) + t`, sorted by (Re, Im), with multiplicity clusters.
pub fn branch_points(g: &UniPoly, t: C64) -> Result<Roots, FibrationError> {
    if g.degree() < 2 {
        return Err(FibrationError::NotHyperelliptic);
    }
    all_roots(&g.shifted(t), None, 1e-8).map_err(|e| FibrationError::RootSolveFailure(e.to_string()))
}

/// Labelled roots of `g + t` followed along a path in the t-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTrace {
    /// Parameter values visited, as points of the t-plane.
    pub ts: Vec<C64>,
    /// `tracks[k]` is the polyline of root `k`; labels follow the initial sorted order.
    pub tracks: Vec<Vec<C64>>,
    /// Labels of the two roots that meet at the end of the path, if any do.
    pub colliding: Option<(usize, usize)>,
}

const MIN_STEP: f64 = 1e-13;

/// Follows the roots of `g + t` along `path` with adaptive steps.
///
/// A step is accepted when every root moves less than a third of its distance
/// to the nearest other root; otherwise it is halved. The endpoint may be a
/// critical value, where two roots collide.
pub fn track_branch_points(g: &UniPoly, path: &TPath) -> Result<BranchTrace, FibrationError> {
    let start = path.waypoints[0];
    let mut roots = branch_points(g, start)?.roots;
    let mut trace = BranchTrace { ts: vec![start], tracks: roots.iter().map(|r| vec![*r]).collect(), colliding: None };
    let n = roots.len();
    let pieces: Vec<(C64, C64)> = path.waypoints.windows(2).map(|w| (w[0], w[1])).collect();
    let last_piece = pieces.len().saturating_sub(1);
    for (piece, &(a, b)) in pieces.iter().enumerate() {
        let length = (b - a).norm();
        if length == 0.0 {
            continue;
        }
        let final_piece = piece == last_piece;
        let mut s = 0.0f64;
        let mut h = 0.05f64;
        // stop short of the endpoint on the final piece; roots may collide there
        let s_end = if final_piece { 1.0 - 1e-9 } else { 1.0 };
        while s < s_end {
            let step = h.min(s_end - s);
            let t = a + (b - a) * (s + step);
            let next = all_roots(&g.shifted(t), Some(&roots), 1e-14)
                .map_err(|e| FibrationError::RootSolveFailure(e.to_string()))?
                .roots;
            match match_labels(&roots, &next) {
                Some(ordered) => {
                    s += step;
                    roots = ordered;
                    trace.ts.push(t);
                    for (k, r) in roots.iter().enumerate() {
                        trace.tracks[k].push(*r);
                    }
                    h = (h * 1.5).min(0.1);
                }
                None => {
                    h *= 0.5;
                    if h * length < MIN_STEP * (1.0 + length) {
                        return Err(FibrationError::LabelAmbiguity { t });
                    }
                }
            }
        }
    }
    let end = *path.waypoints.last().unwrap();
    let finals = branch_points(g, end)?;
    if let Some(group) = finals.clusters.first() {
        let meet = finals.roots[group[0]];
        let mut by_distance: Vec<(f64, usize)> = (0..n).map(|k| ((roots[k] - meet).norm(), k)).collect();
        by_distance.sort_by(|p, q| p.0.total_cmp(&q.0));
        let (p, q) = (by_distance[0].1.min(by_distance[1].1), by_distance[0].1.max(by_distance[1].1));
        trace.colliding = Some((p, q));
    }
    let assigned = assign_endpoint(&roots, &finals.roots);
    trace.ts.push(end);
    for (k, r) in assigned.into_iter().enumerate() {
        trace.tracks[k].push(r);
    }
    Ok(trace)
}

// Reorders `next` to follow `prev`; None if some root moves too far relative to the separation.
fn match_labels(prev: &[C64], next: &[C64]) -> Option<Vec<C64>> {
    let n = prev.len();
    let mut used = vec![false; n];
    let mut out = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        let sep = (0..n)
            .filter(|&j| j != k)
            .map(|j| (prev[j] - prev[k]).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = if sep.is_finite() { sep / 3.0 } else { f64::INFINITY };
        let (best, dist) = (0..n)
            .filter(|&j| !used[j])
            .map(|j| (j, (next[j] - prev[k]).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        if dist > radius {
            return None;
        }
        used[best] = true;
        out[k] = next[best];
    }
    Some(out)
}

fn assign_endpoint(prev: &[C64], next: &[C64]) -> Vec<C64> {
    prev.iter()
        .map(|p| *next.iter().min_by(|a, b| (*a - p).norm().total_cmp(&(*b - p).norm())).unwrap())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::c;

    fn cubic() -> UniPoly {
        UniPoly::new(vec![c(0.0, 0.0), c(-3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
    }

    #[test]
    fn branch_points_of_reference_cubic() {
        let r = branch_points(&cubic(), c(0.0, 0.0)).unwrap();
        let s3 = 3f64.sqrt();
        for (got, want) in r.roots.iter().zip([-s3, 0.0, s3]) {
            assert!((got - c(want, 0.0)).norm() < 1e-13);
        }
        let r = branch_points(&cubic(), c(2.0, 0.0)).unwrap();
        assert_eq!(r.clusters, vec![vec![1, 2]]);
        assert!((r.roots[0] - c(-2.0, 0.0)).norm() < 1e-13);
        assert!((r.roots[1] - c(1.0, 0.0)).norm() < 1e-7);
        let sq = UniPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let r = branch_points(&sq, c(-1.0, 0.0)).unwrap();
        assert!((r.roots[0] - c(-1.0, 0.0)).norm() < 1e-14 && (r.roots[1] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn tracking_finds_colliding_pairs() {
        let up = track_branch_points(&cubic(), &TPath::segment(c(0.0, 0.0), c(2.0, 0.0))).unwrap();
        // labels follow the sorted roots at t = 0: {-√3, 0, √3}
        assert_eq!(up.colliding, Some((1, 2)));
        assert!((up.tracks[1].last().unwrap() - c(1.0, 0.0)).norm() < 1e-6);
        let down = track_branch_points(&cubic(), &TPath::segment(c(0.0, 0.0), c(-2.0, 0.0))).unwrap();
        assert_eq!(down.colliding, Some((0, 1)));
        assert!((down.tracks[0].last().unwrap() - c(-1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn constant_path_keeps_roots() {
        let p = TPath::new(vec![c(0.5, 0.5)]);
        let tr = track_branch_points(&cubic(), &p).unwrap();
        let r0 = branch_points(&cubic(), c(0.5, 0.5)).unwrap().roots;
        for (track, r) in tr.tracks.iter().zip(r0) {
            assert!(track.iter().all(|z| (z - r).norm() < 1e-13));
        }
        assert_eq!(tr.colliding, None);
    }
}
