use serde::{Deserialize, Serialize};

use super::critical::{critical_set, CriticalSet};
use super::exact::{uni_degree, uni_derivative, uni_gcd};
use super::poly::{coeff_to_c64, BivarPoly, Coeff};
use super::{hyperelliptic_part, AlgebraError};
use crate::config::Tolerances;
use crate::numeric::{all_roots, UniPoly, C64};

pub const NOTE_AT_INFINITY_HYPERELLIPTIC: &str = "at-infinity genericity violated; working hypotheses \
(connected Dynkin, generating vanishing cycles) still hold for this family";
pub const NOTE_PLANE_CONSTANTS: &str = "divisor at infinity and H1(U)=0: constant for U = affine plane; \
non-rationality of generic fiber not checked";
pub const NOTE_DEGREE_SURROGATE: &str = "pole order of forms along the divisor at infinity replaced by \
the total degree of the coefficients";

/// A point `[x : y]` of the line at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveRoot {
    pub x: C64,
    pub y: C64,
    pub multiplicity: usize,
}

/// Genericity checks on a plane polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TamenessReport {
    pub milnor: usize,
    pub nondegenerate: bool,
    /// Indices of critical points with a vanishing Hessian.
    pub degenerate_points: Vec<usize>,
    pub distinct_values: bool,
    /// Pairs of critical points whose values coincide.
    pub coinciding_values: Vec<(usize, usize)>,
    pub distinct_roots_at_infinity: bool,
    pub roots_at_infinity: Vec<ProjectiveRoot>,
    pub verdict: bool,
    pub notes: Vec<String>,
}

pub fn tameness_report(f: &BivarPoly, tol: &Tolerances) -> Result<TamenessReport, AlgebraError> {
    let crit = critical_set(f, tol)?;
    Ok(tameness_from_critical(f, &crit, tol))
}

pub fn tameness_from_critical(f: &BivarPoly, crit: &CriticalSet, tol: &Tolerances) -> TamenessReport {
    let degenerate_points: Vec<usize> = crit
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.degenerate || p.hessian.norm() < tol.hessian_floor)
        .map(|(k, _)| k)
        .collect();
    let mut coinciding_values = Vec::new();
    for a in 0..crit.points.len() {
        for b in a + 1..crit.points.len() {
            if (crit.points[a].value - crit.points[b].value).norm() < tol.value_separation {
                coinciding_values.push((a, b));
            }
        }
    }
    let (distinct_at_inf, roots_at_infinity) = top_form_roots(f, tol);
    let nondegenerate = degenerate_points.is_empty();
    let distinct_values = coinciding_values.is_empty();
    let mut notes = vec![NOTE_PLANE_CONSTANTS.to_string(), NOTE_DEGREE_SURROGATE.to_string()];
    if let Some(g) = hyperelliptic_part(f) {
        if uni_degree(&g).unwrap_or(0) >= 3 {
            notes.insert(0, NOTE_AT_INFINITY_HYPERELLIPTIC.to_string());
        }
    }
    TamenessReport {
        milnor: crit.milnor(),
        nondegenerate,
        degenerate_points,
        distinct_values,
        coinciding_values,
        distinct_roots_at_infinity: distinct_at_inf,
        roots_at_infinity,
        verdict: nondegenerate && distinct_values && distinct_at_inf,
        notes,
    }
}

/// Projective roots of the top homogeneous part, with an exact squarefree test.
fn top_form_roots(f: &BivarPoly, tol: &Tolerances) -> (bool, Vec<ProjectiveRoot>) {
    let Some(d) = f.degree() else {
        return (false, vec![]);
    };
    let top = f.homogeneous_part(d);
    // dehomogenize at y = 1: a_i is the coefficient of x^i y^(d-i)
    let a: Vec<Coeff> = (0..=d).map(|i| top.coeff(i, d - i)).collect();
    let deg_a = uni_degree(&a).unwrap_or(0);
    let at_x_axis = d as usize - deg_a; // multiplicity of [1 : 0]
    let squarefree = deg_a == 0 || uni_degree(&uni_gcd(&a, &uni_derivative(&a))) == Some(0);
    let distinct = at_x_axis <= 1 && squarefree;

    let mut roots = Vec::new();
    if deg_a > 0 {
        let numeric = UniPoly::new(a[..=deg_a].iter().map(coeff_to_c64).collect());
        if let Ok(r) = all_roots(&numeric, None, tol.root_cluster.max(1e-6)) {
            let mut taken = vec![false; r.roots.len()];
            for group in &r.clusters {
                for &k in group {
                    taken[k] = true;
                }
                roots.push(ProjectiveRoot { x: r.roots[group[0]], y: C64::new(1.0, 0.0), multiplicity: group.len() });
            }
            for (k, z) in r.roots.iter().enumerate() {
                if !taken[k] {
                    roots.push(ProjectiveRoot { x: *z, y: C64::new(1.0, 0.0), multiplicity: 1 });
                }
            }
        }
    }
    if at_x_axis > 0 {
        roots.push(ProjectiveRoot {
            x: C64::new(1.0, 0.0),
            y: C64::new(0.0, 0.0),
            multiplicity: at_x_axis,
        });
    }
    (distinct, roots)
}
