use serde::{Deserialize, Serialize};

/// Every numeric threshold used by the library, in one place.
///
/// Defaults are the documented values; scenario files may override any field
/// and reports echo the effective set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Gradient residual after Newton polishing of critical points.
    pub critical_residual: f64,
    /// Minimum separation for critical values to count as distinct.
    pub value_separation: f64,
    /// Root clustering threshold (relative to 1 + |root|).
    pub root_cluster: f64,
    /// Hessian determinant below which a critical point is degenerate.
    pub hessian_floor: f64,
    /// Target absolute error of a period.
    pub period: f64,
    /// Target absolute error of an iterated integral.
    pub iterated: f64,
    /// Local error target of the holonomy ODE per segment.
    pub holonomy_local: f64,
    /// On-fiber residual bound for stored loop vertices.
    pub fiber_residual: f64,
    /// Minimal distance between a base point or path and a critical value.
    pub path_clearance: f64,
    /// Maximal deviation of a numeric monodromy matrix from its rounding.
    pub monodromy_rounding: f64,
    /// Bound for "identically zero" Melnikov verdicts.
    pub zero_verdict: f64,
    /// Scaled ε² coefficient above which holonomies are reported non-commuting.
    pub commutation: f64,
    /// Least-squares residual accepted for a relative exactness witness.
    pub exactness_residual: f64,
    /// Bound on |ε ω(∂_t Z)| along a leaf transport.
    pub divergence_guard: f64,
    /// Vertices per realized loop.
    pub loop_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            critical_residual: 1e-12,
            value_separation: 1e-9,
            root_cluster: 1e-8,
            hessian_floor: 1e-9,
            period: 1e-10,
            iterated: 1e-10,
            holonomy_local: 1e-12,
            fiber_residual: 1e-10,
            path_clearance: 1e-2,
            monodromy_rounding: 1e-6,
            zero_verdict: 1e-9,
            commutation: 1e-6,
            exactness_residual: 1e-10,
            divergence_guard: 0.5,
            loop_samples: 512,
        }
    }
}

impl Tolerances {
    /// Scales every accuracy target by `factor`; structural parameters are untouched.
    pub fn scaled(&self, factor: f64) -> Tolerances {
        Tolerances {
            critical_residual: self.critical_residual * factor,
            period: self.period * factor,
            iterated: self.iterated * factor,
            holonomy_local: self.holonomy_local * factor,
            fiber_residual: self.fiber_residual * factor,
            monodromy_rounding: self.monodromy_rounding * factor,
            zero_verdict: self.zero_verdict * factor,
            exactness_residual: self.exactness_residual * factor,
            ..self.clone()
        }
    }
}
