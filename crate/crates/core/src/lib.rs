//! Numerics for deformations `df + εω` of plane Hamiltonian foliations.
//!
//! The crate computes vanishing cycles and their intersection form, periods
//! and iterated integrals on hyperelliptic fibers, first and second Melnikov
//! functions, and direct holonomy maps of the deformed foliation.

pub mod algebra;
pub mod config;
pub mod fibration;
pub mod holonomy;
pub mod homology;
pub mod melnikov;
pub mod numeric;
pub mod periods;

pub use config::Tolerances;

#[cfg(test)]
pub(crate) mod testing {
    use crate::algebra::{critical_set, parse_poly};
    use crate::fibration::{build_distinguished_system, FibrationModel};
    use crate::numeric::c;
    use crate::Tolerances;

    // ∫_0^√3 √(3x − x³) dx and ∫_0^√3 dx/√(3x − x³), frozen from the real-axis oracle in periods tests
    pub const K: f64 = 1.892_209_472_169_974_6;
    pub const L: f64 = 1.992_332_899_583_490_5;

    /// `y² − x³ + 3x` with base value 0.
    pub fn reference_model() -> FibrationModel {
        let f = parse_poly("y^2 - x^3 + 3x").unwrap();
        let tol = Tolerances::default();
        build_distinguished_system(&f, critical_set(&f, &tol).unwrap(), Some(c(0.0, 0.0)), &tol).unwrap()
    }
}
