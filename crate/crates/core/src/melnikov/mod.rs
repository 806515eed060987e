//! First Melnikov functions of single cycles and the second-order term of
//! commutator holonomies, sampled over base values.
//!
//! Values are normalized to the holonomy expansion `h_ε(t) − t = ε M₁(t) + ε² M₂(t) + …`
//! in the coordinate `t = f` on a vertical transversal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::PlanarOneForm;
use crate::fibration::{based_word, basis_at, CycleRealization, FibrationError, FibrationModel, LoopWord};
use crate::holonomy::Letter;
use crate::homology::CycleClass;
use crate::numeric::C64;
use crate::periods::{gm_derivative, iterated_integral, period, restrict_to_fiber, FiberForm, PeriodsError};
use crate::Tolerances;

/// `M₁ = M1_SIGN · ∫_δ ω`, calibrated against fitted holonomy maps.
pub const M1_SIGN: f64 = -1.0;
/// `M₂ = M2_SIGN · ∫_{[δ₁,δ₂]} ω ω′` for the commutator, calibrated the same way.
pub const M2_SIGN: f64 = 1.0;
/// Fewest samples on which a curve may be declared identically zero.
pub const MIN_ZERO_SAMPLES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MelnikovError {
    #[error("class has {got} coefficients, basis has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no base values to sample")]
    NoSamples,
    #[error(transparent)]
    Periods(#[from] PeriodsError),
    #[error(transparent)]
    Fibration(#[from] FibrationError),
}

/// `n` points on the circle of radius `clearance(b)/4` around the base value.
pub fn default_t_grid(model: &FibrationModel, n: usize) -> Vec<C64> {
    let r = 0.25 * model.clearance(model.base);
    (0..n)
        .map(|k| model.base + C64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64))
        .collect()
}

/// Letters of a class: `δ_j^{a_j}` in index order.
pub fn class_letters(class: &CycleClass) -> Vec<Letter> {
    class
        .0
        .iter()
        .enumerate()
        .flat_map(|(j, &a)| std::iter::repeat_n(Letter::new(j, a < 0), a.unsigned_abs() as usize))
        .collect()
}

/// `A B A⁻¹ B⁻¹` for words `A`, `B` of two classes; empty if either class is zero.
pub fn class_commutator_letters(a: &CycleClass, b: &CycleClass) -> Vec<Letter> {
    let (la, lb) = (class_letters(a), class_letters(b));
    if la.is_empty() || lb.is_empty() {
        return Vec::new();
    }
    let inv = |w: &[Letter]| -> Vec<Letter> { w.iter().rev().map(|l| Letter::new(l.cycle, !l.inverse)).collect() };
    [la.clone(), lb.clone(), inv(&la), inv(&lb)].concat()
}

fn check(basis: &[CycleRealization], class: &CycleClass) -> Result<(), MelnikovError> {
    if class.len() != basis.len() {
        return Err(MelnikovError::DimensionMismatch { expected: basis.len(), got: class.len() });
    }
    Ok(())
}

/// `ω|_fiber` and its Gauss-Manin derivative.
pub fn fiber_forms(model: &FibrationModel, omega: &PlanarOneForm) -> Result<(FiberForm, FiberForm), MelnikovError> {
    let w = restrict_to_fiber(omega, model.hyperelliptic()?);
    let dw = gm_derivative(&w);
    Ok((w, dw))
}

fn class_period(
    model: &FibrationModel,
    cycles: &[CycleRealization],
    class: &CycleClass,
    form: &FiberForm,
    tol: f64,
) -> Result<(C64, f64), MelnikovError> {
    let weight: f64 = class.0.iter().map(|a| a.unsigned_abs() as f64).sum::<f64>().max(1.0);
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    for (j, &a) in class.0.iter().enumerate() {
        if a != 0 {
            let p = period(model, &cycles[j], form, tol / weight)?;
            value += p.value * a as f64;
            error += p.error * (a as f64).abs();
        }
    }
    Ok((value, error))
}

/// One sample of a Melnikov curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelnikovValue {
    pub t: C64,
    pub value: C64,
    pub error: f64,
}

/// `M₁` of a class at each base value.
pub fn m1(
    model: &FibrationModel,
    basis: &[CycleRealization],
    class: &CycleClass,
    omega: &PlanarOneForm,
    ts: &[C64],
    tol: f64,
) -> Result<Vec<MelnikovValue>, MelnikovError> {
    check(basis, class)?;
    let (w, _) = fiber_forms(model, omega)?;
    ts.iter()
        .map(|&t| {
            let cycles = basis_at(model, basis, t)?;
            let (v, e) = class_period(model, &cycles, class, &w, tol)?;
            Ok(MelnikovValue { t, value: v * M1_SIGN, error: e })
        })
        .collect()
}

/// `M₂` of the commutator of two classes as the period determinant
/// `∫_{δ₁}ω ∫_{δ₂}ω′ − ∫_{δ₂}ω ∫_{δ₁}ω′`.
pub fn m2_commutator_det(
    model: &FibrationModel,
    basis: &[CycleRealization],
    d1: &CycleClass,
    d2: &CycleClass,
    omega: &PlanarOneForm,
    ts: &[C64],
    tol: f64,
) -> Result<Vec<MelnikovValue>, MelnikovError> {
    check(basis, d1)?;
    check(basis, d2)?;
    let (w, dw) = fiber_forms(model, omega)?;
    ts.iter()
        .map(|&t| {
            let cycles = basis_at(model, basis, t)?;
            let (a1, ea1) = class_period(model, &cycles, d1, &w, tol)?;
            let (a2, ea2) = class_period(model, &cycles, d2, &w, tol)?;
            let (b1, eb1) = class_period(model, &cycles, d1, &dw, tol)?;
            let (b2, eb2) = class_period(model, &cycles, d2, &dw, tol)?;
            let value = a1 * b2 - a2 * b1;
            let error = ea1 * b2.norm() + eb2 * a1.norm() + ea2 * b1.norm() + eb1 * a2.norm();
            Ok(MelnikovValue { t, value: value * M2_SIGN, error })
        })
        .collect()
}

/// Based loop word of the commutator at `t`, or `None` if either class is zero.
pub fn commutator_word(
    model: &FibrationModel,
    basis: &[CycleRealization],
    d1: &CycleClass,
    d2: &CycleClass,
    t: C64,
) -> Result<Option<LoopWord>, MelnikovError> {
    let letters = class_commutator_letters(d1, d2);
    if letters.is_empty() {
        return Ok(None);
    }
    let cycles = basis_at(model, basis, t)?;
    let refs: Vec<(&CycleRealization, bool)> = letters.iter().map(|l| (&cycles[l.cycle], l.inverse)).collect();
    Ok(Some(based_word(model, &refs)?))
}

/// `M₂` of the commutator as the iterated integral `∫ ω ω′` over its loop word.
pub fn m2_commutator_iterated(
    model: &FibrationModel,
    basis: &[CycleRealization],
    d1: &CycleClass,
    d2: &CycleClass,
    omega: &PlanarOneForm,
    ts: &[C64],
    tol: f64,
) -> Result<Vec<MelnikovValue>, MelnikovError> {
    check(basis, d1)?;
    check(basis, d2)?;
    let (w, dw) = fiber_forms(model, omega)?;
    let forms = [w, dw];
    ts.iter()
        .map(|&t| {
            let Some(word) = commutator_word(model, basis, d1, d2, t)? else {
                return Ok(MelnikovValue { t, value: C64::new(0.0, 0.0), error: 0.0 });
            };
            let (v, e) = iterated_integral(model, &word, &forms, tol)?;
            Ok(MelnikovValue { t, value: v * M2_SIGN, error: e })
        })
        .collect()
}

/// Zero verdict on a sampled curve: enough samples and all below `tol`.
pub fn identically_zero(values: &[MelnikovValue], tol: f64) -> bool {
    values.len() >= MIN_ZERO_SAMPLES && values.iter().all(|v| v.value.norm() <= tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelnikovCurve {
    pub name: String,
    pub class: Vec<i64>,
    pub values: Vec<MelnikovValue>,
    pub identically_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelnikovReport {
    pub ts: Vec<C64>,
    pub m1: Vec<MelnikovCurve>,
    /// Commutator pair as classes, when requested.
    pub pair: Option<(Vec<i64>, Vec<i64>)>,
    pub m2_det: Vec<MelnikovValue>,
    pub m2_iterated: Vec<MelnikovValue>,
    /// `max_t |M₂^det − M₂^iterated|`.
    pub discrepancy: f64,
    pub m2_identically_zero: bool,
}

impl MelnikovReport {
    /// CSV with columns `t_re,t_im`, then `M1_<name>_re,M1_<name>_im` per curve,
    /// then `M2det_re,M2det_im,M2it_re,M2it_im` when a pair was given.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["t_re".to_string(), "t_im".to_string()];
        for c in &self.m1 {
            header.push(format!("M1_{}_re", c.name));
            header.push(format!("M1_{}_im", c.name));
        }
        let with_m2 = self.pair.is_some();
        if with_m2 {
            header.extend(["M2det_re", "M2det_im", "M2it_re", "M2it_im"].map(String::from));
        }
        let mut out = header.join(",");
        out.push('\n');
        for (i, t) in self.ts.iter().enumerate() {
            let mut row = vec![*t];
            row.extend(self.m1.iter().map(|c| c.values[i].value));
            if with_m2 {
                row.push(self.m2_det[i].value);
                row.push(self.m2_iterated[i].value);
            }
            let cells: Vec<String> = row.iter().flat_map(|z| [format!("{:.16e}", z.re), format!("{:.16e}", z.im)]).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// `M₁` for each named class and, for a pair, `M₂` of its commutator both ways.
pub fn melnikov_report(
    model: &FibrationModel,
    basis: &[CycleRealization],
    cycles: &[(String, CycleClass)],
    pair: Option<(&CycleClass, &CycleClass)>,
    omega: &PlanarOneForm,
    ts: &[C64],
    tol: &Tolerances,
) -> Result<MelnikovReport, MelnikovError> {
    if ts.is_empty() {
        return Err(MelnikovError::NoSamples);
    }
    let m1_curves = cycles
        .iter()
        .map(|(name, class)| {
            let values = m1(model, basis, class, omega, ts, tol.period)?;
            let zero = identically_zero(&values, tol.zero_verdict);
            Ok(MelnikovCurve { name: name.clone(), class: class.0.clone(), values, identically_zero: zero })
        })
        .collect::<Result<Vec<_>, MelnikovError>>()?;
    let (m2_det, m2_iterated) = match pair {
        Some((a, b)) => (
            m2_commutator_det(model, basis, a, b, omega, ts, tol.period)?,
            m2_commutator_iterated(model, basis, a, b, omega, ts, tol.iterated)?,
        ),
        None => (Vec::new(), Vec::new()),
    };
    let discrepancy = m2_det.iter().zip(&m2_iterated).map(|(d, i)| (d.value - i.value).norm()).fold(0.0, f64::max);
    let m2_identically_zero = pair.is_some() && identically_zero(&m2_det, tol.zero_verdict);
    Ok(MelnikovReport {
        ts: ts.to_vec(),
        m1: m1_curves,
        pair: pair.map(|(a, b)| (a.0.clone(), b.0.clone())),
        m2_det,
        m2_iterated,
        discrepancy,
        m2_identically_zero,
    })
}

#[cfg(test)]
mod tests;
