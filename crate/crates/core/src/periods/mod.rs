//! Periods of fiber forms over realized cycles, their continuation along
//! loops in the t-plane, and Chen iterated integrals over loop words.

mod form;
mod quadrature;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibration::{transport_cycle, CycleRealization, FibrationError, FibrationModel, LoopWord, TPath, Vertex};
use crate::homology::CycleClass;
use crate::numeric::C64;

pub use form::{gm_derivative, restrict_to_fiber, FiberForm};

/// Period matrices with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e8;
/// Periods below this modulus are treated as zero in ratios.
pub const RATIO_FLOOR: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeriodsError {
    #[error("form has a pole on the integration path near x = {x}")]
    PoleOnPath { x: C64 },
    #[error("error estimate {error:e} exceeds tolerance {tol:e}")]
    ToleranceNotMet { value: C64, error: f64, tol: f64 },
    #[error("period matrix condition number {condition:e} is too large")]
    IllConditionedPeriodMatrix { condition: f64 },
    #[error("period of the reference cycle vanishes at the base value")]
    DegenerateRatio,
    #[error("expected {expected} items, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Fibration(#[from] FibrationError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodValue {
    pub value: C64,
    /// Absolute error estimate.
    pub error: f64,
    pub cycle: String,
    pub form: String,
    pub t: C64,
}

impl PeriodValue {
    pub fn tagged(mut self, cycle: impl Into<String>, form: impl Into<String>) -> Self {
        self.cycle = cycle.into();
        self.form = form.into();
        self
    }
}

fn checked(value: C64, error: f64, tol: f64, t: C64) -> Result<PeriodValue, PeriodsError> {
    if error > tol {
        return Err(PeriodsError::ToleranceNotMet { value, error, tol });
    }
    Ok(PeriodValue { value, error, cycle: String::new(), form: String::new(), t })
}

fn pieces_of(word: &LoopWord) -> Vec<&[Vertex]> {
    word.pieces.iter().map(|p| p.as_slice()).collect()
}

/// `∫_δ φ` over a realized cycle.
pub fn period(
    model: &FibrationModel,
    real: &CycleRealization,
    phi: &FiberForm,
    tol: f64,
) -> Result<PeriodValue, PeriodsError> {
    let fiber = model.fiber(real.t)?;
    let (j, err) = quadrature::chen_integrals(&fiber, &[real.vertices.as_slice()], std::slice::from_ref(phi), tol)?;
    checked(j[1], err, tol, real.t)
}

/// `∫ φ` over a loop word.
pub fn period_word(model: &FibrationModel, word: &LoopWord, phi: &FiberForm, tol: f64) -> Result<PeriodValue, PeriodsError> {
    let value = iterated_integral(model, word, std::slice::from_ref(phi), tol)?;
    checked(value.0, value.1, tol, word.t)
}

/// `∫ η₁η₂⋯η_k` over a loop word, with `η₁` integrated first; returns the value
/// and its error estimate.
pub fn iterated_integral(
    model: &FibrationModel,
    word: &LoopWord,
    forms: &[FiberForm],
    tol: f64,
) -> Result<(C64, f64), PeriodsError> {
    if forms.is_empty() {
        return Ok((C64::new(1.0, 0.0), 0.0));
    }
    let fiber = model.fiber(word.t)?;
    let (j, err) = quadrature::chen_integrals(&fiber, &pieces_of(word), forms, tol)?;
    let value = j[forms.len()];
    if err > tol {
        return Err(PeriodsError::ToleranceNotMet { value, error: err, tol });
    }
    Ok((value, err))
}

/// Periods of `forms[k]` over `cycles[j]`, as `table[k][j]`.
pub fn period_table(
    model: &FibrationModel,
    cycles: &[CycleRealization],
    forms: &[FiberForm],
    tol: f64,
) -> Result<Vec<Vec<PeriodValue>>, PeriodsError> {
    let tasks: Vec<(usize, usize)> = (0..forms.len()).flat_map(|k| (0..cycles.len()).map(move |j| (k, j))).collect();
    let values: Vec<PeriodValue> = tasks
        .par_iter()
        .map(|&(k, j)| period(model, &cycles[j], &forms[k], tol).map(|p| p.tagged(format!("delta{}", j + 1), forms[k].to_string())))
        .collect::<Result<_, _>>()?;
    let mut it = values.into_iter();
    Ok((0..forms.len()).map(|_| it.by_ref().take(cycles.len()).collect()).collect())
}

fn combine(class: &CycleClass, values: &[PeriodValue], t: C64) -> PeriodValue {
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    for (a, p) in class.0.iter().zip(values) {
        value += p.value * *a as f64;
        error += p.error * (*a as f64).abs();
    }
    PeriodValue { value, error, cycle: format!("{:?}", class.0), form: values.first().map(|p| p.form.clone()).unwrap_or_default(), t }
}

/// Basis cycles after transport around a closed loop based at their fiber.
pub fn transport_basis(
    model: &FibrationModel,
    basis: &[CycleRealization],
    path: &TPath,
) -> Result<Vec<CycleRealization>, PeriodsError> {
    basis
        .par_iter()
        .map(|c| transport_cycle(model, c, path).map_err(PeriodsError::from))
        .collect()
}

/// Period of a class before and after analytic continuation along `path`.
pub fn continue_period(
    model: &FibrationModel,
    basis: &[CycleRealization],
    class: &CycleClass,
    phi: &FiberForm,
    path: &TPath,
    tol: f64,
) -> Result<(PeriodValue, PeriodValue), PeriodsError> {
    if class.len() != basis.len() {
        return Err(PeriodsError::DimensionMismatch { expected: basis.len(), got: class.len() });
    }
    let used: Vec<usize> = (0..basis.len()).filter(|&j| class.0[j] != 0).collect();
    let moved: Vec<CycleRealization> = used
        .par_iter()
        .map(|&j| transport_cycle(model, &basis[j], path).map_err(PeriodsError::from))
        .collect::<Result<_, _>>()?;
    let scale = class.0.iter().map(|a| a.unsigned_abs() as f64).sum::<f64>().max(1.0);
    let mut before = Vec::with_capacity(basis.len());
    let mut after = Vec::with_capacity(basis.len());
    let zero = PeriodValue { value: C64::new(0.0, 0.0), error: 0.0, cycle: String::new(), form: phi.to_string(), t: path.start() };
    let mut m = moved.iter();
    for j in 0..basis.len() {
        if class.0[j] == 0 {
            before.push(zero.clone());
            after.push(zero.clone());
        } else {
            before.push(period(model, &basis[j], phi, tol / scale)?.tagged("", phi.to_string()));
            after.push(period(model, m.next().unwrap(), phi, tol / scale)?.tagged("", phi.to_string()));
        }
    }
    Ok((combine(class, &before, path.start()), combine(class, &after, path.end())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericMonodromy {
    /// `matrix[r][j]`: coefficient of `δ_r` in the continued `δ_j`.
    pub matrix: Vec<Vec<C64>>,
    pub rounded: Vec<Vec<i64>>,
    /// Largest distance of an entry to its rounding.
    pub deviation: f64,
    /// Condition number of the period matrix at the base.
    pub condition: f64,
}

fn to_dmatrix(rows: &[Vec<PeriodValue>]) -> DMatrix<C64> {
    let (n, m) = (rows.len(), rows.first().map_or(0, Vec::len));
    DMatrix::from_fn(n, m, |i, j| rows[i][j].value)
}

fn condition_number(m: &DMatrix<C64>) -> f64 {
    let s = m.clone().svd(false, false).singular_values;
    let (hi, lo) = (s.max(), s.min());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Candidate form bases for the period matrix tried in order:
/// `y dx` with its t-derivatives, then `x^i y dx`, then `x^i y⁻¹ dx`.
pub fn candidate_form_bases(mu: usize) -> Vec<Vec<FiberForm>> {
    let mut gm = vec![FiberForm::y_dx()];
    while gm.len() < mu {
        let next = gm_derivative(gm.last().unwrap());
        gm.push(next);
    }
    let one = C64::new(1.0, 0.0);
    let monomial_y: Vec<FiberForm> = (0..mu as u32).map(|i| FiberForm::monomial(one, i, 1)).collect();
    let monomial_inv: Vec<FiberForm> = (0..mu as u32).map(|i| FiberForm::monomial(one, i, -1)).collect();
    vec![gm, monomial_y, monomial_inv]
}

/// First candidate basis whose period matrix over `basis` is well conditioned.
pub fn choose_form_basis(
    model: &FibrationModel,
    basis: &[CycleRealization],
    tol: f64,
) -> Result<(Vec<FiberForm>, f64), PeriodsError> {
    let mut best: Option<(Vec<FiberForm>, f64)> = None;
    for forms in candidate_form_bases(basis.len()) {
        let table = period_table(model, basis, &forms, tol)?;
        let cond = condition_number(&to_dmatrix(&table));
        if cond <= 1e6 {
            return Ok((forms, cond));
        }
        if best.as_ref().is_none_or(|b| cond < b.1) {
            best = Some((forms, cond));
        }
    }
    let best = best.unwrap();
    if best.1 > MAX_CONDITION {
        return Err(PeriodsError::IllConditionedPeriodMatrix { condition: best.1 });
    }
    Ok(best)
}

/// Matrix of the continuation of the basis cycles along `path`, from
/// `Π′ = Π·M` with `Π[k][j] = ∫_{δ_j} φ_k`.
pub fn numeric_monodromy_matrix(
    model: &FibrationModel,
    basis: &[CycleRealization],
    forms: &[FiberForm],
    path: &TPath,
    tol: f64,
) -> Result<NumericMonodromy, PeriodsError> {
    let mu = basis.len();
    if forms.len() != mu {
        return Err(PeriodsError::DimensionMismatch { expected: mu, got: forms.len() });
    }
    let pi = to_dmatrix(&period_table(model, basis, forms, tol)?);
    let condition = condition_number(&pi);
    if condition > MAX_CONDITION {
        return Err(PeriodsError::IllConditionedPeriodMatrix { condition });
    }
    let moved = transport_basis(model, basis, path)?;
    let pi_after = to_dmatrix(&period_table(model, &moved, forms, tol)?);
    let m = pi.lu().solve(&pi_after).ok_or(PeriodsError::IllConditionedPeriodMatrix { condition: f64::INFINITY })?;
    let matrix: Vec<Vec<C64>> = (0..mu).map(|r| (0..mu).map(|j| m[(r, j)]).collect()).collect();
    let rounded: Vec<Vec<i64>> = matrix.iter().map(|row| row.iter().map(|z| z.re.round() as i64).collect()).collect();
    let deviation = matrix
        .iter()
        .zip(&rounded)
        .flat_map(|(row, ir)| row.iter().zip(ir).map(|(z, k)| (z - C64::new(*k as f64, 0.0)).norm()))
        .fold(0.0, f64::max);
    Ok(NumericMonodromy { matrix, rounded, deviation, condition })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLoop {
    pub before: C64,
    pub after: C64,
    /// `|after/before − 1|`.
    pub defect: f64,
    pub single_valued: bool,
    /// The continued period of `ω` fell below [`RATIO_FLOOR`].
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub base_ratio: C64,
    pub loops: Vec<ProbeLoop>,
}

/// Continuation of `∫_{d1} ω′ / ∫_{d1} ω` around each loop.
pub fn ratio_monodromy_probe(
    model: &FibrationModel,
    basis: &[CycleRealization],
    d1: &CycleClass,
    omega: &FiberForm,
    loops: &[TPath],
    tol: f64,
) -> Result<ProbeReport, PeriodsError> {
    let omega_t = gm_derivative(omega);
    let here = TPath::new(vec![basis.first().map_or(model.base, |c| c.t)]);
    let (w, _) = continue_period(model, basis, d1, omega, &here, tol)?;
    if w.value.norm() < RATIO_FLOOR {
        return Err(PeriodsError::DegenerateRatio);
    }
    let (v, _) = continue_period(model, basis, d1, &omega_t, &here, tol)?;
    let base_ratio = v.value / w.value;
    let mut out = Vec::with_capacity(loops.len());
    for path in loops {
        let (_, w1) = continue_period(model, basis, d1, omega, path, tol)?;
        let (_, v1) = continue_period(model, basis, d1, &omega_t, path, tol)?;
        let flagged = w1.value.norm() < RATIO_FLOOR;
        let after = if flagged { C64::new(f64::NAN, f64::NAN) } else { v1.value / w1.value };
        let defect = if flagged { f64::INFINITY } else { (after / base_ratio - 1.0).norm() };
        out.push(ProbeLoop { before: base_ratio, after, defect, single_valued: defect <= tol.max(1e-9), flagged });
    }
    Ok(ProbeReport { base_ratio, loops: out })
}

/// CSV with columns `cycle,form,t_re,t_im,value_re,value_im,err`.
pub fn period_table_csv(values: &[PeriodValue]) -> String {
    let mut out = String::from("cycle,form,t_re,t_im,value_re,value_im,err\n");
    for p in values {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            csv_field(&p.cycle),
            csv_field(&p.form),
            p.t.re,
            p.t.im,
            p.value.re,
            p.value.im,
            p.error
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests;
