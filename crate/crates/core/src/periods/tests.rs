use super::*;
use crate::fibration::{commutator, realize_basis, realize_vanishing_cycle};
use crate::homology::{intersection_from_cycles, picard_lefschetz};
use crate::numeric::{c, I};
use crate::testing::{reference_model, K, L};
use crate::Tolerances;

/// Composite Simpson in `φ` with `x = √3 sin²(φ/2)`, where
/// `(3x − x³)^p dx = q^(2p+1) (√3 + x)^p dφ` and `q = √3 sin(φ/2) cos(φ/2)`.
fn real_axis_oracle(power: f64) -> f64 {
    let s3 = 3f64.sqrt();
    let n = 20_000;
    let h = std::f64::consts::PI / n as f64;
    let integrand = |phi: f64| {
        let (s, c) = (0.5 * phi).sin_cos();
        let x = s3 * s * s;
        let q = s3 * s * c;
        q.powf(2.0 * power + 1.0) * (s3 + x).powf(power)
    };
    let mut sum = integrand(0.0) + integrand(std::f64::consts::PI);
    for k in 1..n {
        sum += integrand(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// A loop based at `b` bounding a disk free of critical values.
fn contractible(model: &crate::fibration::FibrationModel) -> TPath {
    let b = model.base;
    let out = TPath::segment(b, b + 0.3);
    out.then(&TPath::circle(b + 0.15, 0.15, 0.0, 32)).then(&out.reversed())
}

#[test]
fn oracle_constants() {
    assert!((real_axis_oracle(0.5) - K).abs() < 1e-12);
    assert!((real_axis_oracle(-0.5) - L).abs() < 1e-12);
}

#[test]
fn reference_periods_match_real_axis_oracle() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let y = FiberForm::y_dx();
    let dy = gm_derivative(&y);
    let p = |k: usize, f: &FiberForm| period(&model, &basis[k], f, 1e-10).unwrap().value;
    let expected = [(0, &y, -2.0 * I * K), (1, &y, c(2.0 * K, 0.0)), (0, &dy, I * L), (1, &dy, c(L, 0.0))];
    for (k, f, want) in expected {
        let got = p(k, f);
        assert!((got - want).norm() < 1e-10, "cycle {k} form {f}: {got} vs {want}");
    }
}

#[test]
fn exact_forms_have_zero_periods() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let dx = FiberForm::monomial(c(1.0, 0.0), 0, 0);
    // d(x y) = (y + x g′/(2y)) dx
    let h = model.hyperelliptic().unwrap();
    let dxy = restrict_to_fiber(&crate::algebra::PlanarOneForm::exact(&crate::algebra::parse_poly("x*y").unwrap()), h);
    for cycle in &basis {
        assert!(period(&model, cycle, &dx, 1e-10).unwrap().value.norm() < 1e-10);
        assert!(period(&model, cycle, &dxy, 1e-10).unwrap().value.norm() < 1e-10);
    }
}

#[test]
fn vanishing_period_is_linear_in_distance() {
    let model = reference_model();
    let tol = Tolerances::default();
    let near = |d: f64| {
        let cyc = realize_vanishing_cycle(&model, 0, c(2.0 - d, 0.0), &tol).unwrap();
        period(&model, &cyc, &FiberForm::y_dx(), 1e-12).unwrap().value
    };
    let (p1, p2) = (near(1e-4), near(1e-3));
    let exponent = (p2.norm() / p1.norm()).log10();
    assert!((exponent - 1.0).abs() < 0.01, "exponent {exponent}");
    // local model: y² ≈ (t − 2) + 3(x − 1)², area of the ellipse
    let want = std::f64::consts::PI * 1e-4 / 3f64.sqrt();
    assert!((p1.norm() - want).abs() < 1e-3 * want);
}

#[test]
fn single_letter_iterated_integral_is_the_period() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let y = FiberForm::y_dx();
    let word = LoopWord::from_cycle(&basis[1]);
    let (j, _) = iterated_integral(&model, &word, std::slice::from_ref(&y), 1e-10).unwrap();
    assert!((j - period(&model, &basis[1], &y, 1e-10).unwrap().value).norm() < 1e-10);
}

#[test]
fn commutator_periods_and_determinant() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let y = FiberForm::y_dx();
    let dy = gm_derivative(&y);
    let word = commutator(&model, &basis[0], &basis[1]).unwrap();
    assert!(period_word(&model, &word, &y, 1e-10).unwrap().value.norm() < 1e-8);
    let (m2, _) = iterated_integral(&model, &word, &[y.clone(), dy.clone()], 1e-10).unwrap();
    let det = -4.0 * I * K * L;
    assert!((m2 - det).norm() < 1e-8 * det.norm(), "{m2} vs {det}");
}

#[test]
fn continuation_around_one_critical_value() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let y = FiberForm::y_dx();
    let around = model.simple_loop(0);
    let (b1, a1) = continue_period(&model, &basis, &CycleClass::basis(0, 2), &y, &around, 1e-10).unwrap();
    assert!((a1.value - b1.value).norm() < 1e-9);
    let (b2, a2) = continue_period(&model, &basis, &CycleClass::basis(1, 2), &y, &around, 1e-10).unwrap();
    let form = intersection_from_cycles(&model, &basis).unwrap();
    let step = PL_SIGN_FOR_TEST * form.entry(1, 0) as f64;
    assert!((a2.value - (b2.value + b1.value * step)).norm() < 1e-8);
    let here = TPath::new(vec![model.base]);
    let (p, q) = continue_period(&model, &basis, &CycleClass(vec![2, -1]), &y, &here, 1e-10).unwrap();
    assert!((p.value - q.value).norm() < 1e-12);
}

const PL_SIGN_FOR_TEST: f64 = crate::homology::PL_SIGN as f64;

#[test]
fn numeric_monodromy_matches_picard_lefschetz() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let form = intersection_from_cycles(&model, &basis).unwrap();
    let (forms, cond) = choose_form_basis(&model, &basis, 1e-10).unwrap();
    assert!(cond < 1e6);
    let mut ops = Vec::new();
    for k in 0..2 {
        let m = numeric_monodromy_matrix(&model, &basis, &forms, &model.simple_loop(k), 1e-10).unwrap();
        let pl = picard_lefschetz(k, &form);
        assert_eq!(m.rounded, pl.matrix, "around c_{k}: {:?}", m.matrix);
        assert!(m.deviation <= 1e-8, "deviation {}", m.deviation);
        ops.push(pl);
    }
    // loop around c_1 then c_2 acts as M_2 M_1
    let both = model.simple_loop(0).then(&model.simple_loop(1));
    let m = numeric_monodromy_matrix(&model, &basis, &forms, &both, 1e-10).unwrap();
    assert_eq!(m.rounded, ops[1].compose(&ops[0]).matrix);
    let id = numeric_monodromy_matrix(&model, &basis, &forms, &contractible(&model), 1e-10).unwrap();
    assert_eq!(id.rounded, vec![vec![1, 0], vec![0, 1]]);
    assert!(id.deviation < 1e-9);
}

#[test]
fn ratio_probe_on_reference_model() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let y = FiberForm::y_dx();
    let loops = vec![model.simple_loop(0), model.simple_loop(1), contractible(&model)];
    let r = ratio_monodromy_probe(&model, &basis, &CycleClass::basis(0, 2), &y, &loops, 1e-9).unwrap();
    assert!(r.loops[0].single_valued && r.loops[2].single_valued);
    assert!(r.loops[2].defect <= 1e-9);
    assert!(!r.loops[1].single_valued);
    // oracle: δ₁ ↦ δ₁ + s δ₂ around c₂, with the ratio rebuilt from base periods
    let form = intersection_from_cycles(&model, &basis).unwrap();
    let s = PL_SIGN_FOR_TEST * form.entry(0, 1) as f64;
    let want = (I * L + s * L) / (-2.0 * I * K + s * 2.0 * K);
    assert!((r.loops[1].after - want).norm() < 1e-8);
    let zero = FiberForm::monomial(c(1.0, 0.0), 0, 0);
    assert_eq!(
        ratio_monodromy_probe(&model, &basis, &CycleClass::basis(0, 2), &zero, &loops, 1e-9),
        Err(PeriodsError::DegenerateRatio)
    );
}

#[test]
fn csv_export() {
    let p = PeriodValue { value: c(1.0, -2.0), error: 1e-12, cycle: "delta1".into(), form: "a,b".into(), t: c(0.0, 0.0) };
    let csv = period_table_csv(&[p]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("cycle,form,t_re,t_im,value_re,value_im,err"));
    assert!(lines.next().unwrap().starts_with("delta1,\"a,b\",0.0000000000000000e0"));
}
