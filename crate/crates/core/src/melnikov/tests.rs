use super::*;
use crate::algebra::parse_poly;
use crate::fibration::realize_basis;
use crate::holonomy::{holonomy_word, melnikov_fit, HolonomyTask};
use crate::numeric::{c, I};
use crate::testing::{reference_model, K, L};

fn form(a: &str, b: &str) -> PlanarOneForm {
    PlanarOneForm::new(parse_poly(a).unwrap(), parse_poly(b).unwrap())
}

fn e(k: usize) -> CycleClass {
    CycleClass::basis(k, 2)
}

#[test]
fn reference_values_at_the_base() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let ts = [model.base];
    let y = form("y", "0");
    let v = m1(&model, &basis, &e(0), &y, &ts, 1e-10).unwrap();
    assert!((v[0].value - 2.0 * I * K).norm() < 1e-10);
    let v = m1(&model, &basis, &e(1), &y, &ts, 1e-10).unwrap();
    assert!((v[0].value + 2.0 * K).norm() < 1e-10);
    let det = m2_commutator_det(&model, &basis, &e(0), &e(1), &y, &ts, 1e-10).unwrap();
    assert!((det[0].value + 4.0 * I * K * L).norm() < 1e-9);
}

#[test]
fn letters_of_classes() {
    let l = class_letters(&CycleClass(vec![2, -1]));
    assert_eq!(l, vec![Letter::new(0, false), Letter::new(0, false), Letter::new(1, true)]);
    let w = class_commutator_letters(&CycleClass(vec![1, 0]), &CycleClass(vec![0, -1]));
    let labels: Vec<String> = w.iter().map(Letter::label).collect();
    assert_eq!(labels, ["d1", "d2^-1", "d1^-1", "d2"]);
    assert!(class_commutator_letters(&CycleClass::zero(2), &e(0)).is_empty());
}

#[test]
fn exact_deformation_is_identically_zero() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let ts = default_t_grid(&model, 8);
    let omega = PlanarOneForm::exact(&parse_poly("x^2*y - 3x*y^3").unwrap());
    let tol = Tolerances::default();
    let r = melnikov_report(&model, &basis, &[("d1".into(), e(0)), ("d2".into(), e(1))], Some((&e(0), &e(1))), &omega, &ts, &tol).unwrap();
    assert!(r.m1.iter().all(|c| c.identically_zero));
    assert!(r.m2_identically_zero);
    assert!(r.m2_iterated.iter().all(|v| v.value.norm() <= 1e-9));
}

#[test]
fn zero_verdict_needs_enough_samples() {
    let v = MelnikovValue { t: c(0.0, 0.0), value: c(0.0, 0.0), error: 0.0 };
    assert!(!identically_zero(&vec![v; MIN_ZERO_SAMPLES - 1], 1e-9));
    assert!(identically_zero(&vec![v; MIN_ZERO_SAMPLES], 1e-9));
}

#[test]
fn determinant_and_iterated_integral_agree() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let ts = default_t_grid(&model, 8);
    let omega = form("x*y + y^3", "x^2 - y");
    for (a, b) in [(e(0), e(1)), (CycleClass(vec![2, -1]), CycleClass(vec![1, 1])), (e(1), e(1))] {
        let det = m2_commutator_det(&model, &basis, &a, &b, &omega, &ts, 1e-10).unwrap();
        let it = m2_commutator_iterated(&model, &basis, &a, &b, &omega, &ts, 1e-10).unwrap();
        for (d, i) in det.iter().zip(&it) {
            assert!((d.value - i.value).norm() <= 1e-6, "{a:?} {b:?} at {}: {} vs {}", d.t, d.value, i.value);
        }
    }
}

#[test]
fn commutator_term_is_antisymmetric_and_bilinear() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let ts = [model.base, model.base + c(0.1, 0.2)];
    let omega = form("x*y", "x^2");
    let m = |a: &CycleClass, b: &CycleClass| m2_commutator_det(&model, &basis, a, b, &omega, &ts, 1e-10).unwrap();
    let it = |a: &CycleClass, b: &CycleClass| m2_commutator_iterated(&model, &basis, a, b, &omega, &ts, 1e-10).unwrap();
    let (ab, ba) = (m(&e(0), &e(1)), m(&e(1), &e(0)));
    let shifted = m(&CycleClass(vec![1, 1]), &e(1));
    let scaled = m(&CycleClass(vec![3, 0]), &e(1));
    let (iab, iba) = (it(&e(0), &e(1)), it(&e(1), &e(0)));
    for k in 0..ts.len() {
        assert!((ab[k].value + ba[k].value).norm() < 1e-9);
        assert!((shifted[k].value - ab[k].value).norm() < 1e-9);
        assert!((scaled[k].value - ab[k].value * 3.0).norm() < 1e-9);
        assert!((iab[k].value + iba[k].value).norm() < 1e-8);
    }
}

#[test]
fn signs_match_fitted_holonomy() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let omega = form("x*y", "x^2");
    let task = HolonomyTask {
        model: &model,
        basis: &basis,
        omega: omega.clone(),
        eps: [1e-2, 3e-3, 1e-3, 3e-4, 1e-4].iter().map(|e| c(*e, 0.0)).collect(),
        t0: vec![model.base],
        guard: 0.5,
        tol: 1e-12,
    };
    let ts = [model.base];
    let want1 = m1(&model, &basis, &e(1), &omega, &ts, 1e-10).unwrap()[0].value;
    let fit1 = melnikov_fit(&holonomy_word(&task, &class_letters(&e(1))).unwrap(), model.base, 1).unwrap();
    assert!((fit1.m(1) - want1).norm() <= 1e-6 * want1.norm(), "{} vs {want1}", fit1.m(1));
    let want2 = m2_commutator_det(&model, &basis, &e(0), &e(1), &omega, &ts, 1e-10).unwrap()[0].value;
    let letters = class_commutator_letters(&e(0), &e(1));
    let fit2 = melnikov_fit(&holonomy_word(&task, &letters).unwrap(), model.base, 2).unwrap();
    assert!((fit2.m(2) - want2).norm() <= 1e-4 * want2.norm(), "{} vs {want2}", fit2.m(2));
}

#[test]
fn csv_layout() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let ts = default_t_grid(&model, 8);
    let r = melnikov_report(&model, &basis, &[("a".into(), e(0))], Some((&e(0), &e(1))), &form("y", "0"), &ts, &Tolerances::default()).unwrap();
    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t_re,t_im,M1_a_re,M1_a_im,M2det_re,M2det_im,M2it_re,M2it_im"));
    assert_eq!(lines.count(), 8);
    assert!(r.discrepancy <= 1e-6);
    assert!(!r.m1[0].identically_zero && !r.m2_identically_zero);
}

#[test]
fn dimension_mismatch() {
    let model = reference_model();
    let basis = realize_basis(&model, &Tolerances::default()).unwrap();
    let err = m1(&model, &basis, &CycleClass(vec![1]), &form("y", "0"), &[model.base], 1e-10).unwrap_err();
    assert_eq!(err, MelnikovError::DimensionMismatch { expected: 2, got: 1 });
}
