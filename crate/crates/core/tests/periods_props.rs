use std::sync::LazyLock;

use foliate_core::algebra::poly::{coeff_int, BivarPoly};
use foliate_core::algebra::{critical_set, parse_poly, PlanarOneForm};
use foliate_core::fibration::{based_word, basis_at, build_distinguished_system, realize_basis, CycleRealization, FibrationModel, LoopWord};
use foliate_core::homology::CycleClass;
use foliate_core::melnikov::m1;
use foliate_core::numeric::{c, C64};
use foliate_core::periods::{gm_derivative, iterated_integral, period, restrict_to_fiber, FiberForm};
use foliate_core::Tolerances;
use proptest::prelude::*;

struct Reference {
    model: FibrationModel,
    basis: Vec<CycleRealization>,
}

static REF: LazyLock<Reference> = LazyLock::new(|| {
    let f = parse_poly("y^2 - x^3 + 3x").unwrap();
    let tol = Tolerances::default();
    let model = build_distinguished_system(&f, critical_set(&f, &tol).unwrap(), Some(c(0.0, 0.0)), &tol).unwrap();
    let basis = realize_basis(&model, &tol).unwrap();
    Reference { model, basis }
});

fn fiber_form() -> impl Strategy<Value = FiberForm> {
    prop::collection::vec((0u32..=3, prop::sample::select(vec![-1i32, 1, 3]), -1.0f64..1.0, -1.0f64..1.0), 1..=3).prop_map(|terms| {
        let mut f = FiberForm::zero();
        for (i, j, re, im) in terms {
            f.add_term(i, j, c(re, im));
        }
        f
    })
}

fn poly(max_degree: u32) -> impl Strategy<Value = BivarPoly> {
    prop::collection::vec((0..=max_degree, 0..=max_degree, -5i64..=5), 1..=8).prop_map(move |terms| {
        let mut p = BivarPoly::zero();
        for (i, j, k) in terms {
            if i + j <= max_degree {
                p.add_term(i, j, coeff_int(k));
            }
        }
        p
    })
}

fn lasso(letters: &[(usize, bool)]) -> LoopWord {
    let r = &*REF;
    let refs: Vec<(&CycleRealization, bool)> = letters.iter().map(|&(k, inv)| (&r.basis[k], inv)).collect();
    based_word(&r.model, &refs).unwrap()
}

fn chen(word: &LoopWord, forms: &[FiberForm]) -> C64 {
    iterated_integral(&REF.model, word, forms, 1e-10).unwrap().0
}

fn letters() -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0usize..2, any::<bool>()), 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn gauss_manin_matches_finite_differences(
        phi in fiber_form(),
        k in 0usize..2,
        r in 0.0f64..0.8,
        arg in 0.0f64..std::f64::consts::TAU,
    ) {
        let Reference { model, basis } = &*REF;
        let t = C64::from_polar(r, arg);
        let h = 1e-4;
        let at = |s: C64| period(model, &basis_at(model, basis, s).unwrap()[k], &phi, 1e-12).unwrap().value;
        let fd = (at(t + h) - at(t - h)) / (2.0 * h);
        let exact = period(model, &basis_at(model, basis, t).unwrap()[k], &gm_derivative(&phi), 1e-12).unwrap().value;
        prop_assert!((fd - exact).norm() <= 1e-6, "{phi}: {fd} vs {exact}");
    }

    #[test]
    fn exact_forms_have_no_periods(q in poly(5)) {
        let Reference { model, basis } = &*REF;
        let w = restrict_to_fiber(&PlanarOneForm::exact(&q), model.hyperelliptic().unwrap());
        for cycle in basis {
            let p = period(model, cycle, &w, 1e-11).unwrap().value;
            prop_assert!(p.norm() <= 1e-9, "{q}: {p}");
        }
    }

    #[test]
    fn shuffle_relation(a in fiber_form(), b in fiber_form(), word in letters()) {
        let w = lasso(&word);
        let lhs = chen(&w, std::slice::from_ref(&a)) * chen(&w, std::slice::from_ref(&b));
        let rhs = chen(&w, &[a.clone(), b.clone()]) + chen(&w, &[b, a]);
        prop_assert!((lhs - rhs).norm() <= 1e-8 * (1.0 + lhs.norm()), "{lhs} vs {rhs}");
    }

    #[test]
    fn concatenation_rule(a in fiber_form(), b in fiber_form(), u in letters(), v in letters()) {
        let (alpha, beta) = (lasso(&u), lasso(&v));
        let both = alpha.then(&beta);
        let ab = [a.clone(), b.clone()];
        let want = chen(&alpha, &ab) + chen(&beta, &ab) + chen(&alpha, std::slice::from_ref(&a)) * chen(&beta, std::slice::from_ref(&b));
        let got = chen(&both, &ab);
        prop_assert!((got - want).norm() <= 1e-8 * (1.0 + want.norm()), "{got} vs {want}");
    }

    #[test]
    fn single_forms_vanish_on_commutators(a in fiber_form(), u in letters(), v in letters()) {
        let (alpha, beta) = (lasso(&u), lasso(&v));
        let comm = alpha.then(&beta).then(&alpha.inverse()).then(&beta.inverse());
        prop_assert!(chen(&comm, std::slice::from_ref(&a)).norm() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn first_melnikov_function_is_bilinear(
        p in poly(3),
        q in poly(3),
        s in -3i64..=3,
        d1 in prop::collection::vec(-3i64..=3, 2),
        d2 in prop::collection::vec(-3i64..=3, 2),
    ) {
        let Reference { model, basis } = &*REF;
        let ts = [model.base, c(0.2, -0.3)];
        let w1 = PlanarOneForm::new(p.clone(), q.clone());
        let w2 = PlanarOneForm::new(&q * &p, p.clone());
        let combo = &w1 + &w2.scale(&coeff_int(s));
        let (d1, d2) = (CycleClass(d1), CycleClass(d2));
        let sum = CycleClass(d1.0.iter().zip(&d2.0).map(|(a, b)| a + b).collect());
        let m = |w: &PlanarOneForm, d: &CycleClass| m1(model, basis, d, w, &ts, 1e-10).unwrap();
        let (a, b, ab) = (m(&w1, &d1), m(&w2, &d1), m(&combo, &d1));
        let (e, es) = (m(&w1, &d2), m(&w1, &sum));
        for i in 0..ts.len() {
            let scale = 1.0 + a[i].value.norm() + b[i].value.norm() * s.unsigned_abs() as f64;
            prop_assert!((ab[i].value - a[i].value - b[i].value * s as f64).norm() <= 1e-9 * scale);
            prop_assert!((es[i].value - a[i].value - e[i].value).norm() <= 1e-9 * (1.0 + es[i].value.norm()));
        }
    }
}
