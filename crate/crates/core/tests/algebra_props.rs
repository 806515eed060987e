use foliate_core::algebra::poly::{coeff_int, coeff_rat, BivarPoly};
use foliate_core::algebra::{
    critical_set, exterior_derivative_density, parse_poly, relative_exactness, tameness_report, DegreeBounds,
    PlanarOneForm,
};
use foliate_core::numeric::{c, C64};
use foliate_core::Tolerances;
use proptest::prelude::*;

fn poly_strategy(max_degree: u32, max_terms: usize) -> impl Strategy<Value = BivarPoly> {
    prop::collection::vec(((0..=max_degree), (0..=max_degree), -5i64..=5), 1..=max_terms).prop_map(move |terms| {
        let mut p = BivarPoly::zero();
        for (i, j, k) in terms {
            if i + j <= max_degree {
                p.add_term(i, j, coeff_int(k));
            }
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn d_of_exact_form_vanishes(p in poly_strategy(6, 10)) {
        prop_assert!(exterior_derivative_density(&PlanarOneForm::exact(&p)).is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn witnesses_verify(q in poly_strategy(1, 3), p in poly_strategy(3, 4)) {
        let f = parse_poly("y^2 - x^3 + 3x").unwrap();
        let df = PlanarOneForm::exact(&f);
        let omega = &PlanarOneForm::new(&q * &df.a, &q * &df.b) + &PlanarOneForm::exact(&p);
        let bounds = DegreeBounds { p: 5, q: 2 };
        let w = relative_exactness(&omega, &f, Some(bounds)).unwrap().expect("constructed as relatively exact");
        prop_assert!(w.residual(&omega, &f).is_zero());
    }

    #[test]
    fn divided_differences_match_gradient(
        p in poly_strategy(4, 8),
        x in (-1.5f64..1.5, -1.5f64..1.5),
        y in (-1.5f64..1.5, -1.5f64..1.5),
    ) {
        let (x, y) = (c(x.0, x.1), c(y.0, y.1));
        let (gx, gy) = p.gradient(x, y);
        let f0 = p.evaluate(x, y);
        for dir in [c(1.0, 0.0), c(0.6, 0.8)] {
            let mut errs = Vec::new();
            for h in [1e-4, 1e-5] {
                let hh = dir * h;
                let ex = ((p.evaluate(x + hh, y) - f0) / hh - gx).norm();
                let ey = ((p.evaluate(x, y + hh) - f0) / hh - gy).norm();
                errs.push((ex, ey));
            }
            for k in 0..2 {
                let (a, b) = if k == 0 { (errs[0].0, errs[1].0) } else { (errs[0].1, errs[1].1) };
                // below the cancellation floor the first-order ratio is meaningless
                if a > 1e-7 {
                    let ratio = (a / b) / 10.0;
                    prop_assert!((ratio - 1.0).abs() < 0.2, "ratio {ratio}");
                }
            }
        }
    }
}

#[test]
fn milnor_number_of_hyperelliptic_family() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let tol = Tolerances::default();
    let mut checked = 0;
    while checked < 20 {
        let deg = if checked % 2 == 0 { 3 } else { 4 };
        let mut f = BivarPoly::monomial(coeff_int(1), 0, 2);
        f.add_term(deg, 0, coeff_int(-1));
        for i in 0..deg {
            let k: i64 = rng.gen_range(-12..=12);
            f.add_term(i, 0, coeff_rat(k, 4));
        }
        let report = tameness_report(&f, &tol).unwrap();
        if !(report.nondegenerate && report.distinct_values) {
            continue;
        }
        let crit = critical_set(&f, &tol).unwrap();
        assert_eq!(crit.milnor(), deg as usize - 1, "{f}");
        for pt in &crit.points {
            let (gx, gy) = f.gradient(pt.x, pt.y);
            assert!(gx.norm().max(gy.norm()) <= 1e-12);
            assert!(pt.y.norm() < 1e-12);
            let _: C64 = pt.value;
        }
        checked += 1;
    }
}
