use foliate_core::homology::{
    condition_faca, condition_faca_bruteforce, monodromy_orbit_span, picard_lefschetz, CycleClass, IntersectionForm,
    PLOperator, BRUTE_FORCE_BUDGET,
};
use proptest::prelude::*;

fn form_strategy() -> impl Strategy<Value = IntersectionForm> {
    (2usize..=6).prop_flat_map(|mu| {
        prop::collection::vec(-2i64..=2, mu * (mu - 1) / 2).prop_map(move |upper| {
            let mut m = vec![vec![0; mu]; mu];
            let mut it = upper.into_iter();
            for i in 0..mu {
                for j in i + 1..mu {
                    let v = it.next().unwrap();
                    m[i][j] = v;
                    m[j][i] = -v;
                }
            }
            IntersectionForm::new(m).unwrap()
        })
    })
}

fn class(mu: usize, seed: &[i64]) -> CycleClass {
    CycleClass((0..mu).map(|k| seed[k % seed.len()]).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fast_condition_agrees_with_enumeration(
        form in form_strategy(),
        a in prop::collection::vec(-3i64..=3, 6),
        b in prop::collection::vec(-3i64..=3, 6),
        proportional in any::<bool>(),
        k in -2i64..=2,
    ) {
        let mu = form.mu();
        let d1 = class(mu, &a);
        let d2 = if proportional { CycleClass(d1.0.iter().map(|x| x * k).collect()) } else { class(mu, &b) };
        let fast = condition_faca(&d1, &d2, &form);
        let (holds, witness) = condition_faca_bruteforce(&d1, &d2, &form, 5, BRUTE_FORCE_BUDGET).unwrap();
        prop_assert_eq!(fast.holds, holds);
        if let Some(w) = witness {
            let w = CycleClass(w);
            prop_assert!(form.pair(&w, &d1) != 0 && form.pair(&w, &d2) != 0);
        }
    }

    #[test]
    fn picard_lefschetz_preserves_the_form(form in form_strategy()) {
        let mu = form.mu();
        let mut product = PLOperator::identity(mu);
        for i in 0..mu {
            let t = picard_lefschetz(i, &form);
            prop_assert!(t.preserves(&form));
            prop_assert!(t.is_unipotent());
            prop_assert_eq!(t.compose(&t.inverse()), PLOperator::identity(mu));
            product = t.compose(&product);
        }
        prop_assert!(product.preserves(&form));
    }

    #[test]
    fn orbit_rank_is_bounded_by_mu(form in form_strategy()) {
        let mu = form.mu();
        let ops: Vec<PLOperator> = (0..mu).map(|i| picard_lefschetz(i, &form)).collect();
        for i in 0..mu {
            let span = monodromy_orbit_span(&CycleClass::basis(i, mu), &ops, None).unwrap();
            prop_assert!(span.rank >= 1 && span.rank <= mu);
        }
    }
}

#[test]
fn a_chain_orbits_have_full_rank() {
    for mu in 2..=6 {
        let mut m = vec![vec![0; mu]; mu];
        for i in 0..mu - 1 {
            m[i][i + 1] = -1;
            m[i + 1][i] = 1;
        }
        let form = IntersectionForm::new(m).unwrap();
        let ops: Vec<PLOperator> = (0..mu).map(|i| picard_lefschetz(i, &form)).collect();
        for i in 0..mu {
            let span = monodromy_orbit_span(&CycleClass::basis(i, mu), &ops, None).unwrap();
            assert_eq!(span.rank, mu);
            assert!(!span.depth_exhausted);
        }
    }
}
