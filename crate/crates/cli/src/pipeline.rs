//! Runs the requested stages of a scenario in dependency order.

use foliate_core::algebra::tameness::tameness_from_critical;
use foliate_core::algebra::{critical_set, relative_exactness, AlgebraError, CriticalSet, DegreeBounds, NumPolyJet};
use foliate_core::fibration::{
    build_distinguished_system, realize_basis, CycleRealization, FibrationModel, LoopWord, Surface, Vertex,
};
use foliate_core::holonomy::{
    commutation_defect_word, holonomy_on_words, holonomy_word, melnikov_fit, HolonomyMapSamples, HolonomyTask, LeafSystem,
    Letter,
};
use foliate_core::homology::{
    condition_faca, condition_faca_bruteforce, dynkin, intersection_from_cycles, monodromy_orbit_span, picard_lefschetz,
    strongly_tame, CycleClass, IntersectionForm, PLOperator, BRUTE_FORCE_BUDGET, PL_SIGN,
};
use foliate_core::melnikov::{
    class_commutator_letters, class_letters, default_t_grid, fiber_forms, m1, m2_commutator_det, melnikov_report, M1_SIGN,
    M2_SIGN,
};
use foliate_core::numeric::C64;
use foliate_core::periods::{choose_form_basis, numeric_monodromy_matrix, period, period_table, PeriodValue};

use crate::report::*;
use crate::scenario::{Backend, Scenario, Stage, UserLoop};

/// Samples per curve on the default Melnikov grid.
pub const DEFAULT_GRID: usize = 8;
/// Relative agreement required between the determinant and iterated-integral forms of M₂.
pub const M2_AGREEMENT: f64 = 1e-6;
/// Relative agreement required between fitted and period-based Melnikov values.
pub const FIT_AGREEMENT: f64 = 1e-3;
/// Fitted M₂ values below this modulus are not compared.
pub const M2_FLOOR: f64 = 1e-8;
const BOX_RADIUS: i64 = 5;

type Stageful<T> = Result<T, String>;

struct Homology {
    model: FibrationModel,
    basis: Vec<CycleRealization>,
    form: IntersectionForm,
}

fn class_name(class: &CycleClass) -> String {
    let nonzero: Vec<usize> = (0..class.len()).filter(|&k| class.0[k] != 0).collect();
    if nonzero.len() == 1 && class.0[nonzero[0]] == 1 {
        return format!("d{}", nonzero[0] + 1);
    }
    let parts: Vec<String> = class.0.iter().map(i64::to_string).collect();
    format!("c[{}]", parts.join(","))
}

fn commutator_name(a: &CycleClass, b: &CycleClass) -> String {
    format!("({},{})", class_name(a), class_name(b))
}

fn dependency_error<T>(stage: Stage) -> Section<T> {
    Section::Error { kind: ErrorKind::Dependency, message: format!("stage `{stage}` did not complete") }
}

fn section<T>(r: Stageful<T>) -> Section<T> {
    match r {
        Ok(result) => Section::Ok { result },
        Err(message) => Section::Error { kind: ErrorKind::Numerical, message },
    }
}

fn conventions() -> Conventions {
    Conventions {
        picard_lefschetz_sign: PL_SIGN,
        m1_sign: M1_SIGN,
        m2_sign: M2_SIGN,
        composition_order: "words are read left to right as path concatenation; holonomies compose in path order".into(),
        iterated_integral_order: "the first form of an iterated integral is integrated first".into(),
        basis_order: "vanishing paths ordered by initial direction at the base point, counterclockwise from the positive real axis".into(),
    }
}

/// Runs `s` and assembles its report.
pub fn run_scenario(s: &Scenario) -> Report {
    let tol = &s.tolerances;
    let wants = |st: Stage| s.stages.contains(&st);
    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo { name: "foliate".into(), version: env!("CARGO_PKG_VERSION").into() },
        scenario: s.echo.clone(),
        tolerances: tol.clone(),
        provenance: Provenance { config_hash: config_hash(&(&s.echo, tol)), seeds: Vec::new(), conventions: conventions() },
        tameness: None,
        homology: None,
        periods: None,
        melnikov: None,
        holonomy: None,
        theorem: None,
    };

    let mut critical: Option<CriticalSet> = None;
    if wants(Stage::Tameness) {
        let r = tameness_stage(s);
        critical = r.as_ref().ok().map(|(_, c)| c.clone());
        report.tameness = Some(section(r.map(|(t, _)| t)));
    }

    let mut homology: Option<Homology> = None;
    if wants(Stage::Homology) {
        report.homology = Some(match &critical {
            None => dependency_error(Stage::Tameness),
            Some(crit) => {
                let working = report.tameness.as_ref().and_then(Section::ok).is_some_and(|t| t.working_hypotheses);
                match homology_stage(s, crit.clone(), working) {
                    Ok((h, sec)) => {
                        homology = Some(h);
                        Section::Ok { result: sec }
                    }
                    Err(message) => Section::Error { kind: ErrorKind::Numerical, message },
                }
            }
        });
    }

    if wants(Stage::Periods) {
        report.periods = Some(match &homology {
            None => dependency_error(Stage::Homology),
            Some(h) => section(periods_stage(s, h)),
        });
    }

    if wants(Stage::Melnikov) {
        let periods_ok = report.periods.as_ref().is_some_and(|p| !p.is_error());
        report.melnikov = Some(match (&homology, periods_ok) {
            (Some(h), true) => section(melnikov_stage(s, h)),
            _ => dependency_error(Stage::Periods),
        });
    }

    if wants(Stage::Holonomy) {
        report.holonomy = Some(match (s.backend, &homology) {
            (Backend::Hyperelliptic, None) => dependency_error(Stage::Homology),
            (Backend::HolonomyOnly, _) if critical.is_none() => dependency_error(Stage::Tameness),
            (_, h) => section(holonomy_stage(s, h.as_ref())),
        });
    }

    if wants(Stage::Theorem) {
        let hom = report.homology.as_ref().and_then(Section::ok);
        let hol = report.holonomy.as_ref().and_then(Section::ok);
        report.theorem = Some(match (hom, hol) {
            (Some(hom), Some(hol)) => {
                let m2 = report.melnikov.as_ref().and_then(Section::ok).map(|m| m.report.discrepancy);
                section(theorem_stage(s, hom, hol, m2))
            }
            (None, _) => dependency_error(Stage::Homology),
            (_, None) => dependency_error(Stage::Holonomy),
        });
    }
    report
}

fn tameness_stage(s: &Scenario) -> Stageful<(TamenessSection, CriticalSet)> {
    let tol = &s.tolerances;
    let crit = critical_set(&s.f, tol).map_err(|e| e.to_string())?;
    let report = tameness_from_critical(&s.f, &crit, tol);
    let working = report.nondegenerate && report.distinct_values;
    Ok((TamenessSection { report, critical_points: crit.points.clone(), working_hypotheses: working }, crit))
}

fn homology_stage(s: &Scenario, crit: CriticalSet, working: bool) -> Stageful<(Homology, HomologySection)> {
    let tol = &s.tolerances;
    let model = build_distinguished_system(&s.f, crit, s.base_point, tol).map_err(|e| e.to_string())?;
    let basis = realize_basis(&model, tol).map_err(|e| e.to_string())?;
    let form = intersection_from_cycles(&model, &basis).map_err(|e| e.to_string())?;
    let mu = model.mu();
    let graph = dynkin(&form);
    let ops: Vec<PLOperator> = (0..mu).map(|i| picard_lefschetz(i, &form)).collect();
    let orbit_spans = (0..mu)
        .map(|i| monodromy_orbit_span(&CycleClass::basis(i, mu), &ops, None))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let condition = s.pair().map(|(d1, d2)| ConditionSummary {
        d1: d1.0.clone(),
        d2: d2.0.clone(),
        verdict: condition_faca(d1, d2, &form),
        brute_force: condition_faca_bruteforce(d1, d2, &form, BOX_RADIUS, BRUTE_FORCE_BUDGET).ok().map(|r| r.0),
        box_radius: BOX_RADIUS,
    });
    let sec = HomologySection {
        base_point: model.base,
        basis: (0..mu)
            .map(|k| BasisEntry {
                index: k + 1,
                critical_point: model.order[k],
                critical_value: model.value(k),
                path: model.paths[k].waypoints.clone(),
            })
            .collect(),
        intersection: form.clone(),
        dynkin_dot: graph.to_dot(),
        strongly_tame: strongly_tame(working, &graph),
        dynkin: graph,
        monodromy_preserves_form: ops.iter().all(|o| o.preserves(&form)),
        monodromy_unipotent: ops.iter().all(PLOperator::is_unipotent),
        monodromy: ops,
        orbit_spans,
        condition,
    };
    Ok((Homology { model, basis, form }, sec))
}

fn periods_stage(s: &Scenario, h: &Homology) -> Stageful<PeriodsSection> {
    let tol = &s.tolerances;
    let (w, dw) = fiber_forms(&h.model, &s.omega).map_err(|e| e.to_string())?;
    let table = period_table(&h.model, &h.basis, &[w.clone(), dw.clone()], tol.period).map_err(|e| e.to_string())?;
    let mut values: Vec<PeriodValue> = table.into_iter().flatten().collect();
    for (name, f) in [("omega", &w), ("omega'", &dw)] {
        for v in values.iter_mut().filter(|v| v.form == f.to_string()) {
            v.form = name.to_string();
        }
    }
    for class in &s.cycles {
        for (name, f) in [("omega", &w), ("omega'", &dw)] {
            let mut value = C64::new(0.0, 0.0);
            let mut error = 0.0;
            for (j, &a) in class.0.iter().enumerate() {
                if a != 0 {
                    let p = period(&h.model, &h.basis[j], f, tol.period).map_err(|e| e.to_string())?;
                    value += p.value * a as f64;
                    error += p.error * (a as f64).abs();
                }
            }
            values.push(PeriodValue { value, error, cycle: class_name(class), form: name.into(), t: h.model.base });
        }
    }
    let (forms, condition) = choose_form_basis(&h.model, &h.basis, tol.period).map_err(|e| e.to_string())?;
    let mut monodromy = Vec::new();
    for k in 0..h.model.mu() {
        let m = numeric_monodromy_matrix(&h.model, &h.basis, &forms, &h.model.simple_loop(k), tol.period).map_err(|e| e.to_string())?;
        let pl = picard_lefschetz(k, &h.form);
        let rounded_op = PLOperator { index: k, matrix: m.rounded.clone() };
        monodromy.push(MonodromyCheck {
            index: k + 1,
            matches_picard_lefschetz: m.rounded == pl.matrix && m.deviation <= tol.monodromy_rounding,
            preserves_form: rounded_op.preserves(&h.form),
            matrix: m.matrix,
            rounded: m.rounded,
            deviation: m.deviation,
            tolerance: tol.monodromy_rounding,
        });
    }
    Ok(PeriodsSection {
        tolerance: tol.period,
        omega_on_fiber: w.to_string(),
        omega_derivative: dw.to_string(),
        values,
        form_basis: forms.iter().map(ToString::to_string).collect(),
        form_basis_condition: condition,
        monodromy,
    })
}

fn melnikov_stage(s: &Scenario, h: &Homology) -> Stageful<MelnikovSection> {
    let tol = &s.tolerances;
    let ts = s.t_grid.clone().unwrap_or_else(|| default_t_grid(&h.model, DEFAULT_GRID));
    let named: Vec<(String, CycleClass)> = s.cycles.iter().map(|c| (class_name(c), c.clone())).collect();
    let report = melnikov_report(&h.model, &h.basis, &named, s.pair(), &s.omega, &ts, tol).map_err(|e| e.to_string())?;
    let agreement = s.pair().map(|_| {
        report
            .m2_det
            .iter()
            .zip(&report.m2_iterated)
            .all(|(d, i)| (d.value - i.value).norm() <= M2_AGREEMENT * d.value.norm().max(1.0))
    });
    Ok(MelnikovSection { report, zero_tolerance: tol.zero_verdict, agreement_tolerance: M2_AGREEMENT, agreement })
}

fn summarize(samples: &HolonomyMapSamples, order: usize, reference: &[Option<C64>], floor: f64) -> Stageful<Vec<FitSummary>> {
    samples
        .base_values()
        .iter()
        .zip(reference)
        .map(|(&t0, want)| {
            let fit = melnikov_fit(samples, t0, order).map_err(|e| e.to_string())?;
            let got = fit.m(order);
            let relative_error = want.map(|w| (got - w).norm() / w.norm().max(f64::MIN_POSITIVE));
            let tolerance = FIT_AGREEMENT;
            let agrees = match (want, order) {
                (Some(w), 1) => Some((got - w).norm() <= (1e-6f64).max(tolerance * w.norm())),
                (Some(w), _) if w.norm() >= floor => Some((got - w).norm() <= tolerance * w.norm()),
                _ => None,
            };
            Ok(FitSummary {
                t0,
                m1: fit.m(1),
                m2: fit.m(2),
                m1_error: fit.errors[0],
                m2_error: fit.errors[1],
                consistency: fit.consistency.is_finite().then_some(fit.consistency),
                reference: *want,
                relative_error,
                tolerance,
                agrees,
            })
        })
        .collect()
}

fn lift_loop(surface: &Surface, l: &UserLoop) -> Stageful<LoopWord> {
    let fiber = surface.fiber(l.t, None).map_err(|e| e.to_string())?;
    let mut xs = l.x.clone();
    if xs.first() != xs.last() {
        xs.push(xs[0]);
    }
    let mut y = surface.project_y(xs[0], l.y0, l.t);
    let mut vertices = vec![Vertex { x: xs[0], y }];
    for w in xs.windows(2) {
        y = fiber.lift_to(w[0], y, w[1]).map_err(|e| e.to_string())?;
        vertices.push(Vertex { x: w[1], y });
    }
    let gap = (y - vertices[0].y).norm();
    if gap > 1e-8 * (1.0 + y.norm()) {
        return Err(format!("loop `{}` does not close on the fiber (sheet gap {gap:.3e})", l.name));
    }
    Ok(LoopWord::from_cycle(&CycleRealization { t: l.t, vertices }))
}

fn holonomy_stage(s: &Scenario, h: Option<&Homology>) -> Stageful<HolonomySection> {
    let tol = &s.tolerances;
    let mut cycles = Vec::new();
    let mut commutator = None;
    let mut t0 = s.t0.clone().unwrap_or_default();
    if let Some(h) = h {
        if t0.is_empty() {
            t0 = vec![h.model.base];
        }
        let task = HolonomyTask {
            model: &h.model,
            basis: &h.basis,
            omega: s.omega.clone(),
            eps: s.eps.clone(),
            t0: t0.clone(),
            guard: tol.divergence_guard,
            tol: tol.holonomy_local,
        };
        for class in &s.cycles {
            let samples = holonomy_word(&task, &class_letters(class)).map_err(|e| e.to_string())?;
            let want = m1(&h.model, &h.basis, class, &s.omega, &t0, tol.period).map_err(|e| e.to_string())?;
            let want: Vec<Option<C64>> = want.iter().map(|v| Some(v.value)).collect();
            let fits = summarize(&samples, 1, &want, 0.0)?;
            cycles.push(WordRun { name: class_name(class), samples, fits });
        }
        if let Some((a, b)) = s.pair() {
            let letters: Vec<Letter> = class_commutator_letters(a, b);
            if !letters.is_empty() {
                let d = commutation_defect_word(&task, &letters, tol.commutation).map_err(|e| e.to_string())?;
                let want = m2_commutator_det(&h.model, &h.basis, a, b, &s.omega, &t0, tol.period).map_err(|e| e.to_string())?;
                let want: Vec<Option<C64>> = want.iter().map(|v| Some(v.value)).collect();
                let fits = summarize(&d.samples, 2, &want, M2_FLOOR)?;
                let word = WordRun { name: commutator_name(a, b), samples: d.samples.clone(), fits };
                commutator = Some(CommutatorRun::new(word, d));
            }
        }
    }
    let general;
    let surface = match h {
        Some(h) if s.backend == Backend::Hyperelliptic => &h.model.surface,
        _ => {
            general = Surface::General(NumPolyJet::from(&s.f));
            &general
        }
    };
    let sys = LeafSystem::new(surface, &s.omega, tol.divergence_guard, tol.holonomy_local);
    let mut loops = Vec::new();
    for l in &s.loops {
        let word = lift_loop(surface, l)?;
        let samples = holonomy_on_words(&sys, &[word], &s.eps, vec![l.name.clone()]).map_err(|e| e.to_string())?;
        let fits = summarize(&samples, 1, &[None], 0.0)?;
        loops.push(WordRun { name: l.name.clone(), samples, fits });
    }
    if t0.is_empty() {
        t0 = s.loops.iter().map(|l| l.t).collect();
    }
    Ok(HolonomySection {
        eps: s.eps.clone(),
        t0,
        divergence_guard: tol.divergence_guard,
        local_tolerance: tol.holonomy_local,
        cycles,
        commutator,
        loops,
    })
}

fn find_witness(s: &Scenario) -> Stageful<Option<WitnessSummary>> {
    let summary = |w: foliate_core::algebra::ExactnessWitness, bounds: DegreeBounds| WitnessSummary {
        p: w.p.to_string(),
        q: w.q.to_string(),
        certified: w.certified,
        bounds,
    };
    let bounds = DegreeBounds::default_for(&s.omega, &s.f);
    match relative_exactness(&s.omega, &s.f, Some(bounds)) {
        Ok(Some(w)) => Ok(Some(summary(w, bounds))),
        Ok(None) => Ok(None),
        Err(AlgebraError::BoundsTooSmall { p, q }) => {
            let wider = DegreeBounds { p, q };
            let w = relative_exactness(&s.omega, &s.f, Some(wider)).map_err(|e| e.to_string())?;
            Ok(w.map(|w| summary(w, wider)))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn theorem_stage(s: &Scenario, hom: &HomologySection, hol: &HolonomySection, m2_discrepancy: Option<f64>) -> Stageful<TheoremSection> {
    let cond = hom.condition.as_ref().ok_or("the theorem stage needs two cycles")?;
    let comm = hol.commutator.as_ref().ok_or("the commutator holonomy was not computed")?;
    let hypotheses = Hypotheses {
        strongly_tame: hom.strongly_tame,
        condition: cond.verdict.clone(),
        hold: hom.strongly_tame && cond.verdict.holds,
    };
    let witness = find_witness(s)?;
    let words = hol.cycles.iter().chain(std::iter::once(&comm.word)).chain(&hol.loops);
    let mut max_err: f64 = 0.0;
    let mut worst: Option<f64> = None;
    for w in words {
        for smp in &w.samples.samples {
            max_err = max_err.max(smp.err);
        }
        for f in &w.fits {
            if let Some(c) = f.consistency {
                worst = Some(worst.map_or(c, |x: f64| x.max(c)));
            }
        }
    }
    let audit = Audit {
        m2_discrepancy,
        max_holonomy_error: max_err,
        worst_fit_consistency: worst,
        commutation_second_order: comm.second_order,
        commutation_tolerance: comm.tolerance,
    };
    let commuting = comm.commuting;
    let (verdict, explanation) = if !hypotheses.hold {
        let why = if !hom.strongly_tame { "the Dynkin diagram is not connected or f is degenerate" } else { "the pairing condition on the selected cycles fails" };
        (Verdict::Vacuous, format!("hypotheses do not hold: {why}; the implication says nothing"))
    } else {
        match (commuting, witness.is_some()) {
            (true, true) => (Verdict::Consistent, "holonomies commute and omega = Q df + dP, so the deformation keeps a first integral".to_string()),
            (false, false) => (Verdict::Consistent, "no decomposition omega = Q df + dP and the commutator holonomy has an eps^2 term".to_string()),
            (true, false) => (
                Verdict::Inconsistent,
                "holonomies commute at tolerance but no decomposition omega = Q df + dP was found within the degree bounds".to_string(),
            ),
            (false, true) => (
                Verdict::Inconsistent,
                "omega = Q df + dP yet the commutator holonomy shows an eps^2 term".to_string(),
            ),
        }
    };
    Ok(TheoremSection { verdict, hypotheses, witness, commuting, explanation, audit })
}
