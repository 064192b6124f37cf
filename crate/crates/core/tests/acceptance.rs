//! End-to-end acceptance run: one line per criterion, nonzero exit on any
//! failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radon_weights::arclength::{
    default_degree_bound, diffeo_identity_unchecked, diffeo_invariance_check, newton_polytope_at, q_map, ExponentVector,
};
use radon_weights::estimator::{cc_ball_family, optimality_probe, ratio_sweep, volume_scaling, FamilyOptions, Weight};
use radon_weights::field::PolyMap;
use radon_weights::flows::{
    equivalence_report, polytopes_agree, tilde_polytope_at, vanishing_law_check, vanishing_order, FlowEngine, Verdict,
};
use radon_weights::numeric::{fd_derivative, NumericSystem};
use radon_weights::poly::Polynomial;
use radon_weights::polytope::{admissible_reduction, finite_envelope, separating_vector, UpwardPolytope};
use radon_weights::scalar::{int, rat, to_f64};
use radon_weights::systems::{
    commuting_frame, cubic_family, flat_quartic, loomis_whitney, moment_translation, moment_xray, parabola, poly_t,
    repeated_curve, translation_invariant, System,
};
use radon_weights::tolerances::Tolerances;
use radon_weights::words::{Degree, Word, WordTuple};
use radon_weights::{Error, Rational};

type P = Polynomial<Rational>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn tuple(words: &[&[u16]]) -> WordTuple {
    WordTuple::new(words.iter().map(|w| Word::from_letters(w)).collect())
}

fn origin(d: usize) -> Vec<Rational> {
    vec![Rational::zero(); d]
}

/// A point with no special structure: `((i+1)/3)_i`.
fn generic_point(d: usize) -> Vec<Rational> {
    (0..d).map(|i| rat(i as i64 + 1, 3)).collect()
}

fn fixtures() -> Vec<System> {
    vec![
        parabola().unwrap(),
        moment_translation(3).unwrap(),
        moment_xray(3).unwrap(),
        loomis_whitney(3).unwrap(),
        flat_quartic().unwrap(),
        repeated_curve(3).unwrap(),
        cubic_family(int(1)).unwrap(),
        commuting_frame(3).unwrap(),
    ]
}

fn closed_form_polytopes() -> Outcome {
    let systems = [
        moment_translation(2).unwrap(),
        moment_translation(3).unwrap(),
        moment_xray(3).unwrap(),
        moment_xray(4).unwrap(),
        loomis_whitney(3).unwrap(),
        loomis_whitney(4).unwrap(),
    ];
    let mut bad = Vec::new();
    let mut uncertified = Vec::new();
    for sys in &systems {
        for x0 in [origin(sys.dim()), generic_point(sys.dim())] {
            let expected = sys.closed_form_extremes.clone().unwrap();
            let n0 = default_degree_bound(sys.dim(), None);
            // exact equality is the criterion; certification is tried by
            // raising the truncation a few steps and only reported
            let mut certified_at = None;
            for n in n0..=n0 + 4 {
                let r = newton_polytope_at(sys, &x0, n).unwrap();
                if r.extreme_degrees() != expected {
                    bad.push(format!("{} at {:?}, N = {n}: {:?}", sys.name, x0, r.extreme_degrees()));
                    break;
                }
                if r.extremes.iter().all(|e| e.certified) {
                    certified_at = Some(n);
                    break;
                }
            }
            if certified_at.is_none() {
                uncertified.push(sys.name.clone());
            }
        }
    }
    let note = if uncertified.is_empty() { "all certified".to_string() } else { format!("not certified within N + 4: {}", uncertified.join(", ")) };
    outcome(bad.is_empty(), if bad.is_empty() { format!("{} systems at two points each; {note}", systems.len()) } else { bad.join("; ") })
}

fn polytope_equivalence() -> Outcome {
    let mut bad = Vec::new();
    let mut compared = 0;
    for sys in fixtures() {
        let d = sys.dim();
        let x0 = origin(d);
        let n = default_degree_bound(d, None);
        let p = newton_polytope_at(&sys, &x0, n).unwrap();
        let pt = tilde_polytope_at(&sys, &x0, n + 1 - d as u32).unwrap();
        if !polytopes_agree(&p, &pt).unwrap() {
            bad.push(format!("{}: {:?} vs {:?}", sys.name, p.extreme_degrees(), pt.extreme_degrees()));
        }
        for b0 in p.extreme_degrees() {
            let r = equivalence_report(&sys, &x0, &b0, n, None).unwrap();
            compared += 1;
            if r.verdict != Verdict::Pass || r.s_lambda.is_zero() != r.s_psi.is_zero() {
                bad.push(format!("{} at {b0}: {}", sys.name, r.verdict));
            }
        }
    }
    let cs = [rat(1, 4), rat(1, 2), int(1), int(2), int(4)];
    let mut ratios = Vec::new();
    for c in &cs {
        let sys = cubic_family(c.clone()).unwrap();
        let x0 = origin(3);
        let p = newton_polytope_at(&sys, &x0, default_degree_bound(3, None)).unwrap();
        for b0 in p.extreme_degrees() {
            match equivalence_report(&sys, &x0, &b0, p.truncation, None).unwrap().ratio {
                Some(r) => ratios.push(r),
                None => bad.push(format!("c = {c}: no ratio at {b0}")),
            }
        }
    }
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = Tolerances::default().equivalence_spread;
    if !(spread < tol) {
        bad.push(format!("ratio spread {spread:.3} over the cubic family"));
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} fixtures, {compared} extremes, cubic-family ratio spread {spread:.3} (< {tol})", fixtures().len())
        } else {
            bad.join("; ")
        },
    )
}

fn non_extreme_failure() -> Outcome {
    let sys = repeated_curve(3).unwrap();
    let b0 = Degree(vec![4, 1, 1, 1]);
    let r = equivalence_report(&sys, &generic_point(4), &b0, b0.norm1(), None).unwrap();
    let ok = !r.extreme && r.s_lambda.is_positive() && r.s_psi.is_zero() && r.verdict == Verdict::NonExtremeFailureReproduced;
    outcome(ok, format!("S_lambda = {}, S_psi = {}, extreme = {}", r.s_lambda, r.s_psi, r.extreme))
}

fn vanishing_law() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    let mut incomplete = Vec::new();
    for sys in fixtures() {
        let d = sys.dim();
        let x0 = origin(d);
        let p = newton_polytope_at(&sys, &x0, default_degree_bound(d, None)).unwrap();
        for e in &p.extremes {
            let order = vanishing_order(d, &e.degree, &e.witness).min(6);
            let v = vanishing_law_check(&sys, &x0, &e.degree, &e.witness, order).unwrap();
            checked += v.below_level;
            if !v.complete {
                incomplete.push(format!("{} at {}", sys.name, e.degree));
            }
            if !v.holds() {
                bad.push(format!("{} at {}: {} nonzero", sys.name, e.degree, v.violations.len()));
            }
        }
    }
    let mut detail = format!("{checked} coefficients below the level, all zero");
    if !incomplete.is_empty() {
        detail.push_str(&format!("; flow order capped at 6 for {}", incomplete.join(", ")));
    }
    outcome(bad.is_empty(), if bad.is_empty() { detail } else { bad.join("; ") })
}

fn random_rational(rng: &mut ChaCha8Rng, max: i64) -> Rational {
    let den = rng.gen_range(1..=6);
    rat(rng.gen_range(0..=max * den), den)
}

fn separation_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut bad = Vec::new();
    let mut done = 0;
    let mut envelope_sizes = Vec::new();
    while done < 200 {
        let k = rng.gen_range(1..=4);
        let gens: Vec<Degree> = (0..rng.gen_range(1..=5)).map(|_| Degree((0..k).map(|_| rng.gen_range(0..=6)).collect())).collect();
        let poly = UpwardPolytope::new(k, gens.clone()).unwrap();
        let b0: Vec<Rational> = (0..k).map(|_| random_rational(&mut rng, 6)).collect();
        if poly.contains(&b0).unwrap() {
            continue;
        }
        done += 1;
        let w = separating_vector(poly.generators(), &b0).unwrap();
        if !w.verify(poly.generators(), &b0) {
            bad.push(format!("witness for {gens:?}, {b0:?}"));
            continue;
        }
        // the envelope can have many generators, so both sides are certified
        // directly: a generator below each original, and the witness hyperplane
        let (env, _) = finite_envelope(&w.v0, &b0).unwrap();
        let below = gens.iter().all(|g| env.dominated_by(&g.to_rational()).is_some_and(|c| c.verify(&g.to_rational())));
        if !env.excluded_by(&w.v0, &b0) || !below {
            bad.push(format!("envelope for {gens:?}, {b0:?}"));
        }
        envelope_sizes.push(env.generators().len());
        let contains_all = |p: &UpwardPolytope| gens.iter().all(|g| p.contains(&g.to_rational()).unwrap());
        let (red, _) = admissible_reduction(&poly, &b0).unwrap();
        if red.contains(&b0).unwrap() || !contains_all(&red) {
            bad.push(format!("reduction for {gens:?}, {b0:?}"));
        }
    }
    let largest = envelope_sizes.iter().max().copied().unwrap_or(0);
    outcome(bad.is_empty(), if bad.is_empty() { format!("200 random cases, largest envelope {largest} generators") } else { bad.join("; ") })
}

/// `y ↦ (a_i y_i + p_i(y_1, …, y_{i−1}))_i`, inverted by back substitution.
fn triangular(n: usize, scales: &[i64], lower: &[(usize, Vec<u32>, i64)]) -> PolyMap<Rational> {
    let comps = (0..n)
        .map(|i| {
            let mut p = P::var(n, i).scale(&int(scales[i % scales.len()]));
            for (row, exp, c) in lower {
                if *row == i && exp.len() == n && exp[i..].iter().all(|e| *e == 0) {
                    p = &p + &P::monomial(n, exp.clone(), int(*c));
                }
            }
            p
        })
        .collect();
    PolyMap::new(n, comps).unwrap()
}

/// Reverses the variable order so the shear runs the other way.
fn reversed(m: &PolyMap<Rational>) -> PolyMap<Rational> {
    let n = m.source_dim();
    let flip: Vec<P> = (0..n).rev().map(|i| P::var(n, i)).collect();
    let flip = PolyMap::new(n, flip).unwrap();
    flip.compose(m).unwrap().compose(&flip).unwrap()
}

fn unit(n: usize, i: usize, a: u32) -> Vec<u32> {
    let mut e = vec![0; n];
    e[i] = a;
    e
}

fn diffeo_pairs(d: usize, k: usize) -> Vec<(PolyMap<Rational>, Vec<PolyMap<Rational>>)> {
    let m = d - 1;
    let mut out = Vec::new();
    for variant in 0..3usize {
        let f_terms: Vec<(usize, Vec<u32>, i64)> = (1..d).map(|i| (i, unit(d, i - 1, 2 + (variant as u32 % 2)), 1 + variant as i64)).collect();
        let f = triangular(d, &[1, 1, -1, 1][variant..], &f_terms);
        let f = if variant == 1 { reversed(&f) } else { f };
        let gs = (0..k)
            .map(|j| {
                let terms: Vec<(usize, Vec<u32>, i64)> = (1..m).map(|i| (i, unit(m, i - 1, 1 + ((j + variant) as u32 % 3)), j as i64 - 1)).collect();
                let g = triangular(m, &[2 - (j as i64 % 2) * 3, 1], &terms);
                if (j + variant) % 2 == 1 {
                    reversed(&g)
                } else {
                    g
                }
            })
            .collect();
        out.push((f, gs));
    }
    out
}

fn diffeo_invariance() -> Outcome {
    let cases: Vec<(System, WordTuple)> = vec![
        (parabola().unwrap(), tuple(&[&[1], &[2], &[1, 2]])),
        (moment_translation(3).unwrap(), tuple(&[&[1], &[2], &[1, 2], &[1, 1, 2]])),
        (loomis_whitney(3).unwrap(), tuple(&[&[1], &[2], &[3]])),
        (moment_xray(3).unwrap(), tuple(&[&[1], &[2], &[1, 2], &[2, 1, 2]])),
    ];
    let mut bad = Vec::new();
    let mut checks = 0;
    for (sys, i0) in &cases {
        let d = sys.dim();
        let points: Vec<Vec<Rational>> = (0..5).map(|s| (0..d).map(|i| rat((s * 3 + i as i64 * 5) % 7 - 3, 1 + (s + i as i64) % 3)).collect()).collect();
        for (f, gs) in diffeo_pairs(d, sys.k()) {
            match diffeo_invariance_check(sys, i0, &f, &gs, &points) {
                Ok(r) if r.minimal && r.holds() => checks += r.samples.len(),
                Ok(r) => bad.push(format!("{}: identity fails at {} points", sys.name, r.samples.iter().filter(|s| !s.holds()).count())),
                Err(e) => bad.push(format!("{}: {e}", sys.name)),
            }
        }
    }
    // (t, t³) at (3,2): (2,2) lies below with λ = 6t, so (3,2) is not minimal
    let cubic = translation_invariant("(t, t^3)", &[poly_t(&[int(0), int(1)]), poly_t(&[int(0), int(0), int(0), int(1)])]).unwrap();
    let i0 = tuple(&[&[1], &[2], &[1, 2, 1]]);
    let f = PolyMap::new(
        3,
        vec![&P::var(3, 0) + &P::monomial(3, vec![3, 0, 0], int(1)), P::var(3, 1), P::var(3, 2)],
    )
    .unwrap();
    let gs = vec![PolyMap::identity(2), PolyMap::identity(2)];
    let points: Vec<Vec<Rational>> = (1..=5).map(|s| vec![rat(s, 2), rat(s - 3, 1), int(1)]).collect();
    let refused = matches!(diffeo_invariance_check(&cubic, &i0, &f, &gs, &points), Err(Error::NotMinimal(..)));
    let unchecked = diffeo_identity_unchecked(&cubic, &i0, &f, &gs, &points).unwrap();
    if !refused {
        bad.push("non-minimal degree was not refused".into());
    }
    if unchecked.holds() {
        bad.push("identity holds at the non-minimal degree".into());
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!(
                "{checks} exact point checks over {} fixtures x 3 pairs; non-minimal (3,2) refused and fails at {} of {} points",
                cases.len(),
                unchecked.samples.iter().filter(|s| !s.holds()).count(),
                unchecked.samples.len()
            )
        } else {
            bad.join("; ")
        },
    )
}

fn q_involution() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    let mut bad = 0;
    while done < 100 {
        let k = rng.gen_range(1..=5);
        let b: Vec<Rational> = (0..k).map(|_| random_rational(&mut rng, 4)).collect();
        let Ok(qb) = q_map(&b) else { continue };
        let Ok(qqb) = q_map(&qb) else { continue };
        done += 1;
        if qqb != b {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{done} random points, {bad} mismatches"))
}

fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(-e)).collect()
}

fn estimator_contrasts() -> Outcome {
    let tol = Tolerances::default();
    let opts = FamilyOptions::default();
    let deltas = dyadic(3, 8);
    let p = ExponentVector::finite(&[rat(3, 2), rat(3, 2)]).unwrap();
    let v0 = vec![int(1), int(1)];
    let x0 = origin(3);
    let i0 = tuple(&[&[1], &[2], &[1, 2]]);

    let sys = parabola().unwrap();
    let fam = cc_ball_family(&sys, &x0, &i0, &v0, &deltas, &opts, &tol).unwrap();
    let para = ratio_sweep(&sys, &Weight::Rho(i0.clone()), &fam, &p, &opts, &tol).unwrap();

    let t4 = flat_quartic().unwrap();
    let ball = tuple(&[&[1], &[2], &[1, 2, 1, 1]]);
    let fam = cc_ball_family(&t4, &x0, &ball, &v0, &deltas, &opts, &tol).unwrap();
    let plain = ratio_sweep(&t4, &Weight::Unweighted, &fam, &p, &opts, &tol).unwrap();
    let weighted = ratio_sweep(&t4, &Weight::Rho(i0), &fam, &p, &opts, &tol).unwrap();

    let s = |t: &radon_weights::estimator::RatioTable| t.slope.unwrap_or(f64::NAN);
    let halving = [&para, &plain, &weighted]
        .iter()
        .flat_map(|t| t.rows.iter().map(|r| r.quadrature_change))
        .fold(0.0, f64::max);
    let ok = s(&para).abs() <= tol.bounded_slope
        && s(&plain) <= tol.blowup_slope
        && s(&weighted).abs() <= tol.bounded_slope
        && para.rows.len() == deltas.len()
        && plain.rows.len() == deltas.len()
        && weighted.rows.len() == deltas.len()
        && halving < tol.quadrature_halving;
    outcome(
        ok,
        format!(
            "parabola weighted slope {:.4}; (t,t^4) unweighted {:.4}, weighted {:.4}; largest halving change {:.4}",
            s(&para),
            s(&plain),
            s(&weighted),
            halving
        ),
    )
}

fn optimality_scaling() -> Outcome {
    let tol = Tolerances::default();
    let opts = FamilyOptions::default();
    let deltas = dyadic(3, 7);
    let sys = parabola().unwrap();
    let x0 = origin(3);
    let i0 = tuple(&[&[1], &[2], &[1, 2]]);
    let v0 = vec![int(1), int(1)];
    let b0 = Degree(vec![2, 2]);
    let r = optimality_probe(&sys, &b0, &x0, &i0, &v0, &Weight::Rho(i0.clone()), &deltas, None, &opts, &tol).unwrap();
    let vs = volume_scaling(&sys, &x0, &i0, &v0, &deltas, &opts, &tol).unwrap();
    outcome(
        r.band_ok && r.trend_ok && vs.within,
        format!(
            "band {:.4} (<= {}), slope {:.4}; volume exponent {:.4} vs {:.1}",
            r.band, tol.band_factor, r.slope, vs.slope, vs.expected
        ),
    )
}

fn numerical_cross_validation() -> Outcome {
    let tol = Tolerances::default().finite_difference;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut bad = Vec::new();
    for sys in fixtures() {
        let d = sys.dim();
        let x0 = generic_point(d);
        let x0f: Vec<f64> = x0.iter().map(to_f64).collect();
        let ns = NumericSystem::new(&sys);
        let engine = FlowEngine::new(&sys, 4).unwrap();
        for fd in engine.determinants(Some(&x0), |_| true).unwrap() {
            for (alpha, v) in fd.derivatives() {
                let num = fd_derivative(|t| ns.psi_det(&fd.j, &x0f, t, 32), &alpha, 0.05, 3).unwrap();
                let exact = to_f64(&v);
                let rel = (num - exact).abs() / exact.abs();
                count += 1;
                worst = worst.max(rel);
                if !(rel <= tol) {
                    bad.push(format!("{} J={:?} alpha={alpha:?}: {num} vs {exact}", sys.name, fd.j));
                }
            }
        }
    }
    outcome(
        bad.is_empty() && count > 0,
        if bad.is_empty() { format!("{count} nonzero coefficients, worst relative error {worst:.2e}") } else { bad.join("; ") },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form polytopes", closed_form_polytopes),
        ("polytope equivalence", polytope_equivalence),
        ("non-extreme failure", non_extreme_failure),
        ("vanishing law", vanishing_law),
        ("separation round trips", separation_round_trips),
        ("diffeomorphism invariance", diffeo_invariance),
        ("q involution", q_involution),
        ("estimator contrasts", estimator_contrasts),
        ("optimality scaling", optimality_scaling),
        ("finite-difference cross-validation", numerical_cross_validation),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<36} {}  {} [{:.1}s]",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
