//! Subcommand dispatch. Each subcommand runs the relevant library checks and
//! collects a JSON result, a CSV table and a list of pass/fail checks.

use std::fmt;

use radon_weights::arclength::{
    check_tuple, default_degree_bound, diffeo_identity_unchecked, diffeo_invariance_check, exponent_region_check,
    newton_polytope_at, newton_polytope_of_region, q_map, weight_rho, ExponentVector, NewtonPolytopeReport,
};
use radon_weights::estimator::{cc_ball_family, optimality_probe, ratio_sweep, volume_scaling, FamilyOptions, Weight};
use radon_weights::field::{lie_bracket, PolyMap, VectorField};
use radon_weights::flows::{
    describe_term, equivalence_report, polytopes_agree, tilde_polytope_at, vanishing_law_check, weight_rho_tilde, Verdict,
};
use radon_weights::numeric::BallOptions;
use radon_weights::polytope::{admissible_reduction, finite_envelope, separating_vector};
use radon_weights::scalar::{format_rational, int, to_f64};
use radon_weights::systems::System;
use radon_weights::words::{enumerate_words, jacobi_expand, Degree, WordTuple};
use radon_weights::{Error, Rational};
use serde_json::{json, Value};

use crate::report::{Check, RunReport, Table};
use crate::spec::{Expectation, ProblemSpec, WeightKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Brackets,
    Polytope,
    Separate,
    Weight,
    Equivalence,
    Invariance,
    Estimate,
    Optimality,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Brackets => "brackets",
            Command::Polytope => "polytope",
            Command::Separate => "separate",
            Command::Weight => "weight",
            Command::Equivalence => "equivalence",
            Command::Invariance => "invariance",
            Command::Estimate => "estimate",
            Command::Optimality => "optimality",
        }
    }
}

/// A spec that cannot drive the requested subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Out = Result<(Value, Table, Vec<Check>, Vec<String>), Failure>;

fn need<'a, T>(x: &'a Option<T>, key: &str, cmd: Command) -> Result<&'a T, Failure> {
    x.as_ref().ok_or_else(|| Failure::Usage(format!("`{}` needs `{key}` in the spec", cmd.name())))
}

fn q(x: &Rational) -> Value {
    Value::String(format_rational(x))
}

fn qv(xs: &[Rational]) -> Value {
    Value::Array(xs.iter().map(q).collect())
}

fn qs(xs: &[Rational]) -> String {
    xs.iter().map(format_rational).collect::<Vec<_>>().join(" ")
}

fn deg(b: &Degree) -> Value {
    json!(b.0)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6e}")
}

/// Runs `cmd`. Library errors become a failed `completed` check; a spec
/// missing what the subcommand needs is a usage error.
pub fn run(cmd: Command, spec: &ProblemSpec) -> Result<RunReport, UsageError> {
    let out = spec.system().map_err(Failure::Core).and_then(|sys| match cmd {
        Command::Brackets => brackets(spec, &sys),
        Command::Polytope => polytope(spec, &sys),
        Command::Separate => separate(spec, &sys),
        Command::Weight => weight(spec, &sys),
        Command::Equivalence => equivalence(spec, &sys),
        Command::Invariance => invariance(spec, &sys),
        Command::Estimate => estimate(spec, &sys),
        Command::Optimality => optimality(spec, &sys),
    });
    let (result, table, checks, warnings) = match out {
        Ok(x) => x,
        Err(Failure::Usage(m)) => return Err(UsageError(m)),
        Err(Failure::Core(e)) => (Value::Null, Table::default(), vec![Check::new("completed", false, e.to_string())], Vec::new()),
    };
    Ok(RunReport { command: cmd.name().to_string(), spec: spec.clone(), checks, warnings, result, table })
}

fn degree_bound(spec: &ProblemSpec) -> u32 {
    spec.degree_bound.unwrap_or_else(|| default_degree_bound(spec.dimension, spec.b0().as_ref()))
}

/// Longest bracket word that can enter a tuple of total degree `n`.
fn word_len(spec: &ProblemSpec) -> usize {
    (degree_bound(spec) as usize + 1).saturating_sub(spec.dimension).max(2)
}

fn brackets(spec: &ProblemSpec, sys: &System) -> Out {
    let len = word_len(spec);
    let table = sys.table(len);
    let x0 = spec.base_point();
    let k = sys.k();
    let mut csv = Table::new(&["word", "degree", "value_at_base_point"]);
    let mut words = Vec::new();
    for (w, f) in table.nonzero_words() {
        let v = f.eval(&x0);
        csv.push(vec![w.to_string(), w.degree(k).to_string(), qs(&v)]);
        words.push(json!({
            "word": w.letters(),
            "degree": deg(&w.degree(k)),
            "components": f.components().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "value": qv(&v),
        }));
    }
    // Jacobi contraction: [X_w, X_w'] as a combination of right-nested words.
    let jacobi_len = len.min(5);
    let all = enumerate_words(k, jacobi_len);
    let mut pairs = 0;
    let mut bad = Vec::new();
    for w in &all {
        for w2 in all.iter().filter(|w2| w.len() + w2.len() <= jacobi_len) {
            let lhs = lie_bracket(&table.bracket_field(w), &table.bracket_field(w2))?;
            let mut rhs = VectorField::zero(sys.dim());
            for (u, c) in jacobi_expand(w, w2) {
                rhs = rhs.add(&table.bracket_field(&u).scale(&int(c)));
            }
            pairs += 1;
            if lhs != rhs {
                bad.push(format!("[{w}, {w2}]"));
            }
        }
    }
    let checks = vec![Check::new(
        "jacobi_contraction",
        bad.is_empty(),
        if bad.is_empty() { format!("{pairs} pairs of total length ≤ {jacobi_len}") } else { bad.join(", ") },
    )];
    let result = json!({"max_word_length": len, "base_point": qv(&x0), "words": words, "jacobi_pairs": pairs});
    Ok((result, csv, checks, Vec::new()))
}

fn polytope_report(spec: &ProblemSpec, sys: &System) -> radon_weights::Result<NewtonPolytopeReport> {
    let n = degree_bound(spec);
    if spec.samples.is_empty() {
        newton_polytope_at(sys, &spec.base_point(), n)
    } else {
        newton_polytope_of_region(sys, &spec.samples, n)
    }
}

fn polytope_json(r: &NewtonPolytopeReport) -> Value {
    json!({
        "truncation": r.truncation,
        "generators": r.polytope.generators().iter().map(deg).collect::<Vec<_>>(),
        "realizations": r.realizations.iter().map(|(b, t)| json!({"degree": deg(b), "realization": t.to_string()})).collect::<Vec<_>>(),
        "extremes": r.extremes.iter().map(|e| json!({
            "degree": deg(&e.degree),
            "realization": e.realization.to_string(),
            "v0": qv(&e.witness.v0),
            "epsilon": q(&e.witness.epsilon),
            "certified": e.certified,
        })).collect::<Vec<_>>(),
        "matches_closed_form": r.matches_closed_form,
    })
}

fn polytope(spec: &ProblemSpec, sys: &System) -> Out {
    let r = polytope_report(spec, sys)?;
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let gens = r.polytope.generators();
    let bad: Vec<String> = r
        .extremes
        .iter()
        .filter(|e| !e.witness.verify(&gens.iter().filter(|g| **g != e.degree).cloned().collect::<Vec<_>>(), &e.degree.to_rational()))
        .map(|e| e.degree.to_string())
        .collect();
    checks.push(Check::new("separation_witnesses", bad.is_empty(), if bad.is_empty() { "all verify".to_string() } else { bad.join(", ") }));
    if let Some(m) = r.matches_closed_form {
        let expected = sys.closed_form_extremes.clone().unwrap_or_default();
        checks.push(Check::new(
            "closed_form",
            m,
            format!("expected {}", expected.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ")),
        ));
    }
    for e in r.extremes.iter().filter(|e| !e.certified) {
        warnings.push(format!("extremality of {} is not certified beyond the truncation {}", e.degree, r.truncation));
    }
    let mut result = polytope_json(&r);
    if let (Some(m), true) = (spec.jet_order, spec.samples.is_empty()) {
        let t = tilde_polytope_at(sys, &spec.base_point(), m)?;
        let agree = polytopes_agree(&r, &t)?;
        checks.push(Check::new("flow_polytope_agrees", agree, format!("flow order {m}")));
        result["flow_polytope"] = polytope_json(&t);
    }
    let mut csv = Table::new(&["degree", "extreme", "realization", "v0", "epsilon", "certified"]);
    for b in gens {
        let row = match r.extreme(b) {
            Some(e) => vec![
                b.to_string(),
                "true".into(),
                e.realization.to_string(),
                qs(&e.witness.v0),
                format_rational(&e.witness.epsilon),
                e.certified.to_string(),
            ],
            None => vec![b.to_string(), "false".into(), r.realizations[b].to_string(), String::new(), String::new(), String::new()],
        };
        csv.push(row);
    }
    Ok((result, csv, checks, warnings))
}

fn separate(spec: &ProblemSpec, sys: &System) -> Out {
    let b0 = need(&spec.b0(), "b0", Command::Separate)?.to_rational();
    let r = polytope_report(spec, sys)?;
    let p = &r.polytope;
    let mut checks = Vec::new();
    let mut csv = Table::new(&["item", "value"]);
    let result = match p.membership(&b0)? {
        Some(cert) => {
            checks.push(Check::new("membership_certificate", cert.verify(&b0), "b0 lies in the polytope"));
            for (g, w) in &cert.support {
                csv.push(vec![format!("support {g}"), format_rational(w)]);
            }
            csv.push(vec!["slack".into(), qs(&cert.slack)]);
            json!({
                "b0": qv(&b0),
                "member": true,
                "support": cert.support.iter().map(|(g, w)| json!({"generator": deg(g), "weight": q(w)})).collect::<Vec<_>>(),
                "slack": qv(&cert.slack),
            })
        }
        None => {
            let w = separating_vector(p.generators(), &b0)?;
            checks.push(Check::new("separating_vector", w.verify(p.generators(), &b0), "v0·b0 + ε < v0·b for every generator"));
            let mut result = json!({"b0": qv(&b0), "member": false, "v0": qv(&w.v0), "epsilon": q(&w.epsilon)});
            csv.push(vec!["v0".into(), qs(&w.v0)]);
            csv.push(vec!["epsilon".into(), format_rational(&w.epsilon)]);
            match finite_envelope(&w.v0, &b0) {
                Ok((env, n)) => {
                    let excludes = env.excluded_by(&w.v0, &b0);
                    let contains = p.generators().iter().all(|g| {
                        let g = g.to_rational();
                        env.dominated_by(&g).is_some_and(|c| c.verify(&g))
                    });
                    checks.push(Check::new("envelope_excludes_b0", excludes, format!("truncation {n}")));
                    checks.push(Check::new("envelope_contains_generators", contains, format!("{} envelope generators", env.generators().len())));
                    result["envelope"] = json!({"truncation": n, "generators": env.generators().len()});
                    csv.push(vec!["envelope truncation".into(), n.to_string()]);
                }
                Err(e) => checks.push(Check::new("envelope", false, e.to_string())),
            }
            let (red, c) = admissible_reduction(p, &b0)?;
            let excludes = !red.contains(&b0)?;
            let mut contains = true;
            for g in p.generators() {
                contains &= red.contains(&g.to_rational())?;
            }
            checks.push(Check::new("reduction_excludes_b0", excludes, format!("axis scale {c}")));
            checks.push(Check::new("reduction_contains_original", contains, format!("{} generators", red.generators().len())));
            result["reduction"] = json!({"axis_scale": c, "generators": red.generators().iter().map(deg).collect::<Vec<_>>()});
            csv.push(vec!["reduction axis scale".into(), c.to_string()]);
            result
        }
    };
    Ok((result, csv, checks, Vec::new()))
}

fn weight(spec: &ProblemSpec, sys: &System) -> Out {
    if spec.i0.is_none() && spec.j0.is_none() {
        return Err(Failure::Usage("`weight` needs `i0` or `j0` and `beta0` in the spec".into()));
    }
    let points = if spec.samples.is_empty() { vec![spec.base_point()] } else { spec.samples.clone() };
    let mut checks = Vec::new();
    let mut csv = Table::new(&["weight", "point", "radicand", "root", "value"]);
    let mut result = json!({});
    let mut b0 = spec.b0();
    if let Some(i0) = spec.i0() {
        check_tuple(sys, &i0)?;
        b0.get_or_insert_with(|| i0.degree(sys.k()));
        let mut vals = Vec::new();
        for x in &points {
            let w = weight_rho(sys, &i0, x)?;
            csv.push(vec!["rho".into(), qs(x), format_rational(&w.radicand), w.root.to_string(), fmt_f(w.value)]);
            vals.push(json!({"point": qv(x), "radicand": q(&w.radicand), "root": w.root, "value": w.value}));
        }
        result["rho"] = json!({"tuple": i0.to_string(), "values": vals});
    }
    if let (Some(j0), Some(beta0)) = (&spec.j0, &spec.beta0) {
        let mut vals = Vec::new();
        for x in &points {
            let w = weight_rho_tilde(sys, j0, beta0, x)?;
            csv.push(vec!["rho_tilde".into(), qs(x), format_rational(&w.radicand), w.root.to_string(), fmt_f(w.value)]);
            vals.push(json!({"point": qv(x), "radicand": q(&w.radicand), "root": w.root, "value": w.value}));
        }
        result["rho_tilde"] = json!({"j": j0, "beta": beta0, "values": vals});
    }
    if let Some(b) = &b0 {
        match q_map(&b.to_rational()) {
            Ok(qb) => {
                result["q"] = qv(&qb);
                if let Ok(qq) = q_map(&qb) {
                    checks.push(Check::new("q_involution", qq == b.to_rational(), format!("q(q({b})) = [{}]", qs(&qq))));
                }
                if let Some(ps) = &spec.exponents {
                    let region = exponent_region_check(b, &ExponentVector::finite(ps)?)?;
                    result["exponents"] = json!({"p": qv(ps), "admissible": region.admissible, "reasons": region.reasons});
                }
            }
            Err(e) => result["q_error"] = Value::String(e.to_string()),
        }
    }
    Ok((result, csv, checks, Vec::new()))
}

fn equivalence(spec: &ProblemSpec, sys: &System) -> Out {
    let b0 = need(&spec.b0(), "b0", Command::Equivalence)?.clone();
    let x0 = spec.base_point();
    let r = equivalence_report(sys, &x0, &b0, degree_bound(spec), spec.jet_order)?;
    let mut checks = vec![Check::new("verdict", r.verdict != Verdict::Fail, r.verdict.to_string())];
    let mut result = json!({
        "b0": deg(&b0),
        "truncation": r.truncation,
        "flow_order": r.flow_order,
        "extreme": r.extreme,
        "s_lambda": q(&r.s_lambda),
        "s_psi": q(&r.s_psi),
        "ratio": r.ratio,
        "verdict": r.verdict.to_string(),
        "tuple_terms": r.tuple_terms.iter().map(|t| json!({"tuple": t.tuple.to_string(), "lambda": q(&t.lambda)})).collect::<Vec<_>>(),
        "flow_terms": r.flow_terms.iter().map(|t| json!({"j": t.j, "alpha": t.alpha, "derivative": q(&t.derivative)})).collect::<Vec<_>>(),
    });
    if r.extreme {
        let poly = newton_polytope_at(sys, &x0, r.truncation)?;
        let witness = poly.extreme(&b0).expect("extreme").witness.clone();
        let v = vanishing_law_check(sys, &x0, &b0, &witness, r.flow_order)?;
        checks.push(Check::new(
            "vanishing_law",
            v.holds(),
            if v.holds() {
                format!("{} coefficients below level {} vanish", v.below_level, format_rational(&v.level))
            } else {
                v.violations.iter().map(describe_term).collect::<Vec<_>>().join("; ")
            },
        ));
        result["vanishing"] = json!({
            "v0": qv(&witness.v0),
            "level": q(&v.level),
            "below_level": v.below_level,
            "violations": v.violations.len(),
            "complete": v.complete,
        });
    }
    let mut csv = Table::new(&["side", "term", "value"]);
    for t in &r.tuple_terms {
        csv.push(vec!["lambda".into(), t.tuple.to_string(), format_rational(&t.lambda)]);
    }
    for t in &r.flow_terms {
        csv.push(vec!["psi".into(), format!("J={:?} alpha={:?}", t.j, t.alpha), format_rational(&t.derivative)]);
    }
    Ok((result, csv, checks, r.warnings))
}

fn invariance(spec: &ProblemSpec, sys: &System) -> Out {
    let i0 = need(&spec.i0(), "i0", Command::Invariance)?.clone();
    let df = need(&spec.diffeo, "diffeo", Command::Invariance)?;
    let d = spec.dimension;
    let f = PolyMap::new(d, df.f.clone())?;
    let gs = df.g.iter().map(|m| PolyMap::new(d - 1, m.clone())).collect::<radon_weights::Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    let report = match diffeo_invariance_check(sys, &i0, &f, &gs, &df.points) {
        Ok(r) => r,
        Err(Error::NotMinimal(b, why)) => {
            warnings.push(format!("{b} is not minimal ({why}); the identity is not guaranteed"));
            diffeo_identity_unchecked(sys, &i0, &f, &gs, &df.points)?
        }
        Err(e) => return Err(e.into()),
    };
    let holds = report.holds();
    let expected = if df.expect_holds { "holds" } else { "fails" };
    let checks = vec![Check::new(
        "identity",
        holds == df.expect_holds,
        format!("expected {expected}; {} of {} points agree", report.samples.iter().filter(|s| s.holds()).count(), report.samples.len()),
    )];
    let mut csv = Table::new(&["point", "lhs", "rhs", "equal"]);
    for s in &report.samples {
        csv.push(vec![qs(&s.point), format_rational(&s.lhs), format_rational(&s.rhs), s.holds().to_string()]);
    }
    let result = json!({
        "b0": deg(&report.b0),
        "minimal": report.minimal,
        "holds": holds,
        "samples": report.samples.iter().map(|s| json!({"point": qv(&s.point), "lhs": q(&s.lhs), "rhs": q(&s.rhs)})).collect::<Vec<_>>(),
    });
    Ok((result, csv, checks, warnings))
}

fn family_options(spec: &ProblemSpec) -> FamilyOptions {
    let s = spec.sweep.as_ref().expect("checked by caller");
    FamilyOptions {
        ball: BallOptions { samples: s.samples, steps: s.steps, seed: spec.seed },
        image_resolution: s.image_resolution,
        quadrature_resolution: s.quadrature_resolution,
        domain_factor: to_f64(&s.domain_factor),
    }
}

fn ball_setup(spec: &ProblemSpec, cmd: Command) -> Result<(WordTuple, Vec<Rational>, Vec<f64>), Failure> {
    let s = need(&spec.sweep, "sweep", cmd)?;
    if s.ball.len() != spec.dimension {
        return Err(Failure::Usage(format!("sweep.ball needs {} words", spec.dimension)));
    }
    let tuple = WordTuple::new(s.ball.iter().map(|w| radon_weights::words::Word::from_letters(w)).collect());
    let v0 = s.v0.clone().unwrap_or_else(|| vec![int(1); spec.k]);
    if v0.len() != spec.k {
        return Err(Failure::Usage(format!("sweep.v0 needs {} entries", spec.k)));
    }
    Ok((tuple, v0, s.deltas.iter().map(to_f64).collect()))
}

fn weight_of(spec: &ProblemSpec, kind: WeightKind, cmd: Command) -> Result<Weight, Failure> {
    Ok(match kind {
        WeightKind::Unweighted => Weight::Unweighted,
        WeightKind::Rho => Weight::Rho(need(&spec.i0(), "i0", cmd)?.clone()),
        WeightKind::RhoTilde => Weight::RhoTilde {
            j: need(&spec.j0, "j0", cmd)?.clone(),
            beta: need(&spec.beta0, "beta0", cmd)?.clone(),
        },
    })
}

fn target_degree(spec: &ProblemSpec, sys: &System, cmd: Command) -> Result<Degree, Failure> {
    match (spec.b0(), spec.i0()) {
        (Some(b), _) => Ok(b),
        (None, Some(i0)) => Ok(i0.degree(sys.k())),
        (None, None) => Err(Failure::Usage(format!("`{}` needs `b0` or `i0` in the spec", cmd.name()))),
    }
}

fn exponents(spec: &ProblemSpec, b0: &Degree) -> radon_weights::Result<ExponentVector> {
    match &spec.exponents {
        Some(ps) => ExponentVector::finite(ps),
        None => ExponentVector::from_reciprocals(&q_map(&b0.to_rational())?),
    }
}

fn singular(base: Weight, x0: &[Rational], exponent: &Rational) -> Weight {
    Weight::Singular { base: Box::new(base), center: x0.iter().map(to_f64).collect(), exponent: to_f64(exponent) }
}

fn estimate(spec: &ProblemSpec, sys: &System) -> Out {
    let (tuple, v0, deltas) = ball_setup(spec, Command::Estimate)?;
    let sweep = spec.sweep.as_ref().expect("checked");
    let b0 = target_degree(spec, sys, Command::Estimate)?;
    let p = exponents(spec, &b0)?;
    let tol = &spec.tolerances;
    let opts = family_options(spec);
    let x0 = spec.base_point();
    let mut runs: Vec<(String, Weight, Option<Expectation>)> = Vec::new();
    for (kind, e) in &sweep.weights {
        runs.push((kind.name().to_string(), weight_of(spec, *kind, Command::Estimate)?, *e));
    }
    let family = cc_ball_family(sys, &x0, &tuple, &v0, &deltas, &opts, tol)?;
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let mut csv = Table::new(&["weight", "delta", "mass", "measures", "ratio", "quadrature_change"]);
    let mut tables = Vec::new();
    for m in &family.members {
        if m.image_change >= tol.image_halving {
            warnings.push(format!("δ = {:e}: image measure changed by {:.3} under cell halving", m.delta, m.image_change));
        }
    }
    for (name, w, expect) in &runs {
        let t = ratio_sweep(sys, w, &family, &p, &opts, tol)?;
        warnings.extend(t.notes.iter().map(|n| format!("{name}: {n}")));
        for r in &t.rows {
            csv.push(vec![
                name.clone(),
                fmt_f(r.delta),
                fmt_f(r.mass),
                r.measures.iter().map(|x| fmt_f(*x)).collect::<Vec<_>>().join(" "),
                fmt_f(r.ratio),
                fmt_f(r.quadrature_change),
            ]);
        }
        let slope = t.slope;
        let bounded = slope.is_some_and(|s| s.abs() <= tol.bounded_slope);
        let blowup = slope.is_some_and(|s| s <= tol.blowup_slope);
        let flag = if bounded { "bounded" } else if blowup { "blowup" } else { "indeterminate" };
        if let Some(e) = expect {
            let ok = match e {
                Expectation::Bounded => bounded,
                Expectation::Blowup => blowup,
            };
            checks.push(Check::new(format!("{name}_slope"), ok, format!("slope {}, expected {}", slope.map_or("undefined".to_string(), |s| format!("{s:.4}")), e.name())));
            checks.push(Check::new(format!("{name}_quadrature_halving"), t.converged, format!("largest change {:.4}", t.rows.iter().map(|r| r.quadrature_change).fold(0.0, f64::max))));
        }
        tables.push(json!({
            "weight": name,
            "slope": slope,
            "flag": flag,
            "band": t.band(),
            "converged": t.converged,
            "rows": t.rows.iter().map(|r| json!({"delta": r.delta, "mass": r.mass, "measures": r.measures, "ratio": r.ratio, "quadrature_change": r.quadrature_change})).collect::<Vec<_>>(),
        }));
    }
    let result = json!({
        "b0": deg(&b0),
        "reciprocals": p.reciprocals().iter().map(q).collect::<Vec<_>>(),
        "ball": tuple.to_string(),
        "v0": qv(&v0),
        "sweeps": tables,
    });
    Ok((result, csv, checks, warnings))
}

fn optimality(spec: &ProblemSpec, sys: &System) -> Out {
    let (tuple, v0, deltas) = ball_setup(spec, Command::Optimality)?;
    let sweep = spec.sweep.as_ref().expect("checked");
    let b0 = target_degree(spec, sys, Command::Optimality)?;
    let tol = &spec.tolerances;
    let opts = family_options(spec);
    let x0 = spec.base_point();
    let kind = sweep.weights.first().map(|w| w.0).unwrap_or(WeightKind::Rho);
    let w = weight_of(spec, kind, Command::Optimality)?;
    let p = spec.exponents.as_ref().map(|ps| ExponentVector::finite(ps)).transpose()?;
    let mut checks = Vec::new();
    let mut csv = Table::new(&["probe", "delta", "mu", "volume", "measures", "ratio"]);
    let mut probes = Vec::new();
    let mut runs = vec![(kind.name().to_string(), w.clone(), true)];
    if let Some(a) = &sweep.singular_exponent {
        runs.push((format!("singular({})", format_rational(a)), singular(w, &x0, a), false));
    }
    for (name, w, should_pass) in runs {
        let r = optimality_probe(sys, &b0, &x0, &tuple, &v0, &w, &deltas, p.as_ref(), &opts, tol)?;
        let detail = format!(
            "band {:.4} (≤ {}), slope {:.4} (|·| ≤ {}), density gap {}",
            r.band,
            tol.band_factor,
            r.slope,
            tol.trend_slope,
            r.density_gap.map_or("n/a".to_string(), |g| format!("{g:.4}"))
        );
        checks.push(Check::new(
            if should_pass { format!("{name}_band") } else { format!("{name}_detected") },
            r.passes() == should_pass,
            detail,
        ));
        for row in &r.rows {
            csv.push(vec![
                name.clone(),
                fmt_f(row.delta),
                fmt_f(row.mu),
                fmt_f(row.volume),
                row.measures.iter().map(|x| fmt_f(*x)).collect::<Vec<_>>().join(" "),
                fmt_f(row.ratio),
            ]);
        }
        probes.push(json!({
            "weight": name,
            "reciprocals": r.reciprocals,
            "band": r.band,
            "slope": r.slope,
            "band_ok": r.band_ok,
            "trend_ok": r.trend_ok,
            "density_gap": r.density_gap,
            "density_ok": r.density_ok,
            "rows": r.rows.iter().map(|x| json!({"delta": x.delta, "mu": x.mu, "volume": x.volume, "measures": x.measures, "ratio": x.ratio})).collect::<Vec<_>>(),
        }));
    }
    let vs = volume_scaling(sys, &x0, &tuple, &v0, &deltas, &opts, tol)?;
    checks.push(Check::new(
        "volume_scaling",
        vs.within,
        format!("slope {:.4}, expected {:.4} within {}", vs.slope, vs.expected, tol.volume_slope),
    ));
    for (d, occ, jac) in &vs.rows {
        csv.push(vec!["volume".into(), fmt_f(*d), String::new(), fmt_f(*occ), String::new(), fmt_f(*jac)]);
    }
    let result = json!({
        "b0": deg(&b0),
        "ball": tuple.to_string(),
        "v0": qv(&v0),
        "probes": probes,
        "volume": {
            "slope": vs.slope,
            "expected": vs.expected,
            "rows": vs.rows.iter().map(|r| json!({"delta": r.0, "occupancy": r.1, "jacobian": r.2})).collect::<Vec<_>>(),
        },
    });
    Ok((result, csv, checks, Vec::new()))
}
