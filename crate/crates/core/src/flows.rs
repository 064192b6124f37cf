//! Flow maps `Ψ^J_x(t) = exp(t_d X_{J_d}) ∘ ⋯ ∘ exp(t_1 X_{J_1})(x)` as exact
//! jets, the Taylor data of `det D_tΨ^J` at `t = 0`, the polytope it
//! generates, and the comparison with the bracket side.
//!
//! Each single flow is its Lie series `Σ_n s^n/n! (X^n id)(y)`, which for a
//! polynomial field is the formal Taylor expansion of the flow in `s`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::arclength::{annotate, newton_polytope_at, BaseSet, NewtonPolytopeReport, Realization, WeightValue};
use crate::error::{Error, Result};
use crate::field::{det_laplace, VectorField};
use crate::jet::Jet;
use crate::poly::Polynomial;
use crate::polytope::SeparationWitness;
use crate::scalar::{dot_int, factorial, format_rational, to_f64, Rational};
use crate::systems::System;
use crate::words::Degree;

type P = Polynomial<Rational>;
type QJet = Jet<Rational>;

/// `deg J` and `deg_J α` for a flow word and multi-index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JDegreeData {
    pub deg_j: Degree,
    pub deg_j_alpha: Degree,
}

impl JDegreeData {
    pub fn new(j: &[u16], alpha: &[u32], k: usize) -> Self {
        Self { deg_j: j_degree(j, k), deg_j_alpha: j_alpha_degree(j, alpha, k) }
    }

    pub fn total(&self) -> Degree {
        self.deg_j.add(&self.deg_j_alpha)
    }
}

/// Number of occurrences of each letter in `J`.
pub fn j_degree(j: &[u16], k: usize) -> Degree {
    let mut b = vec![0; k];
    for &l in j {
        b[l as usize - 1] += 1;
    }
    Degree(b)
}

/// Entry `i` is `Σ_{ℓ : J_ℓ = i} α_ℓ`.
pub fn j_alpha_degree(j: &[u16], alpha: &[u32], k: usize) -> Degree {
    let mut b = vec![0; k];
    for (&l, &a) in j.iter().zip(alpha) {
        b[l as usize - 1] += a;
    }
    Degree(b)
}

/// `s^n/n!`-weighted Lie series of `X` applied to each coordinate, as
/// polynomials in `(y_1..y_d, s)`.
fn lie_series(x: &VectorField<Rational>, order: u32) -> Result<Vec<P>> {
    let d = x.dim();
    let s = P::var(d + 1, d);
    (0..d)
        .map(|i| {
            let mut l = P::var(d, i);
            let mut acc = l.embed(d + 1, 0);
            let mut sn = P::one(d + 1);
            for n in 1..=order {
                l = x.apply(&l)?;
                sn = &sn * &s;
                if l.is_zero() {
                    break;
                }
                let term = &l.embed(d + 1, 0) * &sn;
                acc = &acc + &term.scale(&(Rational::one() / factorial(n)));
            }
            Ok(acc)
        })
        .collect()
}

/// Jet in one variable `t` of the flow `e^{tX}(x0)`, one entry per coordinate.
pub fn flow_jet(x: &VectorField<Rational>, x0: &[Rational], order: u32) -> Result<Vec<QJet>> {
    let d = x.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x0.len() });
    }
    if order == 0 {
        return Err(Error::InvalidArgument("flow order must be at least 1".into()));
    }
    let series = lie_series(x, order)?;
    let mut args: Vec<QJet> = x0.iter().map(|c| QJet::constant(0, 1, order, c.clone())).collect();
    args.push(QJet::t(0, 1, order, 0));
    series.iter().map(|p| QJet::compose_poly(p, &args)).collect()
}

/// The flow `Ψ^J` from a rational base point, or from a symbolic one whose
/// coordinates are the jet parameters.
#[derive(Clone, Debug)]
pub struct FlowJet {
    pub j: Vec<u16>,
    pub base: Option<Vec<Rational>>,
    pub components: Vec<QJet>,
}

impl FlowJet {
    pub fn order(&self) -> u32 {
        self.components[0].order()
    }

    /// `Ψ(0)`, which is the base point.
    pub fn value_at_zero(&self) -> Vec<P> {
        let zero = vec![0; self.j.len()];
        self.components.iter().map(|c| c.coefficient(&zero)).collect()
    }

    /// `det D_tΨ` as a jet one order lower.
    pub fn jacobian_determinant(&self) -> Result<QJet> {
        det_jacobian_taylor(self)
    }
}

/// Lie series of every field at a fixed order, shared across flow words.
#[derive(Clone, Debug)]
pub struct FlowEngine {
    d: usize,
    k: usize,
    order: u32,
    series: Vec<Vec<P>>,
}

/// `det D_tΨ^J` for one flow word.
#[derive(Clone, Debug)]
pub struct FlowDeterminant {
    pub j: Vec<u16>,
    pub det: QJet,
}

impl FlowDeterminant {
    /// Nonzero values `∂^α det D_tΨ^J(0)` from a rational base point.
    pub fn derivatives(&self) -> BTreeMap<Vec<u32>, Rational> {
        self.det
            .coefficients()
            .into_iter()
            .map(|(a, c)| {
                let f = a.iter().fold(Rational::one(), |acc, &x| acc * factorial(x));
                (a, c.constant_term() * f)
            })
            .filter(|(_, v)| !v.is_zero())
            .collect()
    }
}

impl FlowEngine {
    pub fn new(sys: &System, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("flow order must be at least 1".into()));
        }
        let series = sys.fields().iter().map(|x| lie_series(x, order)).collect::<Result<Vec<_>>>()?;
        Ok(Self { d: sys.dim(), k: sys.k(), order, series })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    fn initial(&self, base: Option<&[Rational]>) -> Result<Vec<QJet>> {
        let (d, m) = (self.d, self.order);
        match base {
            Some(x0) if x0.len() != d => Err(Error::DimensionMismatch { expected: d, found: x0.len() }),
            Some(x0) => Ok(x0.iter().map(|c| QJet::constant(0, d, m, c.clone())).collect()),
            None => Ok((0..d).map(|i| QJet::param(d, d, m, i)).collect()),
        }
    }

    /// Flows `prev` along field `letter` for time `t_slot`.
    fn step(&self, prev: &[QJet], letter: u16, slot: usize) -> Result<Vec<QJet>> {
        let first = &prev[0];
        let mut args = prev.to_vec();
        args.push(QJet::t(first.nparams(), first.nt(), self.order, slot));
        self.series[letter as usize - 1].iter().map(|p| QJet::compose_poly(p, &args)).collect()
    }

    fn check_word(&self, j: &[u16]) -> Result<()> {
        if j.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: j.len() });
        }
        if let Some(&l) = j.iter().find(|&&l| l == 0 || l as usize > self.k) {
            return Err(Error::InvalidArgument(format!("letter {l} outside 1..={}", self.k)));
        }
        Ok(())
    }

    pub fn psi(&self, j: &[u16], base: Option<&[Rational]>) -> Result<FlowJet> {
        self.check_word(j)?;
        let mut cur = self.initial(base)?;
        for (slot, &l) in j.iter().enumerate() {
            cur = self.step(&cur, l, slot)?;
        }
        Ok(FlowJet { j: j.to_vec(), base: base.map(<[_]>::to_vec), components: cur })
    }

    /// `det D_tΨ^J` for every `J ∈ {1..k}^d` whose prefixes all pass `keep`,
    /// sharing flows of common prefixes. Sorted by `J`.
    pub fn determinants(
        &self,
        base: Option<&[Rational]>,
        keep: impl Fn(&[u16]) -> bool + Sync,
    ) -> Result<Vec<FlowDeterminant>> {
        let init = self.initial(base)?;
        // breadth-first to a frontier wide enough to parallelize
        let split = self.d.min(2);
        let mut frontier: Vec<(Vec<u16>, Vec<QJet>)> = vec![(Vec::new(), init)];
        for slot in 0..split {
            let mut next = Vec::new();
            for (j, jets) in &frontier {
                for l in 1..=self.k as u16 {
                    let mut jl = j.clone();
                    jl.push(l);
                    if keep(&jl) {
                        next.push((jl, self.step(jets, l, slot)?));
                    }
                }
            }
            frontier = next;
        }
        let parts = frontier
            .into_par_iter()
            .map(|(j, jets)| {
                let mut out = Vec::new();
                self.descend(j, jets, &keep, &mut out)?;
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut all: Vec<FlowDeterminant> = parts.into_iter().flatten().collect();
        all.sort_by(|a, b| a.j.cmp(&b.j));
        Ok(all)
    }

    fn descend(
        &self,
        j: Vec<u16>,
        jets: Vec<QJet>,
        keep: &(impl Fn(&[u16]) -> bool + Sync),
        out: &mut Vec<FlowDeterminant>,
    ) -> Result<()> {
        if j.len() == self.d {
            let det = jacobian_det(&jets)?;
            out.push(FlowDeterminant { j, det });
            return Ok(());
        }
        for l in 1..=self.k as u16 {
            let mut jl = j.clone();
            jl.push(l);
            if keep(&jl) {
                let next = self.step(&jets, l, j.len())?;
                self.descend(jl, next, keep, out)?;
            }
        }
        Ok(())
    }
}

fn jacobian_det(components: &[QJet]) -> Result<QJet> {
    let m = components
        .iter()
        .map(|c| (0..c.nt()).map(|i| c.partial_t(i)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(det_laplace(&m))
}

pub fn psi_jet(sys: &System, j: &[u16], x0: &[Rational], order: u32) -> Result<FlowJet> {
    FlowEngine::new(sys, order)?.psi(j, Some(x0))
}

/// `Ψ^J` with the base point left symbolic (jet parameters `x_1..x_d`).
pub fn psi_jet_symbolic(sys: &System, j: &[u16], order: u32) -> Result<FlowJet> {
    FlowEngine::new(sys, order)?.psi(j, None)
}

/// Jet of `det D_tΨ`, exact to order `M − 1`. Its coefficients are
/// `c_α = ∂^α det D_tΨ(0) / α!`.
pub fn det_jacobian_taylor(flow: &FlowJet) -> Result<QJet> {
    if flow.order() == 0 {
        return Err(Error::InvalidArgument("flow order must be at least 1".into()));
    }
    jacobian_det(&flow.components)
}

/// Flow order that exposes every `(J, α)` with `|deg J + deg_J α|₁ ≤ n`.
pub fn flow_order_for_norm(d: usize, n: u32) -> u32 {
    (n + 1).saturating_sub(d as u32).max(1)
}

/// Polytope generated by `deg J + deg_J α` over the nonzero Taylor
/// coefficients of `det D_tΨ^J` at `x0`. Truncation is `|b|₁ ≤ d + M − 1`.
pub fn tilde_polytope_at(sys: &System, x0: &[Rational], order: u32) -> Result<NewtonPolytopeReport> {
    let engine = FlowEngine::new(sys, order)?;
    let k = sys.k();
    let mut gens: BTreeMap<Degree, Realization> = BTreeMap::new();
    for fd in engine.determinants(Some(x0), |_| true)? {
        for (alpha, _) in fd.derivatives() {
            let b = JDegreeData::new(&fd.j, &alpha, k).total();
            gens.entry(b).or_insert_with(|| Realization::Flow { j: fd.j.clone(), alpha });
        }
    }
    let n = sys.dim() as u32 + order - 1;
    annotate(sys, BaseSet::Point(x0.to_vec()), n, gens)
}

/// Same extreme points, and every generator of each lies in the other.
pub fn polytopes_agree(a: &NewtonPolytopeReport, b: &NewtonPolytopeReport) -> Result<bool> {
    let (mut ea, mut eb) = (a.extreme_degrees(), b.extreme_degrees());
    ea.sort();
    eb.sort();
    if ea != eb {
        return Ok(false);
    }
    for (p, q) in [(a, b), (b, a)] {
        for g in p.polytope.generators() {
            if !q.polytope.contains(&g.to_rational())? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// One `(J, α)` contribution `∂^α det D_tΨ^J(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowTerm {
    pub j: Vec<u16>,
    pub alpha: Vec<u32>,
    pub derivative: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TupleTerm {
    pub tuple: crate::words::WordTuple,
    pub lambda: Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    NonExtremeFailureReproduced,
    Fail,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::NonExtremeFailureReproduced => "non-extreme failure reproduced",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub b0: Degree,
    pub truncation: u32,
    pub flow_order: u32,
    pub extreme: bool,
    /// Sum of `|λ_I(x0)|` over canonical tuples, each set counted once.
    pub s_lambda: Rational,
    /// Sum of `|∂^α det D_tΨ^J(0)|` over `deg J + deg_J α = b0`.
    pub s_psi: Rational,
    pub ratio: Option<f64>,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
    pub tuple_terms: Vec<TupleTerm>,
    pub flow_terms: Vec<FlowTerm>,
}

/// Both sides of the equivalence at `b0`, exactly. `n` is the bracket-side
/// truncation used to decide extremality; `order` defaults to the smallest
/// flow order reaching `b0`.
pub fn equivalence_report(
    sys: &System,
    x0: &[Rational],
    b0: &Degree,
    n: u32,
    order: Option<u32>,
) -> Result<EquivalenceReport> {
    let k = sys.k();
    let d = sys.dim();
    if b0.k() != k {
        return Err(Error::DimensionMismatch { expected: k, found: b0.k() });
    }
    if b0.norm1() < d as u32 {
        return Err(Error::InvalidArgument(format!("|b0|₁ = {} is below d = {d}", b0.norm1())));
    }
    let order = order.unwrap_or_else(|| flow_order_for_norm(d, b0.norm1()));
    let mut warnings = Vec::new();
    if order < flow_order_for_norm(d, b0.norm1()) {
        warnings.push(format!("flow order {order} is too low to reach every term of degree {b0}"));
    }
    let n = n.max(b0.norm1());
    let poly = newton_polytope_at(sys, x0, n)?;
    let extreme = poly.extreme(b0).is_some();
    if !extreme {
        warnings.push(format!("{b0} is not an extreme point of the polytope truncated at {n}"));
    } else if !poly.extreme(b0).unwrap().certified {
        warnings.push(format!("extremality of {b0} is not certified beyond the truncation {n}"));
    }

    let mut table = sys.table(b0.norm1() as usize).into_owned();
    let mut tuple_terms = Vec::new();
    let mut s_lambda = Rational::zero();
    for t in table.nonzero_tuples(b0) {
        let v = table.lambda(&t)?.eval(x0);
        if !v.is_zero() {
            s_lambda += v.abs();
            tuple_terms.push(TupleTerm { tuple: t, lambda: v });
        }
    }

    let engine = FlowEngine::new(sys, order)?;
    let dets = engine.determinants(Some(x0), |j| j_degree(j, k).0.iter().zip(&b0.0).all(|(a, b)| a <= b))?;
    let mut flow_terms = Vec::new();
    let mut s_psi = Rational::zero();
    for fd in dets.iter().filter(|fd| j_degree(&fd.j, k).preceq(b0)) {
        for (alpha, v) in fd.derivatives() {
            if &JDegreeData::new(&fd.j, &alpha, k).total() == b0 {
                s_psi += v.abs();
                flow_terms.push(FlowTerm { j: fd.j.clone(), alpha, derivative: v });
            }
        }
    }

    let zero_l = s_lambda.is_zero();
    let zero_p = s_psi.is_zero();
    let ratio = (!zero_l && !zero_p).then(|| to_f64(&s_psi) / to_f64(&s_lambda));
    let verdict = match (extreme, zero_l == zero_p) {
        (_, true) => Verdict::Pass,
        (false, false) if !zero_l && zero_p => Verdict::NonExtremeFailureReproduced,
        _ => Verdict::Fail,
    };
    Ok(EquivalenceReport {
        b0: b0.clone(),
        truncation: n,
        flow_order: order,
        extreme,
        s_lambda,
        s_psi,
        ratio,
        verdict,
        warnings,
        tuple_terms,
        flow_terms,
    })
}

/// Outcome of checking that every coefficient strictly below the `v0`-level
/// of `b0` vanishes.
#[derive(Clone, Debug)]
pub struct VanishingReport {
    pub b0: Degree,
    pub level: Rational,
    /// Coefficients examined whose degree lies strictly below the level.
    pub below_level: usize,
    pub violations: Vec<FlowTerm>,
    /// The flow order reached every degree below the level.
    pub complete: bool,
}

impl VanishingReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Smallest flow order covering every `b` with `v0·b < v0·b0`.
pub fn vanishing_order(d: usize, b0: &Degree, witness: &SeparationWitness) -> u32 {
    let level = dot_int(&witness.v0, &b0.0);
    let bound = level / witness.min_entry();
    // |b|₁ < bound, so |b|₁ ≤ ⌈bound⌉ − 1
    let ceil = bound.ceil().to_integer();
    let max_norm: u32 = (ceil - num_bigint::BigInt::one()).try_into().unwrap_or(u32::MAX);
    flow_order_for_norm(d, max_norm)
}

pub fn vanishing_law_check(
    sys: &System,
    x0: &[Rational],
    b0: &Degree,
    witness: &SeparationWitness,
    order: u32,
) -> Result<VanishingReport> {
    let k = sys.k();
    if witness.v0.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: witness.v0.len() });
    }
    let level = dot_int(&witness.v0, &b0.0);
    let engine = FlowEngine::new(sys, order)?;
    let mut below = 0;
    let mut violations = Vec::new();
    for fd in engine.determinants(Some(x0), |_| true)? {
        let nt = fd.det.nt();
        // every α of total degree < order, zero or not
        let mut alphas = Vec::new();
        crate::polytope::lattice_points(nt, order - 1, &mut |a| alphas.push(a.to_vec()));
        let derivs = fd.derivatives();
        for alpha in alphas {
            let b = JDegreeData::new(&fd.j, &alpha, k).total();
            if dot_int(&witness.v0, &b.0) < level {
                below += 1;
                if let Some(v) = derivs.get(&alpha) {
                    violations.push(FlowTerm { j: fd.j.clone(), alpha, derivative: v.clone() });
                }
            }
        }
    }
    let complete = order >= vanishing_order(sys.dim(), b0, witness);
    Ok(VanishingReport { b0: b0.clone(), level, below_level: below, violations, complete })
}

fn check_flow_selector(sys: &System, j0: &[u16], beta0: &[u32]) -> Result<Degree> {
    if j0.len() != sys.dim() || beta0.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: j0.len().max(beta0.len()) });
    }
    if let Some(&l) = j0.iter().find(|&&l| l == 0 || l as usize > sys.k()) {
        return Err(Error::InvalidArgument(format!("letter {l} outside 1..={}", sys.k())));
    }
    let b0 = JDegreeData::new(j0, beta0, sys.k()).total();
    if b0.norm1() < 2 {
        return Err(Error::InvalidArgument(format!(
            "|deg|₁ = {}; the weight exponent 1/(|b0|₁−1) is undefined",
            b0.norm1()
        )));
    }
    Ok(b0)
}

/// `∂^{β0} det D_tΨ^{J0}_x(0)` as a polynomial in the base point `x`.
pub fn rho_tilde_radicand(sys: &System, j0: &[u16], beta0: &[u32]) -> Result<P> {
    check_flow_selector(sys, j0, beta0)?;
    let order = beta0.iter().sum::<u32>() + 1;
    let det = det_jacobian_taylor(&psi_jet_symbolic(sys, j0, order)?)?;
    Ok(det.derivative_at_zero(beta0))
}

/// `|∂^{β0} det D_tΨ^{J0}_x(0)|^{1/(|b0|₁−1)}` with `b0 = deg J0 + deg_{J0} β0`.
pub fn weight_rho_tilde(sys: &System, j0: &[u16], beta0: &[u32], x: &[Rational]) -> Result<WeightValue> {
    let b0 = check_flow_selector(sys, j0, beta0)?;
    let order = beta0.iter().sum::<u32>() + 1;
    let det = det_jacobian_taylor(&psi_jet(sys, j0, x, order)?)?;
    let v = det.derivative_at_zero(beta0).constant_term();
    Ok(WeightValue::new(v.abs(), b0.norm1() - 1))
}

/// A `(J, α)` with a nonzero coefficient realizing `b0`, if any.
pub fn flow_realization(sys: &System, x0: &[Rational], b0: &Degree) -> Result<Option<(Vec<u16>, Vec<u32>)>> {
    let r = equivalence_report(sys, x0, b0, b0.norm1(), None)?;
    Ok(r.flow_terms.into_iter().find(|t| !t.derivative.is_zero()).map(|t| (t.j, t.alpha)))
}

pub fn describe_term(t: &FlowTerm) -> String {
    format!("J={:?} alpha={:?} d^alpha={}", t.j, t.alpha, format_rational(&t.derivative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};
    use crate::systems::{commuting_frame, parabola, repeated_curve};

    fn origin(d: usize) -> Vec<Rational> {
        vec![int(0); d]
    }

    #[test]
    fn parabola_flow_is_s_s_s2() {
        let sys = parabola().unwrap();
        let f = flow_jet(&sys.fields()[1], &origin(3), 5).unwrap();
        let t = P::var(1, 0);
        assert_eq!(f[0].as_poly(), &t);
        assert_eq!(f[1].as_poly(), &t);
        assert_eq!(f[2].as_poly(), &t.pow(2));
    }

    #[test]
    fn linear_field_gives_exponential() {
        let x = VectorField::new(vec![P::var(1, 0)]).unwrap();
        let f = flow_jet(&x, &[int(1)], 6).unwrap();
        for n in 0..=6u32 {
            assert_eq!(f[0].coefficient(&[n]).constant_term(), Rational::one() / factorial(n));
        }
        assert!(f[0].coefficient(&[7]).is_zero());
    }

    #[test]
    fn frame_flow_is_translation() {
        let sys = commuting_frame(3).unwrap();
        let x0 = vec![int(1), rat(1, 2), int(-2)];
        let psi = psi_jet(&sys, &[1, 2, 3], &x0, 3).unwrap();
        for i in 0..3 {
            let expected = &P::constant(3, x0[i].clone()) + &P::var(3, i);
            assert_eq!(psi.components[i].as_poly(), &expected);
        }
        let det = det_jacobian_taylor(&psi).unwrap();
        assert_eq!(det.as_poly(), &P::one(3));
    }

    #[test]
    fn repeated_letter_is_symmetric() {
        let sys = parabola().unwrap();
        let x0 = vec![rat(1, 3), int(0), int(1)];
        let psi = psi_jet(&sys, &[2, 2, 2], &x0, 4).unwrap();
        for c in &psi.components {
            for (e, v) in c.as_poly().terms() {
                let mut sorted = e.clone();
                sorted.sort();
                assert_eq!(&c.as_poly().coeff(&sorted), v);
            }
        }
    }

    #[test]
    fn symbolic_base_matches_point() {
        let sys = parabola().unwrap();
        let x0 = vec![int(2), rat(-1, 2), int(3)];
        let sym = psi_jet_symbolic(&sys, &[1, 2, 2], 3).unwrap();
        let pt = psi_jet(&sys, &[1, 2, 2], &x0, 3).unwrap();
        for (a, b) in sym.components.iter().zip(&pt.components) {
            assert_eq!(&a.eval_params(&x0).unwrap(), b);
        }
    }

    #[test]
    fn tilde_polytope_of_parabola_and_frame() {
        let sys = parabola().unwrap();
        let r = tilde_polytope_at(&sys, &origin(3), 3).unwrap();
        assert_eq!(r.extreme_degrees(), vec![Degree(vec![2, 2])]);
        let f = commuting_frame(3).unwrap();
        let r = tilde_polytope_at(&f, &origin(3), 2).unwrap();
        assert_eq!(r.polytope.generators(), &[Degree(vec![1, 1, 1])]);
    }

    #[test]
    fn parabola_equivalence() {
        let sys = parabola().unwrap();
        let r = equivalence_report(&sys, &origin(3), &Degree(vec![2, 2]), 6, None).unwrap();
        assert!(r.extreme);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.s_lambda.is_positive() && r.s_psi.is_positive());
        assert!(r.ratio.is_some());
    }

    #[test]
    fn frame_equivalence_counts() {
        let sys = commuting_frame(3).unwrap();
        let r = equivalence_report(&sys, &origin(3), &Degree(vec![1, 1, 1]), 3, None).unwrap();
        assert_eq!(r.s_lambda, int(1));
        assert_eq!(r.s_psi, int(6));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn remark_system_fails_off_the_extremes() {
        let sys = repeated_curve(3).unwrap();
        let b = Degree(vec![4, 1, 1, 1]);
        let r = equivalence_report(&sys, &origin(4), &b, 7, None).unwrap();
        assert!(!r.extreme);
        assert!(r.s_lambda.is_positive());
        assert!(r.s_psi.is_zero());
        assert_eq!(r.verdict, Verdict::NonExtremeFailureReproduced);
    }

    #[test]
    fn rho_tilde_values() {
        let f = commuting_frame(2).unwrap();
        let w = weight_rho_tilde(&f, &[1, 2], &[0, 0], &[int(3), int(4)]).unwrap();
        assert_eq!(w.radicand, int(1));
        assert!(weight_rho_tilde(&f, &[1, 1], &[0, 0], &[int(0), int(0)]).unwrap().radicand.is_zero());
        let sys = parabola().unwrap();
        let (j, a) = flow_realization(&sys, &origin(3), &Degree(vec![2, 2])).unwrap().unwrap();
        let w = weight_rho_tilde(&sys, &j, &a, &origin(3)).unwrap();
        assert!(w.value > 0.0);
        let w2 = weight_rho_tilde(&sys, &j, &a, &[int(1), int(5), int(-3)]).unwrap();
        assert_eq!(w.radicand, w2.radicand);
        let c = commuting_frame(1);
        assert!(c.is_err());
    }

    #[test]
    fn vanishing_below_level() {
        let sys = parabola().unwrap();
        let b0 = Degree(vec![2, 2]);
        let r = newton_polytope_at(&sys, &origin(3), 6).unwrap();
        let w = r.extreme(&b0).unwrap().witness.clone();
        let m = vanishing_order(3, &b0, &w);
        let v = vanishing_law_check(&sys, &origin(3), &b0, &w, m).unwrap();
        assert!(v.complete);
        assert!(v.below_level > 0);
        assert!(v.holds(), "{:?}", v.violations);
    }
}
