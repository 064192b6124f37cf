//! Newton polytopes of a system at points and over sample sets, the
//! generalized affine arclength weight, the exponent map `q`, the admissible
//! exponent region, and the change-of-variables identity for the weight.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{determinant_of_fields, hodge_star_fields, PolyMap};
use crate::polytope::{certifying_vector, separating_vector, SeparationWitness, UpwardPolytope};
use crate::scalar::{format_rational, to_f64, Rational};
use crate::systems::System;
use crate::words::{BracketTable, Degree, Word, WordTuple};

/// Where a polytope was computed.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseSet {
    Point(Vec<Rational>),
    /// Union over finitely many samples; a lower approximation of the region polytope.
    Samples(Vec<Vec<Rational>>),
}

/// What makes a degree a generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Realization {
    /// A tuple with `λ_I ≠ 0`.
    Tuple(WordTuple),
    /// A flow word `J` and multi-index `α` with `∂^α det D_tΨ^J(0) ≠ 0`.
    Flow { j: Vec<u16>, alpha: Vec<u32> },
}

impl std::fmt::Display for Realization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Realization::Tuple(t) => write!(f, "{t}"),
            Realization::Flow { j, alpha } => write!(f, "J={j:?} alpha={alpha:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremePoint {
    pub degree: Degree,
    pub realization: Realization,
    pub witness: SeparationWitness,
    /// Stays extreme after adding any generators beyond the truncation.
    pub certified: bool,
}

#[derive(Clone, Debug)]
pub struct NewtonPolytopeReport {
    pub base: BaseSet,
    pub truncation: u32,
    pub polytope: UpwardPolytope,
    /// One realization of each generator.
    pub realizations: BTreeMap<Degree, Realization>,
    pub extremes: Vec<ExtremePoint>,
    /// Whether the extremes equal a known closed form, when one is known.
    pub matches_closed_form: Option<bool>,
}

impl NewtonPolytopeReport {
    pub fn extreme_degrees(&self) -> Vec<Degree> {
        self.extremes.iter().map(|e| e.degree.clone()).collect()
    }

    pub fn extreme(&self, b: &Degree) -> Option<&ExtremePoint> {
        self.extremes.iter().find(|e| &e.degree == b)
    }
}

/// `|b0|₁ + 2` for a target, else `d(d+1)/2 + 2`.
pub fn default_degree_bound(d: usize, target: Option<&Degree>) -> u32 {
    match target {
        Some(b) => b.norm1() + 2,
        None => (d * (d + 1) / 2 + 2) as u32,
    }
}

/// Row-echelon basis over the rationals for incremental rank tests.
#[derive(Clone, Default)]
struct Echelon {
    rows: Vec<(usize, Vec<Rational>)>,
}

impl Echelon {
    fn reduce(&self, v: &[Rational]) -> Vec<Rational> {
        let mut v = v.to_vec();
        for (p, row) in &self.rows {
            if !v[*p].is_zero() {
                let f = &v[*p] / &row[*p];
                for (a, b) in v.iter_mut().zip(row) {
                    *a -= &f * b;
                }
            }
        }
        v
    }

    /// Adds `v` if independent of the current rows.
    fn try_push(&self, v: &[Rational]) -> Option<Self> {
        let r = self.reduce(v);
        let p = r.iter().position(|x| !x.is_zero())?;
        let mut next = self.clone();
        next.rows.push((p, r));
        Some(next)
    }
}

struct Item {
    word: Word,
    degree: Degree,
    norm: u32,
    value: Vec<Rational>,
}

/// Word values at `x0`, reduced to one basis per degree. A tuple of degree
/// `b` with `λ_I(x0) ≠ 0` exists iff one exists using only basis words.
fn basis_items(table: &BracketTable, x0: &[Rational], max_len: usize) -> Vec<Item> {
    let k = table.k();
    let mut groups: BTreeMap<Degree, Vec<(Word, Vec<Rational>)>> = BTreeMap::new();
    for (w, f) in table.nonzero_words() {
        if w.len() > max_len {
            continue;
        }
        let v = f.eval(x0);
        if v.iter().all(Zero::is_zero) {
            continue;
        }
        groups.entry(w.degree(k)).or_default().push((w.clone(), v));
    }
    let mut items = Vec::new();
    for (deg, words) in groups {
        let mut ech = Echelon::default();
        for (w, v) in words {
            if let Some(next) = ech.try_push(&v) {
                ech = next;
                items.push(Item { word: w, norm: deg.norm1(), degree: deg.clone(), value: v });
            }
        }
    }
    items
}

/// `{deg I : |deg I|₁ ≤ n, λ_I(x0) ≠ 0}` with a realizing tuple for each.
pub fn generators_at(sys: &System, x0: &[Rational], n: u32) -> Result<BTreeMap<Degree, WordTuple>> {
    let d = sys.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x0.len() });
    }
    if (n as usize) < d {
        return Ok(BTreeMap::new());
    }
    let max_len = n as usize - d + 1;
    let table = sys.table(max_len);
    let items = basis_items(&table, x0, max_len);
    let k = sys.k();

    fn dfs(
        items: &[Item],
        start: usize,
        left: usize,
        budget: u32,
        ech: &Echelon,
        deg: &Degree,
        chosen: &mut Vec<usize>,
        out: &mut BTreeMap<Degree, Vec<usize>>,
    ) {
        if left == 0 {
            out.entry(deg.clone()).or_insert_with(|| chosen.clone());
            return;
        }
        for i in start..items.len() {
            let it = &items[i];
            if it.norm + (left as u32 - 1) > budget {
                continue;
            }
            if let Some(next) = ech.try_push(&it.value) {
                chosen.push(i);
                dfs(items, i + 1, left - 1, budget - it.norm, &next, &deg.add(&it.degree), chosen, out);
                chosen.pop();
            }
        }
    }

    let found: Vec<BTreeMap<Degree, Vec<usize>>> = (0..items.len())
        .into_par_iter()
        .map(|first| {
            let mut out = BTreeMap::new();
            let it = &items[first];
            if it.norm + (d as u32 - 1) <= n {
                let ech = Echelon::default().try_push(&it.value).expect("nonzero value");
                dfs(&items, first + 1, d - 1, n - it.norm, &ech, &it.degree, &mut vec![first], &mut out);
            }
            out
        })
        .collect();
    let mut gens: BTreeMap<Degree, WordTuple> = BTreeMap::new();
    for map in found {
        for (b, idx) in map {
            gens.entry(b).or_insert_with(|| {
                WordTuple::new(idx.iter().map(|&i| items[i].word.clone()).collect()).canonical()
            });
        }
    }
    debug_assert!(gens.keys().all(|b| b.k() == k));
    Ok(gens)
}

pub(crate) fn annotate(
    sys: &System,
    base: BaseSet,
    n: u32,
    realizations: BTreeMap<Degree, Realization>,
) -> Result<NewtonPolytopeReport> {
    let polytope = UpwardPolytope::new(sys.k(), realizations.keys().cloned())?;
    let extremes = polytope
        .extreme_points()
        .into_iter()
        .map(|b| {
            let rest = polytope.without(&b);
            let br = b.to_rational();
            let mut witness = separating_vector(rest.generators(), &br)?;
            if !witness.certifies(&br, n) {
                if let Some(w) = certifying_vector(rest.generators(), &br, n)? {
                    witness = w;
                }
            }
            let certified = witness.certifies(&br, n);
            Ok(ExtremePoint { realization: realizations[&b].clone(), degree: b, witness, certified })
        })
        .collect::<Result<Vec<_>>>()?;
    let matches_closed_form = sys.closed_form_extremes.as_ref().map(|cf| {
        let mut a: Vec<Degree> = extremes.iter().map(|e| e.degree.clone()).collect();
        let mut b = cf.clone();
        a.sort();
        b.sort();
        a == b
    });
    Ok(NewtonPolytopeReport { base, truncation: n, polytope, realizations, extremes, matches_closed_form })
}

pub fn newton_polytope_at(sys: &System, x0: &[Rational], n: u32) -> Result<NewtonPolytopeReport> {
    let gens = generators_at(sys, x0, n)?.into_iter().map(|(b, t)| (b, Realization::Tuple(t))).collect();
    annotate(sys, BaseSet::Point(x0.to_vec()), n, gens)
}

/// Union of the pointwise generator sets over `samples`.
pub fn newton_polytope_of_region(sys: &System, samples: &[Vec<Rational>], n: u32) -> Result<NewtonPolytopeReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample list".into()));
    }
    if let Some(s) = samples.iter().find(|s| !sys.in_cutoff(s)) {
        let coords: Vec<String> = s.iter().map(format_rational).collect();
        return Err(Error::InvalidArgument(format!("sample ({}) outside the cutoff box", coords.join(", "))));
    }
    let mut gens = BTreeMap::new();
    for s in samples {
        for (b, t) in generators_at(sys, s, n)? {
            gens.entry(b).or_insert(Realization::Tuple(t));
        }
    }
    annotate(sys, BaseSet::Samples(samples.to_vec()), n, gens)
}

/// `|λ_{I0}(x)|` exactly, and its `1/(|b0|₁ − 1)` root.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightValue {
    pub radicand: Rational,
    pub root: u32,
    pub value: f64,
}

impl WeightValue {
    pub fn new(radicand: Rational, root: u32) -> Self {
        let value = to_f64(&radicand).powf(1.0 / root as f64);
        Self { radicand, root, value }
    }
}

fn weight_root(b0: &Degree) -> Result<u32> {
    let n = b0.norm1();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("|deg|₁ = {n}; the weight exponent 1/(|b0|₁−1) is undefined")));
    }
    Ok(n - 1)
}

pub fn weight_rho(sys: &System, i0: &WordTuple, x: &[Rational]) -> Result<WeightValue> {
    let root = weight_root(&i0.degree(sys.k()))?;
    let lam = sys.table(1).lambda(i0)?;
    Ok(WeightValue::new(lam.eval(x).abs(), root))
}

/// `b / (|b|₁ − 1)`; its own inverse where both sides are defined.
pub fn q_map(b: &[Rational]) -> Result<Vec<Rational>> {
    let n = b.iter().fold(Rational::zero(), |s, x| s + x);
    if n <= Rational::one() {
        return Err(Error::InvalidArgument(format!("|b|₁ = {} ≤ 1", format_rational(&n))));
    }
    let den = n - Rational::one();
    Ok(b.iter().map(|x| x / &den).collect())
}

/// An entry of an exponent vector `p ∈ [1, ∞]^k`.
#[derive(Clone, Debug, PartialEq)]
pub enum Exponent {
    Finite(Rational),
    Infinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentVector(Vec<Exponent>);

impl ExponentVector {
    pub fn new(entries: Vec<Exponent>) -> Result<Self> {
        for e in &entries {
            if let Exponent::Finite(p) = e {
                if *p < Rational::one() {
                    return Err(Error::InvalidArgument(format!("exponent {} < 1", format_rational(p))));
                }
            }
        }
        Ok(Self(entries))
    }

    pub fn finite(ps: &[Rational]) -> Result<Self> {
        Self::new(ps.iter().cloned().map(Exponent::Finite).collect())
    }

    /// `p = 1/r` entrywise, with `r = 0` mapping to `∞`.
    pub fn from_reciprocals(r: &[Rational]) -> Result<Self> {
        Self::new(
            r.iter()
                .map(|x| if x.is_zero() { Exponent::Infinite } else { Exponent::Finite(x.recip()) })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[Exponent] {
        &self.0
    }

    pub fn reciprocals(&self) -> Vec<Rational> {
        self.0
            .iter()
            .map(|e| match e {
                Exponent::Finite(p) => p.recip(),
                Exponent::Infinite => Rational::zero(),
            })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|e| matches!(e, Exponent::Finite(_)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionCheck {
    pub admissible: bool,
    pub reasons: Vec<String>,
}

/// `1/p ⪯ q(b0)`, strictly in each coordinate where `b0` is nonzero.
pub fn exponent_region_check(b0: &Degree, p: &ExponentVector) -> Result<RegionCheck> {
    if p.entries().len() != b0.k() {
        return Err(Error::DimensionMismatch { expected: b0.k(), found: p.entries().len() });
    }
    let q = q_map(&b0.to_rational())?;
    let r = p.reciprocals();
    let mut reasons = Vec::new();
    for j in 0..b0.k() {
        let (rj, qj) = (&r[j], &q[j]);
        if rj > qj {
            reasons.push(format!("1/p_{} = {} exceeds q_{} = {}", j + 1, format_rational(rj), j + 1, format_rational(qj)));
        } else if rj == qj && b0.0[j] != 0 {
            reasons.push(format!("1/p_{} = q_{} = {} at the endpoint", j + 1, j + 1, format_rational(qj)));
        }
    }
    Ok(RegionCheck { admissible: reasons.is_empty(), reasons })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceSample {
    pub point: Vec<Rational>,
    /// `|λ̃_{I0}(x)|`
    pub lhs: Rational,
    /// `∏_j |det DG_j(π_j(F x))|^{b0_j} · |det DF(x)|^{|b0|₁−1} · |λ_{I0}(F x)|`
    pub rhs: Rational,
}

impl InvarianceSample {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub b0: Degree,
    pub minimal: bool,
    pub samples: Vec<InvarianceSample>,
}

impl InvarianceReport {
    pub fn holds(&self) -> bool {
        self.samples.iter().all(InvarianceSample::holds)
    }
}

/// Checks the transformation law of `|λ_{I0}|` under `π_j ↦ G_j ∘ π_j ∘ F`
/// (the weight identity raised to the power `|b0|₁ − 1`). Refuses when `b0` is
/// not minimal, since the identity can fail then.
pub fn diffeo_invariance_check(
    sys: &System,
    i0: &WordTuple,
    f: &PolyMap<Rational>,
    gs: &[PolyMap<Rational>],
    samples: &[Vec<Rational>],
) -> Result<InvarianceReport> {
    let b0 = i0.degree(sys.k());
    let mut table = sys.table(1).into_owned();
    if let Some(w) = table.minimality_witness(&b0)? {
        return Err(Error::NotMinimal(b0.to_string(), format!("λ ≢ 0 for {w}")));
    }
    diffeo_identity(sys, i0, f, gs, samples, true)
}

/// The same identity without the minimality gate.
pub fn diffeo_identity_unchecked(
    sys: &System,
    i0: &WordTuple,
    f: &PolyMap<Rational>,
    gs: &[PolyMap<Rational>],
    samples: &[Vec<Rational>],
) -> Result<InvarianceReport> {
    let b0 = i0.degree(sys.k());
    let minimal = sys.table(1).into_owned().minimality_check(&b0)?;
    diffeo_identity(sys, i0, f, gs, samples, minimal)
}

fn diffeo_identity(
    sys: &System,
    i0: &WordTuple,
    f: &PolyMap<Rational>,
    gs: &[PolyMap<Rational>],
    samples: &[Vec<Rational>],
    minimal: bool,
) -> Result<InvarianceReport> {
    let d = sys.dim();
    let k = sys.k();
    let pis = sys
        .submersions()
        .ok_or_else(|| Error::InvalidArgument("system was not built from submersions".into()))?;
    if gs.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: gs.len() });
    }
    if f.source_dim() != d || f.target_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: f.target_dim() });
    }
    let b0 = i0.degree(k);
    let root = weight_root(&b0)?;
    let tilde_pis = pis
        .iter()
        .zip(gs)
        .map(|(pi, g)| g.compose(pi)?.compose(f))
        .collect::<Result<Vec<_>>>()?;
    let (tilde_fields, _) = hodge_star_fields(&tilde_pis, d, &[])?;
    let tilde_table = BracketTable::new(tilde_fields)?;
    let tilde_lambda = tilde_table.lambda(i0)?;
    let lambda = sys.table(1).lambda(i0)?;
    let lambda_f = lambda.compose(f.components())?;
    let det_f = f.jacobian_det()?;
    let det_g = gs
        .iter()
        .zip(pis)
        .map(|(g, pi)| g.jacobian_det()?.compose(pi.compose(f)?.components()))
        .collect::<Result<Vec<_>>>()?;
    let samples = samples
        .iter()
        .map(|x| {
            let lhs = tilde_lambda.eval(x).abs();
            let mut rhs = lambda_f.eval(x).abs() * pow(&det_f.eval(x).abs(), root);
            for (j, dg) in det_g.iter().enumerate() {
                rhs *= pow(&dg.eval(x).abs(), b0.0[j]);
            }
            InvarianceSample { point: x.clone(), lhs, rhs }
        })
        .collect();
    Ok(InvarianceReport { b0, minimal, samples })
}

fn pow(x: &Rational, n: u32) -> Rational {
    (0..n).fold(Rational::one(), |acc, _| acc * x)
}

/// `λ_{I0}` as an exact polynomial.
pub fn lambda_polynomial(sys: &System, i0: &WordTuple) -> Result<crate::poly::Polynomial<Rational>> {
    let fields: Vec<_> = i0.words().iter().map(|w| sys.table(1).bracket_field(w)).collect();
    determinant_of_fields(&fields)
}

/// Rejects tuples whose letters exceed `k` or whose length is not `d`.
pub fn check_tuple(sys: &System, i: &WordTuple) -> Result<()> {
    if i.words().len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: i.words().len() });
    }
    for w in i.words() {
        Word::new(w.letters().to_vec(), sys.k())?;
    }
    Ok(())
}

/// `|b|₁` as a rational.
pub fn norm1(b: &[Rational]) -> Rational {
    b.iter().fold(Rational::zero(), |s, x| s + x)
}

/// True if every entry is nonnegative.
pub fn is_nonnegative(b: &[Rational]) -> bool {
    !b.iter().any(Signed::is_negative)
}
