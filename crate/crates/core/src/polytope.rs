//! Upward-closed lattice polytopes `𝒫(ℬ) = ch ⋃_{b∈ℬ} ([0,∞)^k + b)`, exact
//! membership with Carathéodory certificates, extreme points, separating
//! vectors and the finite reductions built from them.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::scalar::{ceil_to_u64, dot, dot_int, int, Rational};
use crate::words::Degree;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpwardPolytope {
    k: usize,
    generators: Vec<Degree>,
}

/// `Σ weight·generator + slack = query`, weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct MembershipCertificate {
    pub support: Vec<(Degree, Rational)>,
    pub slack: Vec<Rational>,
}

/// `v0·b0 + ε < v0·b` for every generator `b`, with `v0 ∈ (ε, 1]^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparationWitness {
    pub v0: Vec<Rational>,
    pub epsilon: Rational,
}

impl UpwardPolytope {
    /// Generators are deduplicated and sorted.
    pub fn new(k: usize, generators: impl IntoIterator<Item = Degree>) -> Result<Self> {
        let set: BTreeSet<Degree> = generators.into_iter().collect();
        if let Some(g) = set.iter().find(|g| g.k() != k) {
            return Err(Error::DimensionMismatch { expected: k, found: g.k() });
        }
        Ok(Self { k, generators: set.into_iter().collect() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn generators(&self) -> &[Degree] {
        &self.generators
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn contains_generator(&self, b: &Degree) -> bool {
        self.generators.binary_search(b).is_ok()
    }

    pub fn without(&self, b: &Degree) -> Self {
        Self { k: self.k, generators: self.generators.iter().filter(|g| *g != b).cloned().collect() }
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        Self::new(self.k, self.generators.iter().chain(&other.generators).cloned())
    }

    pub fn membership(&self, b0: &[Rational]) -> Result<Option<MembershipCertificate>> {
        membership(self, b0)
    }

    pub fn contains(&self, b0: &[Rational]) -> Result<bool> {
        Ok(membership(self, b0)?.is_some())
    }

    pub fn is_extreme(&self, b: &Degree) -> Result<bool> {
        is_extreme(self, b)
    }

    /// A generator below `b`, which certifies `b ∈ 𝒫` without an LP.
    pub fn dominated_by(&self, b: &[Rational]) -> Option<MembershipCertificate> {
        let g = self.generators.iter().find(|g| g.0.iter().zip(b).all(|(gi, bi)| int(*gi as i64) <= *bi))?;
        let slack = g.0.iter().zip(b).map(|(gi, bi)| bi - int(*gi as i64)).collect();
        Some(MembershipCertificate { support: vec![(g.clone(), Rational::one())], slack })
    }

    /// Whether `v0·b > v0·b0` for every generator; with `v0 ⪰ 0` this proves
    /// `b0 ∉ 𝒫` without an LP.
    pub fn excluded_by(&self, v0: &[Rational], b0: &[Rational]) -> bool {
        let t = dot(v0, b0);
        v0.iter().all(|v| !v.is_negative()) && self.generators.iter().all(|g| dot_int(v0, &g.0) > t)
    }

    pub fn extreme_points(&self) -> Vec<Degree> {
        extreme_points(self)
    }
}

impl MembershipCertificate {
    /// Replays the arithmetic exactly.
    pub fn verify(&self, b0: &[Rational]) -> bool {
        let k = b0.len();
        if self.slack.len() != k || self.support.len() > k + 1 {
            return false;
        }
        if self.support.iter().any(|(_, w)| w.is_negative()) || self.slack.iter().any(Signed::is_negative) {
            return false;
        }
        let total = self.support.iter().fold(Rational::zero(), |a, (_, w)| a + w);
        if !total.is_one() {
            return false;
        }
        (0..k).all(|i| {
            let s = self.support.iter().fold(Rational::zero(), |a, (g, w)| a + w * int(g.0[i] as i64));
            s + &self.slack[i] == b0[i]
        })
    }
}

impl SeparationWitness {
    pub fn min_entry(&self) -> Rational {
        self.v0.iter().min().cloned().unwrap_or_else(Rational::one)
    }

    /// Checks the defining inequalities exactly against `generators`.
    pub fn verify(&self, generators: &[Degree], b0: &[Rational]) -> bool {
        if !self.epsilon.is_positive() {
            return false;
        }
        let in_range = self.v0.iter().all(|v| *v > self.epsilon && *v <= Rational::one());
        let lhs = dot(&self.v0, b0) + &self.epsilon;
        in_range && generators.iter().all(|b| lhs < dot_int(&self.v0, &b.0))
    }

    /// Every lattice point of norm above `n` is separated automatically when
    /// `min v0 · (n+1) > v0·b`, so extremality of `b` survives adding them.
    pub fn certifies(&self, b: &[Rational], n: u32) -> bool {
        self.min_entry() * int(n as i64 + 1) > dot(&self.v0, b)
    }
}

fn check_query(k: usize, b0: &[Rational]) -> Result<()> {
    if b0.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: b0.len() });
    }
    if b0.iter().any(Signed::is_negative) {
        return Err(Error::NegativeCoordinate);
    }
    Ok(())
}

/// Exact LP feasibility of `θ ≥ 0, Σθ = 1, Σθ_l b_l ⪯ b0`. A basic solution
/// has at most `k+1` nonzero weights, which is the Carathéodory bound.
pub fn membership(p: &UpwardPolytope, b0: &[Rational]) -> Result<Option<MembershipCertificate>> {
    let k = p.k;
    check_query(k, b0)?;
    let m = p.generators.len();
    if m == 0 {
        return Ok(None);
    }
    // cheap path: a dominated generator
    if let Some(g) = p.generators.iter().find(|g| g.0.iter().zip(b0).all(|(&a, b)| int(a as i64) <= *b)) {
        let slack = g.0.iter().zip(b0).map(|(&a, b)| b - int(a as i64)).collect();
        return Ok(Some(MembershipCertificate { support: vec![(g.clone(), Rational::one())], slack }));
    }
    let mut lp = LinearProgram::<Rational>::new(m + k);
    let mut ones = vec![Rational::zero(); m + k];
    ones[..m].iter_mut().for_each(|v| *v = Rational::one());
    lp.constrain(ones, Relation::Eq, Rational::one());
    for i in 0..k {
        let mut row: Vec<Rational> = p.generators.iter().map(|g| int(g.0[i] as i64)).collect();
        row.extend((0..k).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
        lp.constrain(row, Relation::Eq, b0[i].clone());
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => {
            let support: Vec<(Degree, Rational)> = p
                .generators
                .iter()
                .zip(&x[..m])
                .filter(|(_, w)| !w.is_zero())
                .map(|(g, w)| (g.clone(), w.clone()))
                .collect();
            let cert = MembershipCertificate { support, slack: x[m..].to_vec() };
            if !cert.verify(b0) {
                return Err(Error::Internal("membership certificate failed replay".into()));
            }
            Ok(Some(cert))
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Internal("feasibility LP reported unbounded".into())),
    }
}

pub fn is_extreme(p: &UpwardPolytope, b: &Degree) -> Result<bool> {
    if !p.contains_generator(b) {
        return Err(Error::NotAGenerator(b.to_string()));
    }
    Ok(membership(&p.without(b), &b.to_rational())?.is_none())
}

pub fn extreme_points(p: &UpwardPolytope) -> Vec<Degree> {
    p.generators
        .par_iter()
        .filter(|b| is_extreme(p, b).expect("generator of the polytope"))
        .cloned()
        .collect()
}

/// Builds `v0` and `ε` by maximizing the minimum margin `v1·(b − b0)` over
/// `v1 ∈ [0,1]^k`, then shifting and rescaling into `(ε, 1]^k`.
pub fn separating_vector(a: &[Degree], b0: &[Rational]) -> Result<SeparationWitness> {
    let k = b0.len();
    let poly = UpwardPolytope::new(k, a.iter().cloned())?;
    if membership(&poly, b0)?.is_some() {
        return Err(Error::Member);
    }
    let norm_b0 = b0.iter().fold(Rational::zero(), |s, x| s + x);
    if poly.is_empty() || norm_b0.is_zero() {
        let w = SeparationWitness { v0: vec![Rational::one(); k], epsilon: Rational::new(1.into(), 2.into()) };
        return Ok(w);
    }
    // variables v_1..v_k, m⁺, m⁻
    let mut lp = LinearProgram::<Rational>::new(k + 2);
    lp.objective[k] = Rational::one();
    lp.objective[k + 1] = -Rational::one();
    for b in poly.generators() {
        let mut row: Vec<Rational> = b.0.iter().zip(b0).map(|(&bi, b0i)| int(bi as i64) - b0i).collect();
        row.push(-Rational::one());
        row.push(Rational::one());
        lp.constrain(row, Relation::Ge, Rational::zero());
    }
    for i in 0..k {
        let mut row = vec![Rational::zero(); k + 2];
        row[i] = Rational::one();
        lp.constrain(row, Relation::Le, Rational::one());
    }
    let (x, _) = lp
        .solve()
        .optimal()
        .ok_or_else(|| Error::Internal("margin LP has no optimum".into()))?;
    let v1 = &x[..k];
    let margin = poly
        .generators()
        .iter()
        .map(|b| dot_int(v1, &b.0) - dot(v1, b0))
        .min()
        .expect("nonempty");
    if !margin.is_positive() {
        return Err(Error::Internal("nonpositive separation margin".into()));
    }
    let half = Rational::new(1.into(), 2.into());
    let delta = &half * &margin / &norm_b0;
    let one_delta = Rational::one() + &delta;
    let epsilon = &half * &delta / &one_delta;
    let v0 = v1.iter().map(|v| (v + &delta) / &one_delta).collect();
    let w = SeparationWitness { v0, epsilon };
    if !w.verify(poly.generators(), b0) {
        return Err(Error::Internal("separating witness failed its inequalities".into()));
    }
    Ok(w)
}

/// A witness for `b0` against `a` that also satisfies the stability rule
/// `min v0 · (N+1) > v0·b0`, if one exists. Maximizes `s` subject to
/// `v·(b − b0) ≥ s`, `(N+1) v_i − v·b0 ≥ s` and `v ≤ 1`.
pub fn certifying_vector(a: &[Degree], b0: &[Rational], n: u32) -> Result<Option<SeparationWitness>> {
    let k = b0.len();
    let poly = UpwardPolytope::new(k, a.iter().cloned())?;
    let scale = int(n as i64 + 1);
    // variables v_1..v_k, s
    let mut lp = LinearProgram::<Rational>::new(k + 1);
    lp.objective[k] = Rational::one();
    for b in poly.generators() {
        let mut row: Vec<Rational> = b.0.iter().zip(b0).map(|(&bi, b0i)| int(bi as i64) - b0i).collect();
        row.push(-Rational::one());
        lp.constrain(row, Relation::Ge, Rational::zero());
    }
    for i in 0..k {
        let mut row: Vec<Rational> = b0.iter().map(|x| -x.clone()).collect();
        row[i] += &scale;
        row.push(-Rational::one());
        lp.constrain(row, Relation::Ge, Rational::zero());
        let mut cap = vec![Rational::zero(); k + 1];
        cap[i] = Rational::one();
        lp.constrain(cap, Relation::Le, Rational::one());
    }
    let Some((x, _)) = lp.solve().optimal() else {
        return Ok(None);
    };
    let s = &x[k];
    let v0 = x[..k].to_vec();
    let smallest = v0.iter().min().cloned().unwrap_or_else(Rational::one);
    if !s.is_positive() || !smallest.is_positive() {
        return Ok(None);
    }
    let epsilon = s.min(&smallest).clone() / int(2);
    let w = SeparationWitness { v0, epsilon };
    Ok((w.verify(poly.generators(), b0) && w.certifies(b0, n)).then_some(w))
}

/// Truncation degree `⌈k ε⁻¹ (b0·v0 + 1)⌉` with `ε = min v0`.
pub fn envelope_degree(v0: &[Rational], b0: &[Rational]) -> Result<u64> {
    let eps = v0.iter().min().ok_or_else(|| Error::InvalidArgument("empty vector".into()))?;
    if !eps.is_positive() {
        return Err(Error::InvalidArgument("separating vector must be positive".into()));
    }
    Ok(ceil_to_u64(&(int(v0.len() as i64) / eps * (dot(v0, b0) + Rational::one()))))
}

/// Caps the number of lattice points [`envelope_points`] may enumerate.
pub const ENVELOPE_LIMIT: u64 = 2_000_000;

fn check_envelope_args(v0: &[Rational], b0: &[Rational]) -> Result<()> {
    if b0.len() != v0.len() {
        return Err(Error::DimensionMismatch { expected: v0.len(), found: b0.len() });
    }
    if v0.iter().any(|v| !v.is_positive()) {
        return Err(Error::InvalidArgument("separating vector must be positive".into()));
    }
    Ok(())
}

/// The set `{b ∈ Z_{≥0}^k : |b|₁ ≤ N, v0·b > v0·b0}` itself, with `N` from
/// [`envelope_degree`]. Errors when it has more than [`ENVELOPE_LIMIT`] candidates.
pub fn envelope_points(v0: &[Rational], b0: &[Rational]) -> Result<(Vec<Degree>, u64)> {
    check_envelope_args(v0, b0)?;
    let k = v0.len();
    let n = envelope_degree(v0, b0)?;
    if lattice_count(k as u64, n) > ENVELOPE_LIMIT {
        return Err(Error::InvalidArgument(format!("envelope degree {n} too large to enumerate")));
    }
    let threshold = dot(v0, b0);
    let mut pts = Vec::new();
    lattice_points(k, n as u32, &mut |b: &[u32]| {
        if dot_int(v0, b) > threshold {
            pts.push(Degree(b.to_vec()));
        }
    });
    Ok((pts, n))
}

/// The polytope of [`envelope_points`], generated by its minimal elements
/// only. A point `b` of the set with `b − e_i` also in it lies in
/// `b − e_i + R^k_{≥0}`, so dropping it leaves the polytope unchanged; the
/// minimal ones satisfy `v0·b ≤ v0·b0 + max v0`, a thin slab that stays small
/// when `N` is in the hundreds.
pub fn finite_envelope(v0: &[Rational], b0: &[Rational]) -> Result<(UpwardPolytope, u64)> {
    check_envelope_args(v0, b0)?;
    let k = v0.len();
    let n = envelope_degree(v0, b0)?;
    // largest weights first; the last coordinate is solved for, not looped
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| v0[b].cmp(&v0[a]));
    let s = Slab { v0, order, threshold: dot(v0, b0), cap: dot(v0, b0) + v0.iter().max().expect("nonempty"), n: n as u32 };
    let mut gens = Vec::new();
    s.walk(0, Rational::zero(), 0, &mut vec![0; k], &mut gens)?;
    Ok((UpwardPolytope::new(k, gens)?, n))
}

struct Slab<'a> {
    v0: &'a [Rational],
    order: Vec<usize>,
    threshold: Rational,
    cap: Rational,
    n: u32,
}

impl Slab<'_> {
    fn walk(&self, depth: usize, partial: Rational, norm: u32, cur: &mut Vec<u32>, out: &mut Vec<Degree>) -> Result<()> {
        let i = self.order[depth];
        let v = &self.v0[i];
        if depth + 1 == self.order.len() {
            // the only candidate: smallest a with partial + a·v above the threshold
            let a = if partial > self.threshold {
                0
            } else {
                ((&self.threshold - &partial) / v).floor().to_integer().try_into().unwrap_or(u32::MAX).saturating_add(1)
            };
            if norm.saturating_add(a) > self.n {
                return Ok(());
            }
            cur[i] = a;
            let value = &partial + v * int(a as i64);
            let minimal = (0..cur.len()).all(|j| cur[j] == 0 || &value - &self.v0[j] <= self.threshold);
            if minimal {
                if out.len() as u64 >= ENVELOPE_LIMIT {
                    return Err(Error::InvalidArgument("envelope has too many minimal points".into()));
                }
                out.push(Degree(cur.clone()));
            }
            cur[i] = 0;
            return Ok(());
        }
        let mut a = 0u32;
        let mut value = partial;
        while norm + a <= self.n && value <= self.cap {
            cur[i] = a;
            self.walk(depth + 1, value.clone(), norm + a, cur, out)?;
            a += 1;
            value += v;
        }
        cur[i] = 0;
        Ok(())
    }
}

fn lattice_count(k: u64, n: u64) -> u64 {
    // C(n+k, k), saturating
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc * (n as u128 + i) / i;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Calls `f` on every point of `Z_{≥0}^k` with `|b|₁ ≤ n`.
pub fn lattice_points(k: usize, n: u32, f: &mut impl FnMut(&[u32])) {
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if i == cur.len() {
            f(cur);
            return;
        }
        for a in 0..=left {
            cur[i] = a;
            rec(i + 1, left - a, cur, f);
        }
        cur[i] = 0;
    }
    rec(0, n, &mut vec![0; k], f);
}

/// Replaces far generators by axis points `C e_i`, doubling `C` from
/// `⌈|b0|₁⌉ + 1` until `b0` is excluded again. Returns the polytope and `C`.
pub fn admissible_reduction(b: &UpwardPolytope, b0: &[Rational]) -> Result<(UpwardPolytope, u32)> {
    let k = b.k();
    if membership(b, b0)?.is_some() {
        return Err(Error::Member);
    }
    let norm = b0.iter().fold(Rational::zero(), |s, x| s + x);
    let c0 = ceil_to_u64(&norm) as u32 + 1;
    for m in 0..24 {
        let c = c0 << m;
        let near = b.generators().iter().filter(|g| g.norm1() <= c).cloned();
        let axes = (0..k).map(|i| {
            let mut e = vec![0u32; k];
            e[i] = c;
            Degree(e)
        });
        let a = UpwardPolytope::new(k, near.chain(axes))?;
        if membership(&a, b0)?.is_none() {
            for g in b.generators() {
                if !a.contains(&g.to_rational())? {
                    return Err(Error::Internal(format!("generator {g} escaped the reduction")));
                }
            }
            return Ok((a, c));
        }
    }
    Err(Error::Internal("reduction search exhausted".into()))
}
