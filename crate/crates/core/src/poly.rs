//! Sparse multivariate polynomials in canonical form.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Exponent multi-index, one entry per variable.
pub type Monomial = Vec<u32>;

/// Polynomial in `nvars` variables. Zero coefficients are never stored, so two
/// polynomials are equal iff their term maps are equal.
#[derive(Clone, PartialEq)]
pub struct Polynomial<S> {
    nvars: usize,
    terms: BTreeMap<Monomial, S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, S::one())
    }

    pub fn constant(nvars: usize, c: S) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    /// The coordinate function `x_i` (0-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable {i} out of range for {nvars} variables");
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, S::one())
    }

    pub fn monomial(nvars: usize, exp: Monomial, c: S) -> Self {
        assert_eq!(exp.len(), nvars);
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        Self { nvars, terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, S)>>(nvars: usize, terms: I) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch { expected: nvars, found: e.len() });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exp: &[u32]) -> S {
        self.terms.get(exp).cloned().unwrap_or_else(S::zero)
    }

    pub fn constant_term(&self) -> S {
        self.coeff(&vec![0; self.nvars])
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&a| a == 0))
    }

    pub(crate) fn add_term(&mut self, exp: Monomial, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, found: other.nvars });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.mul_filtered(other, |_| true))
    }

    /// Product keeping only monomials accepted by `keep` (used for truncation).
    pub(crate) fn mul_filtered(&self, other: &Self, keep: impl Fn(&[u32]) -> bool) -> Self {
        let mut out = Self::zero(self.nvars);
        let mut e = vec![0u32; self.nvars];
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                for i in 0..self.nvars {
                    e[i] = ea[i] + eb[i];
                }
                if keep(&e) {
                    out.add_term(e.clone(), ca.clone() * cb.clone());
                }
            }
        }
        out
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, a)| (e.clone(), a.clone() * c.clone()))
            .filter(|(_, a)| !a.is_zero())
            .collect();
        Self { nvars: self.nvars, terms }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Keeps the terms accepted by `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&[u32]) -> bool) -> Self {
        let terms = self.terms.iter().filter(|(e, _)| keep(e)).map(|(e, c)| (e.clone(), c.clone())).collect();
        Self { nvars: self.nvars, terms }
    }

    /// Formal derivative with respect to variable `i` (0-based).
    pub fn partial(&self, i: usize) -> Result<Self> {
        if i >= self.nvars {
            return Err(Error::IndexOutOfRange { index: i, dim: self.nvars });
        }
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[i] -= 1;
            out.add_term(f, c.clone() * S::from_i64(e[i] as i64));
        }
        Ok(out)
    }

    /// Substitutes `map[i]` for variable `i`; the result lives in the variables of `map`.
    pub fn compose(&self, map: &[Polynomial<S>]) -> Result<Self> {
        if map.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, found: map.len() });
        }
        let target = map.first().map_or(0, |p| p.nvars);
        if let Some(p) = map.iter().find(|p| p.nvars != target) {
            return Err(Error::DimensionMismatch { expected: target, found: p.nvars });
        }
        Ok(self.compose_with(map, Polynomial::zero(target), |a, b| a * b))
    }

    /// Composition with a custom product, so truncated (jet) products can reuse it.
    pub(crate) fn compose_with<T: Clone>(
        &self,
        map: &[T],
        zero: T,
        mul: impl Fn(&T, &T) -> T,
    ) -> T
    where
        T: ComposeTarget<S>,
    {
        let mut powers: Vec<Vec<T>> = map.iter().map(|m| vec![m.unit_like(), m.clone()]).collect();
        let mut out = zero;
        for (e, c) in &self.terms {
            let mut term: Option<T> = None;
            for (i, &a) in e.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                while powers[i].len() <= a as usize {
                    let next = mul(powers[i].last().unwrap(), &map[i]);
                    powers[i].push(next);
                }
                let f = &powers[i][a as usize];
                term = Some(match term {
                    None => f.clone(),
                    Some(t) => mul(&t, f),
                });
            }
            let term = match term {
                None => out.unit_like().scale_by(c),
                Some(t) => t.scale_by(c),
            };
            out = out.add_to(&term);
        }
        out
    }

    pub fn eval(&self, point: &[S]) -> S {
        assert_eq!(point.len(), self.nvars);
        let mut acc = S::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (x, &a) in point.iter().zip(e) {
                for _ in 0..a {
                    term = term * x.clone();
                }
            }
            acc = acc + term;
        }
        acc
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Polynomial<T> {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// Re-embeds into `nvars` variables, sending variable `i` to `offset + i`.
    pub fn embed(&self, nvars: usize, offset: usize) -> Self {
        assert!(offset + self.nvars <= nvars);
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut f = vec![0; nvars];
                f[offset..offset + self.nvars].copy_from_slice(e);
                (f, c.clone())
            })
            .collect();
        Self { nvars, terms }
    }
}

impl Polynomial<Rational> {
    pub fn to_float<F: Scalar>(&self) -> Polynomial<F> {
        self.map_coeffs(F::from_rational)
    }

    /// Evaluates at a floating-point point without materializing a float polynomial.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut term = crate::scalar::to_f64(c);
            for (x, &a) in point.iter().zip(e) {
                term *= x.powi(a as i32);
            }
            acc += term;
        }
        acc
    }
}

/// Minimal interface for targets of [`Polynomial::compose_with`].
pub(crate) trait ComposeTarget<S> {
    fn unit_like(&self) -> Self;
    fn scale_by(&self, c: &S) -> Self;
    fn add_to(&self, other: &Self) -> Self;
}

impl<S: Scalar> ComposeTarget<S> for Polynomial<S> {
    fn unit_like(&self) -> Self {
        Polynomial::one(self.nvars)
    }
    fn scale_by(&self, c: &S) -> Self {
        self.scale(c)
    }
    fn add_to(&self, other: &Self) -> Self {
        self + other
    }
}

impl<'a, S: Scalar> Add<&'a Polynomial<S>> for &'a Polynomial<S> {
    type Output = Polynomial<S>;
    fn add(self, rhs: &'a Polynomial<S>) -> Polynomial<S> {
        self.checked_add(rhs).expect("polynomial dimensions agree")
    }
}

impl<'a, S: Scalar> Sub<&'a Polynomial<S>> for &'a Polynomial<S> {
    type Output = Polynomial<S>;
    fn sub(self, rhs: &'a Polynomial<S>) -> Polynomial<S> {
        self.checked_sub(rhs).expect("polynomial dimensions agree")
    }
}

impl<'a, S: Scalar> Mul<&'a Polynomial<S>> for &'a Polynomial<S> {
    type Output = Polynomial<S>;
    fn mul(self, rhs: &'a Polynomial<S>) -> Polynomial<S> {
        self.checked_mul(rhs).expect("polynomial dimensions agree")
    }
}

impl<S: Scalar> Neg for &Polynomial<S> {
    type Output = Polynomial<S>;
    fn neg(self) -> Polynomial<S> {
        self.scale(&-S::one())
    }
}

impl<S: Scalar + fmt::Display> fmt::Display for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > 0)
                .map(|(i, &a)| if a == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, a) })
                .collect();
            if mono.is_empty() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "({c})*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl<S: fmt::Debug> fmt::Debug for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}
