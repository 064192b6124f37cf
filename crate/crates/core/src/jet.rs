//! Truncated power series in `t = (t_1..t_m)` whose coefficients may be
//! polynomials in extra parameters (typically the base point of a flow).
//!
//! A jet of order `M` keeps every monomial whose total `t`-degree is at most
//! `M`; parameter degrees are never truncated.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::field::RingElem;
use crate::poly::{ComposeTarget, Polynomial};
use crate::scalar::{factorial, Rational, Scalar};

#[derive(Clone, PartialEq)]
pub struct Jet<S> {
    poly: Polynomial<S>,
    nparams: usize,
    order: u32,
}

impl<S: Scalar> Jet<S> {
    pub fn zero(nparams: usize, nt: usize, order: u32) -> Self {
        Self { poly: Polynomial::zero(nparams + nt), nparams, order }
    }

    pub fn constant(nparams: usize, nt: usize, order: u32, c: S) -> Self {
        Self { poly: Polynomial::constant(nparams + nt, c), nparams, order }
    }

    /// The series variable `t_i` (0-based).
    pub fn t(nparams: usize, nt: usize, order: u32, i: usize) -> Self {
        Self::from_poly(Polynomial::var(nparams + nt, nparams + i), nparams, order)
    }

    /// The parameter `p_i` (0-based) as a constant-in-`t` jet.
    pub fn param(nparams: usize, nt: usize, order: u32, i: usize) -> Self {
        Self { poly: Polynomial::var(nparams + nt, i), nparams, order }
    }

    /// Wraps a polynomial in `nparams + nt` variables, truncating to `order`.
    pub fn from_poly(poly: Polynomial<S>, nparams: usize, order: u32) -> Self {
        let np = nparams;
        let poly = poly.filter_terms(|e| t_degree(e, np) <= order);
        Self { poly, nparams, order }
    }

    pub fn nparams(&self) -> usize {
        self.nparams
    }

    pub fn nt(&self) -> usize {
        self.poly.nvars() - self.nparams
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn as_poly(&self) -> &Polynomial<S> {
        &self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.nparams != other.nparams || self.poly.nvars() != other.poly.nvars() {
            return Err(Error::DimensionMismatch { expected: self.poly.nvars(), found: other.poly.nvars() });
        }
        Ok(())
    }

    /// Sum, truncated to the smaller order.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_poly(&self.poly + &other.poly, self.nparams, self.order.min(other.order)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_poly(&self.poly - &other.poly, self.nparams, self.order.min(other.order)))
    }

    /// Product, truncated to the smaller order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let order = self.order.min(other.order);
        let np = self.nparams;
        let poly = self.poly.mul_filtered(&other.poly, |e| t_degree(e, np) <= order);
        Ok(Self { poly, nparams: np, order })
    }

    pub fn neg(&self) -> Self {
        Self { poly: -&self.poly, nparams: self.nparams, order: self.order }
    }

    pub fn scale(&self, c: &S) -> Self {
        Self { poly: self.poly.scale(c), nparams: self.nparams, order: self.order }
    }

    /// Drops terms of `t`-degree above `order`.
    pub fn truncate(&self, order: u32) -> Self {
        Self::from_poly(self.poly.clone(), self.nparams, order.min(self.order))
    }

    /// `∂/∂t_i`; the result is exact to one order less.
    pub fn partial_t(&self, i: usize) -> Result<Self> {
        if i >= self.nt() {
            return Err(Error::IndexOutOfRange { index: i, dim: self.nt() });
        }
        let poly = self.poly.partial(self.nparams + i)?;
        Ok(Self { poly, nparams: self.nparams, order: self.order.saturating_sub(1) })
    }

    /// Coefficient of `t^α` as a polynomial in the parameters.
    pub fn coefficient(&self, alpha: &[u32]) -> Polynomial<S> {
        let np = self.nparams;
        let mut out = Polynomial::zero(np);
        for (e, c) in self.poly.terms() {
            if &e[np..] == alpha {
                out.add_term(e[..np].to_vec(), c.clone());
            }
        }
        out
    }

    /// All nonzero coefficients keyed by `α`.
    pub fn coefficients(&self) -> BTreeMap<Vec<u32>, Polynomial<S>> {
        let np = self.nparams;
        let mut out: BTreeMap<Vec<u32>, Polynomial<S>> = BTreeMap::new();
        for (e, c) in self.poly.terms() {
            out.entry(e[np..].to_vec())
                .or_insert_with(|| Polynomial::zero(np))
                .add_term(e[..np].to_vec(), c.clone());
        }
        out
    }

    /// Substitutes values for the parameters.
    pub fn eval_params(&self, params: &[S]) -> Result<Jet<S>> {
        if params.len() != self.nparams {
            return Err(Error::DimensionMismatch { expected: self.nparams, found: params.len() });
        }
        let nt = self.nt();
        let mut poly = Polynomial::zero(nt);
        for (e, c) in self.poly.terms() {
            let mut v = c.clone();
            for (x, &a) in params.iter().zip(&e[..self.nparams]) {
                for _ in 0..a {
                    v = v * x.clone();
                }
            }
            poly.add_term(e[self.nparams..].to_vec(), v);
        }
        Ok(Jet { poly, nparams: 0, order: self.order })
    }

    /// `p ∘ (jets)`: substitutes `jets[i]` for variable `i` of `p`.
    pub fn compose_poly(p: &Polynomial<S>, jets: &[Jet<S>]) -> Result<Jet<S>> {
        if p.nvars() != jets.len() {
            return Err(Error::DimensionMismatch { expected: p.nvars(), found: jets.len() });
        }
        let first = jets.first().ok_or_else(|| Error::InvalidArgument("no jets to substitute".into()))?;
        for j in jets {
            first.check(j)?;
        }
        let order = jets.iter().map(|j| j.order).min().unwrap_or(first.order);
        let zero = Jet::zero(first.nparams, first.nt(), order);
        Ok(p.compose_with(jets, zero, |a, b| a.mul(b).expect("matching jets")))
    }
}

impl Jet<Rational> {
    /// `∂^α` at `t = 0`, i.e. `α! · c_α`.
    pub fn derivative_at_zero(&self, alpha: &[u32]) -> Polynomial<Rational> {
        let f = alpha.iter().fold(Rational::from_integer(1.into()), |acc, &a| acc * factorial(a));
        self.coefficient(alpha).scale(&f)
    }
}

fn t_degree(e: &[u32], nparams: usize) -> u32 {
    e[nparams..].iter().sum()
}

impl<S: Scalar> ComposeTarget<S> for Jet<S> {
    fn unit_like(&self) -> Self {
        Jet::constant(self.nparams, self.nt(), self.order, S::one())
    }
    fn scale_by(&self, c: &S) -> Self {
        self.scale(c)
    }
    fn add_to(&self, other: &Self) -> Self {
        self.add(other).expect("matching jets")
    }
}

impl<S: Scalar> RingElem for Jet<S> {
    fn ring_add(&self, other: &Self) -> Self {
        self.add(other).expect("matching jets")
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self.mul(other).expect("matching jets")
    }
    fn ring_neg(&self) -> Self {
        self.neg()
    }
    fn ring_is_zero(&self) -> bool {
        self.is_zero()
    }
}

impl<S: Scalar + fmt::Display> fmt::Display for Jet<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O(t^{})", self.poly, self.order + 1)
    }
}

impl<S: fmt::Debug> fmt::Debug for Jet<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(order {}, {:?})", self.order, self.poly)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    type J = Jet<Rational>;

    #[test]
    fn truncated_products() {
        let t = J::t(0, 1, 3, 0);
        let one = J::constant(0, 1, 3, int(1));
        let a = one.add(&t).unwrap();
        let cube = a.mul(&a).unwrap().mul(&a).unwrap().mul(&a).unwrap();
        // (1+t)^4 = 1 + 4t + 6t² + 4t³ + t⁴
        assert_eq!(cube.coefficient(&[3]).constant_term(), int(4));
        assert!(cube.coefficient(&[4]).is_zero());
    }

    #[test]
    fn geometric_series_inverse() {
        // (1 - t)(1 + t + t² + t³) = 1 mod t⁴
        let t = J::t(0, 1, 3, 0);
        let one = J::constant(0, 1, 3, int(1));
        let mut s = one.clone();
        let mut p = one.clone();
        for _ in 0..3 {
            p = p.mul(&t).unwrap();
            s = s.add(&p).unwrap();
        }
        let prod = one.sub(&t).unwrap().mul(&s).unwrap();
        assert_eq!(prod, one);
    }

    #[test]
    fn parameters_are_not_truncated() {
        let x = J::param(1, 1, 1, 0);
        let t = J::t(1, 1, 1, 0);
        let p = x.mul(&x).unwrap().mul(&x).unwrap().mul(&t).unwrap();
        assert_eq!(p.coefficient(&[1]), Polynomial::var(1, 0).pow(3));
        assert!(t.mul(&t).unwrap().is_zero());
        let at = p.eval_params(&[int(2)]).unwrap();
        assert_eq!(at.coefficient(&[1]).constant_term(), int(8));
    }

    #[test]
    fn composition_and_derivatives() {
        // p(y) = y², y = 1 + t  →  1 + 2t + t²
        let p = Polynomial::var(1, 0).pow(2);
        let y = J::constant(0, 1, 2, int(1)).add(&J::t(0, 1, 2, 0)).unwrap();
        let c = J::compose_poly(&p, &[y]).unwrap();
        assert_eq!(c.coefficient(&[2]).constant_term(), int(1));
        assert_eq!(c.derivative_at_zero(&[2]).constant_term(), int(2));
        let d = c.partial_t(0).unwrap();
        assert_eq!(d.order(), 1);
        assert_eq!(d.coefficient(&[1]).constant_term(), int(2));
        assert_eq!(c.scale(&rat(1, 2)).coefficient(&[1]).constant_term(), int(1));
    }

    #[test]
    fn mismatch_rejected() {
        assert!(J::t(0, 1, 2, 0).add(&J::t(0, 2, 2, 0)).is_err());
        assert!(J::t(0, 1, 2, 0).partial_t(1).is_err());
    }
}
