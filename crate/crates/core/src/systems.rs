//! Vector-field systems, optionally generated by polynomial submersions, and
//! constructors for the standard example families.

use std::borrow::Cow;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::field::{hodge_star_fields, PolyMap, VectorField};
use crate::poly::Polynomial;
use crate::scalar::{int, Rational};
use crate::words::{BracketTable, Degree};

type P = Polynomial<Rational>;

#[derive(Clone, Debug)]
pub struct System {
    pub name: String,
    fields: Vec<VectorField<Rational>>,
    submersions: Option<Vec<PolyMap<Rational>>>,
    /// Axis-aligned box `[lo_i, hi_i]` supporting the cutoff.
    pub cutoff: Vec<(Rational, Rational)>,
    /// Extreme points known in closed form, when the family has them.
    pub closed_form_extremes: Option<Vec<Degree>>,
    table: BracketTable,
}

impl System {
    pub fn from_fields(name: &str, fields: Vec<VectorField<Rational>>) -> Result<Self> {
        if fields.len() < 2 {
            return Err(Error::InvalidArgument(format!("need at least two fields, got {}", fields.len())));
        }
        let d = fields[0].dim();
        let table = BracketTable::new(fields.clone())?;
        Ok(Self {
            name: name.to_string(),
            fields,
            submersions: None,
            cutoff: vec![(int(-1), int(1)); d],
            closed_form_extremes: None,
            table,
        })
    }

    /// Fields are the cofactor (Hodge-star) fields of the submersions.
    pub fn from_submersions(name: &str, d: usize, pis: Vec<PolyMap<Rational>>) -> Result<Self> {
        let (fields, _) = hodge_star_fields(&pis, d, &[])?;
        if let Some((j, _)) = fields.iter().enumerate().find(|(_, f)| f.is_zero()) {
            return Err(Error::InvalidArgument(format!("submersion {} has identically singular differential", j + 1)));
        }
        let mut s = Self::from_fields(name, fields)?;
        s.submersions = Some(pis);
        Ok(s)
    }

    pub fn with_cutoff(mut self, cutoff: Vec<(Rational, Rational)>) -> Result<Self> {
        if cutoff.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: cutoff.len() });
        }
        if cutoff.iter().any(|(a, b)| a >= b) {
            return Err(Error::InvalidArgument("cutoff box has an empty side".into()));
        }
        self.cutoff = cutoff;
        Ok(self)
    }

    pub fn with_closed_form(mut self, mut extremes: Vec<Degree>) -> Self {
        extremes.sort();
        extremes.dedup();
        self.closed_form_extremes = Some(extremes);
        self
    }

    pub fn dim(&self) -> usize {
        self.fields[0].dim()
    }

    pub fn k(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[VectorField<Rational>] {
        &self.fields
    }

    pub fn submersions(&self) -> Option<&[PolyMap<Rational>]> {
        self.submersions.as_deref()
    }

    /// Memoized brackets covering every word of length at most `len`.
    pub fn table(&self, len: usize) -> Cow<'_, BracketTable> {
        if self.table.built_len() >= len {
            Cow::Borrowed(&self.table)
        } else {
            let mut t = self.table.clone();
            t.ensure_len(len);
            Cow::Owned(t)
        }
    }

    /// Extends the stored table so later calls borrow it.
    pub fn prepare(&mut self, len: usize) {
        self.table.ensure_len(len);
    }

    pub fn in_cutoff(&self, x: &[Rational]) -> bool {
        x.iter().zip(&self.cutoff).all(|(v, (a, b))| a <= v && v <= b)
    }

    pub fn in_cutoff_f64(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.cutoff).all(|(v, (a, b))| crate::scalar::to_f64(a) <= *v && *v <= crate::scalar::to_f64(b))
    }
}

/// Polynomial in one variable `t` from integer coefficients `c_0 + c_1 t + …`.
pub fn poly_t(coeffs: &[Rational]) -> P {
    let mut p = P::zero(1);
    for (i, c) in coeffs.iter().enumerate() {
        if !c.is_zero() {
            p = &p + &P::monomial(1, vec![i as u32], c.clone());
        }
    }
    p
}

/// The monomial curve `(t, t², …, t^d)`.
pub fn moment_curve(d: usize) -> Vec<P> {
    (1..=d).map(|i| P::monomial(1, vec![i as u32], Rational::one())).collect()
}

fn embed_curve(gamma: &[P], nvars: usize, t_index: usize) -> Vec<P> {
    gamma.iter().map(|g| g.compose(&[P::var(nvars, t_index)]).expect("curve in one variable")).collect()
}

/// `π_1(t,x) = x`, `π_2(t,x) = x − γ(t)` on `R^{1+n}`; fields `∂_t` and `∂_t + γ'·∇_x`.
pub fn translation_invariant(name: &str, gamma: &[P]) -> Result<System> {
    let n = gamma.len();
    let dim = n + 1;
    let g = embed_curve(gamma, dim, 0);
    let pi1 = PolyMap::new(dim, (1..dim).map(|i| P::var(dim, i)).collect())?;
    let pi2 = PolyMap::new(dim, (1..dim).map(|i| &P::var(dim, i) - &g[i - 1]).collect())?;
    System::from_submersions(name, dim, vec![pi1, pi2])
}

/// Translation-invariant system of `(t, …, t^n)` with its closed-form extremes.
pub fn moment_translation(n: usize) -> Result<System> {
    let a = (n * (n - 1) / 2 + 1) as u32;
    let n32 = n as u32;
    Ok(translation_invariant(&format!("moment curve, n = {n}"), &moment_curve(n))?
        .with_closed_form(vec![Degree(vec![a, n32]), Degree(vec![n32, a])]))
}

pub fn parabola() -> Result<System> {
    Ok(translation_invariant("parabola", &moment_curve(2))?.with_closed_form(vec![Degree(vec![2, 2])]))
}

/// `γ_c(t) = (t, c t² + t³)`.
pub fn cubic_family(c: Rational) -> Result<System> {
    let gamma = vec![poly_t(&[int(0), int(1)]), poly_t(&[int(0), int(0), c.clone(), int(1)])];
    translation_invariant(&format!("(t, {c} t^2 + t^3)"), &gamma)
}

/// `γ(t) = (t, t⁴)`: curvature vanishes at `t = 0`.
pub fn flat_quartic() -> Result<System> {
    let gamma = vec![poly_t(&[int(0), int(1)]), P::monomial(1, vec![4], Rational::one())];
    translation_invariant("(t, t^4)", &gamma)
}

/// Restricted X-ray transform of `γ : R → R^{m}` on `(s, t, x) ∈ R^{2+m}`:
/// `π_1 = (t, x)`, `π_2 = (s, x − sγ(t))`.
pub fn xray(name: &str, gamma: &[P]) -> Result<System> {
    let m = gamma.len();
    let dim = m + 2;
    let g = embed_curve(gamma, dim, 1);
    let s = P::var(dim, 0);
    let pi1 = PolyMap::new(dim, (1..dim).map(|i| P::var(dim, i)).collect())?;
    let mut c2 = vec![s.clone()];
    c2.extend((2..dim).map(|i| &P::var(dim, i) - &(&s * &g[i - 2])));
    let pi2 = PolyMap::new(dim, c2)?;
    System::from_submersions(name, dim, vec![pi1, pi2])
}

/// X-ray system of the moment curve in `R^{d−1}` (ambient `d+1`), with the
/// unique extreme point `(d, 1 + d(d−1)/2)`.
pub fn moment_xray(d: usize) -> Result<System> {
    let d32 = d as u32;
    Ok(xray(&format!("x-ray, d = {d}"), &moment_curve(d - 1))?
        .with_closed_form(vec![Degree(vec![d32, 1 + d32 * (d32 - 1) / 2])]))
}

/// Coordinate projections `π_j(x) = x` with `x_j` omitted, on `R^d`.
pub fn loomis_whitney(d: usize) -> Result<System> {
    let pis = (0..d)
        .map(|j| PolyMap::new(d, (0..d).filter(|&i| i != j).map(|i| P::var(d, i)).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(System::from_submersions(&format!("loomis-whitney, d = {d}"), d, pis)?
        .with_closed_form(vec![Degree(vec![1; d])]))
}

/// `X_0 = ∂_t`, `X_i = ∂_t − γ'·∇_x` (`i = 1..n`) for `γ = (t, …, t^n)`,
/// generated by `π_0 = x` and `π_i = x + γ(t)`.
pub fn repeated_curve(n: usize) -> Result<System> {
    let dim = n + 1;
    let g = embed_curve(&moment_curve(n), dim, 0);
    let mut pis = vec![PolyMap::new(dim, (1..dim).map(|i| P::var(dim, i)).collect())?];
    for _ in 0..n {
        pis.push(PolyMap::new(dim, (1..dim).map(|i| &P::var(dim, i) + &g[i - 1]).collect())?);
    }
    System::from_submersions(&format!("repeated curve, n = {n}"), dim, pis)
}

/// `∂_1, …, ∂_d`.
pub fn commuting_frame(d: usize) -> Result<System> {
    Ok(System::from_fields(&format!("frame, d = {d}"), (0..d).map(|i| VectorField::coordinate(d, i)).collect())?
        .with_closed_form(vec![Degree(vec![1; d])]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_fields() {
        let s = parabola().unwrap();
        let f = s.fields();
        assert_eq!(f[0], VectorField::coordinate(3, 0));
        let expected = VectorField::new(vec![P::one(3), P::one(3), P::var(3, 0).scale(&int(2))]).unwrap();
        assert_eq!(f[1], expected);
    }

    #[test]
    fn xray_fields() {
        let s = moment_xray(3).unwrap();
        assert_eq!(s.dim(), 4);
        let f = s.fields();
        let sv = P::var(4, 0);
        let t = P::var(4, 1);
        // X_1 = ±∂_s, X_2 = ±(∂_t + s γ'(t)·∇_x) with γ = (t, t²)
        let x1 = VectorField::coordinate(4, 0);
        assert!(f[0] == x1 || f[0] == x1.scale(&int(-1)));
        let x2 = VectorField::new(vec![P::zero(4), P::one(4), sv.clone(), (&sv * &t).scale(&int(2))]).unwrap();
        assert!(f[1] == x2 || f[1] == x2.scale(&int(-1)), "{:?}", f[1]);
    }

    #[test]
    fn repeated_curve_fields() {
        let s = repeated_curve(3).unwrap();
        assert_eq!(s.k(), 4);
        let t = P::var(4, 0);
        let xi = VectorField::new(vec![P::one(4), -&P::one(4), t.scale(&int(-2)), (&t * &t).scale(&int(-3))]).unwrap();
        assert_eq!(s.fields()[1], xi);
        assert_eq!(s.fields()[3], xi);
    }

    #[test]
    fn rejects_single_field_and_bad_cutoff() {
        assert!(System::from_fields("one", vec![VectorField::coordinate(2, 0)]).is_err());
        let s = commuting_frame(2).unwrap();
        assert!(s.clone().with_cutoff(vec![(int(0), int(0)), (int(0), int(1))]).is_err());
        assert!(s.with_cutoff(vec![(int(0), int(1))]).is_err());
    }
}
