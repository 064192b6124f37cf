//! Polynomial vector fields and maps: Lie brackets, determinants, the
//! cofactor (Hodge-star) construction of fields tangent to submersion fibers,
//! and pullbacks under polynomial changes of variables.

use std::collections::HashMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{Field, Rational, Scalar};

/// Ring elements that can be fed to the Laplace determinant.
pub trait RingElem: Clone {
    fn ring_add(&self, other: &Self) -> Self;
    fn ring_mul(&self, other: &Self) -> Self;
    fn ring_neg(&self) -> Self;
    fn ring_is_zero(&self) -> bool;
}

impl<S: Scalar> RingElem for Polynomial<S> {
    fn ring_add(&self, other: &Self) -> Self {
        self + other
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self * other
    }
    fn ring_neg(&self) -> Self {
        -self
    }
    fn ring_is_zero(&self) -> bool {
        self.is_zero()
    }
}

/// Determinant of a square matrix over a commutative ring by Laplace expansion
/// along rows, memoized on the set of remaining columns.
pub fn det_laplace<T: RingElem>(m: &[Vec<T>]) -> T {
    let n = m.len();
    assert!(n > 0 && n < 64 && m.iter().all(|r| r.len() == n), "square matrix");
    let mut memo: HashMap<u64, T> = HashMap::new();
    fn rec<T: RingElem>(m: &[Vec<T>], row: usize, cols: u64, memo: &mut HashMap<u64, T>) -> Option<T> {
        let n = m.len();
        if row == n {
            return None; // empty product, handled by caller as one
        }
        if let Some(v) = memo.get(&cols) {
            return Some(v.clone());
        }
        let mut acc: Option<T> = None;
        let mut sign_pos = true;
        for c in 0..n {
            if cols & (1 << c) == 0 {
                continue;
            }
            let entry = &m[row][c];
            if !entry.ring_is_zero() {
                let term = match rec(m, row + 1, cols & !(1 << c), memo) {
                    None => entry.clone(),
                    Some(minor) => entry.ring_mul(&minor),
                };
                let term = if sign_pos { term } else { term.ring_neg() };
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.ring_add(&term),
                });
            }
            sign_pos = !sign_pos;
        }
        let val = acc.unwrap_or_else(|| {
            let z = m[row][0].ring_add(&m[row][0].ring_neg());
            z
        });
        memo.insert(cols, val.clone());
        Some(val)
    }
    rec(m, 0, (1u64 << n) - 1, &mut memo).expect("nonempty matrix")
}

/// Determinant over a field by Gaussian elimination (exact for rationals).
pub fn det_gauss<S: Field>(mut m: Vec<Vec<S>>) -> S {
    let n = m.len();
    let mut det = S::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return S::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det = det * pivot.clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone() / pivot.clone();
            for c in col..n {
                let v = m[r][c].clone() - f.clone() * m[col][c].clone();
                m[r][c] = v;
            }
        }
    }
    det
}

/// Rank over a field by row reduction.
pub fn rank<S: Field>(rows: &[Vec<S>]) -> usize {
    let mut m: Vec<Vec<S>> = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for col in 0..ncols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(p, r);
        let pivot = m[r][col].clone();
        for i in r + 1..m.len() {
            if m[i][col].is_zero() {
                continue;
            }
            let f = m[i][col].clone() / pivot.clone();
            for c in col..ncols {
                let v = m[i][c].clone() - f.clone() * m[r][c].clone();
                m[i][c] = v;
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// A vector field on R^d with polynomial components.
#[derive(Clone, PartialEq, Debug)]
pub struct VectorField<S> {
    components: Vec<Polynomial<S>>,
}

impl<S: Scalar> VectorField<S> {
    pub fn new(components: Vec<Polynomial<S>>) -> Result<Self> {
        let d = components.len();
        if let Some(p) = components.iter().find(|p| p.nvars() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: p.nvars() });
        }
        Ok(Self { components })
    }

    pub fn zero(d: usize) -> Self {
        Self { components: vec![Polynomial::zero(d); d] }
    }

    /// The coordinate field `∂_i` (0-based).
    pub fn coordinate(d: usize, i: usize) -> Self {
        let mut f = Self::zero(d);
        f.components[i] = Polynomial::one(d);
        f
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial<S>] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    /// The derivation `X(f) = Σ_l X_l ∂_l f`.
    pub fn apply(&self, f: &Polynomial<S>) -> Result<Polynomial<S>> {
        if f.nvars() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: f.nvars() });
        }
        let mut acc = Polynomial::zero(self.dim());
        for (l, xl) in self.components.iter().enumerate() {
            if xl.is_zero() {
                continue;
            }
            let d = f.partial(l)?;
            if !d.is_zero() {
                acc = &acc + &(xl * &d);
            }
        }
        Ok(acc)
    }

    /// `[X, Y]` with components `Σ_l (X_l ∂_l Y_i − Y_l ∂_l X_i)`.
    pub fn lie_bracket(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(xi, yi)| Ok(&self.apply(yi)? - &other.apply(xi)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, c: &S) -> Self {
        Self { components: self.components.iter().map(|p| p.scale(c)).collect() }
    }

    /// Multiplies every component by the function `f`.
    pub fn mul_function(&self, f: &Polynomial<S>) -> Self {
        Self { components: self.components.iter().map(|p| p * f).collect() }
    }

    pub fn eval(&self, point: &[S]) -> Vec<S> {
        self.components.iter().map(|p| p.eval(point)).collect()
    }

    /// Components composed with a map, i.e. the coefficients of `X ∘ F`.
    pub fn compose(&self, map: &PolyMap<S>) -> Result<Vec<Polynomial<S>>> {
        self.components.iter().map(|p| p.compose(map.components())).collect()
    }
}

impl VectorField<Rational> {
    pub fn to_float<F: Scalar>(&self) -> VectorField<F> {
        VectorField { components: self.components.iter().map(|p| p.to_float()).collect() }
    }

    pub fn eval_f64(&self, point: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval_f64(point)).collect()
    }
}

/// Lie bracket of two fields.
pub fn lie_bracket<S: Scalar>(x: &VectorField<S>, y: &VectorField<S>) -> Result<VectorField<S>> {
    x.lie_bracket(y)
}

/// Determinant of the matrix whose columns are the given fields.
pub fn determinant_of_fields<S: Scalar>(fields: &[VectorField<S>]) -> Result<Polynomial<S>> {
    let d = fields.len();
    if d == 0 {
        return Err(Error::InvalidArgument("no fields".into()));
    }
    if let Some(f) = fields.iter().find(|f| f.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: f.dim() });
    }
    let m: Vec<Vec<Polynomial<S>>> =
        (0..d).map(|row| fields.iter().map(|f| f.components[row].clone()).collect()).collect();
    Ok(det_laplace(&m))
}

/// Polynomial map R^source → R^target.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyMap<S> {
    source_dim: usize,
    components: Vec<Polynomial<S>>,
}

impl<S: Scalar> PolyMap<S> {
    pub fn new(source_dim: usize, components: Vec<Polynomial<S>>) -> Result<Self> {
        if let Some(p) = components.iter().find(|p| p.nvars() != source_dim) {
            return Err(Error::DimensionMismatch { expected: source_dim, found: p.nvars() });
        }
        Ok(Self { source_dim, components })
    }

    pub fn identity(d: usize) -> Self {
        Self { source_dim: d, components: (0..d).map(|i| Polynomial::var(d, i)).collect() }
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial<S>] {
        &self.components
    }

    /// Rows are components, columns are source variables.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial<S>>> {
        self.components
            .iter()
            .map(|p| (0..self.source_dim).map(|i| p.partial(i).expect("index in range")).collect())
            .collect()
    }

    pub fn jacobian_det(&self) -> Result<Polynomial<S>> {
        if self.target_dim() != self.source_dim {
            return Err(Error::DimensionMismatch { expected: self.source_dim, found: self.target_dim() });
        }
        if self.source_dim == 0 {
            return Ok(Polynomial::one(0));
        }
        Ok(det_laplace(&self.jacobian()))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PolyMap<S>) -> Result<Self> {
        if inner.target_dim() != self.source_dim {
            return Err(Error::DimensionMismatch { expected: self.source_dim, found: inner.target_dim() });
        }
        let components =
            self.components.iter().map(|p| p.compose(inner.components())).collect::<Result<Vec<_>>>()?;
        Ok(Self { source_dim: inner.source_dim, components })
    }

    pub fn eval(&self, point: &[S]) -> Vec<S> {
        self.components.iter().map(|p| p.eval(point)).collect()
    }
}

impl PolyMap<Rational> {
    pub fn eval_f64(&self, point: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval_f64(point)).collect()
    }
}

/// Cofactor vector of a (d−1)×d matrix: entry i is `(−1)^i` times the minor
/// omitting column i (0-based). It spans the kernel when the rank is d−1.
fn cofactor_vector<S: Scalar>(rows: &[Vec<Polynomial<S>>], d: usize) -> Vec<Polynomial<S>> {
    (0..d)
        .map(|omit| {
            if d == 1 {
                return Polynomial::one(1);
            }
            let minor: Vec<Vec<Polynomial<S>>> = rows
                .iter()
                .map(|r| r.iter().enumerate().filter(|(c, _)| *c != omit).map(|(_, p)| p.clone()).collect())
                .collect();
            let m = det_laplace(&minor);
            if omit % 2 == 0 {
                m
            } else {
                -&m
            }
        })
        .collect()
}

/// Fields tangent to the fibers of submersions `π_j : R^d → R^{d−1}`, built as
/// the cofactor vector of `Dπ_j`. Returns the fields and a warning for every
/// sample point at which some `Dπ_j` drops rank.
pub fn hodge_star_fields(
    pis: &[PolyMap<Rational>],
    d: usize,
    samples: &[Vec<Rational>],
) -> Result<(Vec<VectorField<Rational>>, Vec<String>)> {
    let mut fields = Vec::with_capacity(pis.len());
    let mut warnings = Vec::new();
    for (j, pi) in pis.iter().enumerate() {
        if pi.source_dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: pi.source_dim() });
        }
        if pi.target_dim() + 1 != d {
            return Err(Error::DimensionMismatch { expected: d - 1, found: pi.target_dim() });
        }
        let field = VectorField::new(cofactor_vector(&pi.jacobian(), d))?;
        for s in samples {
            if field.eval(s).iter().all(Zero::is_zero) {
                warnings.push(format!(
                    "submersion {} drops rank at ({})",
                    j + 1,
                    s.iter().map(crate::scalar::format_rational).collect::<Vec<_>>().join(", ")
                ));
            }
        }
        fields.push(field);
    }
    Ok((fields, warnings))
}

/// A vector field with rational-function components `numerators / denominator`.
#[derive(Clone, PartialEq, Debug)]
pub struct RationalVectorField<S> {
    pub numerators: VectorField<S>,
    pub denominator: Polynomial<S>,
}

impl RationalVectorField<Rational> {
    pub fn eval(&self, point: &[Rational]) -> Option<Vec<Rational>> {
        let den = self.denominator.eval(point);
        if den.is_zero() {
            return None;
        }
        Some(self.numerators.eval(point).into_iter().map(|v| v / den.clone()).collect())
    }
}

/// Adjugate of a square polynomial matrix.
fn adjugate<S: Scalar>(m: &[Vec<Polynomial<S>>]) -> Vec<Vec<Polynomial<S>>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![Polynomial::one(m[0][0].nvars())]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    // adj[i][j] = (−1)^{i+j} det(m without row j and column i)
                    let minor: Vec<Vec<Polynomial<S>>> = m
                        .iter()
                        .enumerate()
                        .filter(|(r, _)| *r != j)
                        .map(|(_, row)| {
                            row.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, p)| p.clone()).collect()
                        })
                        .collect();
                    let v = det_laplace(&minor);
                    if (i + j) % 2 == 0 {
                        v
                    } else {
                        -&v
                    }
                })
                .collect()
        })
        .collect()
}

/// Pullback `F^*X = (DF)^{-1} X∘F`, returned as `adj(DF)·(X∘F) / det DF`.
/// When `det DF` is a nonzero constant the denominator is normalized to one.
pub fn pullback_field(f: &PolyMap<Rational>, x: &VectorField<Rational>) -> Result<RationalVectorField<Rational>> {
    let d = x.dim();
    if f.source_dim() != d || f.target_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: f.target_dim() });
    }
    let det = f.jacobian_det()?;
    if det.is_zero() {
        return Err(Error::NotInvertible("det DF vanishes identically".into()));
    }
    let adj = adjugate(&f.jacobian());
    let xf = x.compose(f)?;
    let mut numerators: Vec<Polynomial<Rational>> = adj
        .iter()
        .map(|row| row.iter().zip(&xf).fold(Polynomial::zero(d), |acc, (a, b)| &acc + &(a * b)))
        .collect();
    let mut denominator = det;
    if denominator.is_constant() {
        let c = denominator.constant_term();
        let inv = Rational::one() / c;
        numerators = numerators.iter().map(|p| p.scale(&inv)).collect();
        denominator = Polynomial::one(d);
    }
    Ok(RationalVectorField { numerators: VectorField::new(numerators)?, denominator })
}

/// Pullback with a supplied polynomial inverse: `F^*X = D(F^{-1})∘F · X∘F`.
pub fn pullback_field_with_inverse(
    f: &PolyMap<Rational>,
    f_inv: &PolyMap<Rational>,
    x: &VectorField<Rational>,
) -> Result<VectorField<Rational>> {
    let d = x.dim();
    let round_trip = f_inv.compose(f)?;
    if round_trip != PolyMap::identity(d) {
        return Err(Error::NotInvertible("supplied inverse does not satisfy F^{-1}∘F = id".into()));
    }
    let jinv = f_inv.jacobian();
    let xf = x.compose(f)?;
    let components = jinv
        .iter()
        .map(|row| {
            row.iter().zip(&xf).try_fold(Polynomial::zero(d), |acc, (a, b)| Ok(&acc + &(&a.compose(f.components())? * b)))
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(components)
}
