//! Floating-point flows: compiled polynomial fields, classical RK4, flows with
//! their Jacobians from the variational equation, exact-weight finite
//! difference stencils, and sampled Carnot–Carathéodory-type balls.

use num_traits::{Float, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::poly::Polynomial;
use crate::scalar::{dot_int, factorial, int, to_f64, Rational};
use crate::systems::System;
use crate::words::WordTuple;

/// Upper bound on RK4 steps for a single integration.
pub const MAX_STEPS: u64 = 10_000_000;

/// A polynomial flattened for fast floating-point evaluation.
#[derive(Clone, Debug)]
pub struct FloatPoly<F> {
    terms: Vec<(Vec<(usize, i32)>, F)>,
}

impl<F: Float> FloatPoly<F> {
    pub fn new(p: &Polynomial<Rational>) -> Self {
        let terms = p
            .terms()
            .map(|(e, c)| {
                let vars = e.iter().enumerate().filter(|(_, &a)| a > 0).map(|(i, &a)| (i, a as i32)).collect();
                (vars, F::from(to_f64(c)).expect("finite coefficient"))
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, x: &[F]) -> F {
        let mut acc = F::zero();
        for (vars, c) in &self.terms {
            let mut t = *c;
            for &(i, a) in vars {
                t = t * x[i].powi(a);
            }
            acc = acc + t;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A vector field with its Jacobian, compiled for floats.
#[derive(Clone, Debug)]
pub struct FloatField<F> {
    comps: Vec<FloatPoly<F>>,
    /// Nonzero entries `(i, l, ∂_l X_i)`.
    jac: Vec<(usize, usize, FloatPoly<F>)>,
}

impl<F: Float> FloatField<F> {
    pub fn new(x: &VectorField<Rational>) -> Self {
        let d = x.dim();
        let comps = x.components().iter().map(FloatPoly::new).collect();
        let mut jac = Vec::new();
        for (i, c) in x.components().iter().enumerate() {
            for l in 0..d {
                let p = FloatPoly::new(&c.partial(l).expect("in range"));
                if !p.is_zero() {
                    jac.push((i, l, p));
                }
            }
        }
        Self { comps, jac }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn eval_into(&self, x: &[F], out: &mut [F]) {
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = c.eval(x);
        }
    }

    pub fn eval(&self, x: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn jacobian(&self, x: &[F]) -> Vec<Vec<F>> {
        let d = self.dim();
        let mut out = vec![vec![F::zero(); d]; d];
        for (i, l, p) in &self.jac {
            out[*i][*l] = p.eval(x);
        }
        out
    }

    /// Adds `c · DX(x) · V` to `out` for row-major `d×d` matrices.
    pub fn add_jacobian_product(&self, x: &[F], c: F, v: &[F], out: &mut [F]) {
        let d = self.dim();
        for (i, l, p) in &self.jac {
            let a = c * p.eval(x);
            for col in 0..d {
                out[i * d + col] = out[i * d + col] + a * v[l * d + col];
            }
        }
    }
}

/// `n` classical RK4 steps of size `step` for `y' = f(y)`.
pub fn rk4_steps<F: Float>(mut f: impl FnMut(&[F], &mut [F]), y0: &[F], step: F, n: u64) -> Vec<F> {
    let m = y0.len();
    let two = F::one() + F::one();
    let six = two + two + two;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![F::zero(); m], vec![F::zero(); m], vec![F::zero(); m], vec![F::zero(); m]);
    let mut tmp = vec![F::zero(); m];
    for _ in 0..n {
        f(&y, &mut k1);
        for i in 0..m {
            tmp[i] = y[i] + step / two * k1[i];
        }
        f(&tmp, &mut k2);
        for i in 0..m {
            tmp[i] = y[i] + step / two * k2[i];
        }
        f(&tmp, &mut k3);
        for i in 0..m {
            tmp[i] = y[i] + step * k3[i];
        }
        f(&tmp, &mut k4);
        for i in 0..m {
            y[i] = y[i] + step / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
    }
    y
}

/// Number of steps of size at most `h` covering time `t`.
pub fn step_count<F: Float>(t: F, h: F) -> Result<u64> {
    if !(h > F::zero()) || !h.is_finite() || !t.is_finite() {
        return Err(Error::InvalidArgument("step must be positive and times finite".into()));
    }
    let n = (t.abs() / h).ceil().to_f64().unwrap_or(f64::INFINITY);
    if n > MAX_STEPS as f64 {
        return Err(Error::Numerical(format!("{n} steps exceeds the limit of {MAX_STEPS}")));
    }
    Ok((n as u64).max(1))
}

/// RK4 over time `t` with steps no longer than `h`.
pub fn rk4<F: Float>(f: impl FnMut(&[F], &mut [F]), y0: &[F], t: F, h: F) -> Result<Vec<F>> {
    let n = step_count(t, h)?;
    Ok(rk4_steps(f, y0, t / F::from(n).expect("step count"), n))
}

/// `e^{tX}(x0)` by RK4 with step `h`.
pub fn numeric_flow(x: &VectorField<Rational>, x0: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
    if x0.len() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: x0.len() });
    }
    let f = FloatField::<f64>::new(x);
    rk4(|y, out| f.eval_into(y, out), x0, t, h)
}

/// Determinant with partial pivoting.
pub fn det_float<F: Float>(mut m: Vec<Vec<F>>) -> F {
    let n = m.len();
    let mut det = F::one();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty");
        if m[p][col].is_zero() {
            return F::zero();
        }
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pivot = m[col][col];
        det = det * pivot;
        for r in col + 1..n {
            let f = m[r][col] / pivot;
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                m[r][c] = m[r][c] - f * m[col][c];
            }
        }
    }
    det
}

/// Compiled fields of a system for numerical flows.
#[derive(Clone, Debug)]
pub struct NumericSystem {
    pub fields: Vec<FloatField<f64>>,
}

impl NumericSystem {
    pub fn new(sys: &System) -> Self {
        Self { fields: sys.fields().iter().map(FloatField::new).collect() }
    }

    pub fn dim(&self) -> usize {
        self.fields[0].dim()
    }

    /// `Ψ^J_{x0}(t)` and `D_tΨ^J_{x0}(t)`, integrating each flow with `steps`
    /// RK4 steps together with its variational equation.
    pub fn psi_with_jacobian(&self, j: &[u16], x0: &[f64], t: &[f64], steps: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = self.dim();
        let mut y = x0.to_vec();
        let mut v = vec![vec![0.0; d]; d];
        for (slot, (&l, &ti)) in j.iter().zip(t).enumerate() {
            let f = &self.fields[l as usize - 1];
            let mut state = y.clone();
            for row in &v {
                state.extend_from_slice(row);
            }
            let rhs = |s: &[f64], out: &mut [f64]| {
                let (pt, vm) = s.split_at(d);
                let (o1, o2) = out.split_at_mut(d);
                f.eval_into(pt, o1);
                o2.iter_mut().for_each(|v| *v = 0.0);
                f.add_jacobian_product(pt, 1.0, vm, o2);
            };
            let end = rk4_steps(rhs, &state, ti / steps as f64, steps);
            y = end[..d].to_vec();
            for i in 0..d {
                v[i].copy_from_slice(&end[d + i * d..d + (i + 1) * d]);
            }
            let xv = f.eval(&y);
            for i in 0..d {
                v[i][slot] = xv[i];
            }
        }
        (y, v)
    }

    /// `det D_tΨ^J_{x0}(t)`.
    pub fn psi_det(&self, j: &[u16], x0: &[f64], t: &[f64], steps: u64) -> f64 {
        det_float(self.psi_with_jacobian(j, x0, t, steps).1)
    }
}

/// Weights `w_{-s..=s}` with `Σ w_j f(jh) / h^a → f^{(a)}(0)`, exact over the
/// rationals; order `2s + 1 − a` or better.
pub fn fd_weights(a: u32, s: u32) -> Result<Vec<Rational>> {
    let n = 2 * s as usize + 1;
    if a as usize >= n {
        return Err(Error::InvalidArgument(format!("{n} nodes cannot resolve derivative order {a}")));
    }
    // Vandermonde system Σ_j w_j j^m = a! δ_{m,a}, m = 0..n−1
    let nodes: Vec<Rational> = (-(s as i64)..=s as i64).map(int).collect();
    let mut rows: Vec<Vec<Rational>> = (0..n)
        .map(|m| {
            let mut row: Vec<Rational> = nodes.iter().map(|x| pow_q(x, m as u32)).collect();
            row.push(if m == a as usize { factorial(a) } else { Rational::zero() });
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !rows[r][col].is_zero()).ok_or_else(|| Error::Internal("singular stencil".into()))?;
        rows.swap(p, col);
        let piv = rows[col][col].clone();
        for c in col..=n {
            rows[col][c] = &rows[col][c] / &piv;
        }
        for r in 0..n {
            if r != col && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                for c in col..=n {
                    let v = &rows[r][c] - &(&f * &rows[col][c]);
                    rows[r][c] = v;
                }
            }
        }
    }
    Ok(rows.into_iter().map(|r| r[n].clone()).collect())
}

fn pow_q(x: &Rational, m: u32) -> Rational {
    (0..m).fold(Rational::from_integer(1.into()), |acc, _| acc * x)
}

/// `∂^α f(0)` by a tensor product of central stencils with spacing `h`;
/// each active axis uses `⌈α_i/2⌉ + extra` nodes per side.
pub fn fd_derivative(f: impl Fn(&[f64]) -> f64 + Sync, alpha: &[u32], h: f64, extra: u32) -> Result<f64> {
    let axes: Vec<(Vec<i64>, Vec<f64>)> = alpha
        .iter()
        .map(|&a| {
            if a == 0 {
                return Ok((vec![0], vec![1.0]));
            }
            let s = a.div_ceil(2) + extra;
            let w = fd_weights(a, s)?;
            let nodes = (-(s as i64)..=s as i64).collect();
            Ok((nodes, w.iter().map(to_f64).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for (nodes, w) in &axes {
        let mut next = Vec::new();
        for (p, c) in &points {
            for (&j, &wj) in nodes.iter().zip(w) {
                if wj != 0.0 {
                    let mut q = p.clone();
                    q.push(j as f64 * h);
                    next.push((q, c * wj));
                }
            }
        }
        points = next;
    }
    let terms: Vec<f64> = points.par_iter().map(|(p, c)| c * f(p)).collect();
    let sum: f64 = terms.iter().sum();
    let a: i32 = alpha.iter().sum::<u32>() as i32;
    Ok(sum / h.powi(a))
}

/// Options for sampling a ball.
#[derive(Clone, Debug)]
pub struct BallOptions {
    pub samples: usize,
    /// RK4 steps over the unit time interval.
    pub steps: u64,
    pub seed: u64,
}

impl Default for BallOptions {
    fn default() -> Self {
        Self { samples: 100_000, steps: 16, seed: 0 }
    }
}

/// Samples of `B(x0, δ) = {Φ^δ(t) : t ∈ (−1,1)^d}` with the Jacobian
/// determinant of `t ↦ Φ^δ(t)` at each sample.
#[derive(Clone, Debug)]
pub struct BallCloud {
    pub x0: Vec<f64>,
    pub delta: f64,
    /// `δ^{v0·deg w_i}` per word.
    pub scales: Vec<f64>,
    pub params: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
    pub jacobian_dets: Vec<f64>,
}

impl BallCloud {
    /// `2^d · mean |det D_tΦ|`; the volume when `Φ` is injective on the cube.
    pub fn jacobian_volume(&self) -> f64 {
        let d = self.x0.len() as i32;
        let mean = self.jacobian_dets.iter().map(|v| v.abs()).sum::<f64>() / self.jacobian_dets.len() as f64;
        2f64.powi(d) * mean
    }

    /// `2^d · mean g(Φ(t)) |det D_tΦ(t)|`, i.e. `∫_B g` under injectivity.
    pub fn integrate(&self, g: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        let d = self.x0.len() as i32;
        // summed in order so the result does not depend on the thread count
        let terms: Vec<f64> = self.points.par_iter().zip(&self.jacobian_dets).map(|(p, j)| g(p) * j.abs()).collect();
        let s: f64 = terms.iter().sum();
        2f64.powi(d) * s / self.points.len() as f64
    }

    /// Axis-aligned bounds of the sampled points.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        bounds_of(&self.points)
    }
}

pub fn bounds_of(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = points.first().map_or(0, Vec::len);
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in points {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

const CHUNK: usize = 4096;

pub fn cc_ball(
    sys: &System,
    x0: &[Rational],
    tuple: &WordTuple,
    v0: &[Rational],
    delta: f64,
    opts: &BallOptions,
) -> Result<BallCloud> {
    let d = sys.dim();
    let k = sys.k();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x0.len() });
    }
    if tuple.words().len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: tuple.words().len() });
    }
    if v0.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: v0.len() });
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument("δ must be positive".into()));
    }
    if opts.samples == 0 || opts.steps == 0 {
        return Err(Error::InvalidArgument("need at least one sample and one step".into()));
    }
    let maxlen = tuple.words().iter().map(|w| w.len()).max().unwrap_or(1);
    let table = sys.table(maxlen);
    if table.lambda(tuple)?.eval(x0).is_zero() {
        return Err(Error::InvalidArgument(format!("λ_I(x0) = 0 for I = {tuple}")));
    }
    let fields: Vec<FloatField<f64>> = tuple.words().iter().map(|w| FloatField::new(&table.bracket_field(w))).collect();
    let scales: Vec<f64> = tuple.words().iter().map(|w| delta.powf(to_f64(&dot_int(v0, &w.degree(k).0)))).collect();
    let x0f: Vec<f64> = x0.iter().map(to_f64).collect();

    let nchunks = opts.samples.div_ceil(CHUNK);
    let chunks: Vec<Vec<(Vec<f64>, Vec<f64>, f64)>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(opts.samples - c * CHUNK);
            (0..count)
                .map(|_| {
                    let t: Vec<f64> = (0..d).map(|_| open_unit(&mut rng)).collect();
                    let (p, det) = frozen_flow(&fields, &scales, &x0f, &t, opts.steps);
                    (t, p, det)
                })
                .collect()
        })
        .collect();
    let mut params = Vec::with_capacity(opts.samples);
    let mut points = Vec::with_capacity(opts.samples);
    let mut dets = Vec::with_capacity(opts.samples);
    for (t, p, det) in chunks.into_iter().flatten() {
        params.push(t);
        points.push(p);
        dets.push(det);
    }
    Ok(BallCloud { x0: x0f, delta, scales, params, points, jacobian_dets: dets })
}

/// Uniform in the open interval `(−1, 1)`.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.gen_range(-1.0..1.0);
        if u > -1.0 {
            return u;
        }
    }
}

/// Unit-time flow of `Σ t_i c_i X_i` from `x0`, with `det` of its `t`-Jacobian.
fn frozen_flow(fields: &[FloatField<f64>], scales: &[f64], x0: &[f64], t: &[f64], steps: u64) -> (Vec<f64>, f64) {
    let d = x0.len();
    let coef: Vec<f64> = t.iter().zip(scales).map(|(a, b)| a * b).collect();
    let mut state = x0.to_vec();
    state.resize(d + d * d, 0.0);
    let mut val = vec![0.0; d];
    let rhs = |s: &[f64], out: &mut [f64]| {
        let (pt, vm) = s.split_at(d);
        let (o1, o2) = out.split_at_mut(d);
        o1.iter_mut().for_each(|v| *v = 0.0);
        o2.iter_mut().for_each(|v| *v = 0.0);
        // y' = Σ c_w X_w(y);  V' = DY V + column w of scale_w X_w(y)
        for (w, f) in fields.iter().enumerate() {
            f.eval_into(pt, &mut val);
            for i in 0..d {
                o1[i] += coef[w] * val[i];
                o2[i * d + w] += scales[w] * val[i];
            }
            if coef[w] != 0.0 {
                f.add_jacobian_product(pt, coef[w], vm, o2);
            }
        }
    };
    let end = rk4_steps(rhs, &state, 1.0 / steps as f64, steps);
    let v: Vec<Vec<f64>> = (0..d).map(|i| end[d + i * d..d + (i + 1) * d].to_vec()).collect();
    (end[..d].to_vec(), det_float(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::systems::{commuting_frame, parabola};
    use crate::words::Word;

    type P = Polynomial<Rational>;

    #[test]
    fn translation_is_exact() {
        let x = VectorField::coordinate(2, 0);
        let y = numeric_flow(&x, &[0.5, 1.0], 0.7, 0.3).unwrap();
        assert!((y[0] - 1.2).abs() < 1e-15 && y[1] == 1.0);
    }

    #[test]
    fn parabola_flow_closed_form() {
        let sys = parabola().unwrap();
        let y = numeric_flow(&sys.fields()[1], &[0.0; 3], 1.0, 1e-2).unwrap();
        for v in y {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        // x' = 1, y' = x⁴: y(1) = 1/5 from the origin (cubics are integrated exactly)
        let x = VectorField::new(vec![P::one(2), P::var(2, 0).pow(4)]).unwrap();
        let err = |h: f64| (numeric_flow(&x, &[0.0, 0.0], 1.0, h).unwrap()[1] - 0.2).abs();
        let r = err(0.1) / err(0.05);
        // exact ratio for a single polynomial error term is 16
        assert!((r - 16.0).abs() < 2.0, "{r}");
    }

    #[test]
    fn step_guard() {
        let x = VectorField::coordinate(1, 0);
        assert!(numeric_flow(&x, &[0.0], 1.0, 0.0).is_err());
        assert!(numeric_flow(&x, &[0.0], 1e9, 1e-3).is_err());
    }

    #[test]
    fn stencil_weights() {
        let w = fd_weights(1, 1).unwrap();
        assert_eq!(w, vec![rat(-1, 2), int(0), rat(1, 2)]);
        let w = fd_weights(2, 1).unwrap();
        assert_eq!(w, vec![int(1), int(-2), int(1)]);
        let d = fd_derivative(|t| (t[0]).exp() * t[1].sin(), &[2, 1], 0.05, 3).unwrap();
        assert!((d - 1.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn frame_jacobian_is_identity_permutation() {
        let sys = commuting_frame(3).unwrap();
        let ns = NumericSystem::new(&sys);
        let det = ns.psi_det(&[2, 1, 3], &[0.0; 3], &[0.1, 0.2, 0.3], 4);
        assert!((det + 1.0).abs() < 1e-14);
    }

    #[test]
    fn ball_shrinks_and_is_deterministic() {
        let sys = parabola().unwrap();
        let i = WordTuple::new(vec![Word::letter(1), Word::letter(2), Word::from_letters(&[1, 2])]);
        let x0 = vec![int(0); 3];
        let v0 = vec![int(1), int(1)];
        let opts = BallOptions { samples: 5000, steps: 8, seed: 7 };
        let a = cc_ball(&sys, &x0, &i, &v0, 1e-4, &opts).unwrap();
        assert!(a.points.iter().all(|p| p.iter().all(|v| v.abs() < 1e-3)));
        let b = cc_ball(&sys, &x0, &i, &v0, 1e-4, &opts).unwrap();
        assert_eq!(a.points, b.points);
        let bad = WordTuple::new(vec![Word::letter(1), Word::letter(1), Word::from_letters(&[1, 2])]);
        assert!(cc_ball(&sys, &x0, &bad, &v0, 0.1, &opts).is_err());
    }

    #[test]
    fn frame_ball_is_a_box() {
        let sys = commuting_frame(2).unwrap();
        let i = WordTuple::new(vec![Word::letter(1), Word::letter(2)]);
        let opts = BallOptions { samples: 1000, steps: 2, seed: 1 };
        let c = cc_ball(&sys, &[int(0), int(0)], &i, &[int(1), int(2)], 0.5, &opts).unwrap();
        // side lengths 2·0.5 and 2·0.25
        assert!((c.jacobian_volume() - 0.5).abs() < 1e-12);
        let (lo, hi) = c.bounds();
        assert!(hi[0] - lo[0] <= 1.0 && hi[1] - lo[1] <= 0.5);
    }
}
