//! Numerical evaluation of the weighted multilinear form on families of sets,
//! ratio sweeps against `∏|E_j|^{1/p_j}`, and the optimality probe on
//! sampled balls.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arclength::{lambda_polynomial, newton_polytope_at, q_map, ExponentVector};
use crate::error::{Error, Result};
use crate::flows::rho_tilde_radicand;
use crate::grid::OccupancyGrid;
use crate::numeric::{bounds_of, cc_ball, BallCloud, BallOptions, FloatPoly};
use crate::scalar::{to_f64, Rational};
use crate::systems::System;
use crate::tolerances::Tolerances;
use crate::words::{Degree, WordTuple};

/// Density multiplying `a(x) dx` in the form.
#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    Unweighted,
    /// `|λ_{I0}|^{1/(|deg I0|₁−1)}`
    Rho(WordTuple),
    /// `|∂^β det D_tΨ^J(0)|^{1/(|b0|₁−1)}`
    RhoTilde { j: Vec<u16>, beta: Vec<u32> },
    /// `base(x) · |x − center|^exponent`
    Singular { base: Box<Weight>, center: Vec<f64>, exponent: f64 },
}

/// A weight compiled for floating-point evaluation.
#[derive(Clone, Debug)]
pub struct CompiledWeight {
    radicand: Option<(FloatPoly<f64>, f64)>,
    singular: Vec<(Vec<f64>, f64)>,
}

impl CompiledWeight {
    pub fn new(sys: &System, w: &Weight) -> Result<Self> {
        match w {
            Weight::Unweighted => Ok(Self { radicand: None, singular: Vec::new() }),
            Weight::Rho(i0) => {
                let n = i0.degree(sys.k()).norm1();
                root_check(n)?;
                let lam = lambda_polynomial(sys, i0)?;
                Ok(Self { radicand: Some((FloatPoly::new(&lam), 1.0 / (n - 1) as f64)), singular: Vec::new() })
            }
            Weight::RhoTilde { j, beta } => {
                let n = crate::flows::JDegreeData::new(j, beta, sys.k()).total().norm1();
                let rad = rho_tilde_radicand(sys, j, beta)?;
                Ok(Self { radicand: Some((FloatPoly::new(&rad), 1.0 / (n - 1) as f64)), singular: Vec::new() })
            }
            Weight::Singular { base, center, exponent } => {
                if center.len() != sys.dim() {
                    return Err(Error::DimensionMismatch { expected: sys.dim(), found: center.len() });
                }
                let mut c = Self::new(sys, base)?;
                c.singular.push((center.clone(), *exponent));
                Ok(c)
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = match &self.radicand {
            None => 1.0,
            Some((p, e)) => p.eval(x).abs().powf(*e),
        };
        for (c, e) in &self.singular {
            let r = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            v *= r.powf(*e);
        }
        v
    }
}

fn root_check(n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("|b0|₁ = {n}; the weight exponent is undefined")));
    }
    Ok(())
}

/// The submersions of a system, compiled.
#[derive(Clone, Debug)]
pub struct Projections {
    maps: Vec<Vec<FloatPoly<f64>>>,
}

impl Projections {
    pub fn new(sys: &System) -> Result<Self> {
        let pis = sys
            .submersions()
            .ok_or_else(|| Error::InvalidArgument(format!("system '{}' has no submersions", sys.name)))?;
        Ok(Self { maps: pis.iter().map(|m| m.components().iter().map(FloatPoly::new).collect()).collect() })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn apply(&self, j: usize, x: &[f64]) -> Vec<f64> {
        self.maps[j].iter().map(|p| p.eval(x)).collect()
    }
}

/// An axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("domain box has an empty side".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn cutoff(sys: &System) -> Self {
        Self { lo: sys.cutoff.iter().map(|c| to_f64(&c.0)).collect(), hi: sys.cutoff.iter().map(|c| to_f64(&c.1)).collect() }
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Scales about the centre by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                let (c, r) = ((a + b) / 2.0, (b - a) / 2.0 * factor);
                (c - r, c + r)
            })
            .unzip();
        Self { lo, hi }
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        Self::new(lo, hi).ok()
    }
}

/// `∏ χ_{E_j}(π_j(x)) · w(x) · χ_cutoff(x)`.
pub struct Integrand<'a> {
    proj: &'a Projections,
    sets: &'a [OccupancyGrid],
    weight: &'a CompiledWeight,
    cutoff: Domain,
}

impl<'a> Integrand<'a> {
    pub fn new(sys: &System, proj: &'a Projections, sets: &'a [OccupancyGrid], weight: &'a CompiledWeight) -> Result<Self> {
        if sets.len() != proj.len() {
            return Err(Error::DimensionMismatch { expected: proj.len(), found: sets.len() });
        }
        Ok(Self { proj, sets, weight, cutoff: Domain::cutoff(sys) })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if x.iter().zip(&self.cutoff.lo).zip(&self.cutoff.hi).any(|((v, a), b)| v < a || v > b) {
            return 0.0;
        }
        for (j, e) in self.sets.iter().enumerate() {
            if !e.contains(&self.proj.apply(j, x)) {
                return 0.0;
            }
        }
        self.weight.eval(x)
    }
}

/// Midpoint Riemann sum with `r` cells per axis; deterministic.
pub fn riemann_sum(f: &(impl Fn(&[f64]) -> f64 + Sync), domain: &Domain, r: usize) -> f64 {
    let d = domain.lo.len();
    let h: Vec<f64> = domain.lo.iter().zip(&domain.hi).map(|(a, b)| (b - a) / r as f64).collect();
    let cell: f64 = h.iter().product();
    let rest = r.pow(d as u32 - 1);
    let slabs: Vec<f64> = (0..r)
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; d];
            x[0] = domain.lo[0] + (i0 as f64 + 0.5) * h[0];
            let mut acc = 0.0;
            for flat in 0..rest {
                let mut f2 = flat;
                for i in (1..d).rev() {
                    x[i] = domain.lo[i] + ((f2 % r) as f64 + 0.5) * h[i];
                    f2 /= r;
                }
                acc += f(&x);
            }
            acc
        })
        .collect();
    slabs.iter().sum::<f64>() * cell
}

/// Whether `f` is nonzero at some cell centre of the outer layer of the grid,
/// ignoring faces that lie on the cutoff boundary.
fn touches_shell(f: &(impl Fn(&[f64]) -> f64 + Sync), domain: &Domain, cutoff: &Domain, r: usize) -> bool {
    let d = domain.lo.len();
    let h: Vec<f64> = domain.lo.iter().zip(&domain.hi).map(|(a, b)| (b - a) / r as f64).collect();
    let total = r.pow(d as u32);
    (0..total).into_par_iter().any(|flat| {
        let mut f2 = flat;
        let mut x = vec![0.0; d];
        let mut on_shell = false;
        for i in (0..d).rev() {
            let c = f2 % r;
            f2 /= r;
            x[i] = domain.lo[i] + (c as f64 + 0.5) * h[i];
            let low_free = domain.lo[i] > cutoff.lo[i];
            let high_free = domain.hi[i] < cutoff.hi[i];
            if (c == 0 && low_free) || (c == r - 1 && high_free) {
                on_shell = true;
            }
        }
        on_shell && f(&x) != 0.0
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureResult {
    /// Value at the finer resolution.
    pub value: f64,
    pub coarse: f64,
    pub resolution: usize,
    /// `|fine − coarse| / fine`, or 0 when both vanish.
    pub relative_change: f64,
    pub converged: bool,
    pub domain: Domain,
}

/// The form `∫ ∏ χ_{E_j}(π_j x) w(x) a(x) dx` over `domain` at resolutions
/// `r` and `2r`.
pub fn form_quadrature(
    sys: &System,
    weight: &Weight,
    sets: &[OccupancyGrid],
    domain: &Domain,
    r: usize,
    tol: &Tolerances,
) -> Result<QuadratureResult> {
    if r == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let proj = Projections::new(sys)?;
    let w = CompiledWeight::new(sys, weight)?;
    let f = Integrand::new(sys, &proj, sets, &w)?;
    let domain = domain
        .intersect(&Domain::cutoff(sys))
        .ok_or_else(|| Error::InvalidArgument("domain misses the cutoff box".into()))?;
    let g = |x: &[f64]| f.eval(x);
    let coarse = riemann_sum(&g, &domain, r);
    let value = riemann_sum(&g, &domain, 2 * r);
    let relative_change = if value == 0.0 && coarse == 0.0 { 0.0 } else { (value - coarse).abs() / value.abs().max(coarse.abs()) };
    Ok(QuadratureResult {
        value,
        coarse,
        resolution: 2 * r,
        relative_change,
        converged: relative_change < tol.quadrature_halving,
        domain,
    })
}

/// Starts from `seed` scaled by `factor` and doubles until the integrand
/// vanishes on the outer layer of cells (at most `max_growth` times).
pub fn adaptive_domain(
    sys: &System,
    weight: &Weight,
    sets: &[OccupancyGrid],
    seed: &Domain,
    factor: f64,
    r: usize,
) -> Result<Domain> {
    let proj = Projections::new(sys)?;
    let w = CompiledWeight::new(sys, weight)?;
    let f = Integrand::new(sys, &proj, sets, &w)?;
    let cutoff = Domain::cutoff(sys);
    let g = |x: &[f64]| f.eval(x);
    let mut factor = factor;
    for _ in 0..8 {
        let dom = seed
            .scaled(factor)
            .intersect(&cutoff)
            .ok_or_else(|| Error::InvalidArgument("domain misses the cutoff box".into()))?;
        if !touches_shell(&g, &dom, &cutoff, r) {
            return Ok(dom);
        }
        factor *= 2.0;
    }
    Err(Error::Numerical("integrand still reaches the boundary of the enlarged domain".into()))
}

/// Independent Monte Carlo estimate of the same form, uniform on `domain`.
pub fn form_monte_carlo(
    sys: &System,
    weight: &Weight,
    sets: &[OccupancyGrid],
    domain: &Domain,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let proj = Projections::new(sys)?;
    let w = CompiledWeight::new(sys, weight)?;
    let f = Integrand::new(sys, &proj, sets, &w)?;
    const CHUNK: usize = 8192;
    let sums: Vec<f64> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut x = vec![0.0; domain.lo.len()];
            let mut acc = 0.0;
            for _ in 0..n {
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi = rng.gen_range(domain.lo[i]..domain.hi[i]);
                }
                acc += f.eval(&x);
            }
            acc
        })
        .collect();
    Ok(sums.iter().sum::<f64>() / samples as f64 * domain.volume())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageMeasure {
    pub grid: OccupancyGrid,
    pub measure: f64,
    /// Measure with cells of twice the size.
    pub coarse: f64,
    pub relative_change: f64,
    pub stable: bool,
}

/// Occupancy area of `π_j(cloud)` with `resolution` cells per axis.
pub fn measure_image(
    sys: &System,
    j: usize,
    points: &[Vec<f64>],
    resolution: usize,
    tol: &Tolerances,
) -> Result<ImageMeasure> {
    let proj = Projections::new(sys)?;
    if j >= proj.len() {
        return Err(Error::IndexOutOfRange { index: j, dim: proj.len() });
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty point cloud".into()));
    }
    let img: Vec<Vec<f64>> = points.par_iter().map(|p| proj.apply(j, p)).collect();
    let grid = OccupancyGrid::from_points(&img, resolution)?;
    let coarse = OccupancyGrid::from_points(&img, (resolution / 2).max(1))?.measure();
    let measure = grid.measure();
    if measure == 0.0 {
        return Err(Error::Numerical("image has zero measure".into()));
    }
    let relative_change = (measure - coarse).abs() / measure;
    Ok(ImageMeasure { grid, measure, coarse, relative_change, stable: relative_change < tol.image_halving })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    CcBalls,
    Boxes,
    RandomUnions,
}

#[derive(Clone, Debug)]
pub struct FamilyMember {
    /// Sweep parameter (δ for balls, side scale for boxes).
    pub delta: f64,
    pub sets: Vec<OccupancyGrid>,
    pub measures: Vec<f64>,
    /// Largest image-halving change over the sets.
    pub image_change: f64,
    /// Region seeding the quadrature domain.
    pub region: Domain,
}

#[derive(Clone, Debug)]
pub struct SetFamily {
    pub kind: FamilyKind,
    pub members: Vec<FamilyMember>,
}

#[derive(Clone, Debug)]
pub struct FamilyOptions {
    pub ball: BallOptions,
    /// Cells per axis for image grids.
    pub image_resolution: usize,
    /// Cells per axis of the coarse quadrature (the fine one doubles it).
    pub quadrature_resolution: usize,
    /// Initial enlargement of the region for the quadrature domain.
    pub domain_factor: f64,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self { ball: BallOptions::default(), image_resolution: 64, quadrature_resolution: 32, domain_factor: 2.0 }
    }
}

/// Images `E_j = π_j(B(x0, δ))` over a sweep of `δ`.
pub fn cc_ball_family(
    sys: &System,
    x0: &[Rational],
    tuple: &WordTuple,
    v0: &[Rational],
    deltas: &[f64],
    opts: &FamilyOptions,
    tol: &Tolerances,
) -> Result<SetFamily> {
    let members = deltas
        .iter()
        .enumerate()
        .map(|(row, &delta)| {
            let ball = BallOptions { seed: row_seed(opts.ball.seed, row), ..opts.ball.clone() };
            let cloud = cc_ball(sys, x0, tuple, v0, delta, &ball)?;
            ball_member(sys, &cloud, opts, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SetFamily { kind: FamilyKind::CcBalls, members })
}

/// Deterministic per-row seed.
pub fn row_seed(seed: u64, row: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(row as u64)
}

pub fn ball_member(sys: &System, cloud: &BallCloud, opts: &FamilyOptions, tol: &Tolerances) -> Result<FamilyMember> {
    let k = Projections::new(sys)?.len();
    let images = (0..k)
        .map(|j| measure_image(sys, j, &cloud.points, opts.image_resolution, tol))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = cloud.bounds();
    Ok(FamilyMember {
        delta: cloud.delta,
        measures: images.iter().map(|m| m.measure).collect(),
        image_change: images.iter().map(|m| m.relative_change).fold(0.0, f64::max),
        sets: images.into_iter().map(|m| m.grid).collect(),
        region: Domain::new(lo, hi)?,
    })
}

/// `E_j = π_j(box)` for boxes `x0 + s·[−1,1]^d` over side scales `s`.
pub fn box_family(sys: &System, x0: &[f64], scales: &[f64], samples_per_axis: usize, resolution: usize, tol: &Tolerances) -> Result<SetFamily> {
    let d = sys.dim();
    let members = scales
        .iter()
        .map(|&s| {
            let pts = lattice(d, samples_per_axis, |i, u| x0[i] + s * (2.0 * u - 1.0));
            member_from_points(sys, s, &pts, resolution, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SetFamily { kind: FamilyKind::Boxes, members })
}

/// Unions of `count` random boxes of side `s` inside `x0 + [−1,1]^d · 4s`.
pub fn random_union_family(
    sys: &System,
    x0: &[f64],
    scales: &[f64],
    count: usize,
    seed: u64,
    resolution: usize,
    tol: &Tolerances,
) -> Result<SetFamily> {
    let d = sys.dim();
    let members = scales
        .iter()
        .enumerate()
        .map(|(row, &s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(row_seed(seed, row));
            let mut pts = Vec::new();
            for _ in 0..count {
                let c: Vec<f64> = (0..d).map(|i| x0[i] + rng.gen_range(-3.0..3.0) * s).collect();
                pts.extend(lattice(d, 12, |i, u| c[i] + s * (2.0 * u - 1.0) / 2.0));
            }
            member_from_points(sys, s, &pts, resolution, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SetFamily { kind: FamilyKind::RandomUnions, members })
}

fn lattice(d: usize, n: usize, coord: impl Fn(usize, f64) -> f64) -> Vec<Vec<f64>> {
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut f| {
            (0..d)
                .map(|i| {
                    let c = f % n;
                    f /= n;
                    coord(i, (c as f64 + 0.5) / n as f64)
                })
                .collect()
        })
        .collect()
}

fn member_from_points(sys: &System, delta: f64, pts: &[Vec<f64>], resolution: usize, tol: &Tolerances) -> Result<FamilyMember> {
    let k = Projections::new(sys)?.len();
    let images = (0..k).map(|j| measure_image(sys, j, pts, resolution, tol)).collect::<Result<Vec<_>>>()?;
    let (lo, hi) = bounds_of(pts);
    Ok(FamilyMember {
        delta,
        measures: images.iter().map(|m| m.measure).collect(),
        image_change: images.iter().map(|m| m.relative_change).fold(0.0, f64::max),
        sets: images.into_iter().map(|m| m.grid).collect(),
        region: Domain::new(lo, hi)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioRow {
    pub delta: f64,
    pub mass: f64,
    pub measures: Vec<f64>,
    pub ratio: f64,
    pub quadrature_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioTable {
    /// `1/p_j` used for the ratios.
    pub reciprocals: Vec<f64>,
    pub rows: Vec<RatioRow>,
    /// Least-squares slope of `log ratio` against `log δ`.
    pub slope: Option<f64>,
    pub notes: Vec<String>,
    pub converged: bool,
}

impl RatioTable {
    fn build(reciprocals: Vec<f64>, raw: Vec<(f64, f64, Vec<f64>, f64)>, mut notes: Vec<String>, tol: &Tolerances) -> Self {
        let mut rows = Vec::new();
        let mut converged = true;
        for (delta, mass, measures, change) in raw {
            if measures.iter().any(|m| *m <= 0.0) || mass <= 0.0 {
                notes.push(format!("δ = {delta:e}: zero mass or measure, row skipped"));
                continue;
            }
            converged &= change < tol.quadrature_halving;
            let denom: f64 = measures.iter().zip(&reciprocals).map(|(m, r)| m.powf(*r)).product();
            rows.push(RatioRow { delta, mass, measures, ratio: mass / denom, quadrature_change: change });
        }
        let slope = log_log_slope(&rows.iter().map(|r| (r.delta, r.ratio)).collect::<Vec<_>>());
        Self { reciprocals, rows, slope, notes, converged }
    }

    /// The same masses and measures against other exponents.
    pub fn with_reciprocals(&self, reciprocals: Vec<f64>, tol: &Tolerances) -> Self {
        let raw = self.rows.iter().map(|r| (r.delta, r.mass, r.measures.clone(), r.quadrature_change)).collect();
        Self::build(reciprocals, raw, self.notes.clone(), tol)
    }

    pub fn band(&self) -> Option<f64> {
        let (lo, hi) = self.rows.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.ratio), b.max(r.ratio)));
        (!self.rows.is_empty()).then_some(hi / lo)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn reciprocals_of(p: &ExponentVector) -> Result<Vec<f64>> {
    if !p.all_finite() {
        return Err(Error::InvalidArgument("ratio sweeps need finite exponents".into()));
    }
    Ok(p.reciprocals().iter().map(to_f64).collect())
}

/// Form value over each family member divided by `∏|E_j|^{1/p_j}`.
pub fn ratio_sweep(
    sys: &System,
    weight: &Weight,
    family: &SetFamily,
    p: &ExponentVector,
    opts: &FamilyOptions,
    tol: &Tolerances,
) -> Result<RatioTable> {
    let recips = reciprocals_of(p)?;
    if recips.len() != sys.k() {
        return Err(Error::DimensionMismatch { expected: sys.k(), found: recips.len() });
    }
    if family.members.is_empty() {
        return Err(Error::InvalidArgument("empty set family".into()));
    }
    let mut notes = Vec::new();
    let mut raw = Vec::new();
    for m in &family.members {
        let dom = adaptive_domain(sys, weight, &m.sets, &m.region, opts.domain_factor, opts.quadrature_resolution)?;
        let q = form_quadrature(sys, weight, &m.sets, &dom, opts.quadrature_resolution, tol)?;
        if !q.converged {
            notes.push(format!("δ = {:e}: quadrature changed by {:.3} under halving", m.delta, q.relative_change));
        }
        raw.push((m.delta, q.value, m.measures.clone(), q.relative_change));
    }
    Ok(RatioTable::build(recips, raw, notes, tol))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub delta: f64,
    /// `μ(B)` with `μ = w dx`.
    pub mu: f64,
    /// Occupancy volume of the ball.
    pub volume: f64,
    pub measures: Vec<f64>,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct OptimalityReport {
    pub b0: Degree,
    pub reciprocals: Vec<f64>,
    pub rows: Vec<ProbeRow>,
    pub band: f64,
    pub slope: f64,
    pub band_ok: bool,
    pub trend_ok: bool,
    /// `|μ(B) − w(x0)|B|| / (w(x0)|B|)` at the smallest `δ`, when `w(x0)` is finite.
    pub density_gap: Option<f64>,
    pub density_ok: bool,
}

impl OptimalityReport {
    pub fn passes(&self) -> bool {
        self.band_ok && self.trend_ok && self.density_ok
    }
}

/// Ratios `μ(B)/∏|π_j(B)|^{1/p_j}` over shrinking balls `B = B(x0, δ)`.
#[allow(clippy::too_many_arguments)]
pub fn optimality_probe(
    sys: &System,
    b0: &Degree,
    x0: &[Rational],
    ball_tuple: &WordTuple,
    v0: &[Rational],
    weight: &Weight,
    deltas: &[f64],
    p: Option<&ExponentVector>,
    opts: &FamilyOptions,
    tol: &Tolerances,
) -> Result<OptimalityReport> {
    let report = newton_polytope_at(sys, x0, b0.norm1() + 2)?;
    if report.extreme(b0).is_none() {
        return Err(Error::NotExtreme(b0.to_string()));
    }
    let reciprocals: Vec<f64> = match p {
        Some(p) => reciprocals_of(p)?,
        None => q_map(&b0.to_rational())?.iter().map(to_f64).collect(),
    };
    if reciprocals.iter().sum::<f64>() <= 1.0 {
        return Err(Error::InvalidArgument("Σ 1/p_j ≤ 1: outside the L^p-improving regime".into()));
    }
    let w = CompiledWeight::new(sys, weight)?;
    let x0f: Vec<f64> = x0.iter().map(to_f64).collect();
    let mut rows = Vec::new();
    for (row, &delta) in deltas.iter().enumerate() {
        let ball = BallOptions { seed: row_seed(opts.ball.seed, row), ..opts.ball.clone() };
        let cloud = cc_ball(sys, x0, ball_tuple, v0, delta, &ball)?;
        let member = ball_member(sys, &cloud, opts, tol)?;
        let mu = cloud.integrate(|x| w.eval(x));
        let volume = ball_volume(&cloud, opts.image_resolution / 2)?;
        let denom: f64 = member.measures.iter().zip(&reciprocals).map(|(m, r)| m.powf(*r)).product();
        rows.push(ProbeRow { delta, mu, volume, measures: member.measures, ratio: mu / denom });
    }
    let ratios: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta, r.ratio)).collect();
    let slope = log_log_slope(&ratios).unwrap_or(0.0);
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.1), b.max(r.1)));
    let band = hi / lo;
    let w0 = w.eval(&x0f);
    let density_gap = (w0.is_finite() && w0 > 0.0)
        .then(|| {
            let last = rows.iter().min_by(|a, b| a.delta.total_cmp(&b.delta))?;
            Some((last.mu - w0 * last.volume).abs() / (w0 * last.volume))
        })
        .flatten();
    Ok(OptimalityReport {
        b0: b0.clone(),
        reciprocals,
        band_ok: band.is_finite() && band <= tol.band_factor,
        trend_ok: slope.abs() <= tol.trend_slope,
        density_ok: density_gap.is_none_or(|g| g <= tol.density_match),
        density_gap,
        band,
        slope,
        rows,
    })
}

/// Occupancy volume of a sampled ball.
pub fn ball_volume(cloud: &BallCloud, resolution: usize) -> Result<f64> {
    Ok(OccupancyGrid::from_points(&cloud.points, resolution)?.measure())
}

#[derive(Clone, Debug)]
pub struct VolumeScaling {
    pub rows: Vec<(f64, f64, f64)>,
    /// Fitted exponent of the occupancy volume in `δ`.
    pub slope: f64,
    pub expected: f64,
    pub within: bool,
}

/// Fits `log|B(x0, δ)|` against `log δ` and compares with `v0·deg I`.
pub fn volume_scaling(
    sys: &System,
    x0: &[Rational],
    tuple: &WordTuple,
    v0: &[Rational],
    deltas: &[f64],
    opts: &FamilyOptions,
    tol: &Tolerances,
) -> Result<VolumeScaling> {
    let mut rows = Vec::new();
    for (row, &delta) in deltas.iter().enumerate() {
        let ball = BallOptions { seed: row_seed(opts.ball.seed, row), ..opts.ball.clone() };
        let cloud = cc_ball(sys, x0, tuple, v0, delta, &ball)?;
        rows.push((delta, ball_volume(&cloud, opts.image_resolution / 2)?, cloud.jacobian_volume()));
    }
    let slope = log_log_slope(&rows.iter().map(|r| (r.0, r.1)).collect::<Vec<_>>())
        .ok_or_else(|| Error::InvalidArgument("need at least two radii".into()))?;
    let expected = to_f64(&crate::scalar::dot_int(v0, &tuple.degree(sys.k()).0));
    Ok(VolumeScaling { rows, slope, expected, within: (slope - expected).abs() <= tol.volume_slope * expected.abs() })
}

/// Whether a rational point is a zero of `λ_{I}`.
pub fn lambda_vanishes(sys: &System, tuple: &WordTuple, x: &[Rational]) -> Result<bool> {
    Ok(lambda_polynomial(sys, tuple)?.eval(x).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;
    use crate::systems::{loomis_whitney, parabola};
    use crate::words::Word;

    #[test]
    fn full_projections_give_box_volume() {
        let sys = loomis_whitney(3).unwrap();
        let tol = Tolerances::default();
        let sets: Vec<_> = (0..3).map(|_| OccupancyGrid::from_box(&[-1.0, -1.0], &[1.0, 1.0], 4).unwrap()).collect();
        let q = form_quadrature(&sys, &Weight::Unweighted, &sets, &Domain::cutoff(&sys), 8, &tol).unwrap();
        assert!((q.value - 8.0).abs() < 1e-9);
        assert!(q.converged);
    }

    #[test]
    fn disjoint_set_gives_zero() {
        let sys = loomis_whitney(3).unwrap();
        let tol = Tolerances::default();
        let mut sets: Vec<_> = (0..3).map(|_| OccupancyGrid::from_box(&[-1.0, -1.0], &[1.0, 1.0], 4).unwrap()).collect();
        sets[0] = OccupancyGrid::from_box(&[5.0, 5.0], &[6.0, 6.0], 4).unwrap();
        let q = form_quadrature(&sys, &Weight::Unweighted, &sets, &Domain::cutoff(&sys), 8, &tol).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [0.5, 0.25, 0.125].iter().map(|&d: &f64| (d, 3.0 * d.powf(-0.5))).collect();
        assert!((log_log_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn weights_evaluate() {
        let sys = parabola().unwrap();
        let i0 = WordTuple::new(vec![Word::letter(1), Word::letter(2), Word::from_letters(&[1, 2])]);
        let w = CompiledWeight::new(&sys, &Weight::Rho(i0.clone())).unwrap();
        assert!((w.eval(&[0.3, 0.1, 0.2]) - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
        let s = Weight::Singular { base: Box::new(Weight::Unweighted), center: vec![0.0; 3], exponent: -1.0 };
        let c = CompiledWeight::new(&sys, &s).unwrap();
        assert!((c.eval(&[0.0, 3.0, 4.0]) - 0.2).abs() < 1e-12);
        assert!(!lambda_vanishes(&sys, &i0, &[int(0), int(0), int(0)]).unwrap());
    }

    #[test]
    fn probe_refuses_hoelder_exponents() {
        let sys = parabola().unwrap();
        let i0 = WordTuple::new(vec![Word::letter(1), Word::letter(2), Word::from_letters(&[1, 2])]);
        let p = ExponentVector::finite(&[int(2), int(2)]).unwrap();
        let r = optimality_probe(
            &sys,
            &Degree(vec![2, 2]),
            &[int(0), int(0), int(0)],
            &i0,
            &[int(1), int(1)],
            &Weight::Unweighted,
            &[0.1],
            Some(&p),
            &FamilyOptions::default(),
            &Tolerances::default(),
        );
        assert!(r.is_err());
        let nonext = optimality_probe(
            &sys,
            &Degree(vec![3, 3]),
            &[int(0), int(0), int(0)],
            &i0,
            &[int(1), int(1)],
            &Weight::Unweighted,
            &[0.1],
            None,
            &FamilyOptions::default(),
            &Tolerances::default(),
        );
        assert!(matches!(nonext, Err(Error::NotExtreme(_))));
    }
}
