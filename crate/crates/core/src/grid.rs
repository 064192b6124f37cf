//! Axis-aligned occupancy grids: sets represented by the cells their sample
//! points touch.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    lo: Vec<f64>,
    cell: Vec<f64>,
    dims: Vec<usize>,
    bits: Vec<bool>,
}

impl OccupancyGrid {
    /// Empty grid of `dims` cells of size `cell` anchored at `lo`.
    pub fn empty(lo: Vec<f64>, cell: Vec<f64>, dims: Vec<usize>) -> Result<Self> {
        if lo.len() != cell.len() || lo.len() != dims.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: cell.len().min(dims.len()) });
        }
        if cell.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument("cell sizes must be positive".into()));
        }
        let n = dims.iter().product();
        Ok(Self { lo, cell, dims, bits: vec![false; n] })
    }

    /// The cells touched by `points`, with `resolution` cells per axis over
    /// the extent of the points.
    pub fn from_points(points: &[Vec<f64>], resolution: usize) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::InvalidArgument("empty point cloud".into()))?;
        if resolution == 0 {
            return Err(Error::InvalidArgument("resolution must be positive".into()));
        }
        let d = first.len();
        let (lo, hi) = crate::numeric::bounds_of(points);
        let cell: Vec<f64> = (0..d).map(|i| (hi[i] - lo[i]) / resolution as f64).collect();
        if let Some(i) = cell.iter().position(|c| !(*c > 0.0)) {
            return Err(Error::Numerical(format!("degenerate image: no extent along axis {}", i + 1)));
        }
        let mut g = Self::empty(lo, cell, vec![resolution; d])?;
        for p in points {
            g.insert(p);
        }
        Ok(g)
    }

    /// A full box `[lo, hi]` split into `resolution` cells per axis.
    pub fn from_box(lo: &[f64], hi: &[f64], resolution: usize) -> Result<Self> {
        let cell: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / resolution as f64).collect();
        let mut g = Self::empty(lo.to_vec(), cell, vec![resolution; lo.len()])?;
        g.bits.iter_mut().for_each(|b| *b = true);
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn cell_sizes(&self) -> &[f64] {
        &self.cell
    }

    fn index(&self, p: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for i in 0..self.dim() {
            let c = ((p[i] - self.lo[i]) / self.cell[i]).floor();
            // the top edge belongs to the last cell
            let c = if c as usize == self.dims[i] && p[i] <= self.lo[i] + self.cell[i] * self.dims[i] as f64 {
                c - 1.0
            } else {
                c
            };
            if !(c >= 0.0) || c as usize >= self.dims[i] {
                return None;
            }
            idx = idx * self.dims[i] + c as usize;
        }
        Some(idx)
    }

    /// Marks the cell containing `p`; points outside the grid are ignored.
    pub fn insert(&mut self, p: &[f64]) -> bool {
        match self.index(p) {
            Some(i) => {
                self.bits[i] = true;
                true
            }
            None => false,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.index(p).is_some_and(|i| self.bits[i])
    }

    pub fn occupied(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn measure(&self) -> f64 {
        self.occupied() as f64 * self.cell.iter().product::<f64>()
    }

    /// Bounds of the full lattice.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let hi = (0..self.dim()).map(|i| self.lo[i] + self.cell[i] * self.dims[i] as f64).collect();
        (self.lo.clone(), hi)
    }

    /// Adds every cell within `r` cells (sup-norm) of an occupied one,
    /// enlarging the lattice by `r` on each side.
    pub fn dilate(&self, r: usize) -> Self {
        let d = self.dim();
        let lo: Vec<f64> = (0..d).map(|i| self.lo[i] - r as f64 * self.cell[i]).collect();
        let dims: Vec<usize> = self.dims.iter().map(|n| n + 2 * r).collect();
        let mut out = Self::empty(lo, self.cell.clone(), dims).expect("valid lattice");
        let offsets = neighbourhood(d, r);
        for (flat, &b) in self.bits.iter().enumerate() {
            if !b {
                continue;
            }
            let c = unflatten(flat, &self.dims);
            for o in &offsets {
                let idx: Vec<usize> = c.iter().zip(o).map(|(a, b)| (*a as i64 + r as i64 + b) as usize).collect();
                let f = flatten(&idx, &out.dims);
                out.bits[f] = true;
            }
        }
        out
    }
}

fn neighbourhood(d: usize, r: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-(r as i64)..=r as i64).map(move |o| {
                    let mut w = v.clone();
                    w.push(o);
                    w
                })
            })
            .collect();
    }
    out
}

fn unflatten(mut f: usize, dims: &[usize]) -> Vec<usize> {
    let mut c = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        c[i] = f % dims[i];
        f /= dims[i];
    }
    c
}

fn flatten(c: &[usize], dims: &[usize]) -> usize {
    c.iter().zip(dims).fold(0, |acc, (a, n)| acc * n + a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_measure_is_exact() {
        let g = OccupancyGrid::from_box(&[0.0, 1.0], &[2.0, 1.5], 10).unwrap();
        assert!((g.measure() - 1.0).abs() < 1e-12);
        assert!(g.contains(&[2.0, 1.5]));
        assert!(!g.contains(&[2.1, 1.2]));
    }

    #[test]
    fn points_fill_cells() {
        let pts: Vec<Vec<f64>> = (0..=100).map(|i| vec![i as f64 / 100.0, (i % 2) as f64]).collect();
        let g = OccupancyGrid::from_points(&pts, 4).unwrap();
        assert!(pts.iter().all(|p| g.contains(p)));
        assert_eq!(g.occupied(), 8);
        assert!(OccupancyGrid::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0]], 4).is_err());
    }

    #[test]
    fn dilation_grows() {
        let g = OccupancyGrid::from_points(&[vec![0.0, 0.0], vec![1.0, 1.0]], 4).unwrap();
        let h = g.dilate(1);
        assert_eq!(h.occupied(), 18);
        assert!(h.measure() > g.measure());
        assert!(h.contains(&[-0.2, -0.2]));
    }
}
