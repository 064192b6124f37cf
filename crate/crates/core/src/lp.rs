//! Dense two-phase simplex with Bland's rule, exact over any ordered field.
//!
//! Problems are tiny (tens of variables), so a full tableau is fine.

use crate::scalar::OrderedField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint<S> {
    pub coeffs: Vec<S>,
    pub rel: Relation,
    pub rhs: S,
}

/// `maximize objective·x` subject to `constraints` and `x ≥ 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram<S> {
    pub nvars: usize,
    pub objective: Vec<S>,
    pub constraints: Vec<Constraint<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, value: S },
    Infeasible,
    Unbounded,
}

impl<S: OrderedField> LpOutcome<S> {
    pub fn optimal(self) -> Option<(Vec<S>, S)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

impl<S: OrderedField> LinearProgram<S> {
    pub fn new(nvars: usize) -> Self {
        Self { nvars, objective: vec![S::zero(); nvars], constraints: Vec::new() }
    }

    pub fn constrain(&mut self, coeffs: Vec<S>, rel: Relation, rhs: S) {
        assert_eq!(coeffs.len(), self.nvars, "constraint width");
        self.constraints.push(Constraint { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> LpOutcome<S> {
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    nvars: usize,
    // columns at or beyond this index are artificial
    first_artificial: usize,
}

impl<S: OrderedField> Tableau<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let m = lp.constraints.len();
        let n = lp.nvars;
        let zero = S::zero();
        let mut norm: Vec<(Vec<S>, Relation, S)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < zero {
                    let flip = match c.rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|a| -a.clone()).collect(), flip, -c.rhs.clone())
                } else {
                    (c.coeffs.clone(), c.rel, c.rhs.clone())
                }
            })
            .collect();
        let n_slack = norm.iter().filter(|c| c.1 != Relation::Eq).count();
        let n_art = norm.iter().filter(|c| c.1 != Relation::Le).count();
        let width = n + n_slack + n_art;
        let first_artificial = n + n_slack;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut s_idx, mut a_idx) = (n, first_artificial);
        for (coeffs, rel, b) in norm.drain(..) {
            let mut row = coeffs;
            row.resize(width, S::zero());
            match rel {
                Relation::Le => {
                    row[s_idx] = S::one();
                    basis.push(s_idx);
                    s_idx += 1;
                }
                Relation::Ge => {
                    row[s_idx] = -S::one();
                    s_idx += 1;
                    row[a_idx] = S::one();
                    basis.push(a_idx);
                    a_idx += 1;
                }
                Relation::Eq => {
                    row[a_idx] = S::one();
                    basis.push(a_idx);
                    a_idx += 1;
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        Self { rows, rhs, basis, nvars: n, first_artificial }
    }

    fn width(&self) -> usize {
        self.rows.first().map_or(self.first_artificial, Vec::len)
    }

    /// Reduced costs of a maximization objective given per column.
    fn reduced_costs(&self, cost: &[S], allowed: usize) -> Vec<S> {
        let mut red: Vec<S> = cost[..allowed].to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (j, v) in red.iter_mut().enumerate() {
                let a = &self.rows[r][j];
                if !a.is_zero() {
                    *v = v.clone() - cb.clone() * a.clone();
                }
            }
        }
        red
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        self.rhs[r] = self.rhs[r].clone() / p;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero() {
                continue;
            }
            for (v, pv) in self.rows[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            self.rhs[i] = self.rhs[i].clone() - f * prhs.clone();
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost` over columns `< allowed`. Returns false if unbounded.
    fn optimize(&mut self, cost: &[S], allowed: usize) -> bool {
        loop {
            let red = self.reduced_costs(cost, allowed);
            let Some(c) = red.iter().position(|v| *v > S::zero()) else {
                return true;
            };
            let mut best: Option<(usize, S)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if *a > S::zero() {
                    let ratio = self.rhs[r].clone() / a.clone();
                    let better = match &best {
                        None => true,
                        Some((br, bv)) => ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br]),
                    };
                    if better {
                        best = Some((r, ratio));
                    }
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    fn run(mut self, objective: &[S]) -> LpOutcome<S> {
        let width = self.width();
        if self.first_artificial < width {
            let mut phase1 = vec![S::zero(); width];
            for v in phase1.iter_mut().skip(self.first_artificial) {
                *v = -S::one();
            }
            self.optimize(&phase1, width);
            let infeasible = self
                .basis
                .iter()
                .zip(&self.rhs)
                .any(|(&b, v)| b >= self.first_artificial && !v.is_zero());
            if infeasible {
                return LpOutcome::Infeasible;
            }
            // drive zero-level artificials out, dropping redundant rows
            let mut r = 0;
            while r < self.rows.len() {
                if self.basis[r] >= self.first_artificial {
                    match (0..self.first_artificial).find(|&j| !self.rows[r][j].is_zero()) {
                        Some(j) => {
                            self.pivot(r, j);
                            r += 1;
                        }
                        None => {
                            self.rows.remove(r);
                            self.rhs.remove(r);
                            self.basis.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
        }
        let mut cost = vec![S::zero(); width];
        cost[..self.nvars].clone_from_slice(objective);
        if !self.optimize(&cost, self.first_artificial) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![S::zero(); self.nvars];
        for (&b, v) in self.basis.iter().zip(&self.rhs) {
            if b < self.nvars {
                x[b] = v.clone();
            }
        }
        let value = x.iter().zip(objective).fold(S::zero(), |acc, (a, c)| acc + a.clone() * c.clone());
        LpOutcome::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rational};

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::<Rational>::new(2);
        lp.objective = vec![int(3), int(5)];
        lp.constrain(vec![int(1), int(0)], Relation::Le, int(4));
        lp.constrain(vec![int(0), int(2)], Relation::Le, int(12));
        lp.constrain(vec![int(3), int(2)], Relation::Le, int(18));
        let (x, v) = lp.solve().optimal().unwrap();
        assert_eq!(x, vec![int(2), int(6)]);
        assert_eq!(v, int(36));
    }

    #[test]
    fn equality_and_infeasibility() {
        let mut lp = LinearProgram::<Rational>::new(2);
        lp.constrain(vec![int(1), int(1)], Relation::Eq, int(1));
        lp.constrain(vec![int(2), int(0)], Relation::Le, rat(9, 10));
        lp.constrain(vec![int(0), int(2)], Relation::Le, rat(9, 10));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_and_negative_rhs() {
        let mut lp = LinearProgram::<Rational>::new(2);
        lp.objective = vec![int(1), int(0)];
        lp.constrain(vec![int(-1), int(1)], Relation::Le, int(-1));
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::<Rational>::new(2);
        lp.objective = vec![int(-1), int(-1)];
        lp.constrain(vec![int(1), int(1)], Relation::Eq, int(2));
        lp.constrain(vec![int(2), int(2)], Relation::Eq, int(4));
        lp.constrain(vec![int(1), int(0)], Relation::Ge, rat(1, 2));
        let (x, v) = lp.solve().optimal().unwrap();
        assert_eq!(v, int(-2));
        assert!(x[0] >= rat(1, 2));
    }

    #[test]
    fn works_in_floating_point() {
        let mut lp = LinearProgram::<f64>::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.constrain(vec![1.0, 2.0], Relation::Le, 4.0);
        lp.constrain(vec![3.0, 1.0], Relation::Le, 6.0);
        let (_, v) = lp.solve().optimal().unwrap();
        assert!((v - 2.8).abs() < 1e-12);
    }
}
