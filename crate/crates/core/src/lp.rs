//! Exact two-phase primal simplex over any [`Scalar`].
//!
//! Dense tableau, but pivots skip zero entries, which keeps the sparse
//! Farkas systems built by the scheduler cheap. Dantzig pricing switches to
//! Bland's rule after a run of degenerate pivots so the method terminates.

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpResult<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LinearProgram<T: Scalar> {
    n: usize,
    free: Vec<bool>,
    rows: Vec<(Vec<(usize, T)>, Cmp, T)>,
}

impl<T: Scalar> LinearProgram<T> {
    /// `n` variables, all non-negative until marked free.
    pub fn new(n: usize) -> Self {
        LinearProgram { n, free: vec![false; n], rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn set_free(&mut self, k: usize) {
        self.free[k] = true;
    }

    pub fn add_var(&mut self, free: bool) -> usize {
        self.n += 1;
        self.free.push(free);
        self.n - 1
    }

    /// Add `Σ coeff·x cmp rhs`; zero coefficients are dropped.
    pub fn add_sparse(&mut self, terms: Vec<(usize, T)>, cmp: Cmp, rhs: T) {
        let terms: Vec<(usize, T)> = terms.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        debug_assert!(terms.iter().all(|(k, _)| *k < self.n));
        self.rows.push((terms, cmp, rhs));
    }

    pub fn add_dense(&mut self, coeffs: &[T], cmp: Cmp, rhs: T) {
        let terms = coeffs.iter().cloned().enumerate().collect();
        self.add_sparse(terms, cmp, rhs);
    }

    pub fn feasible_point(&self) -> Option<Vec<T>> {
        match self.minimize(&vec![T::zero(); self.n]) {
            LpResult::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }

    pub fn minimize(&self, objective: &[T]) -> LpResult<T> {
        Tableau::build(self).solve(self, objective)
    }

    pub fn maximize(&self, objective: &[T]) -> LpResult<T> {
        let neg: Vec<T> = objective.iter().map(|v| -v.clone()).collect();
        match self.minimize(&neg) {
            LpResult::Optimal { x, value } => LpResult::Optimal { x, value: -value },
            other => other,
        }
    }
}

struct Tableau<T: Scalar> {
    /// m rows, each `ncols + 1` wide (last entry is the right-hand side).
    a: Vec<Vec<T>>,
    basis: Vec<usize>,
    ncols: usize,
    /// Column of the positive (and negative, for free vars) part of each variable.
    pos: Vec<usize>,
    neg: Vec<Option<usize>>,
    first_artificial: usize,
}

impl<T: Scalar> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let mut pos = Vec::with_capacity(lp.n);
        let mut neg = Vec::with_capacity(lp.n);
        let mut col = 0;
        for k in 0..lp.n {
            pos.push(col);
            col += 1;
            if lp.free[k] {
                neg.push(Some(col));
                col += 1;
            } else {
                neg.push(None);
            }
        }
        let slack_base = col;
        let n_slack = lp.rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let first_artificial = slack_base + n_slack;
        let m = lp.rows.len();

        // Decide per row whether its slack can start in the basis.
        let mut dense_rows = Vec::with_capacity(m);
        let mut s = slack_base;
        for (terms, cmp, rhs) in &lp.rows {
            let mut row: Vec<(usize, T)> = Vec::new();
            for (k, v) in terms {
                row.push((pos[*k], v.clone()));
                if let Some(nc) = neg[*k] {
                    row.push((nc, -v.clone()));
                }
            }
            let slack = match cmp {
                Cmp::Le => Some((s, T::one())),
                Cmp::Ge => Some((s, -T::one())),
                Cmp::Eq => None,
            };
            if slack.is_some() {
                s += 1;
            }
            dense_rows.push((row, slack, rhs.clone()));
        }
        let n_art = dense_rows
            .iter()
            .filter(|(_, slack, rhs)| {
                let flip = rhs.is_negative();
                match slack {
                    Some((_, c)) => (c.is_positive()) == flip,
                    None => true,
                }
            })
            .count();
        let ncols = first_artificial + n_art;
        let mut a = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut art = first_artificial;
        for (row, slack, rhs) in dense_rows {
            let mut dense = vec![T::zero(); ncols + 1];
            for (c, v) in row {
                dense[c] = dense[c].clone() + v;
            }
            if let Some((c, v)) = &slack {
                dense[*c] = v.clone();
            }
            dense[ncols] = rhs;
            if dense[ncols].is_negative() {
                for v in dense.iter_mut() {
                    *v = -v.clone();
                }
            }
            match slack {
                Some((c, _)) if dense[c].is_positive() => basis.push(c),
                _ => {
                    dense[art] = T::one();
                    basis.push(art);
                    art += 1;
                }
            }
            a.push(dense);
        }
        Tableau { a, basis, ncols, pos, neg, first_artificial }
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [T]) {
        let inv = T::one() / self.a[r][c].clone();
        if !inv.is_one() {
            for v in self.a[r].iter_mut() {
                if !v.is_zero() {
                    *v = v.clone() * inv.clone();
                }
            }
        }
        let nz: Vec<usize> = (0..=self.ncols).filter(|&j| !self.a[r][j].is_zero()).collect();
        let prow: Vec<T> = nz.iter().map(|&j| self.a[r][j].clone()).collect();
        for k in 0..self.a.len() {
            if k == r || self.a[k][c].is_zero() {
                continue;
            }
            let f = self.a[k][c].clone();
            for (idx, &j) in nz.iter().enumerate() {
                let d = f.clone() * prow[idx].clone();
                self.a[k][j] = self.a[k][j].clone() - d;
            }
        }
        if !obj[c].is_zero() {
            let f = obj[c].clone();
            for (idx, &j) in nz.iter().enumerate() {
                let d = f.clone() * prow[idx].clone();
                obj[j] = obj[j].clone() - d;
            }
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for `cost`, with the negated objective value in the last slot.
    fn objective_row(&self, cost: &[T]) -> Vec<T> {
        let mut obj = cost.to_vec();
        obj.resize(self.ncols + 1, T::zero());
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost.get(b).cloned().unwrap_or_else(T::zero);
            if cb.is_zero() {
                continue;
            }
            for j in 0..=self.ncols {
                if !self.a[r][j].is_zero() {
                    obj[j] = obj[j].clone() - cb.clone() * self.a[r][j].clone();
                }
            }
        }
        obj
    }

    /// Returns false when unbounded.
    fn run(&mut self, obj: &mut [T], allowed: usize) -> bool {
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run > 20;
            let entering = if bland {
                (0..allowed).find(|&j| obj[j].is_negative())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..allowed {
                    if obj[j].is_negative() && best.map_or(true, |b| obj[j] < obj[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.a.len() {
                let arc = &self.a[r][c];
                if !arc.is_positive() {
                    continue;
                }
                let ratio = self.a[r][self.ncols].clone() / arc.clone();
                let better = match &leave {
                    None => true,
                    Some((lr, lv)) => {
                        ratio < *lv || (ratio == *lv && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, ratio)) = leave else { return false };
            if ratio.is_zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c, obj);
        }
    }

    fn solve(mut self, lp: &LinearProgram<T>, objective: &[T]) -> LpResult<T> {
        if self.ncols > self.first_artificial {
            let mut cost = vec![T::zero(); self.ncols];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = T::one();
            }
            let mut obj = self.objective_row(&cost);
            self.run(&mut obj, self.ncols);
            if !obj[self.ncols].is_zero() {
                return LpResult::Infeasible;
            }
            // Drive remaining artificials out of the basis or drop redundant rows.
            let mut r = 0;
            while r < self.a.len() {
                if self.basis[r] >= self.first_artificial {
                    match (0..self.first_artificial).find(|&j| !self.a[r][j].is_zero()) {
                        Some(j) => {
                            let mut dummy = vec![T::zero(); self.ncols + 1];
                            self.pivot(r, j, &mut dummy);
                        }
                        None => {
                            self.a.remove(r);
                            self.basis.remove(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }
        let mut cost = vec![T::zero(); self.ncols];
        for (k, v) in objective.iter().enumerate() {
            cost[self.pos[k]] = v.clone();
            if let Some(nc) = self.neg[k] {
                cost[nc] = -v.clone();
            }
        }
        let mut obj = self.objective_row(&cost);
        if !self.run(&mut obj, self.first_artificial) {
            return LpResult::Unbounded;
        }
        let mut col_val = vec![T::zero(); self.ncols];
        for (r, &b) in self.basis.iter().enumerate() {
            col_val[b] = self.a[r][self.ncols].clone();
        }
        let x: Vec<T> = (0..lp.n)
            .map(|k| {
                let p = col_val[self.pos[k]].clone();
                match self.neg[k] {
                    Some(nc) => p - col_val[nc].clone(),
                    None => p,
                }
            })
            .collect();
        let value = x
            .iter()
            .zip(objective)
            .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone());
        LpResult::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    fn r(v: i64) -> Rat {
        Rat::from_integer(v.into())
    }

    #[test]
    fn small_max_problem() {
        // max x + y st x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::new(2);
        lp.add_dense(&[r(1), r(2)], Cmp::Le, r(4));
        lp.add_dense(&[r(3), r(1)], Cmp::Le, r(6));
        match lp.maximize(&[r(1), r(1)]) {
            LpResult::Optimal { x, value } => {
                assert_eq!(value, Rat::new(14.into(), 5.into()));
                assert_eq!(x, vec![Rat::new(8.into(), 5.into()), Rat::new(6.into(), 5.into())]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_dense(&[r(1)], Cmp::Ge, r(3));
        lp.add_dense(&[r(1)], Cmp::Le, r(2));
        assert_eq!(lp.minimize(&[r(1)]), LpResult::Infeasible);

        let mut lp = LinearProgram::new(1);
        lp.set_free(0);
        lp.add_dense(&[r(1)], Cmp::Le, r(2));
        assert_eq!(lp.minimize(&[r(1)]), LpResult::Unbounded);
    }

    #[test]
    fn free_variable_equality() {
        let mut lp = LinearProgram::new(2);
        lp.set_free(0);
        lp.add_dense(&[r(1), r(1)], Cmp::Eq, r(-3));
        lp.add_dense(&[r(0), r(1)], Cmp::Le, r(1));
        match lp.minimize(&[r(0), r(1)]) {
            LpResult::Optimal { x, .. } => assert_eq!(x, vec![r(-3), r(0)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn generic_over_machine_ratios() {
        use num_rational::Ratio;
        let mut lp: LinearProgram<Ratio<i64>> = LinearProgram::new(1);
        lp.add_dense(&[Ratio::from_integer(2)], Cmp::Ge, Ratio::from_integer(3));
        match lp.minimize(&[Ratio::from_integer(1)]) {
            LpResult::Optimal { value, .. } => assert_eq!(value, Ratio::new(3, 2)),
            other => panic!("{other:?}"),
        }
    }
}
