//! Fourier–Motzkin elimination on integer-normalized constraint rows.
//!
//! A row `[a_0, …, a_{n-1}, c]` means `Σ a_k x_k + c ≥ 0` (inequality) or
//! `= 0` (equality). All columns stand for integer unknowns, so inequality
//! rows are tightened: after dividing the linear part by its gcd the constant
//! is floored. That keeps every integer solution and drops some rational ones.

use std::collections::HashMap;

use crate::linalg::{primitive, sign_normalize, Row};
use crate::lp::{Cmp, LinearProgram};
use crate::scalar::{lcm, Scalar};

/// Above this many inequalities, elimination prunes redundant rows.
const PRUNE_THRESHOLD: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Trivial,
    Infeasible,
    Keep,
}

/// Integer-normalize an inequality row in place.
pub fn normalize_ineq<T: Scalar>(row: &mut [T]) -> RowKind {
    let n = row.len() - 1;
    let mut den = T::one();
    for v in row.iter() {
        den = lcm(&den, &v.denom_s());
    }
    if !den.is_one() {
        for v in row.iter_mut() {
            *v = v.clone() * den.clone();
        }
    }
    let mut g = T::zero();
    for v in &row[..n] {
        if !v.is_zero() {
            g = if g.is_zero() { v.abs() } else { g.gcd_s(v) };
        }
    }
    if g.is_zero() {
        return if row[n].is_negative() { RowKind::Infeasible } else { RowKind::Trivial };
    }
    if !g.is_one() {
        for v in row[..n].iter_mut() {
            *v = v.clone() / g.clone();
        }
        row[n] = (row[n].clone() / g).floor_s();
    }
    RowKind::Keep
}

/// Integer-normalize an equality row in place (first nonzero coefficient positive).
pub fn normalize_eq<T: Scalar>(row: &mut [T]) -> RowKind {
    let n = row.len() - 1;
    if row[..n].iter().all(|v| v.is_zero()) {
        return if row[n].is_zero() { RowKind::Trivial } else { RowKind::Infeasible };
    }
    primitive(row);
    // Primitive over the whole row; integrality needs gcd of the linear part to divide c.
    let mut g = T::zero();
    for v in &row[..n] {
        if !v.is_zero() {
            g = if g.is_zero() { v.abs() } else { g.gcd_s(v) };
        }
    }
    if !(row[n].clone() / g).is_integral() {
        return RowKind::Infeasible;
    }
    sign_normalize(row);
    RowKind::Keep
}

/// A conjunction of rows over `ncols` integer columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System<T: Scalar> {
    pub ncols: usize,
    pub ineqs: Vec<Row<T>>,
    pub eqs: Vec<Row<T>>,
    pub infeasible: bool,
}

impl<T: Scalar> System<T> {
    pub fn new(ncols: usize, ineqs: Vec<Row<T>>, eqs: Vec<Row<T>>) -> Self {
        let mut s = System { ncols, ineqs, eqs, infeasible: false };
        s.simplify();
        s
    }

    pub fn infeasible(ncols: usize) -> Self {
        let mut row = vec![T::zero(); ncols + 1];
        row[ncols] = -T::one();
        System { ncols, ineqs: vec![row], eqs: Vec::new(), infeasible: true }
    }

    /// Normalize rows, drop duplicates and trivial rows, keep the tightest
    /// constant per linear part, and turn opposite pairs into equalities.
    /// Row order of first occurrence is preserved.
    pub fn simplify(&mut self) {
        if self.infeasible {
            *self = Self::infeasible(self.ncols);
            return;
        }
        let n = self.ncols;
        let mut eqs: Vec<Row<T>> = Vec::new();
        let mut seen_eq: HashMap<Row<T>, ()> = HashMap::new();
        for mut row in std::mem::take(&mut self.eqs) {
            match normalize_eq(&mut row) {
                RowKind::Trivial => {}
                RowKind::Infeasible => {
                    *self = Self::infeasible(n);
                    return;
                }
                RowKind::Keep => {
                    if seen_eq.insert(row.clone(), ()).is_none() {
                        eqs.push(row);
                    }
                }
            }
        }
        let mut ineqs: Vec<Row<T>> = Vec::new();
        let mut by_lin: HashMap<Row<T>, usize> = HashMap::new();
        for mut row in std::mem::take(&mut self.ineqs) {
            match normalize_ineq(&mut row) {
                RowKind::Trivial => {}
                RowKind::Infeasible => {
                    *self = Self::infeasible(n);
                    return;
                }
                RowKind::Keep => {
                    let lin = row[..n].to_vec();
                    match by_lin.get(&lin) {
                        Some(&k) => {
                            if row[n] < ineqs[k][n] {
                                ineqs[k][n] = row[n].clone();
                            }
                        }
                        None => {
                            by_lin.insert(lin, ineqs.len());
                            ineqs.push(row);
                        }
                    }
                }
            }
        }
        // Opposite pairs: a + c1 >= 0 and -a + c2 >= 0.
        let mut drop = vec![false; ineqs.len()];
        for k in 0..ineqs.len() {
            if drop[k] {
                continue;
            }
            let neg: Row<T> = ineqs[k][..n].iter().map(|v| -v.clone()).collect();
            if let Some(&j) = by_lin.get(&neg) {
                if drop[j] || j == k {
                    continue;
                }
                let sum = ineqs[k][n].clone() + ineqs[j][n].clone();
                if sum.is_negative() {
                    *self = Self::infeasible(n);
                    return;
                }
                if sum.is_zero() {
                    let mut e = ineqs[k].clone();
                    if normalize_eq(&mut e) == RowKind::Keep && seen_eq.insert(e.clone(), ()).is_none() {
                        eqs.push(e);
                    }
                    drop[k] = true;
                    drop[j] = true;
                }
            }
        }
        let ineqs = ineqs
            .into_iter()
            .zip(drop)
            .filter_map(|(r, d)| if d { None } else { Some(r) })
            .collect();
        self.ineqs = ineqs;
        self.eqs = eqs;
    }

    /// Substitute column `col` away using an equality if one mentions it,
    /// else combine positive and negative bounds pairwise.
    pub fn eliminate(&mut self, col: usize) {
        if self.infeasible {
            return;
        }
        let n = self.ncols;
        if let Some(k) = self.pick_equality(col) {
            let e = self.eqs.remove(k);
            let ec = e[col].clone();
            let apply = |row: &mut Row<T>| {
                if row[col].is_zero() {
                    return;
                }
                let f = row[col].clone() / ec.clone();
                for j in 0..=n {
                    row[j] = row[j].clone() - f.clone() * e[j].clone();
                }
            };
            for row in self.eqs.iter_mut() {
                apply(row);
            }
            for row in self.ineqs.iter_mut() {
                apply(row);
            }
            self.simplify();
            return;
        }
        let mut pos = Vec::new();
        let mut negs = Vec::new();
        let mut out = Vec::new();
        for row in std::mem::take(&mut self.ineqs) {
            if row[col].is_positive() {
                pos.push(row);
            } else if row[col].is_negative() {
                negs.push(row);
            } else {
                out.push(row);
            }
        }
        for p in &pos {
            for q in &negs {
                let a = p[col].clone();
                let b = -q[col].clone();
                let row: Row<T> = (0..=n).map(|j| p[j].clone() * b.clone() + q[j].clone() * a.clone()).collect();
                out.push(row);
            }
        }
        self.ineqs = out;
        self.simplify();
        if self.ineqs.len() > PRUNE_THRESHOLD {
            self.prune_redundant();
        }
    }

    fn pick_equality(&self, col: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (k, e) in self.eqs.iter().enumerate() {
            if e[col].is_zero() {
                continue;
            }
            if e[col].abs().is_one() {
                return Some(k);
            }
            best.get_or_insert(k);
        }
        best
    }

    /// Drop inequalities implied by the rest (LP test on the integer negation).
    pub fn prune_redundant(&mut self) {
        let n = self.ncols;
        let mut k = 0;
        while k < self.ineqs.len() {
            let mut lp = LinearProgram::new(n);
            for j in 0..n {
                lp.set_free(j);
            }
            for (i, row) in self.ineqs.iter().enumerate() {
                if i != k {
                    lp.add_dense(&row[..n], Cmp::Ge, -row[n].clone());
                }
            }
            for row in &self.eqs {
                lp.add_dense(&row[..n], Cmp::Eq, -row[n].clone());
            }
            // row_k(x) <= -1
            let row = &self.ineqs[k];
            lp.add_dense(&row[..n], Cmp::Le, -row[n].clone() - T::one());
            if lp.feasible_point().is_none() {
                self.ineqs.remove(k);
            } else {
                k += 1;
            }
        }
    }

    /// Eliminate every column in `cols`, preferring equality substitution
    /// and then the column with the fewest generated rows.
    pub fn eliminate_all(&mut self, cols: &[usize]) {
        let mut todo: Vec<usize> = cols.to_vec();
        while !todo.is_empty() && !self.infeasible {
            let pick = todo
                .iter()
                .enumerate()
                .min_by_key(|(_, &c)| {
                    if self.eqs.iter().any(|e| !e[c].is_zero()) {
                        return 0usize;
                    }
                    let p = self.ineqs.iter().filter(|r| r[c].is_positive()).count();
                    let q = self.ineqs.iter().filter(|r| r[c].is_negative()).count();
                    1 + p * q
                })
                .map(|(i, _)| i)
                .unwrap();
            let c = todo.remove(pick);
            self.eliminate(c);
        }
    }

    /// True when no (integer-tightened) rational point exists.
    pub fn is_empty(&self) -> bool {
        if self.infeasible {
            return true;
        }
        let mut s = self.clone();
        let all: Vec<usize> = (0..s.ncols).collect();
        s.eliminate_all(&all);
        s.infeasible
    }

    /// Remove columns from the row layout (they must be zero in every row).
    pub fn drop_columns(&self, cols: &[usize]) -> System<T> {
        let keep: Vec<usize> = (0..=self.ncols).filter(|c| !cols.contains(c)).collect();
        let pick = |r: &Row<T>| keep.iter().map(|&c| r[c].clone()).collect::<Row<T>>();
        if self.infeasible {
            return Self::infeasible(self.ncols - cols.len());
        }
        System {
            ncols: self.ncols - cols.len(),
            ineqs: self.ineqs.iter().map(pick).collect(),
            eqs: self.eqs.iter().map(pick).collect(),
            infeasible: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    fn row(v: &[i64]) -> Row<Rat> {
        v.iter().map(|&x| Rat::from_integer(x.into())).collect()
    }

    #[test]
    fn tightening_floors_constant() {
        let mut r = row(&[2, 0, 3]);
        assert_eq!(normalize_ineq(&mut r), RowKind::Keep);
        assert_eq!(r, row(&[1, 0, 1]));
    }

    #[test]
    fn opposite_pair_becomes_equality() {
        let s = System::new(2, vec![row(&[1, -1, 0]), row(&[-1, 1, 0])], vec![]);
        assert!(s.ineqs.is_empty());
        assert_eq!(s.eqs, vec![row(&[1, -1, 0])]);
    }

    #[test]
    fn triangle_projection() {
        // 1 <= i <= N-1, 0 <= j <= i-1 over columns [i, j, N]
        let mut s = System::new(
            3,
            vec![row(&[1, 0, 0, -1]), row(&[-1, 0, 1, -1]), row(&[0, 1, 0, 0]), row(&[1, -1, 0, -1])],
            vec![],
        );
        s.eliminate(1);
        let mut expected = System::new(3, vec![row(&[1, 0, 0, -1]), row(&[-1, 0, 1, -1])], vec![]);
        expected.simplify();
        assert_eq!(s.ineqs, expected.ineqs);
    }

    #[test]
    fn emptiness_integer_gap() {
        // 2x = 1 has no integer solution.
        let s = System::new(1, vec![], vec![row(&[2, -1])]);
        assert!(s.is_empty());
        let s = System::new(1, vec![row(&[1, 0]), row(&[-1, 3])], vec![]);
        assert!(!s.is_empty());
    }
}
