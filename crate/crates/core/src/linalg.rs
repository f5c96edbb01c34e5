//! Dense exact linear algebra over any [`Scalar`].

use crate::scalar::{lcm, Scalar};

pub type Row<T> = Vec<T>;

/// Scale a row so every entry is an integer with overall gcd 1.
/// The sign is preserved. A zero row is left alone.
pub fn primitive<T: Scalar>(row: &mut [T]) {
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
    for v in row.iter() {
        if !v.is_zero() {
            g = if g.is_zero() { v.abs() } else { g.gcd_s(v) };
        }
    }
    if !g.is_zero() && !g.is_one() {
        for v in row.iter_mut() {
            *v = v.clone() / g.clone();
        }
    }
}

/// Make the first nonzero entry positive.
pub fn sign_normalize<T: Scalar>(row: &mut [T]) {
    if let Some(first) = row.iter().find(|v| !v.is_zero()) {
        if first.is_negative() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
    }
}

/// Reduced row echelon form restricted to the first `ncols` columns as pivots.
/// Returns the nonzero rows and their pivot columns.
pub fn rref<T: Scalar>(rows: &[Row<T>], ncols: usize) -> (Vec<Row<T>>, Vec<usize>) {
    let mut m: Vec<Row<T>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&k| !m[k][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = T::one() / m[r][c].clone();
        for v in m[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        for k in 0..m.len() {
            if k != r && !m[k][c].is_zero() {
                let f = m[k][c].clone();
                for j in 0..m[k].len() {
                    let d = f.clone() * m[r][j].clone();
                    m[k][j] = m[k][j].clone() - d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

pub fn rank<T: Scalar>(rows: &[Row<T>], ncols: usize) -> usize {
    rref(rows, ncols).1.len()
}

/// Basis of `{v : rows · v = 0}` in dimension `n`, as primitive integer vectors.
pub fn nullspace<T: Scalar>(rows: &[Row<T>], n: usize) -> Vec<Row<T>> {
    let trimmed: Vec<Row<T>> = rows.iter().map(|r| r[..n].to_vec()).collect();
    let (m, pivots) = rref(&trimmed, n);
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![T::zero(); n];
        v[free] = T::one();
        for (row, &pc) in m.iter().zip(&pivots) {
            v[pc] = -row[free].clone();
        }
        primitive(&mut v);
        basis.push(v);
    }
    basis
}

/// A linear subspace of `T^dim`, stored as an RREF basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSpace<T: Scalar> {
    pub dim: usize,
    basis: Vec<Row<T>>,
}

impl<T: Scalar> LinearSpace<T> {
    pub fn zero(dim: usize) -> Self {
        LinearSpace { dim, basis: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|k| (0..dim).map(|j| if j == k { T::one() } else { T::zero() }).collect())
            .collect();
        LinearSpace { dim, basis }
    }

    pub fn span(dim: usize, vectors: &[Row<T>]) -> Self {
        let (m, _) = rref(vectors, dim);
        LinearSpace { dim, basis: m }
    }

    /// Solutions of `rows · v = 0`.
    pub fn kernel(dim: usize, rows: &[Row<T>]) -> Self {
        Self::span(dim, &nullspace(rows, dim))
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    /// RREF basis (canonical for the subspace).
    pub fn basis(&self) -> &[Row<T>] {
        &self.basis
    }

    /// Basis scaled to primitive integer vectors.
    pub fn primitive_basis(&self) -> Vec<Row<T>> {
        self.basis
            .iter()
            .map(|b| {
                let mut v = b.clone();
                primitive(&mut v);
                v
            })
            .collect()
    }

    pub fn contains(&self, v: &[T]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        rank(&rows, self.dim) == self.basis.len()
    }

    /// Orthogonal complement description: rows whose kernel is this space.
    pub fn annihilator(&self) -> Vec<Row<T>> {
        nullspace(&self.basis, self.dim)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut rows = self.annihilator();
        rows.extend(other.annihilator());
        Self::kernel(self.dim, &rows)
    }

    pub fn is_subspace_of(&self, other: &Self) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }
}
