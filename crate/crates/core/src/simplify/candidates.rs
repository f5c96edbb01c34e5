//! Reuse-vector candidates: share space, growth space, face parallelism and
//! the one-sided restriction for operators without an inverse.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::ir::Statement;
use crate::linalg::{LinearSpace, Row};
use crate::polyhedra::{DirVector, Face};
use crate::Rat;

fn rat(v: i64) -> Rat {
    Rat::from_integer(v.into())
}

fn as_rats(r: &DirVector) -> Vec<Rat> {
    r.entries.iter().map(|v| rat(*v)).collect()
}

fn to_dir(row: &Row<Rat>) -> DirVector {
    DirVector::new(row.iter().map(|v| v.to_integer().try_into().unwrap_or(i64::MAX)).collect())
}

/// Directions along which the RHS value is unchanged.
pub fn share_space(s: &Statement) -> LinearSpace<Rat> {
    s.share_space()
}

/// Normals of the domain constraints that involve the reduced dimensions.
/// Without an inverse the shifted domain may not leave through them, so
/// `a · r >= 0` must hold for each returned `a`. With an inverse: none.
pub fn inverse_constraints(s: &Statement) -> Vec<Row<Rat>> {
    if s.op().is_some_and(|op| op.has_inverse()) {
        return Vec::new();
    }
    let n = s.space().n_vars();
    let kept = LinearSpace::span(n, &s.lhs_linear());
    let mut out: Vec<Row<Rat>> = Vec::new();
    let mut push = |a: Row<Rat>| {
        if !a.iter().all(Zero::is_zero) && !kept.contains(&a) && !out.contains(&a) {
            out.push(a);
        }
    };
    for r in s.domain.ineq_rows() {
        push(r[..n].to_vec());
    }
    for r in s.domain.eq_rows() {
        push(r[..n].to_vec());
        push(r[..n].iter().map(|v| -v).collect());
    }
    out
}

/// `L ∩ I ∩ S` for one face of a reduction's domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub dim: usize,
    pub share: LinearSpace<Rat>,
    pub growth: LinearSpace<Rat>,
    /// Linear parts of the face's hull equalities; members are orthogonal.
    pub face_normals: Vec<Row<Rat>>,
    /// `a · r >= 0` for every row.
    pub halfspaces: Vec<Row<Rat>>,
    /// LHS linear map; a member must move the written cell.
    pub projection: Vec<Row<Rat>>,
}

impl CandidateSet {
    pub fn contains(&self, r: &DirVector) -> bool {
        if r.len() != self.dim || r.is_zero() {
            return false;
        }
        let v = as_rats(r);
        let dot = |a: &Row<Rat>| a.iter().zip(&v).fold(Rat::zero(), |acc, (x, y)| acc + x * y);
        self.share.contains(&v)
            && self.growth.contains(&v)
            && self.face_normals.iter().all(|a| dot(a).is_zero())
            && self.halfspaces.iter().all(|a| !dot(a).is_negative())
            && self.projection.iter().any(|a| !dot(a).is_zero())
    }

    /// The subspace the members live in, before the sign restrictions.
    pub fn span(&self) -> LinearSpace<Rat> {
        let along = LinearSpace::kernel(self.dim, &self.face_normals);
        self.share.intersect(&self.growth).intersect(&along)
    }

    /// Members among `±e_k`, in the order `+e_1, -e_1, +e_2, ...`.
    pub fn enumerate_unit(&self) -> Vec<DirVector> {
        let mut out = Vec::new();
        for k in 0..self.dim {
            for sign in [1, -1] {
                let e = DirVector::unit(self.dim, k, sign);
                if self.contains(&e) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Unit members followed by `±g` for the primitive generators of the span
    /// that are not unit vectors.
    pub fn enumerate(&self) -> Vec<DirVector> {
        let mut out = self.enumerate_unit();
        for g in self.span().primitive_basis() {
            let g = to_dir(&g);
            for d in [g.clone(), g.neg()] {
                if !out.contains(&d) && self.contains(&d) {
                    out.push(d);
                }
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.enumerate().is_empty()
    }
}

impl fmt::Display for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ds: Vec<String> = self.enumerate().iter().map(|d| d.to_string()).collect();
        write!(f, "{{{}}}", ds.join(", "))
    }
}

/// Candidates of `s` on `face`, a face of the domain `s` was cut from.
pub fn candidate_reuse_vectors(s: &Statement, face: &Face) -> CandidateSet {
    let n = s.space().n_vars();
    let face_normals = face.as_set.hull_equalities().iter().map(|r| r[..n].to_vec()).collect();
    CandidateSet {
        dim: n,
        share: share_space(s),
        growth: face.as_set.growth_space(),
        face_normals,
        halfspaces: inverse_constraints(s),
        projection: s.lhs_linear(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;
    use crate::polyhedra::ConvexSet;

    fn stmt(text: &str) -> Statement {
        parse_program(text).unwrap().statements[0].clone()
    }

    const PREFIX: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                          S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n";
    const PREFIX_MIN: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                              S1: B[i] min= A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n";

    fn face_with(s: &Statement, eq: &str) -> Face {
        let target = ConvexSet::parse(eq).unwrap();
        s.domain
            .faces()
            .unwrap()
            .into_iter()
            .find(|f| f.as_set.subset_of(&target).unwrap() && target.subset_of(&f.as_set).unwrap())
            .unwrap()
    }

    #[test]
    fn share_spaces() {
        let s = stmt(PREFIX);
        assert_eq!(share_space(&s), LinearSpace::span(2, &[vec![rat(1), rat(0)]]));
        let diag = stmt("param N;\ninput A : {[i] : 0 <= i < 2*N};\noutput B : {[i] : 0 <= i < N};\n\
                         S1: B[i] += A[i+j] : {[i,j] : 0 <= i < N and 0 <= j < N};\n");
        assert_eq!(share_space(&diag), LinearSpace::span(2, &[vec![rat(1), rat(-1)]]));
        let both = stmt("param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                         S1: B[i] += A[i] * A[j] : {[i,j] : 0 <= i < N and 0 <= j < N};\n");
        assert!(share_space(&both).is_zero());
    }

    #[test]
    fn prefix_sum_candidates() {
        let s = stmt(PREFIX);
        let whole = s.domain.whole_face().unwrap();
        let c = candidate_reuse_vectors(&s, &whole);
        assert_eq!(c.enumerate_unit(), vec![DirVector::new(vec![1, 0]), DirVector::new(vec![-1, 0])]);
        assert!(c.contains(&DirVector::new(vec![3, 0])));
        let diag = face_with(&s, "[N] { [i,j] : i = j and 0 <= i < N }");
        assert!(candidate_reuse_vectors(&s, &diag).is_empty());
    }

    #[test]
    fn min_is_one_sided() {
        let s = stmt(PREFIX_MIN);
        let c = candidate_reuse_vectors(&s, &s.domain.whole_face().unwrap());
        assert_eq!(c.enumerate(), vec![DirVector::new(vec![1, 0])]);
        assert!(inverse_constraints(&stmt(PREFIX)).is_empty());
    }

    #[test]
    fn fixed_width_dimension_has_no_growth() {
        let s = stmt("param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < 4};\n\
                      S1: B[k] += A[i] : {[k,i] : 0 <= k < 4 and 0 <= i < N};\n");
        let c = candidate_reuse_vectors(&s, &s.domain.whole_face().unwrap());
        assert!(!c.contains(&DirVector::new(vec![1, 0])));
        assert!(c.enumerate().is_empty());
    }
}
