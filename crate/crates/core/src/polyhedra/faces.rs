//! Faces, implicit equalities, dimension and the facet tagging of
//! difference pieces.

use std::collections::{BTreeSet, HashMap, VecDeque};

use num_traits::{One, Zero};

use super::{ConvexSet, DirVector, PieceTag};
use crate::caps::caps;
use crate::error::{Error, Result};
use crate::linalg::{rank, rref, Row};
use crate::Rat;

/// A face: the parent with the inequalities in `tight_mask` made equalities.
/// The mask is closed: it lists every parent inequality tight on the face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub parent: ConvexSet,
    pub tight_mask: Vec<usize>,
    pub as_set: ConvexSet,
}

impl Face {
    pub fn dimension(&self) -> usize {
        self.as_set.dimension()
    }

    pub fn is_whole(&self, implicit: &[usize]) -> bool {
        self.tight_mask == implicit
    }
}

impl ConvexSet {
    /// Indices of inequalities that hold with equality on the whole set.
    pub fn implicit_equalities(&self) -> Vec<usize> {
        let n = self.space().ncols();
        (0..self.ineq_rows().len())
            .filter(|&k| {
                let mut row = self.ineq_rows()[k].clone();
                row[n] -= Rat::one();
                self.add_rows(vec![row], vec![]).is_empty()
            })
            .collect()
    }

    /// Equalities of the affine hull: explicit ones plus implicit inequalities.
    pub fn hull_equalities(&self) -> Vec<Row<Rat>> {
        let mut eqs = self.eq_rows().to_vec();
        for k in self.implicit_equalities() {
            eqs.push(self.ineq_rows()[k].clone());
        }
        eqs
    }

    /// Dimension of the affine hull in the iteration variables.
    pub fn dimension(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        let nv = self.space().n_vars();
        let rows: Vec<Row<Rat>> = self.hull_equalities().iter().map(|r| r[..nv].to_vec()).collect();
        nv - rank(&rows, nv)
    }

    /// True when the hull forces an equation on the parameters alone, so the
    /// set only exists for special parameter values.
    pub fn constrains_params(&self) -> bool {
        let nv = self.space().n_vars();
        let np = self.space().n_params();
        if np == 0 {
            return false;
        }
        let eqs = self.hull_equalities();
        let (m, _) = rref(&eqs, nv + np + 1);
        m.iter().any(|r| r[..nv].iter().all(Zero::is_zero) && r[nv..nv + np].iter().any(|v| !v.is_zero()))
    }

    fn with_tight(&self, mask: &[usize]) -> ConvexSet {
        let mut ineqs = Vec::new();
        let mut eqs = self.eq_rows().to_vec();
        for (k, r) in self.ineq_rows().iter().enumerate() {
            if mask.contains(&k) {
                eqs.push(r.clone());
            } else {
                ineqs.push(r.clone());
            }
        }
        ConvexSet::from_rows(self.space().clone(), ineqs, eqs)
    }

    /// Close a mask: all inequalities tight on the resulting face.
    fn close_mask(&self, mask: &[usize]) -> Option<(Vec<usize>, ConvexSet)> {
        let set = self.with_tight(mask);
        if set.is_empty() {
            return None;
        }
        let n = self.space().ncols();
        let mut closed: BTreeSet<usize> = mask.iter().copied().collect();
        for (k, r) in self.ineq_rows().iter().enumerate() {
            if closed.contains(&k) {
                continue;
            }
            let mut row = r.clone();
            row[n] -= Rat::one();
            if set.add_rows(vec![row], vec![]).is_empty() {
                closed.insert(k);
            }
        }
        let closed: Vec<usize> = closed.into_iter().collect();
        let face = self.with_tight(&closed);
        Some((closed, face))
    }

    fn face_for_mask(&self, mask: &[usize]) -> Option<Face> {
        let (closed, as_set) = self.close_mask(mask)?;
        if as_set.constrains_params() {
            return None;
        }
        Some(Face { parent: self.clone(), tight_mask: closed, as_set })
    }

    /// The whole set as a face.
    pub fn whole_face(&self) -> Result<Face> {
        self.face_for_mask(&[])
            .ok_or_else(|| Error::Internal("set is empty or exists only at special parameters".into()))
    }

    /// All nonempty faces for generic parameters, the set itself first,
    /// then breadth-first by number of tightened inequalities.
    pub fn faces(&self) -> Result<Vec<Face>> {
        let cap = caps().faces;
        if self.ineq_rows().len() > cap {
            return Err(Error::CapExceeded { what: "face inequality", cap });
        }
        let Some(root) = self.face_for_mask(&[]) else { return Ok(Vec::new()) };
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        seen.insert(root.tight_mask.clone(), 0);
        let mut out = vec![root];
        let mut queue = VecDeque::from([0usize]);
        while let Some(f) = queue.pop_front() {
            let mask = out[f].tight_mask.clone();
            for k in 0..self.ineq_rows().len() {
                if mask.contains(&k) {
                    continue;
                }
                let mut m = mask.clone();
                m.push(k);
                let Some(face) = self.face_for_mask(&m) else { continue };
                if seen.contains_key(&face.tight_mask) {
                    continue;
                }
                seen.insert(face.tight_mask.clone(), out.len());
                queue.push_back(out.len());
                out.push(face);
            }
        }
        Ok(out)
    }

    /// Face obtained by tightening inequality `k` (closed), if generic.
    pub fn face_of_constraint(&self, k: usize) -> Option<Face> {
        let mut m = self.implicit_equalities();
        if !m.contains(&k) {
            m.push(k);
        }
        self.face_for_mask(&m)
    }

    /// Pieces of `self ∖ translate(self, r)`, each tagged with the face on
    /// which its negated constraint is tight.
    pub fn facet_decomposition(&self, r: &DirVector) -> Result<FacetDecomposition> {
        if r.is_zero() {
            return Err(Error::Internal("zero shift has no facet decomposition".into()));
        }
        let shifted = self.translate(r)?;
        if self.intersect(&shifted)?.is_empty() {
            return Ok(FacetDecomposition { pieces: vec![(self.whole_face()?, self.clone())], degenerate: Vec::new() });
        }
        let mut out = FacetDecomposition::default();
        for (piece, tag) in self.difference_tagged(&shifted)? {
            match tag {
                PieceTag::Ineq(k) => match self.face_of_constraint(k) {
                    Some(face) => out.pieces.push((face, piece)),
                    None => out.degenerate.push(piece),
                },
                PieceTag::Eq(_) => return Err(Error::Internal(format!("difference piece {piece} matches no facet"))),
            }
        }
        Ok(out)
    }
}

/// A set difference split by the facet each piece leaves through.
#[derive(Clone, Debug, Default)]
pub struct FacetDecomposition {
    pub pieces: Vec<(Face, ConvexSet)>,
    /// Pieces whose violated constraint bounds no face for generic
    /// parameters, e.g. one that is only reached while `N <= 1`.
    pub degenerate: Vec<ConvexSet>,
}
