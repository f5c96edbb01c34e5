//! Affine relations between two spaces sharing parameters.

use std::fmt;

use super::{AffineForm, Binding, ConvexSet, Space};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub in_space: Space,
    pub out_space: Space,
    /// Over `[in_vars, out_vars]` (names made distinct) and the shared params.
    pub constraints: ConvexSet,
}

/// Rename `names` so none collides with `taken`, priming as needed.
pub fn fresh_names(names: &[String], taken: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        let mut m = n.clone();
        while taken.contains(&m) || out.contains(&m) {
            m.push('\'');
        }
        out.push(m);
    }
    out
}

impl Relation {
    pub fn new(in_space: Space, out_space: Space, constraints: ConvexSet) -> Result<Relation> {
        if in_space.params != out_space.params || constraints.space().params != in_space.params {
            return Err(Error::SpaceMismatch("relation spaces disagree on parameters".into()));
        }
        if constraints.space().n_vars() != in_space.n_vars() + out_space.n_vars() {
            return Err(Error::SpaceMismatch("relation constraint arity".into()));
        }
        Ok(Relation { in_space, out_space, constraints })
    }

    fn joint_space(in_space: &Space, out_space: &Space) -> Space {
        let outs = fresh_names(&out_space.iter_vars, &in_space.iter_vars);
        let mut vars = in_space.iter_vars.clone();
        vars.extend(outs);
        Space { iter_vars: vars, params: in_space.params.clone() }
    }

    /// `{x → exprs(x) : x ∈ domain}`.
    pub fn from_map(domain: &ConvexSet, out_names: &[String], exprs: &[AffineForm]) -> Result<Relation> {
        let in_space = domain.space().clone();
        let out_space = in_space.with_vars(out_names);
        let joint = Self::joint_space(&in_space, &out_space);
        let nin = in_space.n_vars();
        let pos: Vec<usize> = (0..nin).collect();
        let base = domain.embed(&joint, &pos)?;
        let lift: Vec<AffineForm> = (0..nin).map(|k| AffineForm::var(&joint, k)).collect();
        let mut eqs = Vec::new();
        for (k, e) in exprs.iter().enumerate() {
            if !e.fits(&in_space) {
                return Err(Error::SpaceMismatch("map expression outside the domain space".into()));
            }
            let lifted = e.substitute(&joint, &lift);
            eqs.push(AffineForm::var(&joint, nin + k).sub(&lifted));
        }
        let constraints = base.add_constraints(&[], &eqs);
        Ok(Relation { in_space, out_space, constraints })
    }

    pub fn n_in(&self) -> usize {
        self.in_space.n_vars()
    }

    pub fn n_out(&self) -> usize {
        self.out_space.n_vars()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn inverse(&self) -> Relation {
        let (ni, no) = (self.n_in(), self.n_out());
        let perm: Vec<usize> = (ni..ni + no).chain(0..ni).collect();
        let joint = Self::joint_space(&self.out_space, &self.in_space);
        let constraints = self.constraints.permute_vars(&perm).rename_vars(&joint.iter_vars);
        Relation { in_space: self.out_space.clone(), out_space: self.in_space.clone(), constraints }
    }

    /// `other ∘ self`: first self, then other.
    pub fn then(&self, other: &Relation) -> Result<Relation> {
        other.compose(self)
    }

    /// `self ∘ first` = `{x → z : ∃y. x first y ∧ y self z}`.
    pub fn compose(&self, first: &Relation) -> Result<Relation> {
        if first.n_out() != self.n_in() || first.in_space.params != self.in_space.params {
            return Err(Error::SpaceMismatch("composition arity or parameter mismatch".into()));
        }
        let (nx, ny, nz) = (first.n_in(), first.n_out(), self.n_out());
        let names: Vec<String> = (0..nx)
            .map(|k| format!("x{k}"))
            .chain((0..ny).map(|k| format!("y{k}")))
            .chain((0..nz).map(|k| format!("z{k}")))
            .collect();
        let mid = Space { iter_vars: names, params: self.in_space.params.clone() };
        let a = first.constraints.embed(&mid, &(0..nx + ny).collect::<Vec<_>>())?;
        let b = self.constraints.embed(&mid, &(nx..nx + ny + nz).collect::<Vec<_>>())?;
        let both = a.intersect(&b)?;
        let keep: Vec<usize> = (0..nx).chain(nx + ny..nx + ny + nz).collect();
        let projected = both.project_indices(&keep);
        let joint = Self::joint_space(&first.in_space, &self.out_space);
        Ok(Relation {
            in_space: first.in_space.clone(),
            out_space: self.out_space.clone(),
            constraints: projected.rename_vars(&joint.iter_vars),
        })
    }

    /// Image of `set` under the relation.
    pub fn apply(&self, set: &ConvexSet) -> Result<ConvexSet> {
        if set.space().n_vars() != self.n_in() {
            return Err(Error::SpaceMismatch("apply: set arity differs from relation input".into()));
        }
        let joint = self.constraints.space().clone();
        let lifted = set.embed(&joint, &(0..self.n_in()).collect::<Vec<_>>())?;
        let both = lifted.intersect(&self.constraints)?;
        let out: Vec<usize> = (self.n_in()..self.n_in() + self.n_out()).collect();
        Ok(both.project_indices(&out).rename_vars(&self.out_space.iter_vars))
    }

    pub fn domain(&self) -> ConvexSet {
        let keep: Vec<usize> = (0..self.n_in()).collect();
        self.constraints.project_indices(&keep).rename_vars(&self.in_space.iter_vars)
    }

    pub fn range(&self) -> ConvexSet {
        let keep: Vec<usize> = (self.n_in()..self.n_in() + self.n_out()).collect();
        self.constraints.project_indices(&keep).rename_vars(&self.out_space.iter_vars)
    }

    /// Restrict the input side to `set`.
    pub fn restrict_domain(&self, set: &ConvexSet) -> Result<Relation> {
        let joint = self.constraints.space().clone();
        let lifted = set.embed(&joint, &(0..self.n_in()).collect::<Vec<_>>())?;
        Ok(Relation { constraints: self.constraints.intersect(&lifted)?, ..self.clone() })
    }

    /// All `(input, output)` integer pairs at `b`.
    pub fn pairs(&self, b: &Binding) -> Result<Vec<(Vec<i64>, Vec<i64>)>> {
        let ni = self.n_in();
        Ok(self
            .constraints
            .enumerate_points(b)?
            .into_iter()
            .map(|p| (p[..ni].to_vec(), p[ni..].to_vec()))
            .collect())
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.constraints.space();
        let (ins, outs) = s.iter_vars.split_at(self.n_in());
        if !s.params.is_empty() {
            write!(f, "[{}] ", s.params.join(","))?;
        }
        write!(f, "{{ [{}] -> [{}]", ins.join(","), outs.join(","))?;
        let cons = self.constraints.constraint_strings();
        if !cons.is_empty() {
            write!(f, " : {}", cons.join(" and "))?;
        }
        write!(f, " }}")
    }
}
