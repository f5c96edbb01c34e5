//! Parametric integer polyhedra over exact rationals.
//!
//! Constraint rows are laid out as `[iter_vars.., params.., 1]` and kept in
//! integer-normalized form by [`crate::fm::System`].

mod enumerate;
mod faces;
mod growth;
pub mod parse;
mod relation;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fm::System;
use crate::linalg::Row;
use crate::{Rat, Scalar};

pub use enumerate::Bounds;
pub use faces::{Face, FacetDecomposition};
pub use growth::{log_log_slope, width_along, DegreeEstimate, DEGREE_BASE, DEGREE_SCALES, DEGREE_TOLERANCE};
pub use relation::Relation;

/// Integer values for parameters.
pub type Binding = BTreeMap<String, i64>;

pub fn binding(pairs: &[(&str, i64)]) -> Binding {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Space {
    pub iter_vars: Vec<String>,
    pub params: Vec<String>,
}

impl Space {
    pub fn new<S: AsRef<str>>(iter_vars: &[S], params: &[S]) -> Result<Space> {
        let iter_vars: Vec<String> = iter_vars.iter().map(|s| s.as_ref().to_string()).collect();
        let params: Vec<String> = params.iter().map(|s| s.as_ref().to_string()).collect();
        let mut seen = HashSet::new();
        for n in iter_vars.iter().chain(&params) {
            if !seen.insert(n.as_str()) {
                return Err(Error::SpaceMismatch(format!("duplicate name `{n}`")));
            }
        }
        Ok(Space { iter_vars, params })
    }

    pub fn n_vars(&self) -> usize {
        self.iter_vars.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Columns excluding the constant.
    pub fn ncols(&self) -> usize {
        self.iter_vars.len() + self.params.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.iter_vars.iter().position(|v| v == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|v| v == name)
    }

    /// Column of a variable or parameter name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.var_index(name)
            .or_else(|| self.param_index(name).map(|p| self.n_vars() + p))
    }

    pub fn column_name(&self, col: usize) -> &str {
        if col < self.n_vars() {
            &self.iter_vars[col]
        } else {
            &self.params[col - self.n_vars()]
        }
    }

    /// Same params, different iteration variables.
    pub fn with_vars<S: AsRef<str>>(&self, vars: &[S]) -> Space {
        Space {
            iter_vars: vars.iter().map(|s| s.as_ref().to_string()).collect(),
            params: self.params.clone(),
        }
    }
}

/// `Σ coeffs·x + Σ param_coeffs·p + constant`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineForm {
    row: Row<Rat>,
    n_vars: usize,
}

fn rat(v: i64) -> Rat {
    Rat::from_int(v)
}

impl AffineForm {
    pub fn from_row(n_vars: usize, row: Row<Rat>) -> AffineForm {
        assert!(row.len() > n_vars, "row too short for its space");
        AffineForm { row, n_vars }
    }

    pub fn zero(space: &Space) -> AffineForm {
        AffineForm { row: vec![Rat::zero(); space.ncols() + 1], n_vars: space.n_vars() }
    }

    pub fn constant(space: &Space, c: Rat) -> AffineForm {
        let mut f = Self::zero(space);
        *f.row.last_mut().unwrap() = c;
        f
    }

    pub fn var(space: &Space, k: usize) -> AffineForm {
        let mut f = Self::zero(space);
        f.row[k] = Rat::one();
        f
    }

    pub fn param(space: &Space, k: usize) -> AffineForm {
        let mut f = Self::zero(space);
        f.row[space.n_vars() + k] = Rat::one();
        f
    }

    pub fn row(&self) -> &[Rat] {
        &self.row
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_params(&self) -> usize {
        self.row.len() - self.n_vars - 1
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.row[..self.n_vars]
    }

    pub fn param_coeffs(&self) -> &[Rat] {
        &self.row[self.n_vars..self.row.len() - 1]
    }

    pub fn constant_term(&self) -> &Rat {
        self.row.last().unwrap()
    }

    pub fn fits(&self, space: &Space) -> bool {
        self.n_vars == space.n_vars() && self.row.len() == space.ncols() + 1
    }

    pub fn is_constant(&self) -> bool {
        self.row[..self.row.len() - 1].iter().all(Zero::is_zero)
    }

    pub fn linear_is_zero(&self) -> bool {
        self.coeffs().iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &AffineForm) -> AffineForm {
        debug_assert_eq!(self.row.len(), other.row.len());
        let row = self.row.iter().zip(&other.row).map(|(a, b)| a + b).collect();
        AffineForm { row, n_vars: self.n_vars }
    }

    pub fn sub(&self, other: &AffineForm) -> AffineForm {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &Rat) -> AffineForm {
        AffineForm { row: self.row.iter().map(|a| a * c).collect(), n_vars: self.n_vars }
    }

    pub fn neg(&self) -> AffineForm {
        self.scale(&rat(-1))
    }

    pub fn add_constant(&self, c: &Rat) -> AffineForm {
        let mut f = self.clone();
        let last = f.row.len() - 1;
        f.row[last] = &f.row[last] + c;
        f
    }

    pub fn eval(&self, point: &[i64], params: &[i64]) -> Rat {
        let mut acc = self.constant_term().clone();
        for (c, v) in self.coeffs().iter().zip(point) {
            acc += c * rat(*v);
        }
        for (c, v) in self.param_coeffs().iter().zip(params) {
            acc += c * rat(*v);
        }
        acc
    }

    /// Linear part applied to a direction (params and constant ignored).
    pub fn apply_linear(&self, d: &[i64]) -> Rat {
        self.coeffs().iter().zip(d).fold(Rat::zero(), |acc, (c, v)| acc + c * rat(*v))
    }

    /// Rewrite over another space by replacing each variable with an affine form.
    pub fn substitute(&self, target: &Space, exprs: &[AffineForm]) -> AffineForm {
        debug_assert_eq!(exprs.len(), self.n_vars);
        let mut out = AffineForm::zero(target);
        for (c, e) in self.coeffs().iter().zip(exprs) {
            if !c.is_zero() {
                out = out.add(&e.scale(c));
            }
        }
        let np = target.n_params();
        for (k, c) in self.param_coeffs().iter().enumerate() {
            if k < np {
                out.row[target.n_vars() + k] += c;
            }
        }
        out.add_constant(self.constant_term())
    }

    /// Fix parameters to values, leaving a form over the variables only.
    pub fn bind_params(&self, params: &[i64]) -> AffineForm {
        let mut row: Row<Rat> = self.coeffs().to_vec();
        let mut c = self.constant_term().clone();
        for (pc, v) in self.param_coeffs().iter().zip(params) {
            c += pc * rat(*v);
        }
        row.push(c);
        AffineForm { row, n_vars: self.n_vars }
    }

    pub fn display<'a>(&'a self, space: &'a Space) -> FormDisplay<'a> {
        FormDisplay { form: self, space }
    }
}

pub struct FormDisplay<'a> {
    form: &'a AffineForm,
    space: &'a Space,
}

fn write_terms(f: &mut fmt::Formatter<'_>, terms: &[(Rat, String)], constant: &Rat) -> fmt::Result {
    let mut first = true;
    for (c, name) in terms {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        if first {
            if c.is_negative() {
                write!(f, "-")?;
            }
        } else if c.is_negative() {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        if mag.is_one() {
            write!(f, "{name}")?;
        } else {
            write!(f, "{mag}*{name}")?;
        }
        first = false;
    }
    if first {
        write!(f, "{constant}")?;
    } else if constant.is_positive() {
        write!(f, " + {constant}")?;
    } else if constant.is_negative() {
        write!(f, " - {}", constant.abs())?;
    }
    Ok(())
}

fn named_terms(form: &AffineForm, space: &Space) -> Vec<(Rat, String)> {
    let ncols = form.row.len() - 1;
    (0..ncols)
        .filter(|&c| !form.row[c].is_zero())
        .map(|c| (form.row[c].clone(), space.column_name(c).to_string()))
        .collect()
}

impl fmt::Display for FormDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, &named_terms(self.form, self.space), self.form.constant_term())
    }
}

/// A reuse direction: one integer per iteration variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirVector {
    pub entries: Vec<i64>,
}

impl DirVector {
    pub fn new(entries: Vec<i64>) -> DirVector {
        DirVector { entries }
    }

    pub fn unit(n: usize, k: usize, sign: i64) -> DirVector {
        let mut entries = vec![0; n];
        entries[k] = sign;
        DirVector { entries }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0)
    }

    pub fn neg(&self) -> DirVector {
        DirVector { entries: self.entries.iter().map(|v| -v).collect() }
    }

    pub fn as_rats(&self) -> Vec<Rat> {
        self.entries.iter().map(|&v| rat(v)).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for DirVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl std::str::FromStr for DirVector {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
        let entries = inner
            .split(',')
            .map(|p| p.trim().parse::<i64>().map_err(|_| format!("bad vector entry `{p}`")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(DirVector { entries })
    }
}

/// Which constraint of the subtrahend a difference piece negates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceTag {
    Ineq(usize),
    Eq(usize),
}

/// A conjunction of affine constraints in one [`Space`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvexSet {
    space: Space,
    sys: System<Rat>,
}

impl ConvexSet {
    pub fn universe(space: Space) -> ConvexSet {
        let sys = System::new(space.ncols(), vec![], vec![]);
        ConvexSet { space, sys }
    }

    pub fn empty(space: Space) -> ConvexSet {
        let sys = System::infeasible(space.ncols());
        ConvexSet { space, sys }
    }

    pub fn from_constraints(space: Space, ineqs: &[AffineForm], eqs: &[AffineForm]) -> Result<ConvexSet> {
        for f in ineqs.iter().chain(eqs) {
            if !f.fits(&space) {
                return Err(Error::SpaceMismatch("constraint does not fit the set's space".into()));
            }
        }
        let sys = System::new(
            space.ncols(),
            ineqs.iter().map(|f| f.row.clone()).collect(),
            eqs.iter().map(|f| f.row.clone()).collect(),
        );
        Ok(ConvexSet { space, sys })
    }

    pub(crate) fn from_system(space: Space, sys: System<Rat>) -> ConvexSet {
        debug_assert_eq!(space.ncols(), sys.ncols);
        ConvexSet { space, sys }
    }

    pub(crate) fn from_rows(space: Space, ineqs: Vec<Row<Rat>>, eqs: Vec<Row<Rat>>) -> ConvexSet {
        let sys = System::new(space.ncols(), ineqs, eqs);
        ConvexSet { space, sys }
    }

    /// Drop inequalities implied by the others (integer semantics).
    pub fn irredundant(&self) -> ConvexSet {
        let mut sys = self.sys.clone();
        if !sys.infeasible {
            sys.prune_redundant();
            sys.simplify();
        }
        ConvexSet { space: self.space.clone(), sys }
    }

    /// Parse the textual set syntax, e.g. `[N] { [i,j] : 0 <= i < N and 0 <= j <= i }`.
    pub fn parse(text: &str) -> Result<ConvexSet> {
        parse::parse_set(text, &[])
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub(crate) fn system(&self) -> &System<Rat> {
        &self.sys
    }

    pub fn ineq_rows(&self) -> &[Row<Rat>] {
        &self.sys.ineqs
    }

    pub fn eq_rows(&self) -> &[Row<Rat>] {
        &self.sys.eqs
    }

    pub fn inequalities(&self) -> Vec<AffineForm> {
        self.sys.ineqs.iter().map(|r| AffineForm::from_row(self.space.n_vars(), r.clone())).collect()
    }

    pub fn equalities(&self) -> Vec<AffineForm> {
        self.sys.eqs.iter().map(|r| AffineForm::from_row(self.space.n_vars(), r.clone())).collect()
    }

    pub fn is_trivially_empty(&self) -> bool {
        self.sys.infeasible
    }

    fn check_space(&self, other: &ConvexSet) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(format!(
                "{:?} vs {:?}",
                self.space.iter_vars, other.space.iter_vars
            )));
        }
        Ok(())
    }

    /// Rational emptiness with parameters treated as unknowns.
    pub fn is_empty(&self) -> bool {
        self.sys.is_empty()
    }

    pub fn add_constraints(&self, ineqs: &[AffineForm], eqs: &[AffineForm]) -> ConvexSet {
        let mut i = self.sys.ineqs.clone();
        let mut e = self.sys.eqs.clone();
        i.extend(ineqs.iter().map(|f| f.row.clone()));
        e.extend(eqs.iter().map(|f| f.row.clone()));
        if self.sys.infeasible {
            return self.clone();
        }
        ConvexSet::from_rows(self.space.clone(), i, e)
    }

    pub fn intersect(&self, other: &ConvexSet) -> Result<ConvexSet> {
        self.check_space(other)?;
        if self.sys.infeasible || other.sys.infeasible {
            return Ok(ConvexSet::empty(self.space.clone()));
        }
        let mut i = self.sys.ineqs.clone();
        let mut e = self.sys.eqs.clone();
        i.extend(other.sys.ineqs.iter().cloned());
        e.extend(other.sys.eqs.iter().cloned());
        Ok(ConvexSet::from_rows(self.space.clone(), i, e).irredundant())
    }

    /// `{x + r : x ∈ self}`, rows kept in their original order.
    pub fn translate(&self, r: &DirVector) -> Result<ConvexSet> {
        if r.len() != self.space.n_vars() {
            return Err(Error::SpaceMismatch(format!(
                "vector of length {} in a {}-variable space",
                r.len(),
                self.space.n_vars()
            )));
        }
        if self.sys.infeasible {
            return Ok(self.clone());
        }
        let n = self.space.ncols();
        let shift = |row: &Row<Rat>| {
            let mut out = row.clone();
            for (k, v) in r.entries.iter().enumerate() {
                out[n] -= &row[k] * rat(*v);
            }
            out
        };
        let ineqs = self.sys.ineqs.iter().map(shift).collect();
        let eqs = self.sys.eqs.iter().map(shift).collect();
        Ok(ConvexSet::from_rows(self.space.clone(), ineqs, eqs))
    }

    /// Pieces of `self ∖ other` with the subtrahend constraint each one negates.
    pub fn difference_tagged(&self, other: &ConvexSet) -> Result<Vec<(ConvexSet, PieceTag)>> {
        self.check_space(other)?;
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if other.is_empty() {
            return Ok(vec![(self.clone(), PieceTag::Ineq(usize::MAX))]);
        }
        let n = self.space.ncols();
        let mut pieces = Vec::new();
        let mut rest = self.clone();
        let negate = |row: &Row<Rat>| -> Row<Rat> {
            let mut out: Row<Rat> = row.iter().map(|v| -v).collect();
            out[n] -= Rat::one();
            out
        };
        for (k, row) in other.sys.ineqs.iter().enumerate() {
            let piece = rest.add_rows(vec![negate(row)], vec![]);
            if !piece.is_empty() {
                pieces.push((piece.irredundant(), PieceTag::Ineq(k)));
            }
            rest = rest.add_rows(vec![row.clone()], vec![]);
            if rest.is_empty() {
                return Ok(pieces);
            }
        }
        for (k, row) in other.sys.eqs.iter().enumerate() {
            let mut above = row.clone();
            above[n] -= Rat::one();
            for piece in [rest.add_rows(vec![negate(row)], vec![]), rest.add_rows(vec![above], vec![])] {
                if !piece.is_empty() {
                    pieces.push((piece.irredundant(), PieceTag::Eq(k)));
                }
            }
            rest = rest.add_rows(vec![], vec![row.clone()]);
            if rest.is_empty() {
                return Ok(pieces);
            }
        }
        Ok(pieces)
    }

    pub fn difference(&self, other: &ConvexSet) -> Result<SetUnion> {
        let pieces = self.difference_tagged(other)?.into_iter().map(|(p, _)| p).collect();
        Ok(SetUnion { space: self.space.clone(), pieces, disjoint: true })
    }

    pub(crate) fn add_rows(&self, ineqs: Vec<Row<Rat>>, eqs: Vec<Row<Rat>>) -> ConvexSet {
        if self.sys.infeasible {
            return self.clone();
        }
        let mut i = self.sys.ineqs.clone();
        let mut e = self.sys.eqs.clone();
        i.extend(ineqs);
        e.extend(eqs);
        ConvexSet::from_rows(self.space.clone(), i, e)
    }

    /// Fourier–Motzkin projection onto `keep` (in the given order).
    pub fn project<S: AsRef<str>>(&self, keep: &[S]) -> Result<ConvexSet> {
        let mut idx = Vec::new();
        for k in keep {
            let name = k.as_ref();
            let i = self
                .space
                .var_index(name)
                .ok_or_else(|| Error::SpaceMismatch(format!("unknown variable `{name}`")))?;
            idx.push(i);
        }
        Ok(self.project_indices(&idx))
    }

    /// Keep variables at `idx` (in that order), eliminating the rest.
    pub fn project_indices(&self, idx: &[usize]) -> ConvexSet {
        let nv = self.space.n_vars();
        let drop: Vec<usize> = (0..nv).filter(|c| !idx.contains(c)).collect();
        let mut sys = self.sys.clone();
        sys.eliminate_all(&drop);
        let sys = sys.drop_columns(&drop);
        let kept_sorted: Vec<usize> = (0..nv).filter(|c| idx.contains(c)).collect();
        let space = self.space.with_vars(&kept_sorted.iter().map(|&c| self.space.iter_vars[c].clone()).collect::<Vec<_>>());
        let set = ConvexSet::from_system(space, sys).irredundant();
        // Reorder to the requested order.
        let perm: Vec<usize> = idx.iter().map(|c| kept_sorted.iter().position(|k| k == c).unwrap()).collect();
        set.permute_vars(&perm)
    }

    /// New variable k is old variable `perm[k]`.
    pub fn permute_vars(&self, perm: &[usize]) -> ConvexSet {
        let nv = self.space.n_vars();
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return self.clone();
        }
        let vars: Vec<String> = perm.iter().map(|&p| self.space.iter_vars[p].clone()).collect();
        let space = self.space.with_vars(&vars);
        let map = |row: &Row<Rat>| -> Row<Rat> {
            let mut out: Row<Rat> = perm.iter().map(|&p| row[p].clone()).collect();
            out.extend(row[nv..].iter().cloned());
            out
        };
        let sys = System {
            ncols: self.sys.ncols,
            ineqs: self.sys.ineqs.iter().map(map).collect(),
            eqs: self.sys.eqs.iter().map(map).collect(),
            infeasible: self.sys.infeasible,
        };
        ConvexSet { space, sys }
    }

    /// Rename the iteration variables (same count).
    pub fn rename_vars<S: AsRef<str>>(&self, names: &[S]) -> ConvexSet {
        assert_eq!(names.len(), self.space.n_vars());
        ConvexSet { space: self.space.with_vars(names), sys: self.sys.clone() }
    }

    /// `{y ∈ target : (exprs(y)) ∈ self}`; `exprs` has one form per variable of self.
    pub fn preimage(&self, target: &Space, exprs: &[AffineForm]) -> ConvexSet {
        if self.sys.infeasible {
            return ConvexSet::empty(target.clone());
        }
        let nv = self.space.n_vars();
        let sub = |row: &Row<Rat>| AffineForm::from_row(nv, row.clone()).substitute(target, exprs).row;
        let ineqs = self.sys.ineqs.iter().map(sub).collect();
        let eqs = self.sys.eqs.iter().map(sub).collect();
        ConvexSet::from_rows(target.clone(), ineqs, eqs)
    }

    /// Re-express over `target` where variable k of self becomes variable `var_pos[k]`.
    /// Parameters are matched by name.
    pub fn embed(&self, target: &Space, var_pos: &[usize]) -> Result<ConvexSet> {
        let exprs: Vec<AffineForm> = var_pos.iter().map(|&p| AffineForm::var(target, p)).collect();
        for p in &self.space.params {
            if target.param_index(p).is_none() {
                return Err(Error::SpaceMismatch(format!("parameter `{p}` missing in target space")));
            }
        }
        let nv = self.space.n_vars();
        let map = |row: &Row<Rat>| {
            let form = AffineForm::from_row(nv, row.clone());
            let mut out = AffineForm::zero(target);
            for (c, e) in form.coeffs().iter().zip(&exprs) {
                out = out.add(&e.scale(c));
            }
            for (k, c) in form.param_coeffs().iter().enumerate() {
                let t = target.param_index(&self.space.params[k]).unwrap();
                out.row[target.n_vars() + t] += c;
            }
            out.add_constant(form.constant_term()).row
        };
        if self.sys.infeasible {
            return Ok(ConvexSet::empty(target.clone()));
        }
        let ineqs = self.sys.ineqs.iter().map(map).collect();
        let eqs = self.sys.eqs.iter().map(map).collect();
        Ok(ConvexSet::from_rows(target.clone(), ineqs, eqs))
    }

    pub fn param_values(&self, b: &Binding) -> Result<Vec<i64>> {
        self.space
            .params
            .iter()
            .map(|p| {
                b.get(p)
                    .copied()
                    .ok_or_else(|| Error::SpaceMismatch(format!("binding lacks parameter `{p}`")))
            })
            .collect()
    }

    /// Fix every parameter, giving a set over a parameter-free space.
    pub fn bind(&self, b: &Binding) -> Result<ConvexSet> {
        let vals = self.param_values(b)?;
        let nv = self.space.n_vars();
        let space = Space { iter_vars: self.space.iter_vars.clone(), params: Vec::new() };
        if self.sys.infeasible {
            return Ok(ConvexSet::empty(space));
        }
        let sub = |row: &Row<Rat>| AffineForm::from_row(nv, row.clone()).bind_params(&vals).row;
        let ineqs = self.sys.ineqs.iter().map(sub).collect();
        let eqs = self.sys.eqs.iter().map(sub).collect();
        Ok(ConvexSet::from_rows(space, ineqs, eqs))
    }

    pub fn contains(&self, point: &[i64], params: &[i64]) -> bool {
        if self.sys.infeasible {
            return false;
        }
        let nv = self.space.n_vars();
        self.sys.ineqs.iter().all(|r| !AffineForm::from_row(nv, r.clone()).eval(point, params).is_negative())
            && self.sys.eqs.iter().all(|r| AffineForm::from_row(nv, r.clone()).eval(point, params).is_zero())
    }

    /// Integer emptiness at a fixed binding, decided by bounded enumeration.
    pub fn is_integer_empty_at(&self, b: &Binding) -> Result<bool> {
        Ok(self.count_points(b)? == 0)
    }

    /// Same integer points at `b`.
    pub fn same_points_at(&self, other: &ConvexSet, b: &Binding) -> Result<bool> {
        Ok(self.enumerate_points(b)? == other.enumerate_points(b)?)
    }

    pub fn subset_of(&self, other: &ConvexSet) -> Result<bool> {
        Ok(self.difference(other)?.pieces.is_empty())
    }

    /// Body without the parameter prefix: `{ [i,j] : ... }`.
    pub fn body_string(&self) -> String {
        let mut s = format!("{{ [{}]", self.space.iter_vars.join(","));
        let cons = self.constraint_strings();
        if !cons.is_empty() {
            s.push_str(" : ");
            s.push_str(&cons.join(" and "));
        }
        s.push_str(" }");
        s
    }

    pub fn constraint_strings(&self) -> Vec<String> {
        if self.sys.infeasible {
            return vec!["1 = 0".to_string()];
        }
        let nv = self.space.n_vars();
        let mut out = Vec::new();
        for r in &self.sys.eqs {
            out.push(constraint_text(&AffineForm::from_row(nv, r.clone()), &self.space, "="));
        }
        for r in &self.sys.ineqs {
            out.push(constraint_text(&AffineForm::from_row(nv, r.clone()), &self.space, ">="));
        }
        out
    }
}

/// Render `form op 0` readably: a lone variable goes on the left.
fn constraint_text(form: &AffineForm, space: &Space, op: &str) -> String {
    struct Side<'a>(&'a [(Rat, String)], Rat);
    impl fmt::Display for Side<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_terms(f, self.0, &self.1)
        }
    }
    let terms = named_terms(form, space);
    let c = form.constant_term().clone();
    let var_terms: Vec<usize> = (0..terms.len())
        .filter(|&k| space.var_index(&terms[k].1).is_some())
        .collect();
    if var_terms.len() == 1 {
        let k = var_terms[0];
        let (coef, name) = terms[k].clone();
        let rest: Vec<(Rat, String)> = terms
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, (v, n))| (-v.clone(), n.clone()))
            .collect();
        let rc = -c.clone();
        let (rest, rc) = if coef.is_negative() {
            (rest.into_iter().map(|(v, n)| (-v, n)).collect::<Vec<_>>(), -rc)
        } else {
            (rest, rc)
        };
        let op = match (op, coef.is_negative()) {
            ("=", _) => "=",
            (_, true) => "<=",
            _ => ">=",
        };
        let lhs = if coef.abs().is_one() { name } else { format!("{}*{}", coef.abs(), name) };
        return format!("{lhs} {op} {}", Side(&rest, rc));
    }
    let pos: Vec<(Rat, String)> = terms.iter().filter(|t| t.0.is_positive()).cloned().collect();
    let neg: Vec<(Rat, String)> =
        terms.iter().filter(|t| t.0.is_negative()).map(|(v, n)| (-v.clone(), n.clone())).collect();
    let (lc, rc) = if c.is_negative() { (Rat::zero(), -c) } else { (c, Rat::zero()) };
    format!("{} {op} {}", Side(&pos, lc), Side(&neg, rc))
}

impl fmt::Display for ConvexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.space.params.is_empty() {
            write!(f, "[{}] ", self.space.params.join(","))?;
        }
        write!(f, "{}", self.body_string())
    }
}

/// A finite union of convex pieces in one space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetUnion {
    pub space: Space,
    pub pieces: Vec<ConvexSet>,
    pub disjoint: bool,
}

impl SetUnion {
    pub fn empty(space: Space) -> SetUnion {
        SetUnion { space, pieces: Vec::new(), disjoint: true }
    }

    pub fn from_set(set: ConvexSet) -> SetUnion {
        let space = set.space().clone();
        let pieces = if set.is_empty() { vec![] } else { vec![set] };
        SetUnion { space, pieces, disjoint: true }
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(|p| p.is_empty())
    }

    /// Disjoint union of `self` and `other` (other's overlap is cut away).
    pub fn union(&self, other: &SetUnion) -> Result<SetUnion> {
        let mut pieces = self.pieces.clone();
        for q in &other.pieces {
            let mut rest = SetUnion::from_set(q.clone());
            for p in &self.pieces {
                rest = rest.subtract_set(p)?;
            }
            pieces.extend(rest.pieces);
        }
        Ok(SetUnion { space: self.space.clone(), pieces, disjoint: self.disjoint })
    }

    pub fn subtract_set(&self, b: &ConvexSet) -> Result<SetUnion> {
        let mut pieces = Vec::new();
        for p in &self.pieces {
            pieces.extend(p.difference(b)?.pieces);
        }
        Ok(SetUnion { space: self.space.clone(), pieces, disjoint: self.disjoint })
    }

    pub fn subtract(&self, b: &SetUnion) -> Result<SetUnion> {
        let mut out = self.clone();
        for q in &b.pieces {
            out = out.subtract_set(q)?;
        }
        Ok(out)
    }

    pub fn intersect_set(&self, b: &ConvexSet) -> Result<SetUnion> {
        let mut pieces = Vec::new();
        for p in &self.pieces {
            let q = p.intersect(b)?;
            if !q.is_empty() {
                pieces.push(q);
            }
        }
        Ok(SetUnion { space: self.space.clone(), pieces, disjoint: self.disjoint })
    }

    pub fn intersect(&self, b: &SetUnion) -> Result<SetUnion> {
        let mut pieces = Vec::new();
        for q in &b.pieces {
            pieces.extend(self.intersect_set(q)?.pieces);
        }
        Ok(SetUnion { space: self.space.clone(), pieces, disjoint: self.disjoint && b.disjoint })
    }

    pub fn enumerate_points(&self, b: &Binding) -> Result<Vec<Vec<i64>>> {
        let mut pts = Vec::new();
        for p in &self.pieces {
            pts.extend(p.enumerate_points(b)?);
        }
        pts.sort();
        pts.dedup();
        Ok(pts)
    }

    /// Check pairwise disjointness rationally.
    pub fn check_disjoint(&self) -> Result<bool> {
        for a in 0..self.pieces.len() {
            for b in a + 1..self.pieces.len() {
                if !self.pieces[a].intersect(&self.pieces[b])?.is_empty() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}
