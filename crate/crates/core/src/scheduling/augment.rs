//! Redirect statements: a reduction into `A` is retargeted at a fresh array
//! and `A[x] = ATmp[x]` copies the finished cells, giving `A` its own
//! schedule rows.

use super::{feautrier_schedule, is_schedulable, Schedule};
use crate::dependence::{all_dependences, DepGraph, DependenceEdge, EdgeKind};
use crate::error::{Error, Result};
use crate::ir::{ArrayDecl, ArrayKind, Expr, Program, Statement, StmtKind};
use crate::polyhedra::{AffineForm, ConvexSet, DirVector, Relation};
use crate::Rat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Redirect {
    pub array: String,
    pub tmp_array: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentedProgram {
    pub program: Program,
    pub redirects: Vec<Redirect>,
}

impl AugmentedProgram {
    pub fn redirect_for(&self, array: &str) -> Option<&Redirect> {
        self.redirects.iter().find(|r| r.array == array)
    }

    pub fn redirect_statement(&self, array: &str) -> Option<&Statement> {
        self.redirect_for(array).and_then(|r| self.program.statement(&r.label))
    }
}

/// Cells written by the reductions into `array`.
fn reduction_image(p: &Program, array: &str) -> Result<ConvexSet> {
    let decl = p.array(array).ok_or_else(|| Error::Invalid(format!("undeclared array `{array}`")))?;
    let names = decl.index_space.space().iter_vars.clone();
    let writers: Vec<&Statement> = p.writers_of(array).into_iter().filter(|s| s.is_reduce()).collect();
    let first = writers[0].write_image(&names)?;
    for s in &writers[1..] {
        let im = s.write_image(&names)?;
        if !(im.subset_of(&first)? && first.subset_of(&im)?) {
            if p.writers_of(array).iter().any(|s| !s.is_reduce()) {
                return Err(Error::Invalid(format!("reductions into `{array}` cover different cells")));
            }
            return Ok(decl.index_space.clone());
        }
    }
    first.intersect(&decl.index_space)
}

pub fn augment_program(p: &Program) -> Result<AugmentedProgram> {
    let mut q = p.clone();
    let mut redirects = Vec::new();
    for array in p.reduction_arrays() {
        let tmp = q.fresh_name(&format!("{array}Tmp"));
        let label = q.fresh_name(&format!("{array}redir"));
        let domain = reduction_image(p, &array)?;
        let decl = p.array(&array).unwrap();
        q.arrays.push(ArrayDecl { name: tmp.clone(), index_space: decl.index_space.clone(), kind: ArrayKind::Intermediate });
        for s in q.statements.iter_mut().filter(|s| s.array == array && s.is_reduce()) {
            s.array = tmp.clone();
        }
        let sp = domain.space().clone();
        let ids: Vec<AffineForm> = (0..sp.n_vars()).map(|k| AffineForm::var(&sp, k)).collect();
        q.statements.push(Statement {
            label: label.clone(),
            array: array.clone(),
            lhs: ids.clone(),
            kind: StmtKind::Assign,
            rhs: Expr::read(&tmp, ids),
            domain,
        });
        redirects.push(Redirect { array, tmp_array: tmp, label });
    }
    Ok(AugmentedProgram { program: q, redirects })
}

/// `{x -> x + r}` inside the redirect domain, as a self edge.
pub fn reuse_edge(aug: &AugmentedProgram, deps: &DepGraph, array: &str, r: &DirVector) -> Result<Option<DependenceEdge>> {
    let red = aug.redirect_for(array).ok_or_else(|| Error::Invalid(format!("`{array}` has no redirect")))?;
    let node = deps.node_index(&red.label).ok_or_else(|| Error::Internal("redirect missing from dependences".into()))?;
    let domain = &deps.nodes[node].domain;
    let sp = domain.space();
    if r.len() != sp.n_vars() {
        return Err(Error::SpaceMismatch(format!("reuse vector {r} for a {}-d array", sp.n_vars())));
    }
    let shifted: Vec<AffineForm> = (0..sp.n_vars())
        .map(|k| AffineForm::var(sp, k).add_constant(&Rat::from_integer(r.entries[k].into())))
        .collect();
    let names: Vec<String> = sp.iter_vars.iter().map(|v| format!("{v}'")).collect();
    let rel = Relation::from_map(domain, &names, &shifted)?;
    let rel = rel.inverse().restrict_domain(&domain.rename_vars(&names))?.inverse();
    if rel.is_empty() {
        return Ok(None);
    }
    Ok(Some(DependenceEdge { src: node, dst: node, kind: EdgeKind::Flow, via_array: array.to_string(), relation: rel }))
}

fn with_reuse_edge(aug: &AugmentedProgram, array: &str, r: &DirVector) -> Result<DepGraph> {
    if r.is_zero() {
        return Err(Error::Invalid("reuse vector must be nonzero".into()));
    }
    let mut deps = all_dependences(&aug.program)?;
    if let Some(e) = reuse_edge(aug, &deps, array, r)? {
        deps.edges.push(e);
    }
    Ok(deps)
}

/// Whether [`reschedule_with_reuse`] would succeed, without building rows.
pub fn schedulable_with_reuse(aug: &AugmentedProgram, array: &str, r: &DirVector) -> Result<bool> {
    is_schedulable(&with_reuse_edge(aug, array, r)?)
}

/// Full reschedule with the extra edge `A[x] -> A[x + r]`.
pub fn reschedule_with_reuse(aug: &AugmentedProgram, array: &str, r: &DirVector) -> Result<Schedule> {
    feautrier_schedule(&with_reuse_edge(aug, array, r)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::oracle_equivalence;
    use crate::ir::{parse_program, validate_program};
    use crate::polyhedra::binding;

    const PREFIX: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                          S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n";
    const FEEDBACK: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                       S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n\
                       S2: A[i+1] = f(B[i]) : {[i] : 0 <= i < N - 1};\n";

    #[test]
    fn redirect_added_and_equivalent() {
        let p = parse_program(FEEDBACK).unwrap();
        let aug = augment_program(&p).unwrap();
        let s = aug.redirect_statement("B").unwrap();
        assert_eq!(s.to_source(), "Bredir: B[i] = BTmp[i] : { [i] : i <= N - 1 and i >= 0 };");
        validate_program(&aug.program).unwrap();
        assert_eq!(oracle_equivalence(&p, &aug.program, &[binding(&[("N", 8)])], 3, 0).unwrap(), Ok(()));
        let none = parse_program("param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\nS: B[i] = A[i] : {[i] : 0 <= i < N};\n").unwrap();
        assert_eq!(augment_program(&none).unwrap().program, none);
    }

    #[test]
    fn reuse_direction_on_eq5() {
        let aug = augment_program(&parse_program(FEEDBACK).unwrap()).unwrap();
        assert!(reschedule_with_reuse(&aug, "B", &DirVector::new(vec![1])).is_ok());
        let err = reschedule_with_reuse(&aug, "B", &DirVector::new(vec![-1])).unwrap_err();
        assert!(matches!(err, Error::Unschedulable(_)), "{err}");
    }

    #[test]
    fn single_prefix_sum_both_directions() {
        let aug = augment_program(&parse_program(PREFIX).unwrap()).unwrap();
        assert!(reschedule_with_reuse(&aug, "B", &DirVector::new(vec![1])).is_ok());
        assert!(reschedule_with_reuse(&aug, "B", &DirVector::new(vec![-1])).is_ok());
    }
}
