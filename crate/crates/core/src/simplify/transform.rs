//! One application of the simplification transformation to a reduction.

use std::collections::BTreeSet;

use crate::complexity::ComplexityTerm;
use crate::error::{Error, Result};
use crate::ir::{ArrayDecl, ArrayKind, BinOp, Expr, Program, Statement, StmtKind};
use crate::polyhedra::{AffineForm, ConvexSet, DirVector, Relation, SetUnion, Space};
use crate::Rat;

/// Hands out labels and array names unused so far.
#[derive(Clone, Debug, Default)]
pub struct NameGen {
    taken: BTreeSet<String>,
}

impl NameGen {
    pub fn from_program(p: &Program) -> NameGen {
        let mut taken: BTreeSet<String> = p.arrays.iter().map(|a| a.name.clone()).collect();
        taken.extend(p.statements.iter().map(|s| s.label.clone()));
        NameGen { taken }
    }

    pub fn reserve(&mut self, name: &str) {
        self.taken.insert(name.to_string());
    }

    pub fn fresh(&mut self, base: &str) -> String {
        let name = if !self.taken.contains(base) {
            base.to_string()
        } else {
            (2..).map(|k| format!("{base}{k}")).find(|n| !self.taken.contains(n)).unwrap()
        };
        self.taken.insert(name.clone());
        name
    }
}

/// Which rewrite template a statement instantiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Template {
    AddOnly,
    ReuseOnly,
    AddReuse,
    ReuseSub,
    AddReuseSub,
    Add,
    Sub,
}

impl Template {
    pub fn suffix(self) -> &'static str {
        match self {
            Template::AddOnly => "AddOnly",
            Template::ReuseOnly => "Reuse",
            Template::AddReuse => "AddReuse",
            Template::ReuseSub => "ReuseSub",
            Template::AddReuseSub => "AddReuseSub",
            Template::Add => "Add",
            Template::Sub => "Sub",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct STResult {
    pub reuse: DirVector,
    /// Assignments to the reduction's array, one per convex piece.
    pub lhs_statements: Vec<(Template, Statement)>,
    /// Residual reductions into the ADD array over `P - P'`.
    pub add: Vec<Statement>,
    /// Residual reductions into the SUB array, already shifted back.
    pub sub: Vec<Statement>,
    pub arrays: Vec<ArrayDecl>,
}

impl STResult {
    pub fn statements(&self) -> Vec<Statement> {
        let mut out: Vec<Statement> = self.add.iter().chain(&self.sub).cloned().collect();
        out.extend(self.lhs_statements.iter().map(|(_, s)| s.clone()));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StOutcome {
    Applied(STResult),
    /// The new statements are not asymptotically cheaper than the original.
    NoGain { reuse: DirVector, detail: String },
}

fn union_of(space: &Space, sets: impl IntoIterator<Item = ConvexSet>) -> Result<SetUnion> {
    let mut out = SetUnion::empty(space.clone());
    for s in sets {
        out = out.union(&SetUnion::from_set(s))?;
    }
    Ok(out)
}

fn image(set: &ConvexSet, names: &[String], lhs: &[AffineForm]) -> Result<ConvexSet> {
    if set.is_empty() {
        return Ok(ConvexSet::empty(set.space().with_vars(names)));
    }
    Ok(Relation::from_map(set, names, lhs)?.range())
}

/// `t` is at most `p` in every parameter and differs from it.
pub fn strictly_below(t: &ComplexityTerm, p: &ComplexityTerm) -> bool {
    p.params.iter().all(|q| t.degree_of(q) <= p.degree_of(q)) && p.params.iter().any(|q| t.degree_of(q) < p.degree_of(q))
}

fn term(set: &ConvexSet) -> Result<ComplexityTerm> {
    set.cardinality_degree()
}

fn identity_forms(space: &Space) -> Vec<AffineForm> {
    (0..space.n_vars()).map(|k| AffineForm::var(space, k)).collect()
}

/// Domain pieces of `P - P'` and of `(P_int^u)^s ∩ P_sub` for `P' = P + r`.
pub fn residual_domains(s: &Statement, r: &DirVector, u_names: &[String]) -> Result<(Vec<ConvexSet>, Vec<ConvexSet>, ConvexSet)> {
    let p = &s.domain;
    let shifted = p.translate(r)?;
    let add: Vec<ConvexSet> = p.difference(&shifted)?.pieces;
    let int_u = image(&p.intersect(&shifted)?, u_names, &s.lhs)?;
    let back = int_u.preimage(s.space(), &s.lhs);
    let mut sub = Vec::new();
    for q in shifted.difference(p)?.pieces {
        let q = q.intersect(&back)?;
        if !q.is_empty() {
            sub.push(q);
        }
    }
    Ok((add, sub, int_u))
}

/// Rewrite reduction `s` (writing `decl`) to reuse the result at the cell
/// `u - r_u`, with `P' = P + r`.
pub fn apply_st(s: &Statement, decl: &ArrayDecl, r: &DirVector, names: &mut NameGen) -> Result<StOutcome> {
    let op = s.op().ok_or_else(|| Error::Invalid(format!("`{}` is not a reduction", s.label)))?;
    let sp = s.space().clone();
    if r.len() != sp.n_vars() {
        return Err(Error::SpaceMismatch(format!("reuse vector {r} for `{}`", s.label)));
    }
    if r.is_zero() {
        return Err(Error::Invalid("reuse vector must be nonzero".into()));
    }
    if !s.share_space().contains(&r.as_rats()) {
        return Err(Error::Refused(format!("`{}` does not share values along {r}", s.label)));
    }
    let r_u: Vec<Rat> = s.lhs.iter().map(|f| f.apply_linear(&r.entries)).collect();
    if r_u.iter().all(|v| v == &Rat::from_integer(0.into())) {
        return Err(Error::Refused(format!("{r} does not move the cell written by `{}`", s.label)));
    }
    let u_space = decl.index_space.space().clone();
    let u_names = u_space.iter_vars.clone();

    let (add_pieces, sub_pieces, int_u) = residual_domains(s, r, &u_names)?;
    if !sub_pieces.is_empty() && op.inverse_binop().is_none() {
        return Err(Error::Refused(format!(
            "`{}` needs subtraction along {r} but `{}` has no inverse",
            s.label,
            op.name()
        )));
    }

    let add_u = union_of(&u_space, add_pieces.iter().map(|q| image(q, &u_names, &s.lhs)).collect::<Result<Vec<_>>>()?)?;
    let sub_u = union_of(&u_space, sub_pieces.iter().map(|q| image(q, &u_names, &s.lhs)).collect::<Result<Vec<_>>>()?)?;
    let int_set = SetUnion::from_set(int_u.clone());

    let domains: Vec<(Template, SetUnion)> = vec![
        (Template::AddOnly, add_u.subtract_set(&int_u)?),
        (Template::ReuseOnly, int_set.subtract(&add_u)?.subtract(&sub_u)?),
        (Template::AddReuse, add_u.intersect_set(&int_u)?.subtract(&sub_u)?),
        (Template::ReuseSub, sub_u.intersect_set(&int_u)?.subtract(&add_u)?),
        (Template::AddReuseSub, sub_u.intersect_set(&int_u)?.intersect(&add_u)?),
    ];

    let whole = term(&s.domain)?;
    let mut worst: Vec<String> = Vec::new();
    let residual = add_pieces.iter().chain(&sub_pieces);
    let lhs_sets = domains.iter().flat_map(|(_, u)| u.pieces.iter());
    for q in residual.chain(lhs_sets) {
        let t = term(q)?;
        if !strictly_below(&t, &whole) {
            worst.push(format!("{t} on {}", q.body_string()));
        }
    }
    if !worst.is_empty() {
        return Ok(StOutcome::NoGain {
            reuse: r.clone(),
            detail: format!("original {whole}, new {}", worst.join("; ")),
        });
    }

    let ids = identity_forms(&u_space);
    let back: Vec<AffineForm> = ids
        .iter()
        .zip(&r_u)
        .map(|(f, d)| f.add_constant(&-d.clone()))
        .collect();
    let mut arrays = Vec::new();
    let mut fresh_array = |base: &str, names: &mut NameGen| {
        let name = names.fresh(base);
        arrays.push(ArrayDecl { name: name.clone(), index_space: decl.index_space.clone(), kind: ArrayKind::Intermediate });
        name
    };
    let add_array = (!add_pieces.is_empty()).then(|| fresh_array(&format!("{}Add", s.array), names));
    let sub_array = (!sub_pieces.is_empty()).then(|| fresh_array(&format!("{}Sub", s.array), names));

    let mut add = Vec::new();
    if let Some(a) = &add_array {
        for q in &add_pieces {
            add.push(Statement {
                label: names.fresh(&format!("{}{}", s.label, Template::Add.suffix())),
                array: a.clone(),
                lhs: s.lhs.clone(),
                kind: s.kind,
                rhs: s.rhs.clone(),
                domain: q.clone(),
            });
        }
    }
    let mut sub = Vec::new();
    if let Some(a) = &sub_array {
        let minus_r: Vec<AffineForm> = identity_forms(&sp)
            .iter()
            .zip(&r.entries)
            .map(|(f, d)| f.add_constant(&Rat::from_integer((-d).into())))
            .collect();
        let rhs = s.rhs.substitute(&sp, &minus_r);
        for q in &sub_pieces {
            sub.push(Statement {
                label: names.fresh(&format!("{}{}", s.label, Template::Sub.suffix())),
                array: a.clone(),
                lhs: s.lhs.clone(),
                kind: s.kind,
                rhs: rhs.clone(),
                domain: q.clone(),
            });
        }
    }

    let bin = op.binop();
    let prev = Expr::read(&s.array, back);
    let read_add = || Expr::read(add_array.as_deref().unwrap(), ids.clone());
    let read_sub = || Expr::read(sub_array.as_deref().unwrap(), ids.clone());
    let minus = |e: Expr| Expr::bin(op.inverse_binop().unwrap_or(BinOp::Sub), e, read_sub());
    let mut lhs_statements = Vec::new();
    for (tpl, set) in domains {
        if set.pieces.iter().all(|q| q.is_empty()) {
            continue;
        }
        let rhs = match tpl {
            Template::AddOnly => read_add(),
            Template::ReuseOnly => prev.clone(),
            Template::AddReuse => Expr::bin(bin, prev.clone(), read_add()),
            Template::ReuseSub => minus(prev.clone()),
            Template::AddReuseSub => minus(Expr::bin(bin, prev.clone(), read_add())),
            Template::Add | Template::Sub => unreachable!(),
        };
        for q in set.pieces.into_iter().filter(|q| !q.is_empty()) {
            lhs_statements.push((
                tpl,
                Statement {
                    label: names.fresh(&format!("{}{}", s.label, tpl.suffix())),
                    array: s.array.clone(),
                    lhs: ids.clone(),
                    kind: StmtKind::Assign,
                    rhs: rhs.clone(),
                    domain: q,
                },
            ));
        }
    }
    Ok(StOutcome::Applied(STResult { reuse: r.clone(), lhs_statements, add, sub, arrays }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;
    use crate::polyhedra::binding;

    const PREFIX: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                          S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n";

    fn run(text: &str, r: Vec<i64>) -> (Program, STResult) {
        let p = parse_program(text).unwrap();
        let s = p.statements[0].clone();
        let mut names = NameGen::from_program(&p);
        match apply_st(&s, p.array(&s.array).unwrap(), &DirVector::new(r), &mut names).unwrap() {
            StOutcome::Applied(st) => (p, st),
            other => panic!("{other:?}"),
        }
    }

    fn sources(st: &STResult) -> Vec<String> {
        st.statements().iter().map(Statement::to_source).collect()
    }

    #[test]
    fn prefix_sum_forward_matches_listing_shape() {
        let (_, st) = run(PREFIX, vec![1, 0]);
        assert_eq!(
            sources(&st),
            vec![
                "S1Add: BAdd[i] += A[j] : { [i,j] : i = j and i <= N - 1 and j >= 0 };",
                "S1AddOnly: B[i] = BAdd[i] : { [i] : i = 0 and i <= N - 1 };",
                "S1AddReuse: B[i] = B[i - 1] + BAdd[i] : { [i] : i <= N - 1 and i >= 1 };",
            ]
        );
        assert!(st.sub.is_empty());
    }

    #[test]
    fn prefix_sum_backward_subtracts() {
        let (_, st) = run(PREFIX, vec![-1, 0]);
        let src = sources(&st);
        assert_eq!(st.add.len(), 1);
        assert_eq!(st.sub.len(), 1);
        assert!(src.iter().any(|s| s.starts_with("S1ReuseSub: B[i] = B[i + 1] - BSub[i]")), "{src:?}");
        assert!(src.iter().any(|s| s.starts_with("S1AddOnly: B[i] = BAdd[i]")), "{src:?}");
        // the init row is the full column reduction at i = N - 1
        let b = binding(&[("N", 5)]);
        let pts = st.add[0].domain.enumerate_points(&b).unwrap();
        assert_eq!(pts, (0..5).map(|j| vec![4, j]).collect::<Vec<_>>());
        let sub_pts = st.sub[0].domain.enumerate_points(&b).unwrap();
        assert_eq!(sub_pts, (0..4).map(|i| vec![i, i + 1]).collect::<Vec<_>>());
    }

    #[test]
    fn lhs_domains_partition_the_image() {
        for r in [vec![1, 0], vec![-1, 0]] {
            let (p, st) = run(PREFIX, r);
            let b = binding(&[("N", 7)]);
            let mut cells: Vec<Vec<i64>> = Vec::new();
            for (_, s) in &st.lhs_statements {
                cells.extend(s.domain.enumerate_points(&b).unwrap());
            }
            cells.sort();
            let n = cells.len();
            cells.dedup();
            assert_eq!(n, cells.len(), "overlapping LHS pieces");
            let whole = p.statements[0].write_image(&["i".to_string()]).unwrap();
            assert_eq!(cells, whole.enumerate_points(&b).unwrap());
        }
    }

    #[test]
    fn min_refuses_the_backward_direction() {
        let text = PREFIX.replace("+=", "min=");
        let p = parse_program(&text).unwrap();
        let s = &p.statements[0];
        let mut names = NameGen::from_program(&p);
        let err = apply_st(s, p.array("B").unwrap(), &DirVector::new(vec![-1, 0]), &mut names).unwrap_err();
        assert!(matches!(err, Error::Refused(_)), "{err}");
        let (_, st) = run(&text, vec![1, 0]);
        assert!(st.sub.is_empty());
    }

    #[test]
    fn fixed_width_direction_has_no_gain() {
        let text = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                    S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j < 3};\n";
        let p = parse_program(text).unwrap();
        let mut names = NameGen::from_program(&p);
        let out = apply_st(&p.statements[0], p.array("B").unwrap(), &DirVector::new(vec![1, 0]), &mut names).unwrap();
        assert!(matches!(out, StOutcome::NoGain { .. }), "{out:?}");
    }

    #[test]
    fn unshared_direction_is_refused() {
        let p = parse_program(PREFIX).unwrap();
        let mut names = NameGen::from_program(&p);
        let err = apply_st(&p.statements[0], p.array("B").unwrap(), &DirVector::new(vec![0, 1]), &mut names).unwrap_err();
        assert!(matches!(err, Error::Refused(_)));
    }
}
