//! Equational array IR: declarations, statements, expressions and accesses.

mod parse;
mod print;
mod ssa;

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{LinearSpace, Row};
use crate::polyhedra::{AffineForm, ConvexSet, Relation, Space};
use crate::Rat;

pub use parse::parse_program;
pub use print::{expr_string, pretty_print};
pub use ssa::{check_array_ssa, check_array_ssa_at, probe_binding, validate_program, SsaViolation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArrayKind {
    Input,
    Intermediate,
    Output,
}

impl ArrayKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ArrayKind::Input => "input",
            ArrayKind::Intermediate => "intermediate",
            ArrayKind::Output => "output",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrayDecl {
    pub name: String,
    pub index_space: ConvexSet,
    pub kind: ArrayKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReductionOp {
    Sum,
    Product,
    Min,
    Max,
}

impl ReductionOp {
    pub fn name(self) -> &'static str {
        match self {
            ReductionOp::Sum => "sum",
            ReductionOp::Product => "product",
            ReductionOp::Min => "min",
            ReductionOp::Max => "max",
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ReductionOp::Sum => "+=",
            ReductionOp::Product => "*=",
            ReductionOp::Min => "min=",
            ReductionOp::Max => "max=",
        }
    }

    /// Identity element; min and max have none among the rationals.
    pub fn identity(self) -> Option<Rat> {
        match self {
            ReductionOp::Sum => Some(Rat::zero()),
            ReductionOp::Product => Some(Rat::one()),
            ReductionOp::Min | ReductionOp::Max => None,
        }
    }

    pub fn has_inverse(self) -> bool {
        matches!(self, ReductionOp::Sum | ReductionOp::Product)
    }

    pub fn combine(self, a: &Rat, b: &Rat) -> Rat {
        match self {
            ReductionOp::Sum => a + b,
            ReductionOp::Product => a * b,
            ReductionOp::Min => a.min(b).clone(),
            ReductionOp::Max => a.max(b).clone(),
        }
    }

    /// Expression-level operator for `a ⊕ b`.
    pub fn binop(self) -> BinOp {
        match self {
            ReductionOp::Sum => BinOp::Add,
            ReductionOp::Product => BinOp::Mul,
            ReductionOp::Min => BinOp::Min,
            ReductionOp::Max => BinOp::Max,
        }
    }

    /// Expression-level operator for `a ⊖ b`, when the inverse exists.
    pub fn inverse_binop(self) -> Option<BinOp> {
        match self {
            ReductionOp::Sum => Some(BinOp::Sub),
            ReductionOp::Product => Some(BinOp::Div),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Assign,
    Reduce(ReductionOp),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Guard {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Const(Rat),
    /// Affine value of the iteration variables and parameters.
    Index(AffineForm),
    Read { array: String, indices: Vec<AffineForm> },
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Guard>, Box<Expr>, Box<Expr>),
    Call { name: String, args: Vec<Expr> },
}

impl Expr {
    pub fn read(array: &str, indices: Vec<AffineForm>) -> Expr {
        Expr::Read { array: array.to_string(), indices }
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Visit every node, guards included.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Ternary(g, a, b) => {
                g.lhs.visit(f);
                g.rhs.visit(f);
                a.visit(f);
                b.visit(f);
            }
            Expr::Call { args, .. } => args.iter().for_each(|e| e.visit(f)),
            _ => {}
        }
    }

    /// All array reads `(array, indices)`, guard reads included.
    pub fn reads(&self) -> Vec<(&str, &[AffineForm])> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Read { array, indices } = e {
                out.push((array.as_str(), indices.as_slice()));
            }
        });
        out
    }

    /// Every affine form the value depends on: read indices and index values.
    pub fn affine_dependencies(&self) -> Vec<&AffineForm> {
        let mut out = Vec::new();
        self.visit(&mut |e| match e {
            Expr::Read { indices, .. } => out.extend(indices.iter()),
            Expr::Index(f) => out.push(f),
            _ => {}
        });
        out
    }

    pub fn calls(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Call { name, .. } = e {
                out.push(name.as_str());
            }
        });
        out
    }

    /// Rewrite every affine form by substituting the variables.
    pub fn substitute(&self, target: &Space, exprs: &[AffineForm]) -> Expr {
        let sub = |f: &AffineForm| f.substitute(target, exprs);
        match self {
            Expr::Const(c) => Expr::Const(c.clone()),
            Expr::Index(f) => Expr::Index(sub(f)),
            Expr::Read { array, indices } => Expr::Read { array: array.clone(), indices: indices.iter().map(sub).collect() },
            Expr::Bin(op, a, b) => Expr::bin(*op, a.substitute(target, exprs), b.substitute(target, exprs)),
            Expr::Ternary(g, a, b) => Expr::Ternary(
                Box::new(Guard { lhs: g.lhs.substitute(target, exprs), op: g.op, rhs: g.rhs.substitute(target, exprs) }),
                Box::new(a.substitute(target, exprs)),
                Box::new(b.substitute(target, exprs)),
            ),
            Expr::Call { name, args } => Expr::Call {
                name: name.clone(),
                args: args.iter().map(|e| e.substitute(target, exprs)).collect(),
            },
        }
    }

    /// Rename arrays in reads.
    pub fn rename_arrays(&self, f: &dyn Fn(&str) -> Option<String>) -> Expr {
        match self {
            Expr::Read { array, indices } => Expr::Read {
                array: f(array).unwrap_or_else(|| array.clone()),
                indices: indices.clone(),
            },
            Expr::Bin(op, a, b) => Expr::bin(*op, a.rename_arrays(f), b.rename_arrays(f)),
            Expr::Ternary(g, a, b) => Expr::Ternary(
                Box::new(Guard { lhs: g.lhs.rename_arrays(f), op: g.op, rhs: g.rhs.rename_arrays(f) }),
                Box::new(a.rename_arrays(f)),
                Box::new(b.rename_arrays(f)),
            ),
            Expr::Call { name, args } => {
                Expr::Call { name: name.clone(), args: args.iter().map(|e| e.rename_arrays(f)).collect() }
            }
            other => other.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub label: String,
    pub array: String,
    pub lhs: Vec<AffineForm>,
    pub kind: StmtKind,
    pub rhs: Expr,
    pub domain: ConvexSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessInfo {
    pub write: Relation,
    pub reads: Vec<(String, Relation)>,
}

impl Statement {
    pub fn space(&self) -> &Space {
        self.domain.space()
    }

    pub fn is_reduce(&self) -> bool {
        matches!(self.kind, StmtKind::Reduce(_))
    }

    pub fn op(&self) -> Option<ReductionOp> {
        match self.kind {
            StmtKind::Reduce(op) => Some(op),
            StmtKind::Assign => None,
        }
    }

    /// Image of the domain under the LHS map, over the array's index names.
    pub fn write_image(&self, index_names: &[String]) -> Result<ConvexSet> {
        let rel = Relation::from_map(&self.domain, index_names, &self.lhs)?;
        Ok(rel.range())
    }

    /// Linear parts of the LHS map as rows (one per array dimension).
    pub fn lhs_linear(&self) -> Vec<Row<Rat>> {
        self.lhs.iter().map(|f| f.coeffs().to_vec()).collect()
    }

    /// Variables no read, guard or index value depends on.
    pub fn free_index_vars(&self) -> Vec<String> {
        let deps = self.rhs.affine_dependencies();
        self.space()
            .iter_vars
            .iter()
            .enumerate()
            .filter(|(k, _)| deps.iter().all(|f| f.coeffs()[*k].is_zero()))
            .map(|(_, v)| v.clone())
            .collect()
    }

    /// Directions along which the RHS value is unchanged.
    pub fn share_space(&self) -> LinearSpace<Rat> {
        let n = self.space().n_vars();
        let rows: Vec<Row<Rat>> = self.rhs.affine_dependencies().iter().map(|f| f.coeffs().to_vec()).collect();
        if rows.is_empty() {
            return LinearSpace::full(n);
        }
        LinearSpace::kernel(n, &rows)
    }
}

pub fn access_relations(s: &Statement, p: &Program) -> Result<AccessInfo> {
    let names = |a: &str| -> Result<Vec<String>> {
        Ok(p.array(a)
            .ok_or_else(|| Error::Invalid(format!("undeclared array `{a}`")))?
            .index_space
            .space()
            .iter_vars
            .clone())
    };
    let write = Relation::from_map(&s.domain, &names(&s.array)?, &s.lhs)?;
    let mut reads = Vec::new();
    for (a, idx) in s.rhs.reads() {
        reads.push((a.to_string(), Relation::from_map(&s.domain, &names(a)?, idx)?));
    }
    Ok(AccessInfo { write, reads })
}

/// The projection of a reduction: body instance to result cell.
pub fn reduction_projection(s: &Statement, p: &Program) -> Result<Relation> {
    if !s.is_reduce() {
        return Err(Error::Invalid(format!("`{}` is not a reduction", s.label)));
    }
    Ok(access_relations(s, p)?.write)
}

pub fn free_index_vars(s: &Statement) -> Vec<String> {
    s.free_index_vars()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub params: Vec<String>,
    pub arrays: Vec<ArrayDecl>,
    pub statements: Vec<Statement>,
    pub intrinsics: Vec<String>,
}

impl Program {
    pub fn array(&self, name: &str) -> Option<&ArrayDecl> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn statement(&self, label: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.label == label)
    }

    pub fn statement_index(&self, label: &str) -> Option<usize> {
        self.statements.iter().position(|s| s.label == label)
    }

    pub fn writers_of(&self, array: &str) -> Vec<&Statement> {
        self.statements.iter().filter(|s| s.array == array).collect()
    }

    pub fn readers_of(&self, array: &str) -> Vec<&Statement> {
        self.statements.iter().filter(|s| s.rhs.reads().iter().any(|(a, _)| *a == array)).collect()
    }

    /// Arrays written by reductions, in first-writer order.
    pub fn reduction_arrays(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.statements {
            if s.is_reduce() && !out.contains(&s.array) {
                out.push(s.array.clone());
            }
        }
        out
    }

    pub fn index_names(&self, array: &str) -> Result<Vec<String>> {
        Ok(self
            .array(array)
            .ok_or_else(|| Error::Invalid(format!("undeclared array `{array}`")))?
            .index_space
            .space()
            .iter_vars
            .clone())
    }

    /// Recompute the referenced intrinsic names.
    pub fn refresh_intrinsics(&mut self) {
        let mut names = BTreeSet::new();
        for s in &self.statements {
            for c in s.rhs.calls() {
                names.insert(c.to_string());
            }
        }
        self.intrinsics = names.into_iter().collect();
    }

    /// A label not yet used by a statement or array.
    pub fn fresh_name(&self, base: &str) -> String {
        let taken = |n: &str| self.statement(n).is_some() || self.array(n).is_some();
        if !taken(base) {
            return base.to_string();
        }
        (2..).map(|k| format!("{base}{k}")).find(|n| !taken(n)).unwrap()
    }

    pub fn parse(text: &str) -> Result<Program> {
        parse_program(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::binding;

    const PREFIX: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\nS1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n";

    #[test]
    fn free_vars_and_share_space() {
        let p = parse_program(PREFIX).unwrap();
        let s = &p.statements[0];
        assert_eq!(s.free_index_vars(), vec!["i".to_string()]);
        let sh = s.share_space();
        assert_eq!(sh.rank(), 1);
        assert!(sh.contains(&[Rat::one(), Rat::zero()]));
    }

    #[test]
    fn projection_of_prefix_sum() {
        let p = parse_program(PREFIX).unwrap();
        let proj = reduction_projection(&p.statements[0], &p).unwrap();
        let pairs = proj.pairs(&binding(&[("N", 4)])).unwrap();
        assert_eq!(pairs.len(), 10);
        assert!(pairs.iter().all(|(x, y)| y[0] == x[0]));
        let acc = access_relations(&p.statements[0], &p).unwrap();
        assert_eq!(acc.reads.len(), 1);
        assert!(acc.reads[0].1.pairs(&binding(&[("N", 4)])).unwrap().iter().all(|(x, y)| y[0] == x[1]));
    }
}
