//! Pretty printer; its output reparses to the same program.

use std::fmt::{self, Write as _};

use num_traits::{One, Signed, Zero};

use super::{BinOp, CmpOp, Expr, Program, Statement, StmtKind};
use crate::polyhedra::{AffineForm, Space};
use crate::Rat;

const ADDITIVE: u8 = 1;
const MULTIPLICATIVE: u8 = 2;
const ATOM: u8 = 3;

fn form_level(f: &AffineForm) -> u8 {
    let nonzero: Vec<&Rat> = f.row().iter().filter(|c| !c.is_zero()).collect();
    if nonzero.len() > 1 {
        ADDITIVE
    } else if nonzero.iter().any(|c| !c.is_one()) {
        MULTIPLICATIVE
    } else {
        ATOM
    }
}

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if c.is_negative() || !c.is_integer() => 0,
        Expr::Const(_) | Expr::Read { .. } | Expr::Call { .. } => ATOM,
        Expr::Index(f) => form_level(f),
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => ADDITIVE,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => MULTIPLICATIVE,
        Expr::Bin(BinOp::Min | BinOp::Max, ..) => ATOM,
        Expr::Ternary(..) => 0,
    }
}

fn write_at(out: &mut String, e: &Expr, space: &Space, min_level: u8) {
    if level(e) < min_level {
        out.push('(');
        write_expr(out, e, space);
        out.push(')');
    } else {
        write_expr(out, e, space);
    }
}

fn write_indices(out: &mut String, idx: &[AffineForm], space: &Space) {
    let parts: Vec<String> = idx.iter().map(|f| f.display(space).to_string()).collect();
    let _ = write!(out, "[{}]", parts.join(", "));
}

pub(crate) fn write_expr(out: &mut String, e: &Expr, space: &Space) {
    match e {
        Expr::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Expr::Index(f) => {
            let _ = write!(out, "{}", f.display(space));
        }
        Expr::Read { array, indices } => {
            out.push_str(array);
            write_indices(out, indices, space);
        }
        Expr::Bin(op @ (BinOp::Min | BinOp::Max), a, b) => {
            out.push_str(if *op == BinOp::Min { "min(" } else { "max(" });
            write_at(out, a, space, 1);
            out.push_str(", ");
            write_at(out, b, space, 1);
            out.push(')');
        }
        Expr::Bin(op, a, b) => {
            let (lvl, sym) = match op {
                BinOp::Add => (ADDITIVE, " + "),
                BinOp::Sub => (ADDITIVE, " - "),
                BinOp::Mul => (MULTIPLICATIVE, " * "),
                _ => (MULTIPLICATIVE, " / "),
            };
            write_at(out, a, space, lvl);
            out.push_str(sym);
            write_at(out, b, space, lvl + 1);
        }
        Expr::Ternary(g, a, b) => {
            write_at(out, &g.lhs, space, ADDITIVE);
            out.push_str(match g.op {
                CmpOp::Eq => " == ",
                CmpOp::Lt => " < ",
                CmpOp::Le => " <= ",
            });
            write_at(out, &g.rhs, space, ADDITIVE);
            out.push_str(" ? ");
            write_at(out, a, space, 1);
            out.push_str(" : ");
            write_at(out, b, space, 1);
        }
        Expr::Call { name, args } => {
            out.push_str(name);
            out.push('(');
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_at(out, a, space, 1);
            }
            out.push(')');
        }
    }
}

pub fn expr_string(e: &Expr, space: &Space) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, space);
    s
}

impl Statement {
    /// One line in the input format.
    pub fn to_source(&self) -> String {
        let space = self.space();
        let mut s = format!("{}: {}", self.label, self.array);
        write_indices(&mut s, &self.lhs, space);
        let op = match self.kind {
            StmtKind::Assign => "=",
            StmtKind::Reduce(op) => op.token(),
        };
        let _ = write!(s, " {op} ");
        write_at(&mut s, &self.rhs, space, 1);
        let _ = write!(s, " : {};", self.domain.body_string());
        s
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.params.is_empty() {
            writeln!(f, "param {};", self.params.join(", "))?;
        }
        for a in &self.arrays {
            writeln!(f, "{} {} : {};", a.kind.keyword(), a.name, a.index_space.body_string())?;
        }
        for s in &self.statements {
            writeln!(f, "{}", s.to_source())?;
        }
        Ok(())
    }
}

pub fn pretty_print(p: &Program) -> String {
    p.to_string()
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    const GUARDED: &str = "param N;\ninput Z : {[i] : 0 <= i < N};\ninput Obs : {[i] : 0 <= i < N};\n\
        output C : {[i] : 0 <= i < N};\noutput D : {[i] : 0 <= i < N};\n\
        S0: C[i] += (Z[j] == 0 ? Obs[j] : 0) : {[i,j] : 0 <= j < i < N};\n\
        S1: D[i] = -Obs[i] / 2 - (Z[i] - 1) * min(Obs[N - 1 - i], 3*i + 1) : {[i] : 0 <= i < N};\n";

    #[test]
    fn round_trip() {
        let p = parse_program(GUARDED).unwrap();
        let text = pretty_print(&p);
        let q = parse_program(&text).unwrap();
        assert_eq!(p, q, "{text}");
        assert_eq!(pretty_print(&q), text);
    }
}
