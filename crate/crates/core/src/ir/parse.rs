//! Text format parser.
//!
//! ```text
//! param N;
//! input A : [N] {[i] : 0 <= i < N};
//! output B : {[i] : 0 <= i < N};
//! S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};
//! ```

use num_traits::{One, Zero};

use super::{ArrayDecl, ArrayKind, BinOp, CmpOp, Expr, Guard, Program, ReductionOp, Statement, StmtKind};
use crate::error::{Error, Result};
use crate::exec::is_intrinsic;
use crate::polyhedra::parse::{describe, parse_affine, parse_set_body, Cursor, Tok};
use crate::polyhedra::{AffineForm, ConvexSet, Space};
use crate::Rat;

struct PendingDecl {
    name: String,
    kind: ArrayKind,
    extent: Option<ConvexSet>,
    at: (usize, usize),
}

pub fn parse_program(text: &str) -> Result<Program> {
    let mut c = Cursor::new(text)?;
    let mut params: Vec<String> = Vec::new();
    let mut decls: Vec<PendingDecl> = Vec::new();
    let mut statements: Vec<(Statement, (usize, usize))> = Vec::new();
    while !c.at_eof() {
        let at = c.location();
        let head = c.ident()?;
        match head.as_str() {
            "param" => loop {
                let name = c.ident()?;
                if params.contains(&name) {
                    return c.error(format!("parameter `{name}` declared twice"));
                }
                params.push(name);
                if c.eat(";") {
                    break;
                }
                c.expect(",")?;
            },
            "input" | "output" | "intermediate" | "local" => {
                let kind = match head.as_str() {
                    "input" => ArrayKind::Input,
                    "output" => ArrayKind::Output,
                    _ => ArrayKind::Intermediate,
                };
                let name = c.ident()?;
                if decls.iter().any(|d| d.name == name) {
                    return c.error(format!("array `{name}` declared twice"));
                }
                let extent = if c.eat(":") {
                    if c.is_punct("[") {
                        for p in c.name_list()? {
                            if !params.contains(&p) {
                                return c.error(format!("unknown parameter `{p}`"));
                            }
                        }
                    }
                    Some(parse_set_body(&mut c, &params)?)
                } else {
                    None
                };
                c.expect(";")?;
                decls.push(PendingDecl { name, kind, extent, at });
            }
            _ => {
                c.expect(":")?;
                if statements.iter().any(|(s, _)| s.label == head) {
                    return c.error(format!("statement label `{head}` used twice"));
                }
                let s = parse_statement(&mut c, head, &params, &decls)?;
                statements.push((s, at));
            }
        }
    }

    let mut arrays = Vec::new();
    for d in decls {
        let index_space = match d.extent {
            Some(e) => e,
            None => default_extent(&d.name, &statements)
                .ok_or_else(|| Error::Parse {
                    line: d.at.0,
                    col: d.at.1,
                    msg: format!("array `{}` needs an explicit extent", d.name),
                })??,
        };
        arrays.push(ArrayDecl { name: d.name, index_space, kind: d.kind });
    }
    for (s, at) in &statements {
        let err = |msg: String| Error::Parse { line: at.0, col: at.1, msg };
        let decl = arrays
            .iter()
            .find(|a| a.name == s.array)
            .ok_or_else(|| err(format!("unknown array `{}`", s.array)))?;
        if decl.index_space.space().n_vars() != s.lhs.len() {
            return Err(err(format!("`{}` indexes `{}` with the wrong arity", s.label, s.array)));
        }
        for (a, idx) in s.rhs.reads() {
            let decl = arrays.iter().find(|d| d.name == a).ok_or_else(|| err(format!("unknown identifier `{a}`")))?;
            if decl.index_space.space().n_vars() != idx.len() {
                return Err(err(format!("`{}` reads `{a}` with the wrong arity", s.label)));
            }
        }
    }
    let mut p = Program { params, arrays, statements: statements.into_iter().map(|(s, _)| s).collect(), intrinsics: Vec::new() };
    p.refresh_intrinsics();
    Ok(p)
}

fn default_extent(name: &str, statements: &[(Statement, (usize, usize))]) -> Option<Result<ConvexSet>> {
    let writers: Vec<&Statement> = statements.iter().map(|(s, _)| s).filter(|s| s.array == name).collect();
    let first = writers.first()?;
    let names: Vec<String> = (0..first.lhs.len()).map(|k| format!("d{k}")).collect();
    let images: Result<Vec<ConvexSet>> = writers.iter().map(|s| s.write_image(&names)).collect();
    Some(images.and_then(|imgs| {
        let base = imgs[0].clone();
        for other in &imgs[1..] {
            if !(base.subset_of(other)? && other.subset_of(&base)?) {
                return Err(Error::Invalid(format!("array `{name}` has several distinct write images; declare its extent")));
            }
        }
        Ok(base)
    }))
}

/// Find the `: {` that starts the domain of the statement beginning at the cursor.
fn domain_start(c: &mut Cursor) -> Result<usize> {
    let start = c.pos();
    let mut depth = 0i32;
    let mut found = None;
    loop {
        match c.peek().clone() {
            Tok::Eof => {
                c.set_pos(start);
                return c.error("statement is missing `;`");
            }
            Tok::Punct(p) => {
                match p {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    ";" if depth == 0 => break,
                    ":" if depth == 0 && matches!(c.peek_at(1), Tok::Punct("{")) => found = Some(c.pos()),
                    _ => {}
                }
                c.next();
            }
            _ => {
                c.next();
            }
        }
    }
    c.set_pos(start);
    found.map_or_else(|| c.error("statement is missing its `: { domain }`"), Ok)
}

fn parse_statement(c: &mut Cursor, label: String, params: &[String], decls: &[PendingDecl]) -> Result<Statement> {
    let lhs_start = c.pos();
    let dom_pos = domain_start(c)?;
    c.set_pos(dom_pos);
    c.expect(":")?;
    let domain = parse_set_body(c, params)?;
    c.expect(";")?;
    let end = c.pos();
    c.set_pos(lhs_start);

    let space = domain.space().clone();
    let array = c.ident()?;
    if space.column(&array).is_some() {
        return c.error(format!("`{array}` is an index name, not an array"));
    }
    c.expect("[")?;
    let mut lhs = Vec::new();
    if !c.is_punct("]") {
        loop {
            lhs.push(parse_affine(c, &space)?);
            if !c.eat(",") {
                break;
            }
        }
    }
    c.expect("]")?;
    let kind = if c.eat("=") {
        StmtKind::Assign
    } else if c.eat("+=") {
        StmtKind::Reduce(ReductionOp::Sum)
    } else if c.eat("*=") {
        StmtKind::Reduce(ReductionOp::Product)
    } else if (c.is_ident("min") || c.is_ident("max")) && matches!(c.peek_at(1), Tok::Punct("=")) {
        let op = if c.is_ident("min") { ReductionOp::Min } else { ReductionOp::Max };
        c.next();
        c.next();
        StmtKind::Reduce(op)
    } else {
        return c.error(format!("expected `=`, `+=`, `*=`, `min=` or `max=`, found {}", describe(c.peek())));
    };
    let ctx = Ctx { space: &space, decls };
    let rhs = ctx.expr(c)?;
    if c.pos() != dom_pos {
        return c.error(format!("unexpected {} in expression", describe(c.peek())));
    }
    c.set_pos(end);
    Ok(Statement { label, array, lhs, kind, rhs, domain })
}

struct Ctx<'a> {
    space: &'a Space,
    decls: &'a [PendingDecl],
}

fn fold(op: BinOp, a: Expr, b: Expr) -> Expr {
    let as_form = |e: &Expr, sp: Option<&AffineForm>| -> Option<AffineForm> {
        match e {
            Expr::Index(f) => Some(f.clone()),
            Expr::Const(v) => sp.map(|s| AffineForm::constant_like(s, v.clone())),
            _ => None,
        }
    };
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => {
            let v = match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div if !y.is_zero() => x / y,
                BinOp::Min => x.min(y).clone(),
                BinOp::Max => x.max(y).clone(),
                BinOp::Div => return Expr::bin(op, a, b),
            };
            Expr::Const(v)
        }
        (Expr::Index(f), _) | (_, Expr::Index(f)) => {
            let (Some(fa), Some(fb)) = (as_form(&a, Some(f)), as_form(&b, Some(f))) else {
                return Expr::bin(op, a, b);
            };
            let out = match op {
                BinOp::Add => fa.add(&fb),
                BinOp::Sub => fa.sub(&fb),
                BinOp::Mul if fa.is_constant() => fb.scale(fa.constant_term()),
                BinOp::Mul if fb.is_constant() => fa.scale(fb.constant_term()),
                BinOp::Div if fb.is_constant() && !fb.constant_term().is_zero() => {
                    fa.scale(&(Rat::one() / fb.constant_term()))
                }
                _ => return Expr::bin(op, a, b),
            };
            if out.is_constant() {
                Expr::Const(out.constant_term().clone())
            } else {
                Expr::Index(out)
            }
        }
        _ => Expr::bin(op, a, b),
    }
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Const(v) => Expr::Const(-v),
        Expr::Index(f) => Expr::Index(f.neg()),
        other => Expr::bin(BinOp::Sub, Expr::Const(Rat::zero()), other),
    }
}

impl Ctx<'_> {
    fn expr(&self, c: &mut Cursor) -> Result<Expr> {
        let lhs = self.additive(c)?;
        let op = if c.eat("==") {
            Some((CmpOp::Eq, false))
        } else if c.eat("<=") {
            Some((CmpOp::Le, false))
        } else if c.eat(">=") {
            Some((CmpOp::Le, true))
        } else if c.eat("<") {
            Some((CmpOp::Lt, false))
        } else if c.eat(">") {
            Some((CmpOp::Lt, true))
        } else {
            None
        };
        let Some((op, swap)) = op else { return Ok(lhs) };
        let rhs = self.additive(c)?;
        c.expect("?")?;
        let then = self.expr(c)?;
        c.expect(":")?;
        let other = self.expr(c)?;
        let (l, r) = if swap { (rhs, lhs) } else { (lhs, rhs) };
        Ok(Expr::Ternary(Box::new(Guard { lhs: l, op, rhs: r }), Box::new(then), Box::new(other)))
    }

    fn additive(&self, c: &mut Cursor) -> Result<Expr> {
        let mut acc = self.term(c)?;
        loop {
            if c.eat("+") {
                acc = fold(BinOp::Add, acc, self.term(c)?);
            } else if c.is_punct("-") {
                c.next();
                acc = fold(BinOp::Sub, acc, self.term(c)?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&self, c: &mut Cursor) -> Result<Expr> {
        let mut acc = self.unary(c)?;
        loop {
            if c.eat("*") {
                acc = fold(BinOp::Mul, acc, self.unary(c)?);
            } else if c.is_punct("/") {
                c.next();
                acc = fold(BinOp::Div, acc, self.unary(c)?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&self, c: &mut Cursor) -> Result<Expr> {
        if c.eat("-") {
            return Ok(negate(self.unary(c)?));
        }
        self.primary(c)
    }

    fn primary(&self, c: &mut Cursor) -> Result<Expr> {
        match c.peek().clone() {
            Tok::Int(v) => {
                c.next();
                Ok(Expr::Const(Rat::from_integer(v.into())))
            }
            Tok::Punct("(") => {
                c.next();
                let e = self.expr(c)?;
                c.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if matches!(c.peek_at(1), Tok::Punct("[")) {
                    c.next();
                    c.next();
                    let mut idx = Vec::new();
                    if !c.is_punct("]") {
                        loop {
                            idx.push(parse_affine(c, self.space)?);
                            if !c.eat(",") {
                                break;
                            }
                        }
                    }
                    c.expect("]")?;
                    return Ok(Expr::read(&name, idx));
                }
                if matches!(c.peek_at(1), Tok::Punct("(")) {
                    if name != "min" && name != "max" && !is_intrinsic(&name) {
                        return c.error(format!("unknown intrinsic `{name}`"));
                    }
                    c.next();
                    c.next();
                    let mut args = Vec::new();
                    if !c.is_punct(")") {
                        loop {
                            args.push(self.expr(c)?);
                            if !c.eat(",") {
                                break;
                            }
                        }
                    }
                    c.expect(")")?;
                    if name == "min" || name == "max" {
                        if args.len() != 2 {
                            return c.error(format!("`{name}` takes two arguments"));
                        }
                        let b = args.pop().unwrap();
                        let a = args.pop().unwrap();
                        return Ok(fold(if name == "min" { BinOp::Min } else { BinOp::Max }, a, b));
                    }
                    return Ok(Expr::Call { name, args });
                }
                match self.space.column(&name) {
                    Some(col) if col < self.space.n_vars() => {
                        c.next();
                        Ok(Expr::Index(AffineForm::var(self.space, col)))
                    }
                    Some(col) => {
                        c.next();
                        Ok(Expr::Index(AffineForm::param(self.space, col - self.space.n_vars())))
                    }
                    None if self.decls.iter().any(|d| d.name == name) => {
                        c.error(format!("array `{name}` used without indices"))
                    }
                    None => c.error(format!("unknown identifier `{name}`")),
                }
            }
            other => c.error(format!("expected expression, found {}", describe(&other))),
        }
    }
}

impl AffineForm {
    /// Constant form in the same space as `like`.
    pub fn constant_like(like: &AffineForm, c: Rat) -> AffineForm {
        let mut row = vec![Rat::zero(); like.row().len()];
        *row.last_mut().unwrap() = c;
        AffineForm::from_row(like.n_vars(), row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eq5_program() {
        let text = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                    S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n\
                    S2: A[i+1] = f(B[i]) : {[i] : 0 <= i < N - 1};\n";
        let p = parse_program(text).unwrap();
        assert_eq!(p.statements.len(), 2);
        assert_eq!(p.intrinsics, vec!["f".to_string()]);
    }

    #[test]
    fn nonaffine_index_is_rejected() {
        let text = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                    S1: B[i*i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n";
        let err = parse_program(text).unwrap_err();
        assert!(err.to_string().contains("non-affine"), "{err}");
    }

    #[test]
    fn ternary_guard_and_errors() {
        let text = "param N;\ninput Z : {[i] : 0 <= i < N};\ninput Obs : {[i] : 0 <= i < N};\n\
                    output C : {[i] : 0 <= i < N};\n\
                    S0: C[i] += (Z[j] == 0 ? Obs[j] : 0) : {[i,j] : 0 <= j < i < N};\n";
        let p = parse_program(text).unwrap();
        assert_eq!(p.statements[0].rhs.reads().len(), 2);
        let bad = text.replace("Obs[j] :", "h(Obs[j]) :");
        assert!(parse_program(&bad).unwrap_err().to_string().contains("unknown intrinsic"));
        let bad = text.replace("Z[j] ==", "Q[j] ==");
        assert!(parse_program(&bad).unwrap_err().to_string().contains("unknown identifier"));
    }
}
