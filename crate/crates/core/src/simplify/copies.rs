//! Peephole copy elimination after the transformation: single-contributor
//! intermediate arrays are inlined into their readers, and redirects are
//! folded back into the array they copy to.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::ir::{ArrayKind, Expr, Guard, Program, Statement};
use crate::linalg::{rref, Row};
use crate::polyhedra::{AffineForm, Relation, Space};
use crate::scheduling::Redirect;
use crate::Rat;

/// Solve the writer's body instance from its cell: `x = h(u)` with integer
/// coefficients over the array's index space, when the map is injective on
/// the domain's affine hull.
fn invert_writer(w: &Statement, u_space: &Space) -> Option<Vec<AffineForm>> {
    let nx = w.space().n_vars();
    let nu = u_space.n_vars();
    let np = u_space.n_params();
    if w.space().params != u_space.params {
        return None;
    }
    let ncols = nx + nu + np + 1;
    let widen = |r: &[Rat]| -> Row<Rat> {
        let mut out = vec![Rat::from_integer(0.into()); ncols];
        out[..nx].clone_from_slice(&r[..nx]);
        out[nx + nu..].clone_from_slice(&r[nx..]);
        out
    };
    let mut rows: Vec<Row<Rat>> = w.domain.hull_equalities().iter().map(|r| widen(r)).collect();
    for (k, f) in w.lhs.iter().enumerate() {
        let mut row = widen(f.row());
        row[nx + k] = Rat::from_integer((-1).into());
        rows.push(row);
    }
    let (m, pivots) = rref(&rows, nx);
    if (0..nx).any(|c| !pivots.contains(&c)) {
        return None;
    }
    let mut out = Vec::with_capacity(nx);
    for row in m.iter().take(nx) {
        let coeffs: Row<Rat> = row[nx..].iter().map(|v| -v.clone()).collect();
        if coeffs.iter().any(|v| !v.is_integer()) {
            return None;
        }
        out.push(AffineForm::from_row(nu, coeffs));
    }
    Some(out)
}

fn replace_reads(e: &Expr, array: &str, f: &dyn Fn(&[AffineForm]) -> Expr) -> Expr {
    let rec = |x: &Expr| replace_reads(x, array, f);
    match e {
        Expr::Read { array: a, indices } if a == array => f(indices),
        Expr::Bin(op, a, b) => Expr::bin(*op, rec(a), rec(b)),
        Expr::Ternary(g, a, b) => Expr::Ternary(
            Box::new(Guard { lhs: rec(&g.lhs), op: g.op, rhs: rec(&g.rhs) }),
            Box::new(rec(a)),
            Box::new(rec(b)),
        ),
        Expr::Call { name, args } => Expr::Call { name: name.clone(), args: args.iter().map(rec).collect() },
        other => other.clone(),
    }
}

/// Inline `array` into its readers if it has one writer whose cells each
/// receive exactly one contribution, and every read lands on a written cell.
pub fn inline_array(p: &Program, array: &str) -> Result<Option<Program>> {
    let Some(decl) = p.array(array) else { return Ok(None) };
    if decl.kind != ArrayKind::Intermediate {
        return Ok(None);
    }
    let writers = p.writers_of(array);
    let [w] = writers.as_slice() else { return Ok(None) };
    let u_space = decl.index_space.space().clone();
    let Some(h) = invert_writer(w, &u_space) else { return Ok(None) };
    if w.rhs.reads().iter().any(|(a, _)| *a == array) {
        return Ok(None);
    }
    let written = w.write_image(&u_space.iter_vars)?;
    for r in p.readers_of(array) {
        for (a, idx) in r.rhs.reads() {
            if a == array && !Relation::from_map(&r.domain, &u_space.iter_vars, idx)?.range().subset_of(&written)? {
                return Ok(None);
            }
        }
    }
    let w = (*w).clone();
    let mut q = p.clone();
    q.statements.retain(|s| s.label != w.label);
    q.arrays.retain(|a| a.name != array);
    for s in q.statements.iter_mut() {
        let sp = s.space().clone();
        let body = |idx: &[AffineForm]| {
            let at: Vec<AffineForm> = h.iter().map(|f| f.substitute(&sp, idx)).collect();
            w.rhs.substitute(&sp, &at)
        };
        s.rhs = replace_reads(&s.rhs, array, &body);
    }
    Ok(Some(q))
}

/// Inline each of `arrays` where possible, repeating until nothing changes.
pub fn inline_arrays(p: &Program, arrays: &[String]) -> Result<Program> {
    let mut q = p.clone();
    loop {
        let mut changed = false;
        for a in arrays {
            if let Some(next) = inline_array(&q, a)? {
                q = next;
                changed = true;
            }
        }
        if !changed {
            return Ok(q);
        }
    }
}

/// Drop the redirect `A[x] = ATmp[x]` and let the writers of `ATmp` write `A`.
pub fn fold_redirect(p: &Program, red: &Redirect) -> Program {
    let foreign = p
        .readers_of(&red.tmp_array)
        .iter()
        .any(|s| s.label != red.label && s.array != red.tmp_array);
    if foreign || p.statement(&red.label).is_none() {
        return p.clone();
    }
    let mut q = p.clone();
    q.statements.retain(|s| s.label != red.label);
    q.arrays.retain(|a| a.name != red.tmp_array);
    // generated `{tmp}Add...` arrays take the plain prefix when it is free
    let mut renames: BTreeMap<String, String> = BTreeMap::from([(red.tmp_array.clone(), red.array.clone())]);
    for a in &q.arrays {
        if let Some(rest) = a.name.strip_prefix(&red.tmp_array).filter(|r| !r.is_empty()) {
            let plain = format!("{}{rest}", red.array);
            if q.array(&plain).is_none() && q.statement(&plain).is_none() {
                renames.insert(a.name.clone(), plain);
            }
        }
    }
    let rename = |a: &str| renames.get(a).cloned();
    for a in q.arrays.iter_mut() {
        if let Some(n) = rename(&a.name) {
            a.name = n;
        }
    }
    for s in q.statements.iter_mut() {
        if let Some(n) = rename(&s.array) {
            s.array = n;
        }
        s.rhs = s.rhs.rename_arrays(&rename);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::oracle_equivalence;
    use crate::ir::{parse_program, validate_program};
    use crate::polyhedra::binding;

    const LISTING: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                           intermediate BAdd : {[i] : 0 <= i < N};\n\
                           S1Add: BAdd[i] += A[j] : {[i,j] : 0 <= i < N and i = j};\n\
                           S1AddOnly: B[i] = BAdd[i] : {[i] : i = 0 and N >= 1};\n\
                           S1AddReuse: B[i] = B[i-1] + BAdd[i] : {[i] : 1 <= i < N};\n";

    #[test]
    fn diagonal_add_is_inlined() {
        let p = parse_program(LISTING).unwrap();
        let q = inline_arrays(&p, &["BAdd".to_string()]).unwrap();
        let src: Vec<String> = q.statements.iter().map(Statement::to_source).collect();
        assert_eq!(src[1], "S1AddReuse: B[i] = B[i - 1] + A[i] : { [i] : i >= 1 and i <= N - 1 };");
        assert!(q.array("BAdd").is_none());
        validate_program(&q).unwrap();
        let b = [binding(&[("N", 6)]), binding(&[("N", 1)])];
        assert_eq!(oracle_equivalence(&p, &q, &b, 3, 1).unwrap(), Ok(()));
    }

    #[test]
    fn many_to_one_writer_is_kept() {
        let text = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                    intermediate T : {[i] : 0 <= i < N};\n\
                    S1: T[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\nS2: B[i] = T[i] : {[i] : 0 <= i < N};\n";
        let p = parse_program(text).unwrap();
        assert!(inline_array(&p, "T").unwrap().is_none());
    }

    #[test]
    fn redirect_folds_back() {
        let text = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                    intermediate BTmp : {[i] : 0 <= i < N};\n\
                    S1: BTmp[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n\
                    Bredir: B[i] = BTmp[i] : {[i] : 0 <= i < N};\n";
        let p = parse_program(text).unwrap();
        let red = Redirect { array: "B".into(), tmp_array: "BTmp".into(), label: "Bredir".into() };
        let q = fold_redirect(&p, &red);
        assert_eq!(q.statements.len(), 1);
        assert_eq!(q.statements[0].array, "B");
        assert_eq!(oracle_equivalence(&p, &q, &[binding(&[("N", 5)])], 2, 0).unwrap(), Ok(()));
    }
}
