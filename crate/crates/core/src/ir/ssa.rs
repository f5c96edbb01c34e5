//! Array SSA and bounds validation, checked by enumeration at a probe binding.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::{ArrayKind, Program, StmtKind};
use crate::error::{Error, Result};
use crate::polyhedra::{Binding, ConvexSet};

/// Parameter value used by the static checks.
pub const PROBE_VALUE: i64 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsaViolation {
    pub array: String,
    pub cell: Vec<i64>,
    pub statements: Vec<String>,
    pub reason: String,
}

impl fmt::Display for SsaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell: Vec<String> = self.cell.iter().map(|v| v.to_string()).collect();
        write!(f, "{}[{}]: {} ({})", self.array, cell.join(","), self.reason, self.statements.join(", "))
    }
}

pub fn probe_binding(p: &Program) -> Binding {
    p.params.iter().map(|n| (n.clone(), PROBE_VALUE)).collect()
}

pub fn check_array_ssa(p: &Program) -> Result<std::result::Result<(), SsaViolation>> {
    check_array_ssa_at(p, &probe_binding(p))
}

fn cells(set: &ConvexSet, b: &Binding) -> Result<BTreeSet<Vec<i64>>> {
    Ok(set.enumerate_points(b)?.into_iter().collect())
}

/// First SSA or bounds violation at `b`; outer errors are analysis failures.
pub fn check_array_ssa_at(p: &Program, b: &Binding) -> Result<std::result::Result<(), SsaViolation>> {
    let params: Vec<i64> = p.params.iter().map(|n| b.get(n).copied().unwrap_or(PROBE_VALUE)).collect();
    let violation = |array: &str, cell: Vec<i64>, statements: Vec<String>, reason: &str| {
        Ok(Err(SsaViolation { array: array.to_string(), cell, statements, reason: reason.to_string() }))
    };
    // cell -> (writer label, op) per array
    let mut written: HashMap<String, HashMap<Vec<i64>, (String, StmtKind)>> = HashMap::new();
    for s in &p.statements {
        let decl = p.array(&s.array).ok_or_else(|| Error::Invalid(format!("undeclared array `{}`", s.array)))?;
        let extent = cells(&decl.index_space, b)?;
        let map = written.entry(s.array.clone()).or_default();
        let mut own: BTreeSet<Vec<i64>> = BTreeSet::new();
        for x in s.domain.enumerate_points(b)? {
            let cell: Vec<i64> = s.lhs.iter().map(|f| eval_int(&f.eval(&x, &params))).collect::<Result<_>>()?;
            if !extent.contains(&cell) {
                return violation(&s.array, cell, vec![s.label.clone()], "write outside the declared extent");
            }
            let fresh = own.insert(cell.clone());
            if s.kind == StmtKind::Assign && !fresh {
                return violation(&s.array, cell, vec![s.label.clone()], "assignment writes the cell twice");
            }
            if let Some((other, kind)) = map.get(&cell) {
                if other != &s.label {
                    let clash = match (kind, &s.kind) {
                        (StmtKind::Reduce(a), StmtKind::Reduce(b)) => a != b,
                        _ => true,
                    };
                    if clash {
                        return violation(&s.array, cell, vec![other.clone(), s.label.clone()], "cell written by two statements");
                    }
                }
            } else {
                map.insert(cell, (s.label.clone(), s.kind));
            }
        }
    }
    for s in &p.statements {
        for (array, idx) in s.rhs.reads() {
            let decl = p.array(array).ok_or_else(|| Error::Invalid(format!("undeclared array `{array}`")))?;
            let extent = cells(&decl.index_space, b)?;
            let reduced = p.writers_of(array).iter().any(|w| w.is_reduce());
            let writes = written.get(array);
            for x in s.domain.enumerate_points(b)? {
                let cell: Vec<i64> = idx.iter().map(|f| eval_int(&f.eval(&x, &params))).collect::<Result<_>>()?;
                if !extent.contains(&cell) {
                    return violation(array, cell, vec![s.label.clone()], "read outside the declared extent");
                }
                let is_written = writes.is_some_and(|w| w.contains_key(&cell));
                if decl.kind != ArrayKind::Input && !reduced && !is_written {
                    return violation(array, cell, vec![s.label.clone()], "read of a cell no statement writes");
                }
            }
        }
    }
    Ok(Ok(()))
}

fn eval_int(v: &crate::Rat) -> Result<i64> {
    if !v.is_integer() {
        return Err(Error::Invalid(format!("non-integral index value {v}")));
    }
    crate::Scalar::as_i64(v).ok_or_else(|| Error::Invalid("index value out of range".into()))
}

/// Parse-level validation plus SSA at the probe binding.
pub fn validate_program(p: &Program) -> Result<()> {
    let mut labels = BTreeSet::new();
    for s in &p.statements {
        if !labels.insert(&s.label) {
            return Err(Error::Invalid(format!("statement label `{}` used twice", s.label)));
        }
        if p.array(&s.array).is_some_and(|a| a.kind == ArrayKind::Input) && s.is_reduce() {
            return Err(Error::Invalid(format!("`{}` reduces into input array `{}`", s.label, s.array)));
        }
        if s.is_reduce() && s.rhs.reads().iter().any(|(a, _)| *a == s.array) {
            return Err(Error::Invalid(format!("reduction `{}` reads its own array `{}`", s.label, s.array)));
        }
    }
    match check_array_ssa(p)? {
        Ok(()) => Ok(()),
        Err(v) => Err(Error::Invalid(format!("array SSA violation: {v}"))),
    }
}
