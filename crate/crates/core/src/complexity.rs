//! Asymptotic complexity terms, their scalar encoding and aggregation.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{Pow, Zero};

use crate::error::{Error, Result};
use crate::exec::{evaluate, instance_counts, Environment, Order};
use crate::ir::{Program, Statement};
use crate::polyhedra::{log_log_slope, Binding};

/// Leading monomial of a point count: one exponent per parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComplexityTerm {
    pub params: Vec<String>,
    pub exponents: Vec<u32>,
}

impl ComplexityTerm {
    pub fn new(params: Vec<String>, exponents: Vec<u32>) -> ComplexityTerm {
        assert_eq!(params.len(), exponents.len());
        ComplexityTerm { params, exponents }
    }

    pub fn degree_of(&self, p: &str) -> u32 {
        self.params.iter().position(|q| q == p).map_or(0, |k| self.exponents[k])
    }

    pub fn total_degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

impl fmt::Display for ComplexityTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .params
            .iter()
            .zip(&self.exponents)
            .filter(|(_, &e)| e > 0)
            .map(|(p, &e)| if e == 1 { p.clone() } else { format!("{p}^{e}") })
            .collect();
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// A total order on multidegrees; a term's position is its scalar code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermOrder {
    pub params: Vec<String>,
    pub terms: Vec<Vec<u32>>,
}

/// Default per-parameter exponent cap of the graded order.
pub const DEFAULT_EXPONENT_CAP: u32 = 4;

impl TermOrder {
    /// Total degree first; within a degree, smaller exponents of later
    /// parameters come first (so `M < N` and `M^2*N < M*N^2`).
    pub fn graded(params: &[String], cap: u32) -> TermOrder {
        let mut terms: Vec<Vec<u32>> = vec![Vec::new()];
        for _ in params {
            terms = terms
                .into_iter()
                .flat_map(|t| {
                    (0..=cap).map(move |e| {
                        let mut t = t.clone();
                        t.push(e);
                        t
                    })
                })
                .collect();
        }
        terms.sort_by(|a, b| {
            let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
            da.cmp(&db).then_with(|| a.iter().rev().cmp(b.iter().rev()))
        });
        TermOrder { params: params.to_vec(), terms }
    }

    /// `1 < M < N < MN < M^2N < MN^2 < M^2N^2`.
    pub fn mn_preset() -> TermOrder {
        TermOrder {
            params: vec!["M".to_string(), "N".to_string()],
            terms: vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1], vec![2, 1], vec![1, 2], vec![2, 2]],
        }
    }

    /// Exponents of `t` in this order's parameter list; parameters of `t`
    /// the order does not know must have exponent zero.
    fn exponents(&self, t: &ComplexityTerm) -> Option<Vec<u32>> {
        for (p, &e) in t.params.iter().zip(&t.exponents) {
            if e > 0 && !self.params.contains(p) {
                return None;
            }
        }
        Some(self.params.iter().map(|p| t.degree_of(p)).collect())
    }

    pub fn term(&self, code: usize) -> Option<ComplexityTerm> {
        self.terms.get(code).map(|e| ComplexityTerm::new(self.params.clone(), e.clone()))
    }
}

pub fn encode_scalar(t: &ComplexityTerm, order: &TermOrder) -> Result<usize> {
    let e = order.exponents(t).ok_or_else(|| Error::Invalid(format!("term {t} uses parameters outside the order")))?;
    order
        .terms
        .iter()
        .position(|x| *x == e)
        .ok_or(Error::CapExceeded { what: "complexity term order", cap: order.terms.len() })
}

/// `Σ base^code`.
pub fn base_s_sum(codes: &[usize], base: u64) -> BigUint {
    let b = BigUint::from(base);
    codes.iter().fold(BigUint::zero(), |acc, &c| acc + Pow::pow(&b, c as u32))
}

pub fn statement_complexity(s: &Statement) -> Result<ComplexityTerm> {
    s.domain.cardinality_degree()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatementComplexity {
    pub label: String,
    pub term: ComplexityTerm,
    pub code: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramComplexity {
    pub max_term: ComplexityTerm,
    pub max_code: usize,
    pub base: u64,
    pub aggregate: BigUint,
    pub rows: Vec<StatementComplexity>,
}

impl ProgramComplexity {
    /// Re-aggregate with another base, for comparing programs of different sizes.
    pub fn rebased(&self, base: u64) -> ProgramComplexity {
        let codes: Vec<usize> = self.rows.iter().map(|r| r.code).collect();
        ProgramComplexity { base, aggregate: base_s_sum(&codes, base), ..self.clone() }
    }
}

pub fn program_complexity(p: &Program, order: &TermOrder) -> Result<ProgramComplexity> {
    program_complexity_base(p, order, (p.statements.len() as u64).max(2))
}

pub fn program_complexity_base(p: &Program, order: &TermOrder, base: u64) -> Result<ProgramComplexity> {
    let mut rows = Vec::new();
    for s in &p.statements {
        let term = statement_complexity(s)?;
        let code = encode_scalar(&term, order)?;
        rows.push(StatementComplexity { label: s.label.clone(), term, code });
    }
    let codes: Vec<usize> = rows.iter().map(|r| r.code).collect();
    let max_code = codes.iter().copied().max().unwrap_or(0);
    Ok(ProgramComplexity {
        max_term: order.term(max_code).unwrap_or_else(|| ComplexityTerm::new(order.params.clone(), vec![0; order.params.len()])),
        max_code,
        base,
        aggregate: base_s_sum(&codes, base),
        rows,
    })
}

/// Compare two programs on a shared base large enough for both.
pub fn compare_programs(a: &Program, b: &Program, order: &TermOrder) -> Result<std::cmp::Ordering> {
    let base = (a.statements.len().max(b.statements.len()) as u64).max(2);
    let ca = program_complexity_base(a, order, base)?;
    let cb = program_complexity_base(b, order, base)?;
    Ok(ca.aggregate.cmp(&cb.aggregate))
}

/// Instances executed by the interpreter on seeded random inputs.
pub fn empirical_count(p: &Program, b: &Binding) -> Result<u64> {
    let env = Environment::random_inputs(p, b, 0)?;
    Ok(evaluate(p, &env, Order::Dataflow)?.total_instances())
}

/// Log-log slope of the executed instance count in each parameter, scaling
/// one parameter over `scales` while the others stay at `base`.
pub fn empirical_exponents(p: &Program, base: i64, scales: &[i64]) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for q in &p.params {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &s in scales {
            let mut b: Binding = p.params.iter().map(|n| (n.clone(), base)).collect();
            b.insert(q.clone(), s);
            xs.push(s as f64);
            ys.push(empirical_count(p, &b)?.max(1) as f64);
        }
        out.push((q.clone(), log_log_slope(&xs, &ys)));
    }
    Ok(out)
}

/// `stmt, degree-term, code, instance-count@binding` lines.
pub fn report_rows(p: &Program, pc: &ProgramComplexity, b: &Binding) -> Result<Vec<String>> {
    let counts = instance_counts(p, b)?;
    let at: Vec<String> = b.iter().map(|(k, v)| format!("{k}={v}")).collect();
    Ok(pc
        .rows
        .iter()
        .map(|r| format!("{}, {}, {}, {}@{}", r.label, r.term, r.code, counts[&r.label], at.join(",")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;
    use crate::polyhedra::binding;

    const PREFIX: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                          S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n";

    fn term(params: &[&str], e: &[u32]) -> ComplexityTerm {
        ComplexityTerm::new(params.iter().map(|s| s.to_string()).collect(), e.to_vec())
    }

    #[test]
    fn mn_preset_codes() {
        let o = TermOrder::mn_preset();
        assert_eq!(encode_scalar(&term(&["M", "N"], &[1, 1]), &o).unwrap(), 3);
        assert_eq!(encode_scalar(&term(&["M", "N"], &[0, 0]), &o).unwrap(), 0);
        assert_eq!(encode_scalar(&term(&["M", "N"], &[2, 2]), &o).unwrap(), 6);
        assert!(encode_scalar(&term(&["M", "N"], &[3, 0]), &o).is_err());
    }

    #[test]
    fn graded_order_agrees_with_preset_on_its_terms() {
        let g = TermOrder::graded(&["M".to_string(), "N".to_string()], 2);
        let preset = TermOrder::mn_preset();
        let pos: Vec<usize> = preset.terms.iter().map(|t| g.terms.iter().position(|x| x == t).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        // divisibility implies a smaller code
        for a in &g.terms {
            for b in &g.terms {
                if a != b && a.iter().zip(b).all(|(x, y)| x <= y) {
                    let ca = g.terms.iter().position(|x| x == a).unwrap();
                    let cb = g.terms.iter().position(|x| x == b).unwrap();
                    assert!(ca < cb);
                }
            }
        }
    }

    #[test]
    fn base_sums() {
        assert_eq!(base_s_sum(&[2, 3], 10), BigUint::from(1100u32));
        assert_eq!(base_s_sum(&[], 7), BigUint::zero());
        assert!(base_s_sum(&[3], 4) > base_s_sum(&[2, 2, 2], 4));
    }

    #[test]
    fn prefix_sum_degree_and_count() {
        let p = parse_program(PREFIX).unwrap();
        assert_eq!(statement_complexity(&p.statements[0]).unwrap(), term(&["N"], &[2]));
        let o = TermOrder::graded(&p.params, DEFAULT_EXPONENT_CAP);
        let pc = program_complexity(&p, &o).unwrap();
        assert_eq!(pc.max_term.to_string(), "N^2");
        assert_eq!(empirical_count(&p, &binding(&[("N", 8)])).unwrap(), 36);
        assert_eq!(empirical_count(&p, &binding(&[("N", 0)])).unwrap(), 0);
        let fit = empirical_exponents(&p, 8, &[8, 16, 32, 64]).unwrap();
        assert_eq!(fit[0].0, "N");
        assert!((fit[0].1 - 2.0).abs() < 0.2, "{fit:?}");
    }
}
