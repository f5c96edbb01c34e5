//! Multidimensional affine schedules over the dependence graph's nodes.
//!
//! Rows are found greedily: each level solves a Farkas LP that keeps every
//! unresolved edge weakly satisfied and strictly satisfies as many as it can.
//! When a level makes no progress the strongly connected components of the
//! remaining edges are ordered by a constant row instead.

mod augment;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::dependence::{DepGraph, DependenceEdge};
use crate::error::{Error, Result};
use crate::exec::Instance;
use crate::ir::Program;
use crate::lp::{Cmp, LinearProgram, LpResult};
use crate::polyhedra::{AffineForm, Binding, ConvexSet, DirVector, Space};
use crate::Rat;

pub use augment::{augment_program, reschedule_with_reuse, schedulable_with_reuse, AugmentedProgram, Redirect};

/// Objective weights for the second LP phase.
const ITER_WEIGHT: i64 = 1;
const PARAM_WEIGHT: i64 = 2;
const CONST_WEIGHT: (i64, i64) = (1, 100);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Timestamp(pub Vec<Rat>);

pub fn timestamp_compare(a: &Timestamp, b: &Timestamp) -> Result<Ordering> {
    if a.0.len() != b.0.len() {
        return Err(Error::SpaceMismatch(format!("timestamps of length {} and {}", a.0.len(), b.0.len())));
    }
    Ok(a.0.cmp(&b.0))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub labels: Vec<String>,
    pub spaces: Vec<Space>,
    /// One row list per node, all of the same length.
    pub rows: Vec<Vec<AffineForm>>,
}

impl Schedule {
    pub fn depth(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn rows_of(&self, label: &str) -> Option<&[AffineForm]> {
        self.index_of(label).map(|k| self.rows[k].as_slice())
    }

    pub fn timestamp(&self, node: usize, point: &[i64], params: &[i64]) -> Timestamp {
        Timestamp(self.rows[node].iter().map(|r| r.eval(point, params)).collect())
    }

    fn push_level(&mut self, level: Vec<AffineForm>) {
        for (rows, r) in self.rows.iter_mut().zip(level) {
            rows.push(r);
        }
    }

    /// `LABEL: [[..], ..]` per node, coefficients over `[vars, params, 1]`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, label) in self.labels.iter().enumerate() {
            let rows: Vec<String> = self.rows[k]
                .iter()
                .map(|r| format!("[{}]", r.row().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
                .collect();
            out.push_str(&format!("{label}: [{}]\n", rows.join(", ")));
        }
        out
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleViolation {
    pub src: String,
    pub dst: String,
    pub via_array: String,
    /// First level at which the destination can precede the source; the
    /// schedule depth means "all levels equal".
    pub level: usize,
    pub witness: Option<(Vec<i64>, Vec<i64>)>,
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} via {} is not ordered at level {}", self.src, self.dst, self.via_array, self.level)?;
        if let Some((x, y)) = &self.witness {
            write!(f, " (witness {x:?} -> {y:?})")?;
        }
        Ok(())
    }
}

/// Schedule rows of both endpoints lifted to the edge's joint space.
fn lifted_rows(e: &DependenceEdge, sched: &Schedule, deps: &DepGraph, level: usize) -> (AffineForm, AffineForm) {
    let joint = e.relation.constraints.space();
    let nin = e.relation.n_in();
    let xs: Vec<AffineForm> = (0..nin).map(|k| AffineForm::var(joint, k)).collect();
    let ys: Vec<AffineForm> = (0..e.relation.n_out()).map(|k| AffineForm::var(joint, nin + k)).collect();
    let s = sched_row(sched, deps, e.src, level);
    let t = sched_row(sched, deps, e.dst, level);
    (s.substitute(joint, &xs), t.substitute(joint, &ys))
}

fn sched_row(sched: &Schedule, deps: &DepGraph, node: usize, level: usize) -> AffineForm {
    let k = sched.index_of(&deps.nodes[node].label).expect("schedule covers every node");
    sched.rows[k][level].clone()
}

fn denominator_lcm(f: &AffineForm) -> Rat {
    let l = f.row().iter().fold(num_bigint::BigInt::one(), |acc, v| acc.lcm(v.denom()));
    Rat::from_integer(l)
}

/// Witness pairs at `b` for a violation set, if it has integer points there.
fn witness(set: &ConvexSet, nin: usize, b: &Binding) -> Option<(Vec<i64>, Vec<i64>)> {
    let pts = set.enumerate_points(b).ok()?;
    pts.first().map(|p| (p[..nin].to_vec(), p[nin..].to_vec()))
}

/// Check every edge strictly precedes lexicographically; outer errors are
/// analysis failures.
pub fn validate_schedule(
    deps: &DepGraph,
    sched: &Schedule,
    probe: &Binding,
) -> Result<std::result::Result<(), ScheduleViolation>> {
    let m = sched.depth();
    for e in &deps.edges {
        if sched.index_of(&deps.nodes[e.src].label).is_none() || sched.index_of(&deps.nodes[e.dst].label).is_none() {
            return Err(Error::Invalid(format!("schedule misses an endpoint of an edge into {}", deps.nodes[e.dst].label)));
        }
        let mut equal: Vec<AffineForm> = Vec::new();
        for level in 0..=m {
            let base = e.relation.constraints.add_constraints(&[], &equal);
            let bad = if level < m {
                let (s, t) = lifted_rows(e, sched, deps, level);
                let diff = t.sub(&s);
                let scaled = diff.scale(&denominator_lcm(&diff));
                // scaled <= -1
                let row = scaled.neg().add_constant(&-Rat::one());
                equal.push(diff);
                base.add_constraints(&[row], &[])
            } else {
                base
            };
            if !bad.is_empty() {
                return Ok(Err(ScheduleViolation {
                    src: deps.nodes[e.src].label.clone(),
                    dst: deps.nodes[e.dst].label.clone(),
                    via_array: e.via_array.clone(),
                    level,
                    witness: witness(&bad, e.relation.n_in(), probe),
                }));
            }
        }
    }
    Ok(Ok(()))
}

struct LevelLp {
    lp: LinearProgram<Rat>,
    theta: Vec<usize>,
    widths: Vec<usize>,
    eps: Vec<usize>,
}

fn build_level(deps: &DepGraph, active: &[usize]) -> LevelLp {
    let mut lp = LinearProgram::new(0);
    let mut theta = Vec::new();
    let mut widths = Vec::new();
    for n in &deps.nodes {
        let w = n.domain.space().ncols() + 1;
        theta.push(lp.num_vars());
        widths.push(w);
        for _ in 0..w {
            lp.add_var(true);
        }
    }
    let mut eps = Vec::new();
    for &ei in active {
        let e = &deps.edges[ei];
        let cons = &e.relation.constraints;
        let (nin, nout) = (e.relation.n_in(), e.relation.n_out());
        let np = cons.space().n_params();
        let ncol = nin + nout + np + 1;
        let lambda0 = lp.add_var(false);
        let lambdas: Vec<usize> = cons.ineq_rows().iter().map(|_| lp.add_var(false)).collect();
        let mus: Vec<usize> = cons.eq_rows().iter().map(|_| lp.add_var(true)).collect();
        let ep = lp.add_var(false);
        lp.add_sparse(vec![(ep, Rat::one())], Cmp::Le, Rat::one());
        eps.push(ep);
        let (ts, tt) = (theta[e.src], theta[e.dst]);
        let (nvs, nvt) = (nin, nout);
        for c in 0..ncol {
            let mut terms: BTreeMap<usize, Rat> = BTreeMap::new();
            let mut add = |k: usize, v: Rat| {
                let slot = terms.entry(k).or_insert_with(Rat::zero);
                *slot += v;
            };
            if c < nin {
                add(ts + c, -Rat::one());
            } else if c < nin + nout {
                add(tt + (c - nin), Rat::one());
            } else if c < ncol - 1 {
                let p = c - nin - nout;
                add(tt + nvt + p, Rat::one());
                add(ts + nvs + p, -Rat::one());
            } else {
                add(tt + nvt + np, Rat::one());
                add(ts + nvs + np, -Rat::one());
                add(ep, -Rat::one());
                add(lambda0, -Rat::one());
            }
            for (k, r) in cons.ineq_rows().iter().enumerate() {
                add(lambdas[k], -r[c].clone());
            }
            for (k, r) in cons.eq_rows().iter().enumerate() {
                add(mus[k], -r[c].clone());
            }
            lp.add_sparse(terms.into_iter().collect(), Cmp::Eq, Rat::zero());
        }
    }
    LevelLp { lp, theta, widths, eps }
}

/// Which active edges one row can strictly satisfy, all at once; `None` if
/// none can.
fn strict_edges(level: &LevelLp) -> Result<Option<Vec<bool>>> {
    let mut objective = vec![Rat::zero(); level.lp.num_vars()];
    for &e in &level.eps {
        objective[e] = Rat::one();
    }
    let x = match level.lp.maximize(&objective) {
        LpResult::Optimal { x, value } if value.is_positive() => x,
        LpResult::Optimal { .. } => return Ok(None),
        LpResult::Infeasible => return Err(Error::Internal("zero schedule row infeasible".into())),
        LpResult::Unbounded => return Err(Error::Internal("bounded scheduling LP reported unbounded".into())),
    };
    Ok(Some(level.eps.iter().map(|&e| x[e].is_positive()).collect()))
}

/// One level: rows per node and the active edges it strictly satisfies.
fn solve_level(deps: &DepGraph, active: &[usize]) -> Result<Option<(Vec<AffineForm>, Vec<usize>)>> {
    let level = build_level(deps, active);
    let Some(strong) = strict_edges(&level)? else { return Ok(None) };
    let LevelLp { mut lp, theta, widths, eps } = level;
    for (k, &e) in eps.iter().enumerate() {
        let v = if strong[k] { Rat::one() } else { Rat::zero() };
        lp.add_sparse(vec![(e, Rat::one())], Cmp::Eq, v);
    }
    // |theta| bounds for the weighted L1 objective
    let mut weights = Vec::new();
    for (n, node) in deps.nodes.iter().enumerate() {
        let nv = node.domain.space().n_vars();
        for c in 0..widths[n] {
            let t = lp.add_var(false);
            let th = theta[n] + c;
            lp.add_sparse(vec![(t, Rat::one()), (th, -Rat::one())], Cmp::Ge, Rat::zero());
            lp.add_sparse(vec![(t, Rat::one()), (th, Rat::one())], Cmp::Ge, Rat::zero());
            let w = if c < nv {
                Rat::from_integer(ITER_WEIGHT.into())
            } else if c + 1 < widths[n] {
                Rat::from_integer(PARAM_WEIGHT.into())
            } else {
                Rat::new(CONST_WEIGHT.0.into(), CONST_WEIGHT.1.into())
            };
            weights.push((t, w));
        }
    }
    let mut objective = vec![Rat::zero(); lp.num_vars()];
    for (t, w) in weights {
        objective[t] = w;
    }
    let x = match lp.minimize(&objective) {
        LpResult::Optimal { x, .. } => x,
        _ => return Err(Error::Internal("second scheduling phase lost feasibility".into())),
    };
    let mut rows: Vec<AffineForm> = deps
        .nodes
        .iter()
        .enumerate()
        .map(|(n, node)| AffineForm::from_row(node.domain.space().n_vars(), x[theta[n]..theta[n] + widths[n]].to_vec()))
        .collect();
    let scale = rows.iter().fold(Rat::one(), |acc, r| {
        let l = denominator_lcm(r);
        Rat::from_integer(acc.numer().lcm(l.numer()))
    });
    if !scale.is_one() {
        rows = rows.iter().map(|r| r.scale(&scale)).collect();
    }
    let resolved = active.iter().zip(&strong).filter(|(_, s)| **s).map(|(e, _)| *e).collect();
    Ok(Some((rows, resolved)))
}

/// Constant rows ordering the strongly connected components of `active`.
fn distribute(deps: &DepGraph, active: &[usize]) -> Option<(Vec<AffineForm>, Vec<usize>)> {
    let mut g = DiGraph::<usize, ()>::new();
    let ix: Vec<_> = (0..deps.nodes.len()).map(|n| g.add_node(n)).collect();
    for &e in active {
        g.add_edge(ix[deps.edges[e].src], ix[deps.edges[e].dst], ());
    }
    let sccs = tarjan_scc(&g);
    let mut position = vec![0usize; deps.nodes.len()];
    // tarjan_scc yields components in reverse topological order
    for (k, comp) in sccs.iter().rev().enumerate() {
        for &v in comp {
            position[g[v]] = k;
        }
    }
    let resolved: Vec<usize> =
        active.iter().copied().filter(|&e| position[deps.edges[e].src] != position[deps.edges[e].dst]).collect();
    if resolved.is_empty() {
        return None;
    }
    let rows = deps
        .nodes
        .iter()
        .enumerate()
        .map(|(n, node)| AffineForm::constant(node.domain.space(), Rat::from_integer((position[n] as i64).into())))
        .collect();
    Some((rows, resolved))
}

/// Greedy multidimensional schedule for every node of `deps`.
pub fn feautrier_schedule(deps: &DepGraph) -> Result<Schedule> {
    let mut sched = Schedule {
        labels: deps.nodes.iter().map(|n| n.label.clone()).collect(),
        spaces: deps.nodes.iter().map(|n| n.domain.space().clone()).collect(),
        rows: vec![Vec::new(); deps.nodes.len()],
    };
    let mut active: Vec<usize> = (0..deps.edges.len()).collect();
    let max_levels = deps.edges.len() + 1;
    while !active.is_empty() {
        if sched.depth() >= max_levels {
            return Err(Error::Internal("scheduler exceeded its level budget".into()));
        }
        let step = match solve_level(deps, &active)? {
            Some(s) => Some(s),
            None => distribute(deps, &active),
        };
        let Some((rows, resolved)) = step else {
            let residual: Vec<String> = active
                .iter()
                .map(|&e| {
                    let e = &deps.edges[e];
                    format!("{} -> {} via {}", deps.nodes[e.src].label, deps.nodes[e.dst].label, e.via_array)
                })
                .collect();
            return Err(Error::Unschedulable(format!("no affine row orders {}", residual.join(", "))));
        };
        sched.push_level(rows);
        active.retain(|e| !resolved.contains(e));
    }
    if sched.depth() == 0 {
        let rows = deps.nodes.iter().map(|n| AffineForm::zero(n.domain.space())).collect();
        sched.push_level(rows);
    }
    Ok(sched)
}

/// Whether [`feautrier_schedule`] would succeed. Edges between strongly
/// connected components are always resolved by a constant row, so each
/// component is checked alone, and only the first LP phase is solved.
pub fn is_schedulable(deps: &DepGraph) -> Result<bool> {
    let mut g = DiGraph::<usize, ()>::new();
    let ix: Vec<_> = (0..deps.nodes.len()).map(|n| g.add_node(n)).collect();
    for e in &deps.edges {
        g.add_edge(ix[e.src], ix[e.dst], ());
    }
    for comp in tarjan_scc(&g) {
        let members: Vec<usize> = comp.iter().map(|&v| g[v]).collect();
        let local = |n: usize| members.iter().position(|&m| m == n);
        let edges: Vec<DependenceEdge> = deps
            .edges
            .iter()
            .filter_map(|e| match (local(e.src), local(e.dst)) {
                (Some(src), Some(dst)) => Some(DependenceEdge { src, dst, ..e.clone() }),
                _ => None,
            })
            .collect();
        if edges.is_empty() {
            continue;
        }
        let sub = DepGraph { nodes: members.iter().map(|&n| deps.nodes[n].clone()).collect(), edges };
        let mut active: Vec<usize> = (0..sub.edges.len()).collect();
        while !active.is_empty() {
            let resolved: Vec<usize> = match strict_edges(&build_level(&sub, &active))? {
                Some(strong) => active.iter().zip(&strong).filter(|(_, s)| **s).map(|(e, _)| *e).collect(),
                None => match distribute(&sub, &active) {
                    Some((_, r)) => r,
                    None => return Ok(false),
                },
            };
            active.retain(|e| !resolved.contains(e));
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Consistency {
    /// `A[x]` is scheduled before `A[x + r]`.
    Before,
    After,
    Zero,
}

/// Sign of the first nonzero entry of `rows · r`.
pub fn reuse_consistent(rows: &[AffineForm], r: &DirVector) -> Consistency {
    for row in rows {
        let v = row.apply_linear(&r.entries);
        if v.is_positive() {
            return Consistency::Before;
        }
        if v.is_negative() {
            return Consistency::After;
        }
    }
    Consistency::Zero
}

/// Statement instances at `b` sorted by timestamp, ties in program order.
pub fn instance_order(p: &Program, sched: &Schedule, b: &Binding) -> Result<Vec<Instance>> {
    let params = crate::exec::param_values(p, b)?;
    let mut keyed = Vec::new();
    for (k, s) in p.statements.iter().enumerate() {
        let node = sched.index_of(&s.label).ok_or_else(|| Error::Invalid(format!("schedule lacks `{}`", s.label)))?;
        for x in s.domain.enumerate_points(b)? {
            keyed.push((sched.timestamp(node, &x, &params).0, k, x));
        }
    }
    keyed.sort();
    Ok(keyed.into_iter().map(|(_, stmt, point)| Instance { stmt, point }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::{all_dependences, instance_graph};
    use crate::exec::{evaluate, Environment, Order};
    use crate::ir::{parse_program, probe_binding};
    use crate::polyhedra::binding;

    const PREFIX: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                          S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n";
    const FEEDBACK: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                       S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n\
                       S2: A[i+1] = f(B[i]) : {[i] : 0 <= i < N - 1};\n";

    fn r(v: i64) -> Rat {
        Rat::from_integer(v.into())
    }

    #[test]
    fn timestamps_compare_lexicographically() {
        let t = |v: &[i64]| Timestamp(v.iter().map(|x| r(*x)).collect());
        assert_eq!(timestamp_compare(&t(&[1, 2]), &t(&[1, 3])).unwrap(), Ordering::Less);
        assert_eq!(timestamp_compare(&t(&[2, 0]), &t(&[1, 9])).unwrap(), Ordering::Greater);
        assert_eq!(timestamp_compare(&t(&[1, 1]), &t(&[1, 1])).unwrap(), Ordering::Equal);
        assert!(timestamp_compare(&t(&[1]), &t(&[1, 1])).is_err());
    }

    #[test]
    fn eq5_schedule_is_valid_and_topological() {
        let p = parse_program(FEEDBACK).unwrap();
        let deps = all_dependences(&p).unwrap();
        let sched = feautrier_schedule(&deps).unwrap();
        assert_eq!(validate_schedule(&deps, &sched, &probe_binding(&p)).unwrap(), Ok(()));
        for n in [4, 8] {
            let b = binding(&[("N", n)]);
            let order = instance_order(&p, &sched, &b).unwrap();
            let env = Environment::random_inputs(&p, &b, 5).unwrap();
            let a = evaluate(&p, &env, Order::Sequence(order)).unwrap();
            let c = evaluate(&p, &env, Order::Dataflow).unwrap();
            assert_eq!(a.arrays, c.arrays);
            assert!(!instance_graph(&deps, &b).unwrap().has_cycle().0);
        }
    }

    #[test]
    fn prefix_sum_schedules() {
        let p = parse_program(PREFIX).unwrap();
        let deps = all_dependences(&p).unwrap();
        let sched = feautrier_schedule(&deps).unwrap();
        assert_eq!(validate_schedule(&deps, &sched, &probe_binding(&p)).unwrap(), Ok(()));
    }

    #[test]
    fn cyclic_toy_is_unschedulable() {
        let text = "param N;\nintermediate X : {[i] : 0 <= i < N};\nintermediate Y : {[i] : 0 <= i < N};\n\
                    S1: X[i] = Y[i] : {[i] : 0 <= i < N};\nS2: Y[i] = X[i] : {[i] : 0 <= i < N};\n";
        let p = parse_program(text).unwrap();
        let err = feautrier_schedule(&all_dependences(&p).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Unschedulable(_)), "{err}");
        assert!(!is_schedulable(&all_dependences(&p).unwrap()).unwrap());
    }

    #[test]
    fn quick_check_agrees_with_full_schedule() {
        for text in [PREFIX, FEEDBACK] {
            let deps = all_dependences(&parse_program(text).unwrap()).unwrap();
            assert!(feautrier_schedule(&deps).is_ok());
            assert!(is_schedulable(&deps).unwrap());
        }
        // a reuse edge against the flow through S2 closes a cycle
        let aug = augment_program(&parse_program(FEEDBACK).unwrap()).unwrap();
        for (d, ok) in [(1, true), (-1, false)] {
            let r = DirVector::new(vec![d]);
            assert_eq!(schedulable_with_reuse(&aug, "B", &r).unwrap(), ok);
            assert_eq!(reschedule_with_reuse(&aug, "B", &r).is_ok(), ok);
        }
    }

    #[test]
    fn bad_schedule_has_witness() {
        let p = parse_program(FEEDBACK).unwrap();
        let deps = all_dependences(&p).unwrap();
        let mut sched = feautrier_schedule(&deps).unwrap();
        for rows in sched.rows.iter_mut() {
            for row in rows.iter_mut() {
                *row = row.neg();
            }
        }
        let v = validate_schedule(&deps, &sched, &probe_binding(&p)).unwrap().unwrap_err();
        assert!(v.witness.is_some());
    }

    #[test]
    fn consistency_signs() {
        let sp = Space::new(&["i"], &["N"]).unwrap();
        let rows = vec![AffineForm::var(&sp, 0)];
        assert_eq!(reuse_consistent(&rows, &DirVector::new(vec![1])), Consistency::Before);
        assert_eq!(reuse_consistent(&rows, &DirVector::new(vec![-1])), Consistency::After);
        assert_eq!(reuse_consistent(&[AffineForm::param(&sp, 0)], &DirVector::new(vec![1])), Consistency::Zero);
    }
}
