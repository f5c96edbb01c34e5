//! Exhaustive search over per-face decisions, the reference the heuristic is
//! measured against at desk scale.
//!
//! Each reduction array is enumerated on its own by replaying the driver
//! with scripted choices. Encoded complexity is a sum of per-statement
//! histograms, so the global minimum is found best-first over combinations,
//! checking schedulability only for the cheapest ones.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::{
    assemble, candidate_reuse_vectors, cycle_witness, default_order, eliminate_copies, transform_array, CandidateSet,
    Chooser, Context, Decision, FaceAssignment, FaceKey, Fragment,
};
use crate::caps::caps;
use crate::complexity::{encode_scalar, program_complexity, statement_complexity, ProgramComplexity, TermOrder};
use crate::error::{Error, Result};
use crate::ir::{Program, Statement};

/// Replays a fixed list of option indices, defaulting to the first option.
struct Scripted {
    script: Vec<usize>,
    trail: Vec<(usize, usize)>,
    memo: BTreeMap<FaceKey, Decision>,
}

impl Chooser for Scripted {
    fn choose(&mut self, _: &Context, _: &str, _: &Statement, key: &FaceKey, cands: &CandidateSet) -> Result<Decision> {
        if let Some(d) = self.memo.get(key) {
            return Ok(d.clone());
        }
        let mut options: Vec<Decision> = cands.enumerate().into_iter().map(Decision::Apply).collect();
        options.push(Decision::Skip("not selected".into()));
        let pick = if options.len() == 1 {
            0
        } else {
            let pick = self.script.get(self.trail.len()).copied().unwrap_or(0);
            self.trail.push((pick, options.len()));
            pick
        };
        let d = options.swap_remove(pick);
        self.memo.insert(key.clone(), d.clone());
        Ok(d)
    }
}

#[derive(Clone, Debug)]
struct Alternative {
    fragment: Fragment,
    assignment: BTreeMap<FaceKey, Decision>,
    histogram: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub program: Program,
    pub complexity: ProgramComplexity,
    pub assignment: FaceAssignment,
    /// Distinct per-array decision sequences tried.
    pub alternatives: usize,
    /// Whole programs checked for schedulability.
    pub checked: usize,
}

/// Faces, over all reductions, that admit at least one reuse vector.
pub fn searchable_faces(p: &Program) -> Result<usize> {
    let mut n = 0;
    for s in p.statements.iter().filter(|s| s.is_reduce()) {
        for f in s.domain.faces()? {
            if !candidate_reuse_vectors(s, &f).is_empty() {
                n += 1;
            }
        }
    }
    Ok(n)
}

/// Statement counts per code, highest code first.
fn histogram(codes: &[usize], order: &TermOrder) -> Vec<u64> {
    let n = order.terms.len();
    let mut h = vec![0u64; n];
    for &c in codes {
        h[n - 1 - c] += 1;
    }
    h
}

fn add(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn codes_of(stmts: &[&Statement], order: &TermOrder) -> Result<Vec<usize>> {
    stmts.iter().map(|s| encode_scalar(&statement_complexity(s)?, order)).collect()
}

fn alternatives(ctx: &Context, array: &str, order: &TermOrder) -> Result<Vec<Alternative>> {
    let p = &ctx.original;
    let mut out = Vec::new();
    let mut script: Vec<usize> = Vec::new();
    loop {
        let mut chooser = Scripted { script: script.clone(), trail: Vec::new(), memo: BTreeMap::new() };
        let fragment = transform_array(ctx, array, &mut chooser)?;
        let raw = assemble(ctx, std::slice::from_ref(&fragment))?;
        let local = eliminate_copies(ctx, &raw, std::slice::from_ref(&fragment))?;
        let own: Vec<&Statement> = local
            .statements
            .iter()
            .filter(|s| p.statement(&s.label).is_none_or(|o| o.is_reduce() && o.array == array))
            .collect();
        let histogram = histogram(&codes_of(&own, order)?, order);
        out.push(Alternative { fragment, assignment: chooser.memo, histogram });
        let Some(k) = chooser.trail.iter().rposition(|&(pick, n)| pick + 1 < n) else { break };
        script = chooser.trail[..k].iter().map(|&(pick, _)| pick).collect();
        script.push(chooser.trail[k].0 + 1);
    }
    Ok(out)
}

/// Minimal encoded complexity over all schedulable face assignments.
pub fn exhaustive_search(p: &Program) -> Result<SearchResult> {
    let cap = caps().search_faces;
    if searchable_faces(p)? > cap {
        return Err(Error::CapExceeded { what: "searchable face", cap });
    }
    let ctx = Context::new(p)?;
    let order = default_order(p);
    let arrays: Vec<String> = ctx.aug.redirects.iter().map(|r| r.array.clone()).collect();
    let fixed: Vec<&Statement> =
        p.statements.iter().filter(|s| !(s.is_reduce() && arrays.contains(&s.array))).collect();
    let base = histogram(&codes_of(&fixed, &order)?, &order);

    let mut per_array: Vec<Vec<Alternative>> = Vec::new();
    for a in &arrays {
        per_array.push(alternatives(&ctx, a, &order)?);
    }
    let explored = per_array.iter().map(Vec::len).sum();
    // sorted[k][j] is the index of array k's j-th cheapest alternative
    let sorted: Vec<Vec<usize>> = per_array
        .iter()
        .map(|alts| {
            let mut idx: Vec<usize> = (0..alts.len()).collect();
            idx.sort_by(|&x, &y| alts[x].histogram.cmp(&alts[y].histogram).then(x.cmp(&y)));
            idx
        })
        .collect();
    let key_of = |pos: &[usize]| -> Vec<u64> {
        pos.iter().enumerate().fold(base.clone(), |acc, (k, &j)| add(&acc, &per_array[k][sorted[k][j]].histogram))
    };

    let start = vec![0usize; arrays.len()];
    let mut heap = BinaryHeap::from([Reverse((key_of(&start), start.clone()))]);
    let mut seen = BTreeSet::from([start]);
    let mut checked = 0;
    while let Some(Reverse((key, pos))) = heap.pop() {
        let mut group = vec![pos];
        while heap.peek().is_some_and(|Reverse((k, _))| *k == key) {
            group.push(heap.pop().unwrap().0 .1);
        }
        for pos in &group {
            for k in 0..pos.len() {
                if pos[k] + 1 < sorted[k].len() {
                    let mut next = pos.clone();
                    next[k] += 1;
                    if seen.insert(next.clone()) {
                        heap.push(Reverse((key_of(&next), next)));
                    }
                }
            }
        }
        let mut picks: Vec<Vec<usize>> =
            group.iter().map(|pos| pos.iter().enumerate().map(|(k, &j)| sorted[k][j]).collect()).collect();
        picks.sort();
        for pick in picks {
            checked += 1;
            let fragments: Vec<Fragment> = pick.iter().enumerate().map(|(k, &j)| per_array[k][j].fragment.clone()).collect();
            let raw = assemble(&ctx, &fragments)?;
            let program = eliminate_copies(&ctx, &raw, &fragments)?;
            if cycle_witness(&program)?.is_some() {
                continue;
            }
            let mut assignment = FaceAssignment::default();
            for (k, &j) in pick.iter().enumerate() {
                assignment.entries.extend(per_array[k][j].assignment.clone());
            }
            let complexity = program_complexity(&program, &order)?;
            return Ok(SearchResult { program, complexity, assignment, alternatives: explored, checked });
        }
    }
    Err(Error::Internal("no schedulable assignment, not even the empty one".into()))
}
