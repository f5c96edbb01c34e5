//! Exact interpreter: runs every statement instance once, in dataflow order
//! or in a caller-supplied order that is checked as it runs.

mod intrinsics;
mod io;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::caps::caps;
use crate::error::{Error, Result};
use crate::ir::{ArrayKind, CmpOp, BinOp, Expr, Program, StmtKind};
use crate::polyhedra::Binding;
use crate::{Rat, Scalar};

pub use intrinsics::{call_intrinsic, is_intrinsic, INTRINSICS};
pub use io::{format_arrays, parse_arrays};

pub type Cell = Vec<i64>;
pub type ArrayStore = BTreeMap<String, BTreeMap<Cell, Rat>>;

/// Range of random input values, inclusive.
pub const INPUT_RANGE: (i64, i64) = (-9, 9);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Environment {
    pub binding: Binding,
    pub arrays: ArrayStore,
    pub seed: u64,
}

impl Environment {
    pub fn new(binding: Binding, seed: u64) -> Environment {
        Environment { binding, arrays: ArrayStore::new(), seed }
    }

    pub fn set(&mut self, array: &str, cell: Cell, v: Rat) {
        self.arrays.entry(array.to_string()).or_default().insert(cell, v);
    }

    /// Every cell of every input array drawn uniformly from `INPUT_RANGE`.
    pub fn random_inputs(p: &Program, binding: &Binding, seed: u64) -> Result<Environment> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut env = Environment::new(binding.clone(), seed);
        for a in p.arrays.iter().filter(|a| a.kind == ArrayKind::Input) {
            let cells = a.index_space.enumerate_points(binding)?;
            let store = env.arrays.entry(a.name.clone()).or_default();
            for c in cells {
                store.insert(c, Rat::from_integer(rng.gen_range(INPUT_RANGE.0..=INPUT_RANGE.1).into()));
            }
        }
        Ok(env)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance {
    pub stmt: usize,
    pub point: Vec<i64>,
}

#[derive(Clone, Debug)]
pub enum Order {
    /// Topological order of the instance graph, ties in program order.
    Dataflow,
    /// Random topological order from the seed.
    Shuffled(u64),
    /// Exactly this sequence; it must list every instance once.
    Sequence(Vec<Instance>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Access {
    Read,
    Write,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEntry {
    pub stmt: String,
    pub point: Vec<i64>,
    pub access: Access,
    pub array: String,
    pub cell: Cell,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecTrace {
    pub counts: BTreeMap<String, u64>,
    pub log: Option<Vec<LogEntry>>,
    pub arrays: ArrayStore,
}

impl ExecTrace {
    pub fn total_instances(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Declared output arrays only.
    pub fn outputs(&self, p: &Program) -> ArrayStore {
        p.arrays
            .iter()
            .filter(|a| a.kind == ArrayKind::Output)
            .map(|a| (a.name.clone(), self.arrays.get(&a.name).cloned().unwrap_or_default()))
            .collect()
    }
}

pub fn param_values(p: &Program, b: &Binding) -> Result<Vec<i64>> {
    p.params
        .iter()
        .map(|n| b.get(n).copied().ok_or_else(|| Error::Invalid(format!("parameter `{n}` is unbound"))))
        .collect()
}

fn to_index(v: &Rat) -> Result<i64> {
    if !v.is_integer() {
        return Err(Error::Exec(format!("non-integral index {v}")));
    }
    v.as_i64().ok_or_else(|| Error::Exec("index out of range".into()))
}

fn cell_text(array: &str, cell: &[i64]) -> String {
    let parts: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
    format!("{array}[{}]", parts.join(","))
}

/// Instances per statement at `b`, counted without executing.
pub fn instance_counts(p: &Program, b: &Binding) -> Result<BTreeMap<String, u128>> {
    p.statements.iter().map(|s| Ok((s.label.clone(), s.domain.count_points(b)?))).collect()
}

type Key = (usize, Cell);

struct Machine<'a> {
    p: &'a Program,
    env: &'a Environment,
    params: Vec<i64>,
    instances: Vec<Instance>,
    writes: Vec<Key>,
    pending: HashMap<Key, usize>,
    computed: HashMap<Key, Rat>,
    array_ids: HashMap<&'a str, usize>,
    log: Option<Vec<LogEntry>>,
}

impl<'a> Machine<'a> {
    fn new(p: &'a Program, env: &'a Environment, log: bool) -> Result<Machine<'a>> {
        let params = param_values(p, &env.binding)?;
        let array_ids: HashMap<&str, usize> = p.arrays.iter().enumerate().map(|(k, a)| (a.name.as_str(), k)).collect();
        let cap = caps().points;
        let mut instances = Vec::new();
        let mut writes = Vec::new();
        let mut pending: HashMap<Key, usize> = HashMap::new();
        for (k, s) in p.statements.iter().enumerate() {
            let arr = *array_ids.get(s.array.as_str()).ok_or_else(|| Error::Invalid(format!("undeclared array `{}`", s.array)))?;
            for x in s.domain.enumerate_points(&env.binding)? {
                let cell: Cell = s.lhs.iter().map(|f| to_index(&f.eval(&x, &params))).collect::<Result<_>>()?;
                *pending.entry((arr, cell.clone())).or_default() += 1;
                writes.push((arr, cell));
                instances.push(Instance { stmt: k, point: x });
                if instances.len() > cap {
                    return Err(Error::CapExceeded { what: "instances", cap });
                }
            }
        }
        Ok(Machine {
            p,
            env,
            params,
            instances,
            writes,
            pending,
            computed: HashMap::new(),
            array_ids,
            log: log.then(Vec::new),
        })
    }

    fn read_cells(&self, inst: &Instance) -> Result<Vec<Key>> {
        let s = &self.p.statements[inst.stmt];
        let mut out = Vec::new();
        for (a, idx) in s.rhs.reads() {
            let arr = *self.array_ids.get(a).ok_or_else(|| Error::Invalid(format!("undeclared array `{a}`")))?;
            let cell: Cell = idx.iter().map(|f| to_index(&f.eval(&inst.point, &self.params))).collect::<Result<_>>()?;
            out.push((arr, cell));
        }
        Ok(out)
    }

    fn order(&self, order: Order) -> Result<Vec<usize>> {
        let n = self.instances.len();
        let shuffle_seed = match order {
            Order::Sequence(seq) => {
                let index: HashMap<&Instance, usize> = self.instances.iter().enumerate().map(|(k, i)| (i, k)).collect();
                let mut seen = vec![false; n];
                let mut out = Vec::with_capacity(n);
                for inst in &seq {
                    let k = *index.get(inst).ok_or_else(|| {
                        Error::Exec(format!("order lists an instance outside the domains: {inst:?}"))
                    })?;
                    if std::mem::replace(&mut seen[k], true) {
                        return Err(Error::Exec(format!("order lists {inst:?} twice")));
                    }
                    out.push(k);
                }
                if out.len() != n {
                    return Err(Error::Exec(format!("order lists {} of {n} instances", out.len())));
                }
                return Ok(out);
            }
            Order::Dataflow => None,
            Order::Shuffled(seed) => Some(seed),
        };
        let mut writers: HashMap<&Key, Vec<usize>> = HashMap::new();
        for (k, w) in self.writes.iter().enumerate() {
            writers.entry(w).or_default().push(k);
        }
        let mut indegree = vec![0usize; n];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, inst) in self.instances.iter().enumerate() {
            for key in self.read_cells(inst)? {
                if let Some(ws) = writers.get(&key) {
                    for &w in ws {
                        succ[w].push(k);
                        indegree[k] += 1;
                    }
                }
            }
        }
        let mut rng = shuffle_seed.map(ChaCha8Rng::seed_from_u64);
        let mut ready: VecDeque<usize> = (0..n).filter(|&k| indegree[k] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while !ready.is_empty() {
            let k = match rng.as_mut() {
                Some(r) => {
                    let pick = r.gen_range(0..ready.len());
                    ready.swap_remove_back(pick).unwrap()
                }
                None => ready.pop_front().unwrap(),
            };
            out.push(k);
            for &t in &succ[k] {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    ready.push_back(t);
                }
            }
        }
        if out.len() != n {
            let stuck = (0..n).find(|&k| indegree[k] > 0).unwrap();
            let i = &self.instances[stuck];
            return Err(Error::Exec(format!(
                "instance graph has a cycle through {} at {:?}",
                self.p.statements[i.stmt].label, i.point
            )));
        }
        Ok(out)
    }

    fn read(&self, key: Key) -> Result<Rat> {
        let decl = &self.p.arrays[key.0];
        if let Some(&left) = self.pending.get(&key) {
            if left > 0 {
                return Err(Error::Exec(format!("{} read before its final write", cell_text(&decl.name, &key.1))));
            }
            return Ok(self.computed[&key].clone());
        }
        if decl.kind == ArrayKind::Input {
            return self
                .env
                .arrays
                .get(&decl.name)
                .and_then(|m| m.get(&key.1))
                .cloned()
                .ok_or_else(|| Error::Exec(format!("input {} has no value", cell_text(&decl.name, &key.1))));
        }
        if let Some(id) = self.reduction_identity(&decl.name) {
            return Ok(id);
        }
        Err(Error::Exec(format!("{} is never written", cell_text(&decl.name, &key.1))))
    }

    fn reduction_identity(&self, array: &str) -> Option<Rat> {
        self.p.statements.iter().filter(|s| s.array == array).find_map(|s| s.op().and_then(|op| op.identity()))
    }

    fn eval(&mut self, e: &Expr, inst: &Instance) -> Result<Rat> {
        Ok(match e {
            Expr::Const(c) => c.clone(),
            Expr::Index(f) => f.eval(&inst.point, &self.params),
            Expr::Read { array, indices } => {
                let arr = self.array_ids[array.as_str()];
                let cell: Cell = indices.iter().map(|f| to_index(&f.eval(&inst.point, &self.params))).collect::<Result<_>>()?;
                if let Some(log) = self.log.as_mut() {
                    log.push(LogEntry {
                        stmt: self.p.statements[inst.stmt].label.clone(),
                        point: inst.point.clone(),
                        access: Access::Read,
                        array: array.clone(),
                        cell: cell.clone(),
                    });
                }
                self.read((arr, cell))?
            }
            Expr::Bin(op, a, b) => {
                let x = self.eval(a, inst)?;
                let y = self.eval(b, inst)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if num_traits::Zero::is_zero(&y) {
                            return Err(Error::Exec(format!(
                                "division by zero in {} at {:?}",
                                self.p.statements[inst.stmt].label, inst.point
                            )));
                        }
                        x / y
                    }
                    BinOp::Min => x.min(y),
                    BinOp::Max => x.max(y),
                }
            }
            Expr::Ternary(g, a, b) => {
                let l = self.eval(&g.lhs, inst)?;
                let r = self.eval(&g.rhs, inst)?;
                let holds = match g.op {
                    CmpOp::Eq => l == r,
                    CmpOp::Lt => l < r,
                    CmpOp::Le => l <= r,
                };
                self.eval(if holds { a } else { b }, inst)?
            }
            Expr::Call { name, args } => {
                let vals: Vec<Rat> = args.iter().map(|a| self.eval(a, inst)).collect::<Result<_>>()?;
                call_intrinsic(name, &vals, self.env.seed)?
            }
        })
    }

    fn run(mut self, order: Order) -> Result<ExecTrace> {
        let seq = self.order(order)?;
        let mut counts: BTreeMap<String, u64> = self.p.statements.iter().map(|s| (s.label.clone(), 0)).collect();
        for k in seq {
            let inst = self.instances[k].clone();
            let s = &self.p.statements[inst.stmt];
            let v = self.eval(&s.rhs, &inst)?;
            let key = self.writes[k].clone();
            if let Some(log) = self.log.as_mut() {
                log.push(LogEntry {
                    stmt: s.label.clone(),
                    point: inst.point.clone(),
                    access: Access::Write,
                    array: s.array.clone(),
                    cell: key.1.clone(),
                });
            }
            match s.kind {
                StmtKind::Assign => {
                    self.computed.insert(key.clone(), v);
                }
                StmtKind::Reduce(op) => {
                    let next = match self.computed.get(&key) {
                        Some(old) => op.combine(old, &v),
                        None => v,
                    };
                    self.computed.insert(key.clone(), next);
                }
            }
            *self.pending.get_mut(&key).unwrap() -= 1;
            *counts.get_mut(&s.label).unwrap() += 1;
        }
        let mut arrays = self.env.arrays.clone();
        for a in &self.p.arrays {
            if a.kind != ArrayKind::Input {
                if let Some(id) = self.reduction_identity(&a.name) {
                    let store = arrays.entry(a.name.clone()).or_default();
                    for c in a.index_space.enumerate_points(&self.env.binding)? {
                        store.insert(c, id.clone());
                    }
                }
            }
        }
        for ((arr, cell), v) in self.computed {
            arrays.entry(self.p.arrays[arr].name.clone()).or_default().insert(cell, v);
        }
        Ok(ExecTrace { counts, log: self.log, arrays })
    }
}

pub fn evaluate(p: &Program, env: &Environment, order: Order) -> Result<ExecTrace> {
    Machine::new(p, env, false)?.run(order)
}

/// Like `evaluate`, recording every read and write.
pub fn evaluate_logged(p: &Program, env: &Environment, order: Order) -> Result<ExecTrace> {
    Machine::new(p, env, true)?.run(order)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub binding: Binding,
    pub seed: u64,
    pub inputs: ArrayStore,
    pub array: String,
    pub cell: Cell,
    pub expected: Option<Rat>,
    pub actual: Option<Rat>,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<Rat>| v.as_ref().map_or("missing".to_string(), |v| v.to_string());
        let b: Vec<String> = self.binding.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(
            f,
            "{} differs at {} (seed {}): expected {}, got {}",
            cell_text(&self.array, &self.cell),
            b.join(","),
            self.seed,
            show(&self.expected),
            show(&self.actual)
        )
    }
}

/// First differing output cell between two stores, lex order.
pub fn first_difference(expected: &ArrayStore, actual: &ArrayStore) -> Option<(String, Cell, Option<Rat>, Option<Rat>)> {
    let empty = BTreeMap::new();
    for (name, cells) in expected {
        let other = actual.get(name).unwrap_or(&empty);
        let mut keys: Vec<&Cell> = cells.keys().chain(other.keys()).collect();
        keys.sort();
        keys.dedup();
        for c in keys {
            let (a, b) = (cells.get(c), other.get(c));
            if a != b {
                return Some((name.clone(), c.clone(), a.cloned(), b.cloned()));
            }
        }
    }
    None
}

/// Compare declared outputs of `reference` and `candidate` on random inputs.
pub fn oracle_equivalence(
    reference: &Program,
    candidate: &Program,
    bindings: &[Binding],
    trials: u64,
    seed: u64,
) -> Result<std::result::Result<(), Counterexample>> {
    for b in bindings {
        for t in 0..trials {
            let s = seed.wrapping_add(t);
            let env = Environment::random_inputs(reference, b, s)?;
            let want = evaluate(reference, &env, Order::Dataflow)?.outputs(reference);
            let got = evaluate(candidate, &env, Order::Dataflow)?;
            let got: ArrayStore = want.keys().map(|k| (k.clone(), got.arrays.get(k).cloned().unwrap_or_default())).collect();
            if let Some((array, cell, expected, actual)) = first_difference(&want, &got) {
                return Ok(Err(Counterexample { binding: b.clone(), seed: s, inputs: env.arrays, array, cell, expected, actual }));
            }
        }
    }
    Ok(Ok(()))
}
