//! Flow dependences between statements, with one completion node per
//! reduction array, and the instance-level graph used as a cycle oracle.

use std::collections::HashMap;
use std::fmt;

use petgraph::graph::{DiGraph, NodeIndex};

use crate::caps::caps;
use crate::error::{Error, Result};
use crate::ir::{access_relations, ArrayKind, Program, Statement};
use crate::polyhedra::{AffineForm, Binding, ConvexSet, Relation};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Stmt(usize),
    /// All reduction bodies writing this array feed it; readers leave it.
    Completion(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepNode {
    pub id: NodeId,
    pub label: String,
    pub domain: ConvexSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Reduction body instance to its completed cell.
    Reduction,
    /// Completed reduction cell to a reader.
    Use,
    /// Plain write to a reader.
    Flow,
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Reduction => "reduction",
            EdgeKind::Use => "use",
            EdgeKind::Flow => "flow",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependenceEdge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
    pub via_array: String,
    /// Source instance to destination instance.
    pub relation: Relation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepGraph {
    pub nodes: Vec<DepNode>,
    pub edges: Vec<DependenceEdge>,
}

pub fn completion_label(array: &str) -> String {
    format!("{array}.done")
}

/// `R⁻¹ ∘ W`: writer instance to reader instance touching the same cell.
pub fn dependence_relation(p: &Program, writer: &Statement, reader: &Statement, array: &str) -> Result<Vec<Relation>> {
    if writer.array != array {
        return Err(Error::Invalid(format!("`{}` does not write `{array}`", writer.label)));
    }
    let w = access_relations(writer, p)?.write;
    let reads = access_relations(reader, p)?.reads;
    let mut out = Vec::new();
    for (a, r) in reads {
        if a == array {
            out.push(r.inverse().compose(&w)?);
        }
    }
    Ok(out)
}

/// Cells of `array` written by its reduction statements, as one convex set
/// (the declared extent when the writers' images differ).
fn completion_domain(p: &Program, array: &str) -> Result<ConvexSet> {
    let decl = p.array(array).ok_or_else(|| Error::Invalid(format!("undeclared array `{array}`")))?;
    let names = decl.index_space.space().iter_vars.clone();
    let mut images = Vec::new();
    for s in p.writers_of(array).into_iter().filter(|s| s.is_reduce()) {
        images.push(s.write_image(&names)?);
    }
    if let Some(first) = images.first() {
        if images.iter().all(|im| im.subset_of(first).unwrap_or(false) && first.subset_of(im).unwrap_or(false)) {
            return first.intersect(&decl.index_space);
        }
    }
    Ok(decl.index_space.clone())
}

pub fn all_dependences(p: &Program) -> Result<DepGraph> {
    let mut nodes: Vec<DepNode> = p
        .statements
        .iter()
        .enumerate()
        .map(|(k, s)| DepNode { id: NodeId::Stmt(k), label: s.label.clone(), domain: s.domain.clone() })
        .collect();
    let mut completion: HashMap<String, usize> = HashMap::new();
    for a in p.reduction_arrays() {
        completion.insert(a.clone(), nodes.len());
        nodes.push(DepNode { id: NodeId::Completion(a.clone()), label: completion_label(&a), domain: completion_domain(p, &a)? });
    }
    let access: Vec<_> = p.statements.iter().map(|s| access_relations(s, p)).collect::<Result<_>>()?;
    let mut edges = Vec::new();
    for (k, s) in p.statements.iter().enumerate() {
        if s.is_reduce() {
            let c = completion[&s.array];
            edges.push(DependenceEdge {
                src: k,
                dst: c,
                kind: EdgeKind::Reduction,
                via_array: s.array.clone(),
                relation: access[k].write.clone(),
            });
        }
    }
    for (t, reader) in access.iter().enumerate() {
        for (array, read) in &reader.reads {
            for (k, s) in p.statements.iter().enumerate() {
                if s.array != *array || s.is_reduce() {
                    continue;
                }
                let rel = read.inverse().compose(&access[k].write)?;
                if !rel.is_empty() {
                    edges.push(DependenceEdge { src: k, dst: t, kind: EdgeKind::Flow, via_array: array.clone(), relation: rel });
                }
            }
            if let Some(&c) = completion.get(array) {
                let cells = nodes[c].domain.clone();
                let rel = read.inverse().restrict_domain(&cells)?;
                if !rel.is_empty() {
                    edges.push(DependenceEdge { src: c, dst: t, kind: EdgeKind::Use, via_array: array.clone(), relation: rel });
                }
            }
        }
    }
    Ok(DepGraph { nodes, edges })
}

impl DepGraph {
    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    /// Edge families as `(src, dst, kind)` label triples, deduplicated.
    pub fn families(&self) -> Vec<(String, String, EdgeKind)> {
        let mut out: Vec<(String, String, EdgeKind)> = Vec::new();
        for e in &self.edges {
            let t = (self.nodes[e.src].label.clone(), self.nodes[e.dst].label.clone(), e.kind);
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }

    /// `SRC -> DST via ARRAY : relation` lines.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!(
                "{} -> {} via {} ({}) : {}\n",
                self.nodes[e.src].label,
                self.nodes[e.dst].label,
                e.via_array,
                e.kind.name(),
                e.relation
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceNode {
    pub node: usize,
    pub point: Vec<i64>,
}

#[derive(Clone, Debug)]
pub struct InstanceGraph {
    pub binding: Binding,
    pub labels: Vec<String>,
    pub graph: DiGraph<InstanceNode, EdgeKind>,
}

pub fn instance_graph(deps: &DepGraph, b: &Binding) -> Result<InstanceGraph> {
    let cap = caps().nodes;
    let mut graph = DiGraph::new();
    let mut index: HashMap<InstanceNode, NodeIndex> = HashMap::new();
    for (k, n) in deps.nodes.iter().enumerate() {
        for point in n.domain.enumerate_points(b)? {
            let inst = InstanceNode { node: k, point };
            let ix = graph.add_node(inst.clone());
            index.insert(inst, ix);
            if graph.node_count() > cap {
                return Err(Error::CapExceeded { what: "instance graph nodes", cap });
            }
        }
    }
    for e in &deps.edges {
        for (x, y) in e.relation.pairs(b)? {
            let (Some(&a), Some(&c)) = (
                index.get(&InstanceNode { node: e.src, point: x }),
                index.get(&InstanceNode { node: e.dst, point: y }),
            ) else {
                return Err(Error::Internal("dependence pair outside node domains".into()));
            };
            graph.add_edge(a, c, e.kind);
        }
    }
    Ok(InstanceGraph { binding: b.clone(), labels: deps.nodes.iter().map(|n| n.label.clone()).collect(), graph })
}

impl InstanceGraph {
    pub fn describe(&self, ix: NodeIndex) -> String {
        let n = &self.graph[ix];
        let pts: Vec<String> = n.point.iter().map(|v| v.to_string()).collect();
        format!("{}[{}]", self.labels[n.node], pts.join(","))
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Nodes of the first cycle found by DFS, closing node not repeated.
    pub fn find_cycle(&self) -> Option<Vec<NodeIndex>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let g = &self.graph;
        let mut mark = vec![Mark::New; g.node_count()];
        let mut parent: Vec<Option<NodeIndex>> = vec![None; g.node_count()];
        for root in g.node_indices() {
            if mark[root.index()] != Mark::New {
                continue;
            }
            let mut stack: Vec<(NodeIndex, Vec<NodeIndex>)> = vec![(root, g.neighbors(root).collect())];
            mark[root.index()] = Mark::Open;
            while let Some((v, succ)) = stack.last_mut() {
                let v = *v;
                match succ.pop() {
                    Some(w) => match mark[w.index()] {
                        Mark::New => {
                            mark[w.index()] = Mark::Open;
                            parent[w.index()] = Some(v);
                            stack.push((w, g.neighbors(w).collect()));
                        }
                        Mark::Open => {
                            let mut cycle = vec![v];
                            let mut cur = v;
                            while cur != w {
                                cur = parent[cur.index()].unwrap();
                                cycle.push(cur);
                            }
                            cycle.reverse();
                            return Some(cycle);
                        }
                        Mark::Done => {}
                    },
                    None => {
                        mark[v.index()] = Mark::Done;
                        stack.pop();
                    }
                }
            }
        }
        None
    }

    /// Cycle witness as readable node names.
    pub fn has_cycle(&self) -> (bool, Vec<String>) {
        match self.find_cycle() {
            Some(c) => (true, c.into_iter().map(|ix| self.describe(ix)).collect()),
            None => (false, Vec::new()),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph instances {\n");
        for ix in self.graph.node_indices() {
            out.push_str(&format!("  n{} [label=\"{}\"];\n", ix.index(), self.describe(ix)));
        }
        for e in self.graph.edge_indices() {
            let (a, b) = self.graph.edge_endpoints(e).unwrap();
            out.push_str(&format!("  n{} -> n{} [label=\"{}\"];\n", a.index(), b.index(), self.graph[e].name()));
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for DepGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Arrays read somewhere but neither input nor written.
pub fn unresolved_reads(p: &Program) -> Vec<String> {
    let mut out = Vec::new();
    for s in &p.statements {
        for (a, _) in s.rhs.reads() {
            let ok = p.array(a).is_some_and(|d| d.kind == ArrayKind::Input) || !p.writers_of(a).is_empty();
            if !ok && !out.iter().any(|x: &String| x == a) {
                out.push(a.to_string());
            }
        }
    }
    out
}

/// The identity map on a node's space, handy for synthetic edges.
pub fn identity_forms(domain: &ConvexSet) -> Vec<AffineForm> {
    (0..domain.space().n_vars()).map(|k| AffineForm::var(domain.space(), k)).collect()
}
