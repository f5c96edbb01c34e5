//! Reduction simplification over the faces of each reduction's domain,
//! with reuse directions chosen to agree with the program's schedule.

pub mod candidates;
pub mod copies;
pub mod search;
pub mod transform;

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

pub use candidates::{candidate_reuse_vectors, inverse_constraints, share_space, CandidateSet};
pub use copies::{fold_redirect, inline_array, inline_arrays};
pub use search::{exhaustive_search, SearchResult};
pub use transform::{apply_st, residual_domains, NameGen, STResult, StOutcome, Template};

use crate::complexity::{program_complexity, ProgramComplexity, TermOrder, DEFAULT_EXPONENT_CAP};
use crate::dependence::{all_dependences, instance_graph};
use crate::error::{Error, Result};
use crate::exec::oracle_equivalence;
use crate::ir::{validate_program, ArrayDecl, ArrayKind, Expr, Program, Statement, StmtKind};
use crate::polyhedra::{AffineForm, Binding, ConvexSet, DirVector, Face, SetUnion};
use crate::scheduling::{
    augment_program, feautrier_schedule, is_schedulable, reuse_consistent, schedulable_with_reuse, AugmentedProgram, Consistency,
    Schedule,
};

/// Parameter value used for cycle witnesses and the final self-check.
pub const WITNESS_VALUE: i64 = 4;

/// A face of a reduction's original domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceKey {
    pub statement: String,
    pub mask: Vec<usize>,
}

impl fmt::Display for FaceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.mask.iter().map(|k| k.to_string()).collect();
        write!(f, "{}/{{{}}}", self.statement, m.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Apply(DirVector),
    /// Applied regardless of the schedule; a refusal is an error.
    Force(DirVector),
    Skip(String),
}

/// The direction chosen for every face that was visited.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FaceAssignment {
    pub entries: BTreeMap<FaceKey, Decision>,
}

impl fmt::Display for FaceAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, d) in &self.entries {
            match d {
                Decision::Apply(r) | Decision::Force(r) => writeln!(f, "{k} {r}")?,
                Decision::Skip(why) => writeln!(f, "{k} skip ({why})")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Applied(DirVector),
    Skipped(String),
    NoGain(DirVector, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceDecision {
    pub key: FaceKey,
    /// The statement the decision was applied to (a residual, below the root).
    pub target: String,
    pub face: String,
    pub dimension: usize,
    pub candidates: Vec<DirVector>,
    pub outcome: Outcome,
}

impl fmt::Display for FaceDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.candidates.iter().map(|d| d.to_string()).collect();
        write!(
            f,
            "face stmt={} target={} dim={} set=\"{}\" candidates=[{}] ",
            self.key.statement,
            self.target,
            self.dimension,
            self.face,
            c.join(" ")
        )?;
        match &self.outcome {
            Outcome::Applied(r) => write!(f, "decision=applied r={r}"),
            Outcome::Skipped(why) => write!(f, "decision=skipped reason=\"{why}\""),
            Outcome::NoGain(r, why) => write!(f, "decision=nogain r={r} reason=\"{why}\""),
        }
    }
}

/// Everything the choosers need: the augmented program and its schedule.
pub struct Context {
    pub original: Program,
    pub aug: AugmentedProgram,
    pub schedule: Schedule,
    schedulable: RefCell<BTreeMap<(String, DirVector), bool>>,
}

impl Context {
    pub fn new(p: &Program) -> Result<Context> {
        validate_program(p)?;
        let aug = augment_program(p)?;
        let schedule = feautrier_schedule(&all_dependences(&aug.program)?)?;
        Ok(Context { original: p.clone(), aug, schedule, schedulable: RefCell::new(BTreeMap::new()) })
    }

    /// Schedule rows of the redirect that finalizes `array`.
    pub fn theta(&self, array: &str) -> Result<&[AffineForm]> {
        let red = self.aug.redirect_for(array).ok_or_else(|| Error::Internal(format!("no redirect for `{array}`")))?;
        self.schedule.rows_of(&red.label).ok_or_else(|| Error::Internal(format!("`{}` is unscheduled", red.label)))
    }

    /// Whether the program stays schedulable with `A[x]` before `A[x + r_a]`.
    pub fn schedulable_with(&self, array: &str, r_a: &DirVector) -> Result<bool> {
        let key = (array.to_string(), r_a.clone());
        if let Some(&ok) = self.schedulable.borrow().get(&key) {
            return Ok(ok);
        }
        let ok = schedulable_with_reuse(&self.aug, array, r_a)?;
        self.schedulable.borrow_mut().insert(key, ok);
        Ok(ok)
    }

    fn decl(&self, array: &str) -> Result<&ArrayDecl> {
        self.aug.program.array(array).ok_or_else(|| Error::Internal(format!("undeclared array `{array}`")))
    }
}

/// Image of `r` under the statement's LHS map.
pub fn project_direction(s: &Statement, r: &DirVector) -> Result<DirVector> {
    let mut out = Vec::new();
    for f in &s.lhs {
        let v = f.apply_linear(&r.entries);
        if !v.is_integer() {
            return Err(Error::Invalid(format!("projection of {r} is not integral")));
        }
        out.push(crate::Scalar::as_i64(&v).ok_or_else(|| Error::Invalid("projected vector out of range".into()))?);
    }
    Ok(DirVector::new(out))
}

fn lsub_empty(s: &Statement, r: &DirVector, u_names: &[String]) -> Result<bool> {
    Ok(residual_domains(s, r, u_names)?.1.is_empty())
}

/// The schedule-consistent choice among `cands` for a reduction whose
/// results end up in `array`.
pub fn choose_direction(ctx: &Context, array: &str, s: &Statement, cands: &[DirVector]) -> Result<Decision> {
    let Some(r) = cands.first() else { return Ok(Decision::Skip("no candidate reuse vector".into())) };
    let r_a = project_direction(s, r)?;
    let back = r.neg();
    let back_ok = cands.contains(&back);
    match reuse_consistent(ctx.theta(array)?, &r_a) {
        Consistency::Before => Ok(Decision::Apply(r.clone())),
        Consistency::After if back_ok => Ok(Decision::Apply(back)),
        Consistency::After => Ok(Decision::Skip("inverse-restricted against schedule".into())),
        Consistency::Zero => {
            let fwd = ctx.schedulable_with(array, &r_a)?;
            let bwd = back_ok && ctx.schedulable_with(array, &r_a.neg())?;
            match (fwd, bwd) {
                (true, true) => {
                    let names: Vec<String> = (0..s.lhs.len()).map(|k| format!("u{k}")).collect();
                    if !lsub_empty(s, r, &names)? && lsub_empty(s, &back, &names)? {
                        Ok(Decision::Apply(back))
                    } else {
                        Ok(Decision::Apply(r.clone()))
                    }
                }
                (true, false) => Ok(Decision::Apply(r.clone())),
                (false, true) => Ok(Decision::Apply(back)),
                (false, false) => Ok(Decision::Skip("no schedulable direction".into())),
            }
        }
    }
}

/// Picks a decision for each visited face.
pub trait Chooser {
    fn choose(&mut self, ctx: &Context, array: &str, s: &Statement, key: &FaceKey, cands: &CandidateSet) -> Result<Decision>;
}

/// The schedule-consistency heuristic, with optional forced directions on
/// the full-domain face of named statements.
#[derive(Clone, Debug, Default)]
pub struct Heuristic {
    pub forced: BTreeMap<String, DirVector>,
    memo: BTreeMap<FaceKey, Decision>,
    root_masks: BTreeMap<String, Vec<usize>>,
}

impl Heuristic {
    pub fn new(forced: BTreeMap<String, DirVector>) -> Heuristic {
        Heuristic { forced, ..Heuristic::default() }
    }
}

impl Chooser for Heuristic {
    fn choose(&mut self, ctx: &Context, array: &str, s: &Statement, key: &FaceKey, cands: &CandidateSet) -> Result<Decision> {
        if let Some(d) = self.memo.get(key) {
            return Ok(d.clone());
        }
        let root = self.root_masks.entry(key.statement.clone()).or_insert_with(|| key.mask.clone());
        let d = match self.forced.get(&key.statement) {
            Some(r) if *root == key.mask => Decision::Force(r.clone()),
            _ => choose_direction(ctx, array, s, &cands.enumerate())?,
        };
        self.memo.insert(key.clone(), d.clone());
        Ok(d)
    }
}

/// The rewritten statements for one reduction array.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fragment {
    pub array: String,
    pub statements: Vec<Statement>,
    pub arrays: Vec<ArrayDecl>,
    pub decisions: Vec<FaceDecision>,
}

impl Fragment {
    pub fn generated_arrays(&self) -> Vec<String> {
        self.arrays.iter().map(|a| a.name.clone()).collect()
    }
}

struct Root {
    label: String,
    faces: Vec<Face>,
}

impl Root {
    /// Smallest face containing `set`.
    fn face_of(&self, set: &ConvexSet) -> Result<Option<usize>> {
        let mut best: Option<usize> = None;
        for (k, f) in self.faces.iter().enumerate() {
            if set.subset_of(&f.as_set)? && best.is_none_or(|b| f.dimension() < self.faces[b].dimension()) {
                best = Some(k);
            }
        }
        Ok(best)
    }
}

struct Driver<'a> {
    ctx: &'a Context,
    array: String,
    names: NameGen,
    frag: Fragment,
}

impl Driver<'_> {
    /// Transform `s`, whose domain shifted by `-offset` lies on face `face`
    /// of the root domain, then recurse into its residual reductions.
    fn reduce(
        &mut self,
        chooser: &mut dyn Chooser,
        root: &Root,
        s: Statement,
        face: usize,
        offset: &DirVector,
        consumed: &[usize],
        shared: bool,
    ) -> Result<()> {
        let f = &root.faces[face];
        let key = FaceKey { statement: root.label.clone(), mask: f.tight_mask.clone() };
        let cands = candidate_reuse_vectors(&s, f);
        let listed = cands.enumerate();
        let record = |frag: &mut Fragment, outcome: Outcome| {
            frag.decisions.push(FaceDecision {
                key: key.clone(),
                target: s.label.clone(),
                face: f.as_set.body_string(),
                dimension: f.dimension(),
                candidates: listed.clone(),
                outcome,
            });
        };
        let (r, forced) = match chooser.choose(self.ctx, &self.array, &s, &key, &cands)? {
            Decision::Skip(why) => {
                record(&mut self.frag, Outcome::Skipped(why));
                self.frag.statements.push(s);
                return Ok(());
            }
            Decision::Apply(r) => (r, false),
            Decision::Force(r) => (r, true),
        };
        // A shared target gets a private array and a one-to-one reduction into it.
        let mut target = s.clone();
        let mut merge = None;
        if shared {
            let decl = self.decl_of(&s.array)?;
            let tmp = self.names.fresh(&format!("{}Part", s.array));
            let ids: Vec<AffineForm> = (0..decl.index_space.space().n_vars()).map(|k| AffineForm::var(decl.index_space.space(), k)).collect();
            merge = Some(Statement {
                label: self.names.fresh(&format!("{}Merge", s.label)),
                array: s.array.clone(),
                lhs: ids.clone(),
                kind: s.kind,
                rhs: Expr::read(&tmp, ids),
                domain: s.write_image(&decl.index_space.space().iter_vars)?,
            });
            self.frag.arrays.push(ArrayDecl { name: tmp.clone(), index_space: decl.index_space.clone(), kind: ArrayKind::Intermediate });
            target.array = tmp;
        }
        let decl = self.decl_of(&target.array)?;
        let st = match apply_st(&target, &decl, &r, &mut self.names) {
            Ok(StOutcome::Applied(st)) => st,
            Ok(StOutcome::NoGain { reuse, detail }) => {
                if forced {
                    return Err(Error::Refused(format!("forcing {reuse} on `{}` gives no gain: {detail}", s.label)));
                }
                self.undo_merge(&merge);
                record(&mut self.frag, Outcome::NoGain(reuse, detail));
                self.frag.statements.push(s);
                return Ok(());
            }
            Err(Error::Refused(why)) if !forced => {
                self.undo_merge(&merge);
                record(&mut self.frag, Outcome::Skipped(why));
                self.frag.statements.push(s);
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        record(&mut self.frag, Outcome::Applied(r.clone()));
        self.frag.statements.extend(merge);
        self.frag.arrays.extend(st.arrays.iter().cloned());
        self.frag.statements.extend(st.lhs_statements.iter().map(|(_, s)| s.clone()));
        let mut used = consumed.to_vec();
        used.push(face);
        let pieces = st.add.iter().map(|q| (q, offset.clone(), st.add.len() > 1));
        let sub_offset = DirVector::new(offset.entries.iter().zip(&r.entries).map(|(a, b)| a + b).collect());
        let pieces = pieces.chain(st.sub.iter().map(|q| (q, sub_offset.clone(), st.sub.len() > 1)));
        for (q, off, shared) in pieces.collect::<Vec<_>>() {
            let home = q.domain.translate(&off.neg())?;
            match root.face_of(&home)? {
                Some(k) if !used.contains(&k) => self.reduce(chooser, root, q.clone(), k, &off, &used, shared)?,
                _ => self.frag.statements.push(q.clone()),
            }
        }
        Ok(())
    }

    fn decl_of(&self, array: &str) -> Result<ArrayDecl> {
        match self.frag.arrays.iter().find(|a| a.name == array) {
            Some(d) => Ok(d.clone()),
            None => Ok(self.ctx.decl(array)?.clone()),
        }
    }

    /// Once no reduction writes `array`, its cells outside every write image
    /// stop reading as the identity; assign it explicitly there.
    fn fill_identity(&mut self, array: &str, writers: &[Statement]) -> Result<()> {
        if self.frag.statements.iter().any(|s| s.array == array && s.is_reduce()) {
            return Ok(());
        }
        let Some(id) = writers.iter().find_map(|s| s.op().and_then(|op| op.identity())) else { return Ok(()) };
        let decl = self.decl_of(array)?;
        let space = decl.index_space.space().clone();
        let mut rest = SetUnion::from_set(decl.index_space.clone());
        for w in writers {
            rest = rest.subtract_set(&w.write_image(&space.iter_vars)?)?;
        }
        let ids: Vec<AffineForm> = (0..space.n_vars()).map(|k| AffineForm::var(&space, k)).collect();
        for piece in rest.pieces.into_iter().filter(|q| !q.is_empty()) {
            self.frag.statements.push(Statement {
                label: self.names.fresh(&format!("{}Init", self.array)),
                array: array.to_string(),
                lhs: ids.clone(),
                kind: StmtKind::Assign,
                rhs: Expr::Const(id.clone()),
                domain: piece,
            });
        }
        Ok(())
    }

    fn undo_merge(&mut self, merge: &Option<Statement>) {
        if let Some(m) = merge {
            if let Expr::Read { array, .. } = &m.rhs {
                self.frag.arrays.retain(|a| &a.name != array);
            }
        }
    }
}

/// Rewrite every reduction into `array` (already redirected in `ctx.aug`).
pub fn transform_array(ctx: &Context, array: &str, chooser: &mut dyn Chooser) -> Result<Fragment> {
    let red = ctx.aug.redirect_for(array).ok_or_else(|| Error::Internal(format!("no redirect for `{array}`")))?;
    let writers: Vec<Statement> =
        ctx.aug.program.statements.iter().filter(|s| s.array == red.tmp_array && s.is_reduce()).cloned().collect();
    let mut driver = Driver {
        ctx,
        array: array.to_string(),
        names: NameGen::from_program(&ctx.aug.program),
        frag: Fragment { array: array.to_string(), ..Fragment::default() },
    };
    let shared = writers.len() > 1;
    for s in writers.clone() {
        let root = Root { label: s.label.clone(), faces: s.domain.faces()? };
        if root.faces.is_empty() {
            driver.frag.statements.push(s);
            continue;
        }
        let zero = DirVector::new(vec![0; s.space().n_vars()]);
        driver.reduce(chooser, &root, s, 0, &zero, &[], shared)?;
    }
    driver.fill_identity(&red.tmp_array, &writers)?;
    Ok(driver.frag)
}

/// The augmented program with each fragment in place of its array's
/// reductions, before copy elimination.
pub fn assemble(ctx: &Context, fragments: &[Fragment]) -> Result<Program> {
    let mut q = ctx.aug.program.clone();
    for frag in fragments {
        let red = ctx.aug.redirect_for(&frag.array).ok_or_else(|| Error::Internal("fragment without redirect".into()))?;
        let at = q
            .statements
            .iter()
            .position(|s| s.array == red.tmp_array && s.is_reduce())
            .unwrap_or(q.statements.len());
        q.statements.retain(|s| !(s.array == red.tmp_array && s.is_reduce()));
        let at = at.min(q.statements.len());
        q.statements.splice(at..at, frag.statements.iter().cloned());
        q.arrays.extend(frag.arrays.iter().cloned());
    }
    let mut seen = std::collections::BTreeSet::new();
    for name in q.statements.iter().map(|s| &s.label).chain(q.arrays.iter().map(|a| &a.name)) {
        if !seen.insert(name.clone()) {
            return Err(Error::Internal(format!("generated name `{name}` collides")));
        }
    }
    q.refresh_intrinsics();
    Ok(q)
}

/// Inline the fragments' single-contributor arrays and fold every redirect.
pub fn eliminate_copies(ctx: &Context, raw: &Program, fragments: &[Fragment]) -> Result<Program> {
    let generated: Vec<String> = fragments.iter().flat_map(Fragment::generated_arrays).collect();
    let mut q = inline_arrays(raw, &generated)?;
    for red in &ctx.aug.redirects {
        q = fold_redirect(&q, red);
    }
    Ok(q)
}

/// All parameters at [`WITNESS_VALUE`].
pub fn witness_binding(p: &Program) -> Binding {
    p.params.iter().map(|n| (n.clone(), WITNESS_VALUE)).collect()
}

/// `Ok(None)` when schedulable, else a dependency cycle at the witness binding
/// (empty if the cycle only appears for larger parameters).
pub fn cycle_witness(p: &Program) -> Result<Option<Vec<String>>> {
    let deps = all_dependences(p)?;
    if is_schedulable(&deps)? {
        return Ok(None);
    }
    let g = instance_graph(&deps, &witness_binding(p))?;
    Ok(Some(g.find_cycle().map(|c| c.iter().map(|&n| g.describe(n)).collect()).unwrap_or_default()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplifyReport {
    pub decisions: Vec<FaceDecision>,
    pub before: ProgramComplexity,
    pub after: ProgramComplexity,
}

impl SimplifyReport {
    pub fn assignment(&self) -> FaceAssignment {
        let mut a = FaceAssignment::default();
        for d in &self.decisions {
            let dec = match &d.outcome {
                Outcome::Applied(r) => Decision::Apply(r.clone()),
                Outcome::Skipped(why) => Decision::Skip(why.clone()),
                Outcome::NoGain(_, why) => Decision::Skip(why.clone()),
            };
            a.entries.entry(d.key.clone()).or_insert(dec);
        }
        a
    }

    pub fn applied(&self) -> usize {
        self.decisions.iter().filter(|d| matches!(d.outcome, Outcome::Applied(_))).count()
    }

    /// `key=value` lines, stable across runs.
    pub fn machine(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("before.max={}\nbefore.statements={}\n", self.before.max_term, self.before.rows.len()));
        out.push_str(&format!("after.max={}\nafter.statements={}\n", self.after.max_term, self.after.rows.len()));
        for d in &self.decisions {
            out.push_str(&format!("{d}\n"));
        }
        out
    }
}

impl fmt::Display for SimplifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "complexity {} -> {} ({} -> {} statements)",
            self.before.max_term,
            self.after.max_term,
            self.before.rows.len(),
            self.after.rows.len()
        )?;
        for d in &self.decisions {
            let what = match &d.outcome {
                Outcome::Applied(r) => format!("applied {r}"),
                Outcome::Skipped(why) => format!("skipped: {why}"),
                Outcome::NoGain(r, why) => format!("no gain along {r}: {why}"),
            };
            writeln!(f, "  {} on {} (dim {}, {}): {what}", d.target, d.key, d.dimension, d.face)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Simplified {
    pub program: Program,
    /// The transformed program before copy elimination.
    pub raw: Program,
    pub report: SimplifyReport,
}

pub fn default_order(p: &Program) -> TermOrder {
    TermOrder::graded(&p.params, DEFAULT_EXPONENT_CAP)
}

/// Heuristic simplification of every reduction.
pub fn simplify_program(p: &Program) -> Result<Simplified> {
    simplify_with(p, &BTreeMap::new())
}

/// As [`simplify_program`], forcing directions on the named statements.
pub fn simplify_with(p: &Program, forced: &BTreeMap<String, DirVector>) -> Result<Simplified> {
    for label in forced.keys() {
        if !p.statement(label).is_some_and(Statement::is_reduce) {
            return Err(Error::Invalid(format!("`{label}` is not a reduction statement")));
        }
    }
    let ctx = Context::new(p)?;
    let mut chooser = Heuristic::new(forced.clone());
    let mut fragments = Vec::new();
    for red in &ctx.aug.redirects {
        fragments.push(transform_array(&ctx, &red.array, &mut chooser)?);
    }
    let raw = assemble(&ctx, &fragments)?;
    if let Some(cycle) = cycle_witness(&raw)? {
        let msg = format!("dependency cycle: {}", cycle.join(" -> "));
        return Err(if forced.is_empty() { Error::Internal(msg) } else { Error::Refused(msg) });
    }
    let program = eliminate_copies(&ctx, &raw, &fragments)?;
    check_output(p, &program)?;
    let order = default_order(p);
    let report = SimplifyReport {
        decisions: fragments.into_iter().flat_map(|f| f.decisions).collect(),
        before: program_complexity(p, &order)?,
        after: program_complexity(&program, &order)?,
    };
    Ok(Simplified { program, raw, report })
}

/// Bug guard on a transformed program: valid, schedulable, and equal to the
/// original on one random input.
pub fn check_output(original: &Program, q: &Program) -> Result<()> {
    validate_program(q).map_err(|e| Error::Internal(format!("transformed program invalid: {e}")))?;
    if let Some(cycle) = cycle_witness(q)? {
        return Err(Error::Internal(format!("transformed program unschedulable: {}", cycle.join(" -> "))));
    }
    let b = witness_binding(original);
    if let Err(cex) = oracle_equivalence(original, q, &[b], 1, 0)? {
        return Err(Error::Internal(format!("transformed program differs: {cex}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
