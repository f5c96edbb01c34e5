//! End-to-end acceptance checks. One PASS/FAIL line per criterion; the
//! process fails if any criterion fails that is not listed as unattainable.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::Instant;

use mssr_core::complexity::{compare_programs, empirical_count, empirical_exponents};
use mssr_core::dependence::{all_dependences, instance_graph};
use mssr_core::exec::{oracle_equivalence, param_values};
use mssr_core::ir::{parse_program, probe_binding, Program};
use mssr_core::polyhedra::{binding, AffineForm, Binding, ConvexSet, DirVector};
use mssr_core::scheduling::{
    feautrier_schedule, instance_order, reschedule_with_reuse, reuse_consistent, timestamp_compare,
    validate_schedule, Consistency, Schedule,
};
use mssr_core::simplify::{
    candidate_reuse_vectors, choose_direction, default_order, exhaustive_search, simplify_program, simplify_with,
    Context, Decision, Outcome,
};
use mssr_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Instance count bound for the scan, as a multiple of N.
const SCAN_COUNT_FACTOR: u64 = 4;
/// Allowed distance of a fitted growth exponent from its integer target.
const FIT_TOLERANCE: f64 = 0.2;
const FIT_BASE: i64 = 8;
const FIT_SCALES: [i64; 4] = [8, 16, 32, 64];
const ORACLE_TRIALS: u64 = 5;
const ORACLE_SEED: u64 = 11;
const RANDOM_SETS: usize = 24;
const SET_SEED: u64 = 2024;

/// Criteria expected to fail, with the reason recorded alongside the code.
const KNOWN_UNATTAINABLE: &[&str] = &["7c"];

type Verdict = std::result::Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn bench(name: &str) -> Program {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("benchmarks").join(name);
    parse_program(&std::fs::read_to_string(&path).expect("benchmark readable")).expect("benchmark parses")
}

fn n(v: i64) -> Binding {
    binding(&[("N", v)])
}

fn all_params(p: &Program, v: i64) -> Binding {
    p.params.iter().map(|name| (name.clone(), v)).collect()
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fits(p: &Program) -> Result<BTreeMap<String, f64>, String> {
    Ok(empirical_exponents(p, FIT_BASE, &FIT_SCALES).map_err(fail)?.into_iter().collect())
}

fn check_fit(what: &str, got: &BTreeMap<String, f64>, want: &[(&str, f64)]) -> Result<String, String> {
    let mut parts = Vec::new();
    for (param, target) in want {
        let v = got.get(*param).copied().ok_or_else(|| format!("{what}: no fit for {param}"))?;
        ensure((v - target).abs() <= FIT_TOLERANCE, || format!("{what}: {param} slope {v:.3}, want {target}"))?;
        parts.push(format!("{param}={v:.2}"));
    }
    Ok(format!("{what} {}", parts.join(",")))
}

fn equivalent(p: &Program, q: &Program, bindings: &[Binding]) -> Result<(), String> {
    match oracle_equivalence(p, q, bindings, ORACLE_TRIALS, ORACLE_SEED).map_err(fail)? {
        Ok(()) => Ok(()),
        Err(cex) => Err(format!("outputs differ: {cex}")),
    }
}

fn scan_count_is_linear() -> Verdict {
    let p = bench("prefix_sum.eir");
    let q = simplify_program(&p).map_err(fail)?.program;
    let mut counts = Vec::new();
    for size in [8, 64, 256] {
        let c = empirical_count(&q, &n(size)).map_err(fail)?;
        ensure(c <= SCAN_COUNT_FACTOR * size as u64, || format!("{c} instances at N={size}"))?;
        counts.push(format!("{c}@{size}"));
    }
    equivalent(&p, &q, &[n(8), n(64), n(256)])?;
    Ok(format!("counts {}, exact on {ORACLE_TRIALS} inputs per size", counts.join(" ")))
}

fn feedback_scan_direction() -> Verdict {
    let p = bench("prefix_sum_ms.eir");
    let out = simplify_program(&p).map_err(fail)?;
    let shown = out.report.assignment().to_string();
    ensure(shown.lines().any(|l| l == "S1/{} [1,0]"), || format!("whole face not forward:\n{shown}"))?;
    let ctx = Context::new(&p).map_err(fail)?;
    let c = reuse_consistent(ctx.theta("B").map_err(fail)?, &DirVector::new(vec![1]));
    ensure(c == Consistency::Before, || format!("schedule orders B {c:?}"))?;
    let deps = all_dependences(&out.program).map_err(fail)?;
    for size in [4, 16] {
        let g = instance_graph(&deps, &n(size)).map_err(fail)?;
        ensure(g.find_cycle().is_none(), || format!("cycle at N={size}"))?;
    }
    let forced = BTreeMap::from([("S1".to_string(), DirVector::new(vec![-1, 0]))]);
    let cycle = match simplify_with(&p, &forced) {
        Err(Error::Refused(msg)) => msg,
        other => return Err(format!("backward direction not refused: {other:?}")),
    };
    let nodes: Vec<&str> = cycle.trim_start_matches("dependency cycle: ").split(" -> ").collect();
    let visits = |prefix: &str| nodes.iter().any(|v| v.starts_with(prefix));
    ensure(visits("Bredir[") && visits("S2[") && visits("S1"), || format!("cycle misses a role: {cycle}"))?;
    Ok(format!("forward applied, acyclic at N=4,16; forced backward refused via {} nodes", nodes.len()))
}

fn sampler_reductions() -> Verdict {
    let p = bench("gs_2gmm.eir");
    let out = simplify_program(&p).map_err(fail)?;
    let applied: BTreeSet<&str> = out
        .report
        .decisions
        .iter()
        .filter(|d| d.key.mask.is_empty() && matches!(d.outcome, Outcome::Applied(_)))
        .map(|d| d.key.statement.as_str())
        .collect();
    ensure(applied.len() == 8, || format!("applied on {applied:?}"))?;
    let before = check_fit("before", &fits(&p)?, &[("N", 2.0)])?;
    let after = check_fit("after", &fits(&out.program)?, &[("N", 1.0)])?;
    equivalent(&p, &out.program, &[n(16), n(32)])?;
    Ok(format!("8 reductions; {before}; {after}; exact at N=16,32"))
}

fn kernel_fits() -> Verdict {
    let mut parts = Vec::new();
    for (name, want) in [("gmm_gs_kernel.eir", [("N", 1.0), ("K", 1.0)]), ("coxph_kernel.eir", [("N", 1.0), ("K", 2.0)])] {
        let p = bench(name);
        let q = simplify_program(&p).map_err(fail)?.program;
        parts.push(check_fit(name, &fits(&p)?, &[("N", 2.0), ("K", 2.0)])?);
        parts.push(check_fit("->", &fits(&q)?, &want)?);
        let small = binding(&[("N", 5), ("K", 3)]);
        equivalent(&p, &q, &[small])?;
    }
    Ok(parts.join(" "))
}

fn linear_text(coeffs: &[i64], names: &[&str], constant: i64) -> String {
    let mut out = String::new();
    for (c, v) in coeffs.iter().zip(names).filter(|(c, _)| **c != 0) {
        let sign = if *c < 0 { "-" } else { "+" };
        let mag = if c.abs() == 1 { v.to_string() } else { format!("{}*{v}", c.abs()) };
        if out.is_empty() {
            out = if *c < 0 { format!("-{mag}") } else { mag };
        } else {
            out.push_str(&format!(" {sign} {mag}"));
        }
    }
    match (out.is_empty(), constant) {
        (true, c) => c.to_string(),
        (false, 0) => out,
        (false, c) if c < 0 => format!("{out} - {}", -c),
        (false, c) => format!("{out} + {c}"),
    }
}

/// A parametric set with points at every sampled size.
fn random_set(rng: &mut ChaCha8Rng) -> ConvexSet {
    loop {
        let s = random_set_once(rng);
        if [2, 5, 8].iter().all(|&v| !s.is_integer_empty_at(&n(v)).unwrap_or(true)) {
            return s;
        }
    }
}

fn random_set_once(rng: &mut ChaCha8Rng) -> ConvexSet {
    let dim = rng.gen_range(1..=3);
    let vars = &["i", "j", "k"][..dim];
    let mut cons: Vec<String> = vars.iter().map(|v| format!("0 <= {v} <= N")).collect();
    for _ in 0..rng.gen_range(0..=2) {
        let mut names = vars.to_vec();
        names.push("N");
        let coeffs: Vec<i64> = (0..=dim).map(|_| rng.gen_range(-2..=2)).collect();
        cons.push(format!("{} >= 0", linear_text(&coeffs, &names, rng.gen_range(-1..=3))));
    }
    ConvexSet::parse(&format!("[N] {{ [{}] : {} }}", vars.join(","), cons.join(" and "))).expect("generated set parses")
}

fn random_shift(rng: &mut ChaCha8Rng, dim: usize) -> DirVector {
    loop {
        let r = DirVector::new((0..dim).map(|_| rng.gen_range(-1..=1)).collect());
        if !r.is_zero() {
            return r;
        }
    }
}

fn facet_decomposition_suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SET_SEED);
    let (mut pieces_seen, mut degenerate) = (0, 0);
    for case in 0..RANDOM_SETS {
        let s = random_set(&mut rng);
        let r = random_shift(&mut rng, s.space().n_vars());
        let d = s.facet_decomposition(&r).map_err(|e| format!("case {case} {s} by {r}: {e}"))?;
        let masks: BTreeSet<&Vec<usize>> = d.pieces.iter().map(|(f, _)| &f.tight_mask).collect();
        ensure(masks.len() == d.pieces.len(), || format!("case {case} {s} by {r}: two pieces share a facet"))?;
        pieces_seen += d.pieces.len();
        degenerate += d.degenerate.len();
        for size in [2, 5, 8] {
            let b = n(size);
            let params = s.param_values(&b).map_err(fail)?;
            let expected: BTreeSet<Vec<i64>> = s
                .enumerate_points(&b)
                .map_err(fail)?
                .into_iter()
                .filter(|x| {
                    let back: Vec<i64> = x.iter().zip(&r.entries).map(|(a, d)| a - d).collect();
                    !s.contains(&back, &params)
                })
                .collect();
            let mut got = BTreeSet::new();
            for piece in d.pieces.iter().map(|(_, q)| q).chain(&d.degenerate) {
                for x in piece.enumerate_points(&b).map_err(fail)? {
                    ensure(got.insert(x.clone()), || format!("case {case} {s} by {r}: {x:?} in two pieces at N={size}"))?;
                }
            }
            ensure(got == expected, || format!("case {case} {s} by {r}: pieces do not cover the difference at N={size}"))?;
        }
    }
    Ok(format!("{RANDOM_SETS} sets, {pieces_seen} facet pieces and {degenerate} degenerate, disjoint and covering at N=2,5,8"))
}

fn exhaustive_matches_heuristic() -> Verdict {
    let mut parts = Vec::new();
    for name in ["prefix_sum.eir", "prefix_sum_ms.eir", "gs_2gmm.eir", "gmm_gs_kernel.eir", "coxph_kernel.eir"] {
        let p = bench(name);
        let heuristic = simplify_program(&p).map_err(fail)?.program;
        let best = exhaustive_search(&p).map_err(fail)?;
        let cmp = compare_programs(&heuristic, &best.program, &default_order(&p)).map_err(fail)?;
        ensure(cmp == Ordering::Equal, || format!("{name}: heuristic {cmp:?} than exhaustive {}", best.complexity.max_term))?;
        parts.push(format!("{name}={}", best.complexity.max_term));
    }
    Ok(parts.join(" "))
}

fn running_minimum() -> Verdict {
    let p = bench("prefix_min.eir");
    let out = simplify_program(&p).map_err(fail)?;
    ensure(out.raw.statements.iter().all(|s| !s.label.contains("Sub")), || "a subtraction residual was emitted".into())?;
    equivalent(&p, &out.program, &[n(8), n(32)])?;
    Ok(format!("no subtraction, {} after, exact at N=8,32", out.report.after.max_term))
}

fn min_against_schedule_is_skipped() -> Verdict {
    let p = bench("prefix_min.eir");
    let mut ctx = Context::new(&p).map_err(fail)?;
    let k = ctx.schedule.index_of("Bredir").ok_or("no redirect")?;
    let sp = ctx.schedule.spaces[k].clone();
    ctx.schedule.rows[k] = vec![AffineForm::var(&sp, 0).neg()];
    let s = ctx.aug.program.statement("S1").ok_or("no S1")?.clone();
    let cands = candidate_reuse_vectors(&s, &s.domain.whole_face().map_err(fail)?).enumerate();
    let d = choose_direction(&ctx, "B", &s, &cands).map_err(fail)?;
    ensure(matches!(d, Decision::Skip(_)), || format!("decided {d:?} under a reversed schedule"))?;
    let shown: Vec<String> = cands.iter().map(|r| r.to_string()).collect();
    Ok(format!("candidates {}, reversed schedule skips", shown.join(" ")))
}

/// A min program whose own dependences force the schedule against its only
/// candidate. Both feedback orientations are tried: forward leaves the
/// candidate consistent, backward makes the original program cyclic.
fn conflicting_min_program() -> Verdict {
    let base = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                S1: B[i] min= A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n";
    let forward = parse_program(&format!("{base}S2: A[i+1] = f(B[i]) : {{[i] : 0 <= i < N - 1}};\n")).map_err(fail)?;
    let fwd = simplify_program(&forward).map_err(fail)?;
    let backward = parse_program(&format!("{base}S2: A[i-1] = f(B[i]) : {{[i] : 1 <= i < N}};\n")).map_err(fail)?;
    let bwd = match Context::new(&backward) {
        Err(e) => format!("backward feedback rejected ({e})"),
        Ok(_) => "backward feedback accepted".into(),
    };
    Err(format!(
        "no constructible conflict: forward feedback applies {} candidate(s); {bwd}",
        fwd.report.applied()
    ))
}

fn check_schedule(p: &Program, sched: &Schedule, bindings: &[Binding]) -> Result<usize, String> {
    let deps = all_dependences(p).map_err(fail)?;
    match validate_schedule(&deps, sched, &probe_binding(p)).map_err(fail)? {
        Ok(()) => {}
        Err(v) => return Err(format!("{} -> {} violated at level {}", v.src, v.dst, v.level)),
    }
    let mut edges = 0;
    for b in bindings {
        let params = param_values(p, b).map_err(fail)?;
        let g = instance_graph(&deps, b).map_err(fail)?;
        let order = instance_order(p, sched, b).map_err(fail)?;
        let pos: HashMap<(String, Vec<i64>), usize> = order
            .into_iter()
            .enumerate()
            .map(|(k, inst)| ((p.statements[inst.stmt].label.clone(), inst.point), k))
            .collect();
        for e in g.graph.raw_edges() {
            let (src, dst) = (&g.graph[e.source()], &g.graph[e.target()]);
            let (ls, ld) = (&deps.nodes[src.node].label, &deps.nodes[dst.node].label);
            let stamp = |label: &str, point: &[i64]| {
                sched.index_of(label).map(|k| sched.timestamp(k, point, &params)).ok_or(format!("`{label}` unscheduled"))
            };
            let cmp = timestamp_compare(&stamp(ls, &src.point)?, &stamp(ld, &dst.point)?).map_err(fail)?;
            ensure(cmp == Ordering::Less, || format!("{ls}{:?} not before {ld}{:?}", src.point, dst.point))?;
            if let (Some(a), Some(z)) = (pos.get(&(ls.clone(), src.point.clone())), pos.get(&(ld.clone(), dst.point.clone()))) {
                ensure(a < z, || format!("instance order puts {ld}{:?} first", dst.point))?;
            }
            edges += 1;
        }
    }
    Ok(edges)
}

fn schedules_are_sound() -> Verdict {
    let mut edges = 0;
    let mut programs = 0;
    for name in ["prefix_sum.eir", "prefix_sum_ms.eir", "prefix_min.eir", "gs_2gmm.eir", "gmm_gs_kernel.eir", "coxph_kernel.eir"] {
        let p = bench(name);
        let ctx = Context::new(&p).map_err(fail)?;
        let q = simplify_program(&p).map_err(fail)?.program;
        let q_sched = feautrier_schedule(&all_dependences(&q).map_err(fail)?).map_err(fail)?;
        for (prog, sched) in [(&ctx.aug.program, &ctx.schedule), (&q, &q_sched)] {
            let bindings = [all_params(prog, 3), all_params(prog, 5)];
            edges += check_schedule(prog, sched, &bindings).map_err(|e| format!("{name}: {e}"))?;
            programs += 1;
        }
    }
    Ok(format!("{programs} programs, {edges} instance edges ordered at two bindings each"))
}

fn consistency_agrees_with_rescheduling() -> Verdict {
    let (mut pairs, mut one_way) = (0, 0);
    for name in ["prefix_sum.eir", "prefix_sum_ms.eir", "prefix_min.eir", "gs_2gmm.eir", "gmm_gs_kernel.eir", "coxph_kernel.eir"] {
        let p = bench(name);
        let ctx = Context::new(&p).map_err(fail)?;
        for red in &ctx.aug.redirects {
            let theta = ctx.theta(&red.array).map_err(fail)?.to_vec();
            let dim = theta.first().map_or(0, |f| f.n_vars());
            for k in 0..dim {
                let r = DirVector::unit(dim, k, 1);
                let ok = |d: &DirVector| -> Result<bool, String> {
                    let full = match reschedule_with_reuse(&ctx.aug, &red.array, d) {
                        Ok(_) => true,
                        Err(Error::Unschedulable(_)) => false,
                        Err(e) => return Err(fail(e)),
                    };
                    let fast = ctx.schedulable_with(&red.array, d).map_err(fail)?;
                    ensure(fast == full, || format!("{name} {} {d}: quick check {fast}, full {full}", red.array))?;
                    Ok(full)
                };
                let (fwd, bwd) = (ok(&r)?, ok(&r.neg())?);
                let c = reuse_consistent(&theta, &r);
                let agrees = match c {
                    Consistency::Before => fwd,
                    Consistency::After => bwd,
                    Consistency::Zero => continue,
                };
                ensure(agrees, || format!("{name} {} {r}: {c:?} but that direction does not schedule", red.array))?;
                pairs += 1;
                if fwd != bwd {
                    one_way += 1;
                }
            }
        }
    }
    ensure(one_way > 0, || "no pair where only one direction schedules".into())?;
    Ok(format!("{pairs} ordered pairs agree, {one_way} schedulable one way only"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1", "scan instance count and exactness", scan_count_is_linear),
        ("2", "schedule-consistent direction under feedback", feedback_scan_direction),
        ("3", "sampler statistics drop a degree", sampler_reductions),
        ("4", "kernel growth exponents", kernel_fits),
        ("5", "facet decomposition on random sets", facet_decomposition_suite),
        ("6", "exhaustive search agrees with the heuristic", exhaustive_matches_heuristic),
        ("7a", "running minimum without subtraction", running_minimum),
        ("7b", "one-sided candidate against the schedule is skipped", min_against_schedule_is_skipped),
        ("7c", "min program conflicting with its schedule", conflicting_min_program),
        ("8", "schedules order every dependence", schedules_are_sound),
        ("9", "schedule consistency agrees with rescheduling", consistency_agrees_with_rescheduling),
    ];
    let mut unexpected = Vec::new();
    for (id, what, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_UNATTAINABLE.contains(&id);
        match result {
            Ok(detail) => println!("PASS {id} {what}: {detail} ({secs:.1}s)"),
            Err(why) => {
                let tag = if known { " [known unattainable]" } else { "" };
                println!("FAIL {id} {what}: {why}{tag} ({secs:.1}s)");
                if !known {
                    unexpected.push(id);
                }
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
