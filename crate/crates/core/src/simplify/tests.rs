use super::*;
use crate::dependence::instance_graph;
use crate::exec::oracle_equivalence;
use crate::ir::parse_program;
use crate::polyhedra::binding;

const PREFIX: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                      S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n";
const FEEDBACK: &str = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                   S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j <= i};\n\
                   S2: A[i+1] = f(B[i]) : {[i] : 0 <= i < N - 1};\n";

fn sources(p: &Program) -> Vec<String> {
    p.statements.iter().map(Statement::to_source).collect()
}

fn n(v: i64) -> Binding {
    binding(&[("N", v)])
}

fn degree(pc: &ProgramComplexity) -> u32 {
    pc.max_term.degree_of("N")
}

#[test]
fn prefix_sum_becomes_a_scan() {
    let out = simplify_program(&parse_program(PREFIX).unwrap()).unwrap();
    assert_eq!(
        sources(&out.program),
        vec![
            "S1AddOnly: B[i] = A[i] : { [i] : i = 0 and i <= N - 1 };",
            "S1AddReuse: B[i] = B[i - 1] + A[i] : { [i] : i <= N - 1 and i >= 1 };",
        ]
    );
    assert_eq!(degree(&out.report.before), 2);
    assert_eq!(degree(&out.report.after), 1);
    let p = parse_program(PREFIX).unwrap();
    assert_eq!(oracle_equivalence(&p, &out.program, &[n(8), n(1), n(0)], 3, 5).unwrap(), Ok(()));
    // before copy elimination the listing shape is visible
    let raw = sources(&out.raw);
    assert!(raw.iter().any(|s| s.starts_with("S1Add: BTmpAdd[i] += A[j]")), "{raw:?}");
    assert!(raw.iter().any(|s| s.starts_with("S1AddReuse: BTmp[i] = BTmp[i - 1] + BTmpAdd[i]")), "{raw:?}");
}

#[test]
fn eq5_drops_a_degree_and_stays_acyclic() {
    let p = parse_program(FEEDBACK).unwrap();
    let out = simplify_program(&p).unwrap();
    assert_eq!(degree(&out.report.before), 2);
    assert_eq!(degree(&out.report.after), 1);
    let applied: Vec<&FaceDecision> = out.report.decisions.iter().filter(|d| matches!(d.outcome, Outcome::Applied(_))).collect();
    assert_eq!(applied.len(), 1);
    assert_eq!(applied[0].outcome, Outcome::Applied(DirVector::new(vec![1, 0])));
    assert!(sources(&out.program).iter().any(|s| s.starts_with("S1AddReuse: B[i] = B[i - 1] + A[i]")));
    for v in [4, 16] {
        let g = instance_graph(&all_dependences(&out.program).unwrap(), &n(v)).unwrap();
        assert!(g.find_cycle().is_none());
    }
    assert_eq!(oracle_equivalence(&p, &out.program, &[n(6), n(2)], 3, 11).unwrap(), Ok(()));
}

#[test]
fn forced_backward_direction_reports_the_cycle() {
    let p = parse_program(FEEDBACK).unwrap();
    let forced = BTreeMap::from([("S1".to_string(), DirVector::new(vec![-1, 0]))]);
    let err = simplify_with(&p, &forced).unwrap_err();
    let Error::Refused(msg) = err else { panic!("{err}") };
    assert!(msg.contains("dependency cycle"), "{msg}");
    assert!(msg.contains(".done"), "{msg}");
    assert!(msg.contains("S2["), "{msg}");
    assert!(msg.contains("S1"), "{msg}");
}

#[test]
fn heuristic_flips_an_inconsistent_first_choice() {
    let p = parse_program(FEEDBACK).unwrap();
    let ctx = Context::new(&p).unwrap();
    let s = ctx.aug.program.statement("S1").unwrap().clone();
    let cands = [DirVector::new(vec![-1, 0]), DirVector::new(vec![1, 0])];
    assert_eq!(choose_direction(&ctx, "B", &s, &cands).unwrap(), Decision::Apply(DirVector::new(vec![1, 0])));
}

#[test]
fn one_sided_candidate_against_the_schedule_is_skipped() {
    let p = parse_program(&PREFIX.replace("+=", "min=")).unwrap();
    let mut ctx = Context::new(&p).unwrap();
    let k = ctx.schedule.index_of("Bredir").unwrap();
    let sp = ctx.schedule.spaces[k].clone();
    ctx.schedule.rows[k] = vec![AffineForm::var(&sp, 0).neg()];
    let s = ctx.aug.program.statement("S1").unwrap().clone();
    let face = s.domain.whole_face().unwrap();
    let cands = candidate_reuse_vectors(&s, &face).enumerate();
    assert_eq!(cands, vec![DirVector::new(vec![1, 0])]);
    assert_eq!(
        choose_direction(&ctx, "B", &s, &cands).unwrap(),
        Decision::Skip("inverse-restricted against schedule".into())
    );
}

#[test]
fn prefix_min_has_no_subtraction() {
    let p = parse_program(&PREFIX.replace("+=", "min=")).unwrap();
    let out = simplify_program(&p).unwrap();
    assert!(out.raw.statements.iter().all(|s| !s.label.contains("Sub")), "{:?}", sources(&out.raw));
    assert_eq!(degree(&out.report.after), 1);
    assert_eq!(oracle_equivalence(&p, &out.program, &[n(8), n(16)], 3, 2).unwrap(), Ok(()));
}

#[test]
fn program_without_reductions_is_unchanged() {
    let p = parse_program("param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\nS: B[i] = A[i] : {[i] : 0 <= i < N};\n").unwrap();
    let out = simplify_program(&p).unwrap();
    assert_eq!(out.program, p);
    assert!(out.report.decisions.is_empty());
}

#[test]
fn suffix_sum_goes_right_to_left_without_subtraction() {
    let text = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                S1: B[i] += A[j] : {[i,j] : 0 <= i < N and i <= j < N};\n";
    let p = parse_program(text).unwrap();
    let out = simplify_program(&p).unwrap();
    assert!(out.raw.statements.iter().all(|s| !s.label.contains("Sub")), "{:?}", sources(&out.raw));
    assert_eq!(degree(&out.report.after), 1);
    assert_eq!(oracle_equivalence(&p, &out.program, &[n(7)], 3, 3).unwrap(), Ok(()));
}

#[test]
fn exhaustive_matches_heuristic_on_prefix_programs() {
    for text in [PREFIX, FEEDBACK] {
        let p = parse_program(text).unwrap();
        let h = simplify_program(&p).unwrap();
        let e = exhaustive_search(&p).unwrap();
        let order = default_order(&p);
        assert_eq!(
            crate::complexity::compare_programs(&h.program, &e.program, &order).unwrap(),
            std::cmp::Ordering::Equal,
            "{}",
            e.program
        );
        assert!(e.alternatives >= 3);
    }
}

#[test]
fn report_is_stable() {
    let p = parse_program(FEEDBACK).unwrap();
    let a = simplify_program(&p).unwrap().report.machine();
    let b = simplify_program(&p).unwrap().report.machine();
    assert_eq!(a, b);
    assert!(a.starts_with("before.max=N^2\n"), "{a}");
    assert!(a.contains("decision=applied r=[1,0]"), "{a}");
}

#[test]
fn strict_prefix_assigns_the_identity_where_nothing_contributes() {
    let text = "param N;\ninput A : {[i] : 0 <= i < N};\noutput B : {[i] : 0 <= i < N};\n\
                S1: B[i] += A[j] : {[i,j] : 0 <= i < N and 0 <= j < i};\n";
    let p = parse_program(text).unwrap();
    let out = simplify_program(&p).unwrap();
    let src = sources(&out.program);
    assert!(src.contains(&"BInit: B[i] = 0 : { [i] : i = 0 and i <= N - 1 };".to_string()), "{src:?}");
    assert_eq!(degree(&out.report.after), 1);
    assert_eq!(oracle_equivalence(&p, &out.program, &[n(1), n(2), n(9)], 2, 4).unwrap(), Ok(()));
}

#[test]
fn scan_instance_counts_before_and_after_copy_elimination() {
    let p = parse_program(PREFIX).unwrap();
    let out = simplify_program(&p).unwrap();
    // diagonal adds, first cell, seven updates, then the redirect copies
    assert_eq!(crate::complexity::empirical_count(&out.raw, &n(8)).unwrap(), 8 + 1 + 7 + 8);
    assert_eq!(crate::complexity::empirical_count(&out.program, &n(8)).unwrap(), 8);
}
