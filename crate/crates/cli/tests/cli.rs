use std::path::PathBuf;
use std::process::Command as Process;

use clap::Parser;
use mssr_cli::{run, Cli, Report, Status};

fn bench(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("benchmarks").join(name)
}

fn mssr(args: &[&str]) -> Report {
    let argv = std::iter::once("mssr").chain(args.iter().copied());
    run(&Cli::try_parse_from(argv).expect("arguments parse"))
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const CYCLIC: &str = "param N;\nintermediate X : {[i] : 0 <= i < N};\nintermediate Y : {[i] : 0 <= i < N};\n\
                      S1: X[i] = Y[i] : {[i] : 0 <= i < N};\nS2: Y[i] = X[i] : {[i] : 0 <= i < N};\n";

#[test]
fn check_accepts_the_corpus() {
    for name in ["prefix_sum.eir", "prefix_sum_ms.eir", "prefix_min.eir", "gs_2gmm.eir", "gmm_gs_kernel.eir", "coxph_kernel.eir"] {
        let r = mssr(&["check", bench(name).to_str().unwrap()]);
        assert_eq!(r.status, Status::Ok, "{name}: {}", r.stderr);
        assert!(r.stdout.contains("schedule: ok"), "{name}");
    }
}

#[test]
fn check_lists_three_dependence_families_for_the_feedback_scan() {
    let r = mssr(&["check", bench("prefix_sum_ms.eir").to_str().unwrap()]);
    assert!(r.stdout.contains("dependences: 3 families"), "{}", r.stdout);
}

#[test]
fn check_rejects_a_cyclic_program() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "cyclic.eir", CYCLIC);
    let r = mssr(&["check", &f]);
    assert_eq!(r.status, Status::Invalid);
    assert!(r.stderr.contains("unschedulable"), "{}", r.stderr);
    assert!(r.stderr.contains("cycle: "), "{}", r.stderr);
}

#[test]
fn check_reports_parse_errors_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "bad.eir", "param N;\noutput B : {[i] : 0 <= i < N};\nS: B[i] = : {[i] : 0 <= i < N};\n");
    let r = mssr(&["check", &f]);
    assert_eq!(r.status, Status::Invalid);
    assert!(r.stderr.starts_with("error: 3:"), "{}", r.stderr);
}

#[test]
fn simplify_prints_the_scan() {
    let r = mssr(&["simplify", bench("prefix_sum_ms.eir").to_str().unwrap()]);
    assert_eq!(r.status, Status::Ok, "{}", r.stderr);
    assert!(r.stdout.starts_with("complexity N^2 -> N"), "{}", r.stdout);
    assert!(r.stdout.contains("S1AddReuse: B[i] = B[i - 1] + A[i]"), "{}", r.stdout);
}

#[test]
fn forced_backward_direction_is_refused_with_a_cycle() {
    let r = mssr(&["simplify", bench("prefix_sum_ms.eir").to_str().unwrap(), "--force-dir", "S1=[-1,0]"]);
    assert_eq!(r.status, Status::Refused);
    assert!(r.stderr.contains("dependency cycle"), "{}", r.stderr);
    assert!(r.stdout.is_empty());
}

#[test]
fn forcing_a_non_reduction_is_invalid() {
    let r = mssr(&["simplify", bench("prefix_sum_ms.eir").to_str().unwrap(), "--force-dir", "S2=[1]"]);
    assert_eq!(r.status, Status::Invalid, "{}", r.stderr);
}

#[test]
fn machine_output_is_byte_identical_across_runs() {
    let args = ["simplify", bench("gmm_gs_kernel.eir").to_str().unwrap(), "--format", "machine"].map(String::from);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let a = mssr(&args);
    let b = mssr(&args);
    assert_eq!(a.status, Status::Ok);
    assert_eq!(a, b);
    assert!(a.stdout.contains("after.max=N*K\n"), "{}", a.stdout);
}

#[test]
fn simplified_file_verifies_and_mutation_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("opt.eir");
    let src = bench("prefix_sum.eir");
    let r = mssr(&["simplify", src.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.status, Status::Ok, "{}", r.stderr);
    let ok = mssr(&["verify", src.to_str().unwrap(), out.to_str().unwrap(), "--bind", "N=9", "--bind", "N=1"]);
    assert_eq!(ok.status, Status::Ok, "{}", ok.stderr);
    let text = std::fs::read_to_string(&out).unwrap().replace("B[i - 1] + A[i]", "B[i - 1] - A[i]");
    let bad = write_temp(&dir, "bad.eir", &text);
    let r = mssr(&["verify", src.to_str().unwrap(), &bad, "--bind", "N=6"]);
    assert_eq!(r.status, Status::Invalid);
    assert!(r.stderr.contains("not equivalent"), "{}", r.stderr);
}

#[test]
fn complexity_fits_growth_exponents() {
    let r = mssr(&["complexity", bench("prefix_sum.eir").to_str().unwrap(), "--format", "machine", "--bind", "N=10"]);
    assert!(r.stdout.contains("count@N=10=55\n"), "{}", r.stdout);
    let fit: f64 = r.stdout.lines().find_map(|l| l.strip_prefix("fit.N=")).unwrap().parse().unwrap();
    assert!((fit - 2.0).abs() < 0.2, "{fit}");
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(
        &dir,
        "fixed.eir",
        "param N;\ninput A : {[i] : 0 <= i < 4};\noutput B : {[i] : 0 <= i < 4};\nS: B[i] += A[j] : {[i,j] : 0 <= i < 4 and 0 <= j < 4};\n",
    );
    let r = mssr(&["complexity", &f, "--format", "machine"]);
    assert!(r.stdout.contains("max=1\n"), "{}", r.stdout);
    assert!(r.stdout.contains("fit.N=0.000"), "{}", r.stdout);
}

#[test]
fn dumps_faces_schedule_and_dependences() {
    let f = bench("prefix_sum.eir");
    let faces = mssr(&["dump-faces", f.to_str().unwrap()]);
    assert_eq!(faces.stdout.lines().count(), 7);
    assert!(faces.stdout.starts_with("S1 mask=[] dim=2"), "{}", faces.stdout);
    let sched = mssr(&["dump-schedule", f.to_str().unwrap()]);
    assert!(sched.stdout.contains("S1: [["), "{}", sched.stdout);
    let deps = mssr(&["dump-deps", f.to_str().unwrap()]);
    assert!(deps.stdout.starts_with("S1 -> B.done via B (reduction)"), "{}", deps.stdout);
    let dot = mssr(&["dump-deps", f.to_str().unwrap(), "--dot", "--bind", "N=3"]);
    assert!(dot.stdout.starts_with("digraph"), "{}", dot.stdout);
}

#[test]
fn exhaustive_search_runs_from_the_command_line() {
    let r = mssr(&["simplify", bench("prefix_sum.eir").to_str().unwrap(), "--exhaustive", "--format", "machine"]);
    assert_eq!(r.status, Status::Ok, "{}", r.stderr);
    assert!(r.stdout.starts_with("before.max=N^2\nafter.max=N\n"), "{}", r.stdout);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_mssr");
    let dir = tempfile::tempdir().unwrap();
    let cyclic = write_temp(&dir, "cyclic.eir", CYCLIC);
    let code = |args: &[&str], caps: Option<&str>| {
        let mut cmd = Process::new(exe);
        cmd.args(args);
        match caps {
            Some(c) => cmd.env("MSSR_CAPS", c),
            None => cmd.env_remove("MSSR_CAPS"),
        };
        cmd.output().unwrap().status.code().unwrap()
    };
    let ms = bench("prefix_sum_ms.eir");
    let ms = ms.to_str().unwrap();
    assert_eq!(code(&["check", ms], None), 0);
    assert_eq!(code(&["check", &cyclic], None), 1);
    assert_eq!(code(&["simplify", ms, "--force-dir", "S1=[-1,0]"], None), 2);
    assert_eq!(code(&["check", ms], Some("points=0")), 1);
    // a one-point cap stops enumeration
    assert_eq!(code(&["complexity", ms], Some("points=1")), 2);
}
