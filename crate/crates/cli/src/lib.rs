//! The `mssr` batch driver: parse, analyze, simplify, report, verify.
//!
//! Every command renders its whole output into a [`Report`] so tests can
//! drive the tool without spawning a process.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use mssr_core::caps::{caps, set_caps, Caps};
use mssr_core::complexity::{empirical_count, empirical_exponents, program_complexity, report_rows};
use mssr_core::dependence::{all_dependences, instance_graph};
use mssr_core::exec::oracle_equivalence;
use mssr_core::ir::{check_array_ssa, parse_program, pretty_print, validate_program, Program};
use mssr_core::polyhedra::{Binding, DirVector, DEGREE_BASE, DEGREE_SCALES};
use mssr_core::scheduling::{feautrier_schedule, validate_schedule};
use mssr_core::simplify::{candidate_reuse_vectors, default_order, exhaustive_search, simplify_with};
use mssr_core::Error;

/// Parameter value used when `--bind` does not name a parameter.
pub const DEFAULT_PARAM_VALUE: i64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Debug, Parser)]
#[command(name = "mssr", version, about = "Simplify multiple-statement reductions in equational array programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, Args)]
pub struct Common {
    /// Parameter values, e.g. `N=64,K=4`; repeat for several bindings.
    #[arg(long = "bind", global = true, value_parser = parse_binding)]
    pub bind: Vec<Binding>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, check array SSA, list dependences and schedule.
    Check { file: PathBuf },
    /// Apply the simplification and report per-face decisions.
    Simplify {
        file: PathBuf,
        /// Search all face assignments instead of the heuristic.
        #[arg(long)]
        exhaustive: bool,
        /// Override the heuristic on a statement's full domain, e.g. `S1=[-1,0]`.
        #[arg(long = "force-dir", value_parser = parse_forced)]
        force_dir: Vec<(String, DirVector)>,
        /// Write the optimized program here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Degrees, codes and instance counts per statement, with fitted exponents.
    Complexity { file: PathBuf },
    /// Compare two programs' outputs on random inputs.
    Verify {
        reference: PathBuf,
        candidate: PathBuf,
        #[arg(long, default_value_t = 5)]
        trials: u64,
    },
    /// Faces of every reduction domain with their candidate reuse vectors.
    DumpFaces { file: PathBuf },
    /// Schedule rows per dependence node.
    DumpSchedule { file: PathBuf },
    /// Dependence edges, or the instance graph as DOT at the first binding.
    DumpDeps {
        file: PathBuf,
        #[arg(long)]
        dot: bool,
    },
}

/// Everything one invocation depends on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub bindings: Vec<Binding>,
    pub seed: u64,
    pub caps: Caps,
    pub format: Format,
}

impl RunConfig {
    /// Caps come from `MSSR_CAPS` when set.
    pub fn from_common(c: &Common) -> Result<RunConfig, String> {
        let caps = match std::env::var("MSSR_CAPS") {
            Ok(text) => Caps::parse_override(&text)?,
            Err(_) => Caps::default(),
        };
        Ok(RunConfig { bindings: c.bind.clone(), seed: c.seed, caps, format: c.format })
    }

    /// The requested bindings, completed with [`DEFAULT_PARAM_VALUE`].
    pub fn bindings_for(&self, p: &Program) -> Vec<Binding> {
        let complete = |b: &Binding| -> Binding {
            p.params.iter().map(|n| (n.clone(), b.get(n).copied().unwrap_or(DEFAULT_PARAM_VALUE))).collect()
        };
        if self.bindings.is_empty() {
            vec![complete(&Binding::new())]
        } else {
            self.bindings.iter().map(complete).collect()
        }
    }

    fn machine(&self) -> bool {
        self.format == Format::Machine
    }
}

/// Exit status, mirrored by the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Invalid = 1,
    Refused = 2,
    Internal = 3,
}

impl Status {
    pub fn of(e: &Error) -> Status {
        match e {
            Error::Parse { .. } | Error::Invalid(_) | Error::Unschedulable(_) | Error::SpaceMismatch(_) => Status::Invalid,
            Error::Refused(_) | Error::CapExceeded { .. } => Status::Refused,
            Error::Unbounded | Error::DegreeFit(_) | Error::Exec(_) | Error::Internal(_) => Status::Internal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub status: Status,
    pub stdout: String,
    pub stderr: String,
}

impl Report {
    fn ok(stdout: String) -> Report {
        Report { status: Status::Ok, stdout, stderr: String::new() }
    }

    fn error(e: &Error) -> Report {
        Report { status: Status::of(e), stdout: String::new(), stderr: format!("error: {e}\n") }
    }
}

pub fn parse_binding(text: &str) -> Result<Binding, String> {
    let mut b = Binding::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{part}`"))?;
        let v: i64 = v.trim().parse().map_err(|_| format!("bad value in `{part}`"))?;
        if v < 0 {
            return Err(format!("parameter `{}` must be non-negative", k.trim()));
        }
        b.insert(k.trim().to_string(), v);
    }
    Ok(b)
}

pub fn parse_forced(text: &str) -> Result<(String, DirVector), String> {
    let (label, vec) = text.split_once('=').ok_or_else(|| format!("expected STMT=[..], got `{text}`"))?;
    Ok((label.trim().to_string(), vec.parse()?))
}

fn load(path: &Path) -> Result<Program, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    parse_program(&text)
}

fn binding_text(b: &Binding) -> String {
    b.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

/// Run one parsed command line.
pub fn run(cli: &Cli) -> Report {
    let cfg = match RunConfig::from_common(&cli.common) {
        Ok(c) => c,
        Err(msg) => return Report::error(&Error::Invalid(format!("MSSR_CAPS: {msg}"))),
    };
    set_caps(cfg.caps);
    let result = match &cli.command {
        Command::Check { file } => cmd_check(file, &cfg),
        Command::Simplify { file, exhaustive, force_dir, out } => {
            cmd_simplify(file, *exhaustive, force_dir, out.as_deref(), &cfg)
        }
        Command::Complexity { file } => cmd_complexity(file, &cfg),
        Command::Verify { reference, candidate, trials } => cmd_verify(reference, candidate, *trials, &cfg),
        Command::DumpFaces { file } => cmd_dump_faces(file),
        Command::DumpSchedule { file } => cmd_dump_schedule(file),
        Command::DumpDeps { file, dot } => cmd_dump_deps(file, *dot, &cfg),
    };
    result.unwrap_or_else(|e| Report::error(&e))
}

/// Parse, SSA, dependences, schedulability. Findings go to stderr and make
/// the status [`Status::Invalid`].
pub fn cmd_check(file: &Path, cfg: &RunConfig) -> Result<Report, Error> {
    let p = load(file)?;
    let mut out = String::new();
    out.push_str(&format!("parse: ok ({} statements)\n", p.statements.len()));
    if let Err(v) = check_array_ssa(&p)? {
        return Ok(Report { status: Status::Invalid, stdout: out, stderr: format!("ssa: {v}\n") });
    }
    validate_program(&p)?;
    out.push_str("ssa: ok\n");
    let deps = all_dependences(&p)?;
    let families = deps.families();
    out.push_str(&format!("dependences: {} families\n", families.len()));
    for (src, dst, kind) in &families {
        out.push_str(&format!("  {src} -> {dst} ({})\n", kind.name()));
    }
    match feautrier_schedule(&deps) {
        Ok(s) => {
            for b in cfg.bindings_for(&p) {
                if let Err(v) = validate_schedule(&deps, &s, &b)? {
                    return Err(Error::Internal(format!("schedule fails at {}: {v:?}", binding_text(&b))));
                }
            }
            out.push_str(&format!("schedule: ok (depth {})\n", s.depth()));
            Ok(Report::ok(out))
        }
        Err(Error::Unschedulable(msg)) => {
            let g = instance_graph(&deps, &cfg.bindings_for(&p)[0])?;
            let (_, cycle) = g.has_cycle();
            let witness = if cycle.is_empty() { String::new() } else { format!("\n  cycle: {}", cycle.join(" -> ")) };
            Ok(Report { status: Status::Invalid, stdout: out, stderr: format!("schedule: unschedulable: {msg}{witness}\n") })
        }
        Err(e) => Err(e),
    }
}

pub fn cmd_simplify(
    file: &Path,
    exhaustive: bool,
    forced: &[(String, DirVector)],
    out_path: Option<&Path>,
    cfg: &RunConfig,
) -> Result<Report, Error> {
    let p = load(file)?;
    let order = default_order(&p);
    let (program, report) = if exhaustive {
        if !forced.is_empty() {
            return Err(Error::Invalid("--force-dir has no effect with --exhaustive".into()));
        }
        let r = exhaustive_search(&p)?;
        let before = program_complexity(&p, &order)?;
        let mut text = if cfg.machine() {
            format!(
                "before.max={}\nafter.max={}\nafter.statements={}\nalternatives={}\nchecked={}\n",
                before.max_term,
                r.complexity.max_term,
                r.program.statements.len(),
                r.alternatives,
                r.checked
            )
        } else {
            format!(
                "{} -> {} over {} alternatives, {} checked\n",
                before.max_term, r.complexity.max_term, r.alternatives, r.checked
            )
        };
        text.push_str(&r.assignment.to_string());
        (r.program, text)
    } else {
        let forced: BTreeMap<String, DirVector> = forced.iter().cloned().collect();
        let s = simplify_with(&p, &forced)?;
        let text = if cfg.machine() { s.report.machine() } else { s.report.to_string() };
        (s.program, text)
    };
    let source = pretty_print(&program);
    match out_path {
        Some(path) => {
            std::fs::write(path, &source).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
            Ok(Report::ok(report))
        }
        None => Ok(Report::ok(format!("{report}\n{source}"))),
    }
}

pub fn cmd_complexity(file: &Path, cfg: &RunConfig) -> Result<Report, Error> {
    let p = load(file)?;
    let pc = program_complexity(&p, &default_order(&p))?;
    let mut out = String::new();
    for b in cfg.bindings_for(&p) {
        let total = empirical_count(&p, &b)?;
        if cfg.machine() {
            out.push_str(&format!("max={}\naggregate={}\n", pc.max_term, pc.aggregate));
            for row in report_rows(&p, &pc, &b)? {
                out.push_str(&format!("row={row}\n"));
            }
            out.push_str(&format!("count@{}={total}\n", binding_text(&b)));
        } else {
            out.push_str(&format!("max term {} (aggregate {} base {})\n", pc.max_term, pc.aggregate, pc.base));
            for row in report_rows(&p, &pc, &b)? {
                out.push_str(&format!("  {row}\n"));
            }
            out.push_str(&format!("executed instances at {}: {total}\n", binding_text(&b)));
        }
    }
    for (param, slope) in empirical_exponents(&p, DEGREE_BASE, &DEGREE_SCALES)? {
        if cfg.machine() {
            out.push_str(&format!("fit.{param}={slope:.3}\n"));
        } else {
            out.push_str(&format!("fitted exponent in {param}: {slope:.3}\n"));
        }
    }
    Ok(Report::ok(out))
}

pub fn cmd_verify(reference: &Path, candidate: &Path, trials: u64, cfg: &RunConfig) -> Result<Report, Error> {
    let a = load(reference)?;
    let b = load(candidate)?;
    let bindings = cfg.bindings_for(&a);
    match oracle_equivalence(&a, &b, &bindings, trials, cfg.seed)? {
        Ok(()) => {
            let at: Vec<String> = bindings.iter().map(binding_text).collect();
            Ok(Report::ok(format!("equivalent: {trials} trials at {}\n", at.join("; "))))
        }
        Err(cex) => Ok(Report { status: Status::Invalid, stdout: String::new(), stderr: format!("not equivalent: {cex}\n") }),
    }
}

pub fn cmd_dump_faces(file: &Path) -> Result<Report, Error> {
    let p = load(file)?;
    let mut out = String::new();
    for s in p.statements.iter().filter(|s| s.is_reduce()) {
        let faces = s.domain.faces()?;
        if faces.len() > caps().faces {
            return Err(Error::CapExceeded { what: "face", cap: caps().faces });
        }
        for f in faces {
            let mask: Vec<String> = f.tight_mask.iter().map(|k| k.to_string()).collect();
            out.push_str(&format!(
                "{} mask=[{}] dim={} set=\"{}\" candidates={}\n",
                s.label,
                mask.join(","),
                f.dimension(),
                f.as_set.body_string(),
                candidate_reuse_vectors(s, &f)
            ));
        }
    }
    Ok(Report::ok(out))
}

pub fn cmd_dump_schedule(file: &Path) -> Result<Report, Error> {
    let p = load(file)?;
    Ok(Report::ok(feautrier_schedule(&all_dependences(&p)?)?.dump()))
}

pub fn cmd_dump_deps(file: &Path, dot: bool, cfg: &RunConfig) -> Result<Report, Error> {
    let p = load(file)?;
    let deps = all_dependences(&p)?;
    if dot {
        Ok(Report::ok(instance_graph(&deps, &cfg.bindings_for(&p)[0])?.to_dot()))
    } else {
        Ok(Report::ok(deps.dump()))
    }
}
