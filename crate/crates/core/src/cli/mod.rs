//! Batch command-line frontend. Every command is a pure function of its
//! inputs and flags; [`run`] returns the process exit code.

use crate::ast::{
    cstar_to_json, parse_program, parse_value, pretty_cstar, pretty_cstmts, trace_to_json, trace_to_jsonl, CProgram,
    CStmt, LExpr, Name, Outcome, SyntaxError, Ty,
};
use crate::cemit::{annot_header, emit_c, emit_header, EmitConfig, EmitError, ANNOT_HEADER_NAME};
use crate::csem::{run_cstar, EventModel};
use crate::harness::{
    check_equivalence, check_pass, check_secret_independence, expand_program, gen_program, parse_iface,
    random_pairs, Features, IfaceError, SecretError, SecretInterface, Status, Subst, Verdict,
};
use crate::lower::{back_translate_program, compile_program, source_map_json, LowerError};
use crate::lowsem::{run_low, typecheck, ElaboratedLProgram, TypeEnv, TypeError, DEFAULT_FUEL};
use crate::passes::{run_pass, PassError, PassReport, PIPELINE};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_SETUP: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{0}", path = .1.display())]
    Syntax(SyntaxError, PathBuf),
    #[error(transparent)]
    Iface(#[from] IfaceError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Pass(#[from] PassError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser, Debug)]
#[command(name = "kremlite", version, about = "Run, compile, check and emit C for λow* programs")]
pub struct Cli {
    /// Print reports as JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct RunArgs {
    pub path: PathBuf,
    #[arg(long, env = "KREMLITE_FUEL", default_value_t = DEFAULT_FUEL)]
    pub fuel: u64,
    /// Entry variable binding, `name=literal`; repeatable.
    #[arg(long = "subst", value_name = "NAME=VALUE")]
    pub subst: Vec<String>,
    /// Secret interface to link the program against.
    #[arg(long)]
    pub iface: Option<PathBuf>,
    /// Write the trace as JSON lines to this file.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse, type-check and compile; report diagnostics.
    Check {
        path: PathBuf,
        #[arg(long)]
        iface: Option<PathBuf>,
    },
    /// Run the λow* machine.
    RunLow(RunArgs),
    /// Compile and run the C* machine.
    RunCstar {
        #[command(flatten)]
        run: RunArgs,
        /// concrete, c3, c4 or c5.
        #[arg(long, default_value = "concrete")]
        model: EventModel,
        /// Passes to apply before running, comma separated, in pipeline order.
        #[arg(long, value_delimiter = ',')]
        passes: Vec<String>,
    },
    /// Compile to C* and apply passes; dump the program and pass reports.
    Compile {
        path: PathBuf,
        #[arg(long, value_delimiter = ',')]
        passes: Option<Vec<String>>,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
        #[arg(long)]
        iface: Option<PathBuf>,
    },
    /// Run the full pipeline and write `<name>.c` / `<name>.h`.
    EmitC {
        path: PathBuf,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
        /// Emit trace annotation macros.
        #[arg(long)]
        annot: bool,
        #[arg(long)]
        iface: Option<PathBuf>,
    },
    /// Check that compilation and every pass preserve traces.
    Diff(RunArgs),
    /// Check secret independence over random pairs of secrets.
    Indep {
        path: PathBuf,
        #[arg(long)]
        iface: PathBuf,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "KREMLITE_FUEL", default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Differential testing on generated programs.
    Fuzz {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 40)]
        size: usize,
        /// Plant out-of-bounds accesses.
        #[arg(long)]
        faulting: bool,
        #[arg(long, env = "KREMLITE_FUEL", default_value_t = 100_000)]
        fuel: u64,
    },
}

// ---------------------------------------------------------------------------
// Loading

pub struct Loaded {
    pub program: ElaboratedLProgram,
    pub entry: LExpr,
    pub iface: Option<SecretInterface>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn load_iface(path: &Path) -> Result<SecretInterface, CliError> {
    Ok(parse_iface(&read(path)?)?)
}

/// Parse and type-check a source file. With an interface, abstract types
/// are replaced by their representations and the primitives linked in.
pub fn load(path: &Path, iface: Option<&Path>, vars: &BTreeMap<Name, Ty>) -> Result<Loaded, CliError> {
    let src = parse_program(&read(path)?).map_err(|e| CliError::Syntax(e, path.into()))?;
    let iface = iface.map(load_iface).transpose()?;
    load_program(src, iface, vars)
}

pub fn load_program(
    src: crate::ast::LProgram,
    iface: Option<SecretInterface>,
    vars: &BTreeMap<Name, Ty>,
) -> Result<Loaded, CliError> {
    let mut env = TypeEnv { var_env: vars.clone(), ..TypeEnv::default() };
    let src = match &iface {
        Some(i) => {
            let mut abs = i.type_env();
            abs.var_env.extend(vars.clone());
            typecheck(&src, &abs)
                .map_err(|e| CliError::Usage(format!("against the interface: {e}")))?;
            env.var_env.extend(i.secret_vars.iter().map(|(x, t)| (x.clone(), i.expand(t))));
            expand_program(&src, i)
        }
        None => src,
    };
    let program = typecheck(&src, &env)?;
    let entry = src.entry.clone().ok_or_else(|| CliError::Usage("program has no `entry`".into()))?;
    Ok(Loaded { program, entry, iface })
}

fn parse_subst(items: &[String]) -> Result<Subst, CliError> {
    let mut out = Subst::new();
    for it in items {
        let (k, v) = it.split_once('=').ok_or_else(|| CliError::Usage(format!("--subst `{it}`: expected NAME=VALUE")))?;
        let v = parse_value(v).map_err(|e| CliError::Usage(format!("--subst `{it}`: {e}")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn subst_types(s: &Subst) -> Result<BTreeMap<Name, Ty>, CliError> {
    s.iter()
        .map(|(k, v)| v.ty_of().map(|t| (k.clone(), t)).ok_or_else(|| CliError::Usage(format!("`{k}`: unsupported literal"))))
        .collect()
}

/// Pass list checked against the fixed pipeline order.
pub fn check_pass_order(passes: &[String]) -> Result<(), CliError> {
    let mut at = 0;
    for p in passes {
        match PIPELINE[at..].iter().position(|q| q == p) {
            Some(i) => at += i + 1,
            None => {
                return Err(CliError::Usage(format!(
                    "pass `{p}` is unknown or out of order; passes must follow {}",
                    PIPELINE.join(",")
                )))
            }
        }
    }
    Ok(())
}

/// Compile and apply `passes` in order.
pub fn lower(
    l: &Loaded,
    passes: &[String],
) -> Result<(CProgram, Vec<CStmt>, Vec<PassReport>, serde_json::Value), CliError> {
    check_pass_order(passes)?;
    let out = compile_program(&l.program)?;
    let srcmap = source_map_json(&out.source_map);
    let (mut p, mut e) = (out.program, out.entry);
    let mut reports = vec![];
    for pass in passes {
        let (p2, e2, r) = run_pass(pass, &p, &e)?;
        (p, e) = (p2, e2);
        reports.push(r);
    }
    Ok((p, e, reports, srcmap))
}

fn all_passes() -> Vec<String> {
    PIPELINE.iter().map(|s| s.to_string()).collect()
}

/// Emitted files (`<name>.h`, `<name>.c`, plus the annotation header when
/// requested) for a loaded program after the full pipeline.
pub fn emit_files(l: &Loaded, name: &str, annotations: bool) -> Result<Vec<(String, String)>, CliError> {
    let (p, e, _, _) = lower(l, &all_passes())?;
    let getters: Vec<(Name, Ty)> = match &l.iface {
        Some(i) => i.secret_vars.iter().map(|(x, t)| (x.clone(), i.expand(t))).collect(),
        None => vec![],
    };
    let cfg = EmitConfig {
        name: name.into(),
        annotations,
        secret_params: getters,
        abstract_types: l.iface.as_ref().map(|i| i.abstract_types.clone()).unwrap_or_default(),
        ..EmitConfig::default()
    };
    let mut files = vec![(format!("{name}.h"), emit_header(&p, &e, &cfg)?), (format!("{name}.c"), emit_c(&p, &e, &cfg)?)];
    if annotations {
        files.push((ANNOT_HEADER_NAME.to_string(), annot_header()));
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("program").replace(|c: char| !c.is_ascii_alphanumeric(), "_")
}

// ---------------------------------------------------------------------------
// Output

struct Out<'a> {
    json: bool,
    w: &'a mut dyn std::io::Write,
}

impl Out<'_> {
    fn line(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(self.w, "{}", s.as_ref());
    }

    fn json(&mut self, v: &serde_json::Value) {
        self.line(serde_json::to_string_pretty(v).expect("serializable"));
    }

    fn outcome(&mut self, o: &Outcome) {
        if self.json {
            return self.json(&o.to_json());
        }
        match o {
            Outcome::Terminates { value, .. } => self.line(format!("terminates: {value}")),
            Outcome::GoesWrong { diag, .. } => self.line(format!("goes wrong: {diag}")),
            Outcome::Timeout { .. } => self.line("timeout: fuel exhausted"),
        }
        self.line(format!("trace ({} events):", o.trace().len()));
        for ev in o.trace() {
            self.line(format!("  {ev}"));
        }
    }

    fn verdict(&mut self, title: &str, v: &Verdict) {
        if self.json {
            let mut j = v.to_json();
            j["check"] = json!(title);
            return self.json(&j);
        }
        self.line(format!("{title}: {:?}", v.status));
        if let Some(d) = &v.first_divergence {
            let show = |e: &Option<crate::ast::TraceEvent>| e.as_ref().map_or("(end)".to_string(), |e| e.to_string());
            self.line(format!("  first divergence at event {}: {} vs {}", d.index, show(&d.left), show(&d.right)));
            if let Some(c) = d.case {
                self.line(format!("  case {c}"));
            }
            for (side, at) in [("left", &d.left_at), ("right", &d.right_at)] {
                if let Some(at) = at {
                    self.line(format!("  {side} at {at}"));
                }
            }
        }
        for n in &v.notes {
            self.line(format!("  {n}"));
        }
    }
}

fn exit_for(v: &Verdict) -> i32 {
    if v.status == Status::Fail {
        EXIT_FAIL
    } else {
        EXIT_PASS
    }
}

// ---------------------------------------------------------------------------
// Commands

pub fn run(cli: Cli, w: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let mut out = Out { json: cli.json, w };
    match cli.command {
        Command::Check { path, iface } => {
            let l = load(&path, iface.as_deref(), &BTreeMap::new())?;
            let lowered = compile_program(&l.program)?;
            let funs = l.program.program.decls.iter().filter(|d| matches!(d, crate::ast::LDecl::Fun { .. })).count();
            let ty = l.program.entry_ty.clone().unwrap_or(Ty::Unit);
            if out.json {
                out.json(&json!({"version": 1, "ok": true, "functions": funs, "entry_type": ty.to_string(),
                    "cstar_statements": lowered.source_map.len()}));
            } else {
                out.line(format!("ok: {funs} function(s), entry : {ty}"));
            }
            Ok(EXIT_PASS)
        }
        Command::RunLow(a) => {
            let s = parse_subst(&a.subst)?;
            let l = load(&a.path, a.iface.as_deref(), &subst_types(&s)?)?;
            let o = run_low(&l.program, &l.entry, &s, a.fuel);
            if let Some(t) = &a.trace_out {
                write(t, &trace_to_jsonl(o.trace()))?;
            }
            out.outcome(&o);
            Ok(if matches!(o, Outcome::GoesWrong { .. }) { EXIT_FAIL } else { EXIT_PASS })
        }
        Command::RunCstar { run: a, model, passes } => {
            let s = parse_subst(&a.subst)?;
            let l = load(&a.path, a.iface.as_deref(), &subst_types(&s)?)?;
            let (p, e, _, _) = lower(&l, &passes)?;
            let o = run_cstar(&p, &s, &e, a.fuel, model);
            if let Some(t) = &a.trace_out {
                write(t, &trace_to_jsonl(o.trace()))?;
            }
            out.outcome(&o);
            Ok(if matches!(o, Outcome::GoesWrong { .. }) { EXIT_FAIL } else { EXIT_PASS })
        }
        Command::Compile { path, passes, out: dir, iface } => {
            let l = load(&path, iface.as_deref(), &BTreeMap::new())?;
            let passes = passes.unwrap_or_else(all_passes);
            let (p, e, reports, srcmap) = lower(&l, &passes)?;
            let reports_json = json!({"version": 1, "passes": reports.iter().map(PassReport::to_json).collect::<Vec<_>>()});
            match dir {
                Some(d) => {
                    std::fs::create_dir_all(&d).map_err(|source| CliError::Io { path: d.clone(), source })?;
                    let name = stem(&path);
                    write(&d.join(format!("{name}.cstar")), &format!("{}\nentry:\n{}", pretty_cstar(&p), pretty_cstmts(&e)))?;
                    write(&d.join(format!("{name}.cstar.json")), &cstar_to_json(&p, &e))?;
                    write(&d.join(format!("{name}.passes.json")), &serde_json::to_string_pretty(&reports_json).expect("json"))?;
                    write(&d.join(format!("{name}.srcmap.json")), &serde_json::to_string_pretty(&srcmap).expect("json"))?;
                    out.line(format!("wrote {name}.cstar, {name}.cstar.json, {name}.passes.json, {name}.srcmap.json"));
                }
                None if out.json => out.json(&json!({"version": 1,
                    "cstar": serde_json::from_str::<serde_json::Value>(&cstar_to_json(&p, &e)).expect("json"),
                    "reports": reports_json})),
                None => {
                    out.line(pretty_cstar(&p));
                    out.line("entry:");
                    out.line(pretty_cstmts(&e));
                    for r in &reports {
                        let stats: Vec<String> = r.stats.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        out.line(format!("// {}: {} renaming(s) {}", r.pass, r.renamings.len(), stats.join(" ")));
                    }
                }
            }
            Ok(EXIT_PASS)
        }
        Command::EmitC { path, out: dir, annot, iface } => {
            let l = load(&path, iface.as_deref(), &BTreeMap::new())?;
            let files = emit_files(&l, &stem(&path), annot)?;
            match dir {
                Some(d) => {
                    std::fs::create_dir_all(&d).map_err(|source| CliError::Io { path: d.clone(), source })?;
                    for (f, text) in &files {
                        write(&d.join(f), text)?;
                        out.line(format!("wrote {}", d.join(f).display()));
                    }
                }
                None => {
                    for (f, text) in &files {
                        out.line(format!("// ---- {f}"));
                        let _ = write!(out.w, "{text}");
                    }
                }
            }
            Ok(EXIT_PASS)
        }
        Command::Diff(a) => {
            let s = parse_subst(&a.subst)?;
            let l = load(&a.path, a.iface.as_deref(), &subst_types(&s)?)?;
            let v = check_equivalence(&l.program, &l.entry, &s, a.fuel)?;
            if let Some(t) = &a.trace_out {
                let tr = |o: &Option<Outcome>| o.as_ref().map(|o| trace_to_json(o.trace()));
                write(t, &serde_json::to_string_pretty(&json!({"lowstar": tr(&v.left), "cstar": tr(&v.right)})).expect("json"))?;
            }
            if !out.json {
                if let Some(o) = &v.left {
                    out.outcome(o);
                }
            }
            out.verdict("lowstar vs cstar", &v);
            let mut code = exit_for(&v);
            let mut cur = compile_program(&l.program).map(|o| (o.program, o.entry))?;
            for pass in PIPELINE {
                let pv = check_pass(&cur.0, &cur.1, pass, a.fuel, std::slice::from_ref(&s))?;
                out.verdict(pass, &pv);
                code = code.max(exit_for(&pv));
                let (p2, e2, _) = run_pass(pass, &cur.0, &cur.1)?;
                cur = (p2, e2);
            }
            Ok(code)
        }
        Command::Indep { path, iface, pairs, seed, fuel } => {
            let iface = load_iface(&iface)?;
            let src = parse_program(&read(&path)?).map_err(|e| CliError::Syntax(e, path.clone()))?;
            let entry = src.entry.clone().ok_or_else(|| CliError::Usage("program has no `entry`".into()))?;
            let pairs = random_pairs(&iface, pairs, seed).map_err(|e| CliError::Usage(e.to_string()))?;
            match check_secret_independence(&src, &entry, &iface, &pairs, fuel) {
                Ok(v) => {
                    out.verdict("secret independence", &v);
                    Ok(exit_for(&v))
                }
                Err(SecretError::PrimitiveNotSecretIndependent { primitive, verdict }) => {
                    out.verdict(&format!("primitive `{primitive}` is not secret independent"), &verdict);
                    Ok(EXIT_FAIL)
                }
                Err(SecretError::TypecheckFailure(e)) => {
                    if out.json {
                        out.json(&json!({"version": 1, "status": "Fail", "type_error": e.to_string()}));
                    } else {
                        out.line(format!("secret independence: Fail (rejected by typing: {e})"));
                    }
                    Ok(EXIT_FAIL)
                }
                Err(e) => Err(CliError::Usage(e.to_string())),
            }
        }
        Command::Fuzz { seed, count, size, faulting, fuel } => {
            if size == 0 {
                return Err(CliError::Usage("--size must be positive".into()));
            }
            let features = if faulting { Features::faulting() } else { Features::safe() };
            let results: Vec<serde_json::Value> =
                (0..count).into_par_iter().map(|i| fuzz_case(seed.wrapping_add(i), size, features, fuel)).collect();
            let failed: Vec<&serde_json::Value> = results.iter().filter(|r| r["status"] == "Fail").collect();
            let warned = results.iter().filter(|r| r["status"] == "PassWithWarning").count();
            let summary = json!({
                "version": 1,
                "seed": seed,
                "count": count,
                "size": size,
                "faulting": faulting,
                "passed": count as usize - failed.len(),
                "warnings": warned,
                "failed": failed.len(),
                "failures": failed,
            });
            if out.json {
                out.json(&summary);
            } else {
                out.line(format!(
                    "fuzz seed={seed} count={count} size={size}: {} passed ({warned} with warnings), {} failed",
                    count as usize - failed.len(),
                    failed.len()
                ));
                for f in failed {
                    out.line(format!("  seed {}: {} {}", f["seed"], f["stage"], f["detail"]));
                }
            }
            Ok(if summary["failed"] == 0 { EXIT_PASS } else { EXIT_FAIL })
        }
    }
}

/// Every check on one generated program; the first failing stage is reported.
fn fuzz_case(seed: u64, size: usize, f: Features, fuel: u64) -> serde_json::Value {
    let g = gen_program(seed, size, f);
    let fail = |stage: &str, detail: String| json!({"seed": seed, "status": "Fail", "stage": stage, "detail": detail});
    let mut warn = false;
    for s in &g.inputs {
        match check_equivalence(&g.program, &g.entry, s, fuel) {
            Ok(v) if v.status == Status::Fail => return fail("equivalence", v.to_json().to_string()),
            Ok(v) => warn |= v.status == Status::PassWithWarning,
            Err(e) => return fail("compile", e.to_string()),
        }
    }
    let out = match compile_program(&g.program) {
        Ok(o) => o,
        Err(e) => return fail("compile", e.to_string()),
    };
    match back_translate_program(&out.program, &out.entry) {
        Ok(b) if b == g.program.program => {}
        Ok(_) => return fail("round_trip", "back-translation differs".into()),
        Err(e) => return fail("round_trip", e.to_string()),
    }
    let (mut p, mut e) = (out.program, out.entry);
    // the entry becomes `main`; a record result has no struct-free form
    let scalar = !g.program.entry_ty.as_ref().is_some_and(Ty::is_record);
    for pass in PIPELINE.iter().filter(|&&q| scalar || q != "erase_structs") {
        match check_pass(&p, &e, pass, fuel, &g.inputs) {
            Ok(v) if v.status == Status::Fail => return fail(pass, v.to_json().to_string()),
            Ok(v) => warn |= v.status == Status::PassWithWarning,
            Err(err) => return fail(pass, err.to_string()),
        }
        let (p2, e2, _) = run_pass(pass, &p, &e).expect("checked above");
        (p, e) = (p2, e2);
    }
    let status = if warn { "PassWithWarning" } else { "Pass" };
    if scalar {
        json!({"seed": seed, "status": status})
    } else {
        json!({"seed": seed, "status": status, "skipped": ["erase_structs"]})
    }
}

/// Parse `std::env::args`, run, and map errors to exit code 2.
pub fn main_with_args(args: impl IntoIterator<Item = String>, w: &mut dyn std::io::Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SETUP } else { EXIT_PASS };
        }
    };
    match run(cli, w) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_SETUP
        }
    }
}
