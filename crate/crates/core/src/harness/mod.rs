//! Differential checking: trace comparison between the two machines and
//! across passes, secret independence, and a seeded program generator.

mod gen;
mod secret;

pub use gen::{gen_program, Features, GenProgram};
pub use secret::{
    check_secret_independence, expand_program, masking_interface, parse_iface, random_pairs, IfaceError,
    Primitive, SecretError, SecretInterface,
};

use crate::ast::{pretty_cstmts, LExpr, LocationLabel, Name, Outcome, TraceEvent, Value};
use crate::csem::{run_cstar, step_cstar, CCode, CConfig, CStep, EventModel};
use crate::lower::{compile_program, head, LowerError};
use crate::lowsem::{step_low, subst, ElaboratedLProgram, LConfig, LStep, LowCode};
use crate::passes::{run_pass, PassError};
use crate::ast::{CProgram, CStmt};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::collections::{BTreeMap, HashMap};

pub type Subst = BTreeMap<Name, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    PassWithWarning,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modulo {
    Literal,
    RenameBlocks,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub index: usize,
    /// `None` when that side's trace ended first.
    pub left: Option<TraceEvent>,
    pub right: Option<TraceEvent>,
    /// What each machine was executing when it emitted the event.
    pub left_at: Option<String>,
    pub right_at: Option<String>,
    /// Which case (input, secret pair) diverged.
    pub case: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub first_divergence: Option<Divergence>,
    pub left: Option<Outcome>,
    pub right: Option<Outcome>,
    pub notes: Vec<String>,
}

impl Verdict {
    fn pass() -> Verdict {
        Verdict { status: Status::Pass, first_divergence: None, left: None, right: None, notes: vec![] }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ev = |e: &Option<TraceEvent>| e.as_ref().map(TraceEvent::to_json);
        let div = self.first_divergence.as_ref().map(|d| {
            json!({
                "index": d.index,
                "left": ev(&d.left),
                "right": ev(&d.right),
                "left_at": d.left_at,
                "right_at": d.right_at,
                "case": d.case,
            })
        });
        let summary = |o: &Option<Outcome>| {
            o.as_ref().map(|o| {
                let mut j = o.to_json();
                j.as_object_mut().expect("object").remove("trace");
                j
            })
        };
        json!({
            "version": 1,
            "status": self.status,
            "first_divergence": div,
            "left": summary(&self.left),
            "right": summary(&self.right),
            "notes": self.notes,
        })
    }
}

// ---------------------------------------------------------------------------
// Trace comparison

fn canonical_blocks(t: &[TraceEvent]) -> Vec<TraceEvent> {
    let mut ids = HashMap::new();
    t.iter()
        .map(|e| {
            let mut e = e.clone();
            if let Some(LocationLabel::Concrete { block, .. }) = &mut e.loc {
                let n = ids.len() as u64;
                *block = *ids.entry(*block).or_insert(n);
            }
            e
        })
        .collect()
}

fn first_difference(t1: &[TraceEvent], t2: &[TraceEvent]) -> Option<usize> {
    let n = t1.len().min(t2.len());
    (0..n).find(|&i| t1[i] != t2[i]).or((t1.len() != t2.len()).then_some(n))
}

fn divergence_at(t1: &[TraceEvent], t2: &[TraceEvent], i: usize) -> Divergence {
    Divergence {
        index: i,
        left: t1.get(i).cloned(),
        right: t2.get(i).cloned(),
        left_at: None,
        right_at: None,
        case: None,
    }
}

pub fn diff_traces(t1: &[TraceEvent], t2: &[TraceEvent], modulo: Modulo) -> Verdict {
    let (a, b) = match modulo {
        Modulo::Literal => (t1.to_vec(), t2.to_vec()),
        Modulo::RenameBlocks => (canonical_blocks(t1), canonical_blocks(t2)),
    };
    match first_difference(&a, &b) {
        None => Verdict::pass(),
        Some(i) => Verdict { status: Status::Fail, first_divergence: Some(divergence_at(t1, t2, i)), ..Verdict::pass() },
    }
}

/// Compare two outcomes: kinds, values (with `same_value`) and traces.
/// A timeout on either side passes with a warning when the traces agree on
/// their common prefix.
fn compare_outcomes(l: Outcome, r: Outcome, same_value: &dyn Fn(&Value, &Value) -> bool) -> Verdict {
    let (tl, tr) = (l.trace(), r.trace());
    let mut v = Verdict::pass();
    let timeout = matches!(l, Outcome::Timeout { .. }) || matches!(r, Outcome::Timeout { .. });
    if timeout {
        let n = tl.len().min(tr.len());
        match first_difference(&tl[..n], &tr[..n]) {
            None => {
                v.status = Status::PassWithWarning;
                v.notes.push(format!("fuel exhausted ({} vs {}); traces agree on {n} events", l.kind(), r.kind()));
            }
            Some(i) => {
                v.status = Status::Fail;
                v.first_divergence = Some(divergence_at(tl, tr, i));
            }
        }
    } else if let Some(i) = first_difference(tl, tr) {
        v.status = Status::Fail;
        v.first_divergence = Some(divergence_at(tl, tr, i));
    } else if l.kind() != r.kind() {
        v.status = Status::Fail;
        v.notes.push(format!("outcome kinds differ: {} vs {}", l.kind(), r.kind()));
    } else if let (Some(a), Some(b)) = (l.value(), r.value()) {
        if !same_value(a, b) {
            v.status = Status::Fail;
            v.notes.push(format!("final values differ: {a} vs {b}"));
        }
    }
    if let (Outcome::GoesWrong { diag: a, .. }, Outcome::GoesWrong { diag: b, .. }) = (&l, &r) {
        v.notes.push(format!("both stuck: `{a}` / `{b}`"));
    }
    v.left = Some(l);
    v.right = Some(r);
    v
}

// ---------------------------------------------------------------------------
// Locating events

/// Head of the λow* redex that emitted event `index`.
pub fn locate_low(p: &ElaboratedLProgram, entry: &LExpr, s: &Subst, index: usize, fuel: u64) -> Option<String> {
    let code = LowCode::new(p);
    let mut e = entry.clone();
    for (x, v) in s {
        subst(&mut e, x, &v.to_lexpr());
    }
    let mut c = LConfig::new(code.close(&e));
    let mut seen = 0;
    for _ in 0..fuel {
        let at = head(c.focus());
        match step_low(&code, &mut c) {
            LStep::Stepped(evs) => {
                seen += evs.len();
                if seen > index {
                    return Some(at.to_string());
                }
            }
            _ => return None,
        }
    }
    None
}

/// Function and statement of the C* step that emitted event `index`.
pub fn locate_cstar(p: &CProgram, entry: &[CStmt], s: &Subst, model: EventModel, index: usize, fuel: u64) -> Option<String> {
    let code = CCode::new(p, entry);
    let mut c = CConfig::new(s.iter().map(|(k, v)| (k.clone(), v.clone())).collect(), entry.to_vec(), model);
    let mut seen = 0;
    for _ in 0..fuel {
        let at = c.next_stmt().map(|st| {
            let text = match st {
                CStmt::Block(_) => "{ … }".to_string(),
                CStmt::IfStmt(cond, ..) => format!("if ({}) …", crate::ast::pretty_cexpr(cond)),
                st => pretty_cstmts(std::slice::from_ref(st)).trim().to_string(),
            };
            format!("{}: {text}", c.enrich_fn)
        });
        match step_cstar(&code, &mut c) {
            CStep::Stepped(evs) => {
                seen += evs.len();
                if seen > index {
                    return at;
                }
            }
            _ => return None,
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Machine equivalence

/// Run the λow* program and its compiled C* form on the same inputs and
/// compare outcomes and concrete traces.
pub fn check_equivalence(p: &ElaboratedLProgram, entry: &LExpr, s: &Subst, fuel: u64) -> Result<Verdict, LowerError> {
    let mut with_entry = p.clone();
    with_entry.program.entry = Some(entry.clone());
    let out = compile_program(&with_entry)?;
    let low = crate::lowsem::run_low(p, entry, s, fuel);
    let cst = run_cstar(&out.program, s, &out.entry, fuel, EventModel::Concrete);
    let mut v = compare_outcomes(low, cst, &|a, b| a == b);
    if let Some(d) = &mut v.first_divergence {
        d.left_at = locate_low(p, entry, s, d.index, fuel);
        d.right_at = locate_cstar(&out.program, &out.entry, s, EventModel::Concrete, d.index, fuel);
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Pass checks

/// Event models under which a pass preserves traces: (source, target).
pub fn pass_models(pass: &str) -> (EventModel, EventModel) {
    match pass {
        "hoist" => (EventModel::AbstractC3, EventModel::AbstractC3),
        "struct_return" => (EventModel::AbstractC4, EventModel::AbstractC3),
        "erase_structs" => (EventModel::AbstractC5, EventModel::AbstractC5),
        _ => (EventModel::Concrete, EventModel::Concrete),
    }
}

pub struct Transform<'a> {
    pub source: (&'a CProgram, &'a [CStmt]),
    pub target: (&'a CProgram, &'a [CStmt]),
    pub models: (EventModel, EventModel),
}

/// Compare source and target of a transformation on every case. Cases run
/// in parallel; the first failing case (by index) is reported.
pub fn check_transform(t: &Transform, fuel: u64, cases: &[Subst]) -> Verdict {
    let default = [Subst::new()];
    let cases = if cases.is_empty() { &default[..] } else { cases };
    let verdicts: Vec<Verdict> = cases
        .par_iter()
        .map(|s| {
            let l = run_cstar(t.source.0, s, t.source.1, fuel, t.models.0);
            let r = run_cstar(t.target.0, s, t.target.1, fuel, t.models.1);
            // struct erasure changes how values are carried, never what they are
            compare_outcomes(l, r, &|a, b| a == b)
        })
        .collect();
    let mut merged = Verdict::pass();
    for (i, mut v) in verdicts.into_iter().enumerate() {
        if v.status == Status::Fail {
            if let Some(d) = &mut v.first_divergence {
                d.case = Some(i);
                d.left_at = locate_cstar(t.source.0, t.source.1, &cases[i], t.models.0, d.index, fuel);
                d.right_at = locate_cstar(t.target.0, t.target.1, &cases[i], t.models.1, d.index, fuel);
            }
            v.notes.insert(0, format!("case {i} failed"));
            return v;
        }
        if v.status == Status::PassWithWarning {
            merged.status = Status::PassWithWarning;
            merged.notes.extend(v.notes.into_iter().map(|n| format!("case {i}: {n}")));
        }
        if i == 0 {
            merged.left = v.left;
            merged.right = v.right;
        }
    }
    merged
}

/// Apply `pass` and check that it preserves traces under its event models.
pub fn check_pass(p: &CProgram, entry: &[CStmt], pass: &str, fuel: u64, cases: &[Subst]) -> Result<Verdict, PassError> {
    let (p2, e2, _) = run_pass(pass, p, entry)?;
    let t = Transform { source: (p, entry), target: (&p2, &e2), models: pass_models(pass) };
    Ok(check_transform(&t, fuel, cases))
}

#[cfg(test)]
mod tests;
