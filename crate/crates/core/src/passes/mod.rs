//! Source-to-source C* transformations: disambiguation, hoisting,
//! structure-return lowering and structure erasure.

mod disambiguate;
mod erase;
mod hoist;
mod struct_return;

pub use disambiguate::disambiguate;
pub use erase::{erase_structs, mangle};
pub use hoist::hoist;
pub use struct_return::struct_return;

use crate::ast::{CDecl, CExpr, CProgram, CStmt, FnRef, Name, Ty};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PassError {
    #[error("ambiguous local variables: {0}")]
    AmbiguousVariables(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Renaming {
    pub func: String,
    pub old: Name,
    pub new: Name,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PassReport {
    pub pass: String,
    pub renamings: Vec<Renaming>,
    pub checks: BTreeMap<String, bool>,
    pub stats: BTreeMap<String, u64>,
}

impl PassReport {
    fn new(pass: &str) -> PassReport {
        PassReport { pass: pass.into(), ..Default::default() }
    }

    fn bump(&mut self, stat: &str, n: u64) {
        *self.stats.entry(stat.into()).or_default() += n;
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }
}

pub type PassResult = Result<(CProgram, Vec<CStmt>, PassReport), PassError>;

/// One stage of [`pipeline`]: the program after the named pass.
#[derive(Clone, Debug)]
pub struct Stage {
    pub name: &'static str,
    pub program: CProgram,
    pub entry: Vec<CStmt>,
    pub report: PassReport,
}

pub const PIPELINE: [&str; 6] =
    ["disambiguate", "hoist", "struct_return", "disambiguate", "hoist", "erase_structs"];

pub fn run_pass(name: &str, p: &CProgram, entry: &[CStmt]) -> PassResult {
    match name {
        "disambiguate" => Ok(disambiguate(p, entry)),
        "hoist" => hoist(p, entry),
        "struct_return" => struct_return(p, entry),
        "erase_structs" => erase_structs(p, entry),
        _ => Err(PassError::PreconditionViolated(format!("unknown pass `{name}`"))),
    }
}

/// The full fixed pass sequence; stops at the first failing pass.
pub fn pipeline(p: &CProgram, entry: &[CStmt]) -> Result<Vec<Stage>, (Vec<Stage>, PassError)> {
    let mut stages: Vec<Stage> = vec![];
    for name in PIPELINE {
        let (prog, ent) = match stages.last() {
            Some(s) => (&s.program, s.entry.as_slice()),
            None => (p, entry),
        };
        match run_pass(name, prog, ent) {
            Ok((program, entry, report)) => stages.push(Stage { name, program, entry, report }),
            Err(e) => return Err((stages, e)),
        }
    }
    Ok(stages)
}

// ---------------------------------------------------------------------------
// Shared helpers

/// A function body or the entry statements, treated uniformly by the passes.
pub(crate) struct Unit<'a> {
    pub func: FnRef,
    pub params: &'a mut Vec<(Name, Ty)>,
    pub ret: Option<&'a mut Ty>,
    pub body: &'a mut Vec<CStmt>,
}

pub(crate) fn for_each_unit<E>(
    p: &mut CProgram,
    entry: &mut Vec<CStmt>,
    mut f: impl FnMut(Unit) -> Result<(), E>,
) -> Result<(), E> {
    for fun in p.funs_mut() {
        f(Unit { func: FnRef::Fun(fun.name.clone()), params: &mut fun.params, ret: Some(&mut fun.ret), body: &mut fun.body })?;
    }
    let mut no_params = vec![];
    f(Unit { func: FnRef::Entry, params: &mut no_params, ret: None, body: entry })
}

pub(crate) fn global_names(p: &CProgram) -> BTreeSet<Name> {
    p.decls
        .iter()
        .filter_map(|d| match d {
            CDecl::Val { name, .. } => Some(name.clone()),
            CDecl::Fun(_) => None,
        })
        .collect()
}

pub(crate) fn vars_mut(e: &mut CExpr, f: &mut dyn FnMut(&mut Name)) {
    match e {
        CExpr::Var(x) => f(x),
        CExpr::PtrAdd(a, b) | CExpr::PrimOp(_, a, b) => {
            vars_mut(a, f);
            vars_mut(b, f);
        }
        CExpr::RecordLit(fs) => fs.iter_mut().for_each(|(_, e)| vars_mut(e, f)),
        CExpr::Proj(e, _) | CExpr::PtrField(e, _) => vars_mut(e, f),
        CExpr::ConstInt(_) | CExpr::ConstUnit | CExpr::Loc(..) => {}
    }
}

/// Variables a statement list uses without declaring (globals excluded).
pub fn free_vars(ss: &[CStmt], globals: &BTreeSet<Name>) -> BTreeSet<Name> {
    let mut declared = BTreeSet::new();
    let mut used = BTreeSet::new();
    crate::ast::walk_stmts(ss, &mut |s| {
        for e in s.exprs() {
            used.extend(e.vars().into_iter().filter(|x| !declared.contains(x)));
        }
        if let Some(x) = s.declared() {
            declared.insert(x.clone());
        }
    });
    used.retain(|x| !globals.contains(x));
    used
}

pub(crate) fn fresh(base: &str, used: &mut BTreeSet<Name>) -> Name {
    let name = if used.contains(base) {
        (1..).map(|k| format!("{base}_{k}")).find(|n| !used.contains(n)).expect("infinite")
    } else {
        base.to_string()
    };
    used.insert(name.clone());
    name
}

/// No two arrays of one function share a name, and no array shares a name
/// with a non-array local.
pub fn check_unambiguous(p: &CProgram, entry: &[CStmt]) -> Result<(), PassError> {
    let globals = global_names(p);
    let mut units: Vec<(String, Vec<Name>, &[CStmt])> =
        p.funs().map(|f| (f.name.clone(), f.params.iter().map(|(x, _)| x.clone()).collect(), f.body.as_slice())).collect();
    units.push(("@entry".into(), free_vars(entry, &globals).into_iter().collect(), entry));
    for (f, params, body) in units {
        let mut arrays = BTreeSet::new();
        let mut scalars: BTreeSet<Name> = params.into_iter().collect();
        let mut dup = None;
        crate::ast::walk_stmts(body, &mut |s| match s {
            CStmt::ArrDecl(_, x, _) => {
                if !arrays.insert(x.clone()) {
                    dup.get_or_insert_with(|| format!("array `{x}` declared twice in {f}"));
                }
            }
            s => {
                if let Some(x) = s.declared() {
                    scalars.insert(x.clone());
                }
            }
        });
        if let Some(d) = dup {
            return Err(PassError::AmbiguousVariables(d));
        }
        if let Some(x) = arrays.intersection(&scalars).next() {
            return Err(PassError::AmbiguousVariables(format!("`{x}` names both an array and a scalar in {f}")));
        }
    }
    Ok(())
}

/// Every array declaration sits directly in the single top-level block.
pub fn is_hoisted_body(body: &[CStmt]) -> bool {
    let nested = |ss: &[CStmt]| {
        let mut found = false;
        crate::ast::walk_stmts(ss, &mut |s| found |= matches!(s, CStmt::ArrDecl(..)));
        found
    };
    match body {
        [CStmt::Block(inner)] => inner.iter().all(|s| match s {
            CStmt::ArrDecl(..) => true,
            CStmt::Block(ss) => !nested(ss),
            CStmt::IfStmt(_, a, b) => !nested(a) && !nested(b),
            _ => true,
        }),
        ss => !nested(ss),
    }
}

pub fn is_hoisted(p: &CProgram, entry: &[CStmt]) -> bool {
    p.funs().all(|f| is_hoisted_body(&f.body)) && is_hoisted_body(entry)
}

pub fn has_struct_returns(p: &CProgram) -> bool {
    p.funs().any(|f| f.ret.is_record())
}

/// No struct-typed scalar locals or parameters, no record literals or projections.
pub fn is_struct_free(p: &CProgram, entry: &[CStmt]) -> bool {
    let mut ok = p.funs().all(|f| !f.params.iter().any(|(_, t)| t.is_record()) && !f.ret.is_record());
    ok &= p.decls.iter().all(|d| !matches!(d, CDecl::Val { ty, .. } if ty.is_record()));
    let mut check = |ss: &[CStmt]| {
        crate::ast::walk_stmts(ss, &mut |s| {
            match s {
                CStmt::VarDecl(t, ..) | CStmt::ReadStmt(t, ..) => ok &= !t.is_record(),
                CStmt::Call { ty, dst: Some(_), .. } => ok &= !ty.is_record(),
                _ => {}
            }
            for e in s.exprs() {
                e.walk(&mut |e| ok &= !matches!(e, CExpr::RecordLit(_) | CExpr::Proj(..)));
            }
        })
    };
    for f in p.funs() {
        check(&f.body);
    }
    check(entry);
    ok
}

#[cfg(test)]
mod tests;
