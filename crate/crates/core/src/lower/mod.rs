//! λow* → C* compilation, the inverse back-translation, and `unravel`, which
//! reads a mid-run C* configuration back as the λow* term it stands for.

use crate::ast::{CDecl, CExpr, CFun, CProgram, CStmt, LDecl, LExpr, LProgram, Name, Ty, Value};
use crate::csem::{CConfig, Cont};
use crate::lowsem::{subst, ElaboratedLProgram};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CompileReason {
    MissingWithFrameAtTopLevel,
    EffectfulSubexpression,
    WithFrameInValuePosition,
    MachineInternalConstruct,
}

impl fmt::Display for CompileReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LowerError {
    #[error("not compilable ({reason}) in {location}")]
    NotCompilable { reason: CompileReason, location: String },
    #[error("not back-translatable: {0}")]
    NotBackTranslatable(String),
}

/// Where one emitted statement came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SourceEntry {
    /// Owning function, `@entry` for the entry statements.
    pub func: String,
    /// Pre-order index of the statement within its function body.
    pub stmt: usize,
    /// Constructor of the originating λow* node.
    pub origin: &'static str,
    pub binder: Option<Name>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoweringOutput {
    pub program: CProgram,
    /// Entry statements; the final one is a `return`.
    pub entry: Vec<CStmt>,
    pub source_map: Vec<SourceEntry>,
}

pub fn head(e: &LExpr) -> &'static str {
    use LExpr::*;
    match e {
        ConstInt(_) => "int",
        ConstUnit => "unit",
        Var(_) => "var",
        RecordLit(_) => "record",
        Proj(..) => "proj",
        StructField(..) => "field",
        SubBuf(..) => "subbuf",
        If(..) => "if",
        Let(..) => "let",
        LetAnon(..) => "let_",
        App(..) => "app",
        NewBuf(..) => "newbuf",
        ReadBuf(..) => "readbuf",
        WriteBuf(..) => "writebuf",
        NewStruct(..) => "newstruct",
        ReadStruct(..) => "readstruct",
        WriteStruct(..) => "writestruct",
        WithFrame(_) => "withframe",
        Pop(_) => "pop",
        Loc(..) => "loc",
        PrimOp(..) => "primop",
    }
}

fn not_compilable<T>(reason: CompileReason, e: &LExpr) -> Result<T, LowerError> {
    Err(LowerError::NotCompilable { reason, location: head(e).to_string() })
}

/// Compile a pure λow* expression.
pub fn compile_expr(e: &LExpr) -> Result<CExpr, LowerError> {
    use LExpr::*;
    Ok(match e {
        ConstInt(n) => CExpr::ConstInt(*n),
        ConstUnit => CExpr::ConstUnit,
        Var(x) => CExpr::Var(x.clone()),
        RecordLit(fs) => {
            let mut out = Vec::with_capacity(fs.len());
            for (f, e) in fs {
                out.push((f.clone(), compile_expr(e)?));
            }
            CExpr::RecordLit(out)
        }
        Proj(r, f) => CExpr::Proj(Box::new(compile_expr(r)?), f.clone()),
        StructField(s, f) => CExpr::PtrField(Box::new(compile_expr(s)?), f.clone()),
        SubBuf(a, b) => CExpr::PtrAdd(Box::new(compile_expr(a)?), Box::new(compile_expr(b)?)),
        PrimOp(op, a, b) => CExpr::PrimOp(*op, Box::new(compile_expr(a)?), Box::new(compile_expr(b)?)),
        WithFrame(_) => return not_compilable(CompileReason::WithFrameInValuePosition, e),
        Pop(_) | Loc(..) => return not_compilable(CompileReason::MachineInternalConstruct, e),
        _ => return not_compilable(CompileReason::EffectfulSubexpression, e),
    })
}

struct Compiler {
    func: String,
    next: usize,
    map: Vec<SourceEntry>,
}

impl Compiler {
    fn note(&mut self, e: &LExpr, binder: Option<&Name>) {
        let stmt = self.next;
        self.next += 1;
        self.map.push(SourceEntry { func: self.func.clone(), stmt, origin: head(e), binder: binder.cloned() });
    }

    /// Statements for `e`. In tail position the final expression is returned,
    /// otherwise it is evaluated and dropped.
    fn stmts(&mut self, mut e: &LExpr, tail: bool) -> Result<Vec<CStmt>, LowerError> {
        use LExpr::*;
        let mut out = vec![];
        loop {
            match e {
                Let(x, t, e1, body) => {
                    self.note(e, Some(x));
                    out.push(CStmt::VarDecl(t.clone(), x.clone(), compile_expr(e1)?));
                    e = body;
                }
                LetAnon(e1, body) => {
                    out.push(self.anon(e, e1)?);
                    e = body;
                }
                App(x, t, f, arg, body) => {
                    self.note(e, Some(x));
                    let dst = (x != "_").then(|| x.clone());
                    out.push(CStmt::Call { ty: t.clone(), dst, f: f.clone(), args: vec![compile_expr(arg)?] });
                    e = body;
                }
                NewBuf(x, n, init, t, body) => {
                    self.note(e, Some(x));
                    self.note(e, Some(x));
                    out.push(CStmt::ArrDecl(t.clone(), x.clone(), *n));
                    out.push(CStmt::Memset(CExpr::Var(x.clone()), *n, compile_expr(init)?));
                    e = body;
                }
                NewStruct(x, init, t, body) => {
                    self.note(e, Some(x));
                    self.note(e, Some(x));
                    out.push(CStmt::ArrDecl(t.clone(), x.clone(), 1));
                    out.push(CStmt::Memset(CExpr::Var(x.clone()), 1, compile_expr(init)?));
                    e = body;
                }
                ReadBuf(x, t, b, i, body) => {
                    self.note(e, Some(x));
                    let p = CExpr::PtrAdd(Box::new(compile_expr(b)?), Box::new(compile_expr(i)?));
                    out.push(CStmt::ReadStmt(t.clone(), x.clone(), p));
                    e = body;
                }
                WriteBuf(b, i, v, body) => {
                    self.note(e, None);
                    let p = CExpr::PtrAdd(Box::new(compile_expr(b)?), Box::new(compile_expr(i)?));
                    out.push(CStmt::WriteStmt(p, compile_expr(v)?));
                    e = body;
                }
                ReadStruct(x, t, s, body) => {
                    self.note(e, Some(x));
                    out.push(CStmt::ReadStmt(t.clone(), x.clone(), compile_expr(s)?));
                    e = body;
                }
                WriteStruct(s, v, body) => {
                    self.note(e, None);
                    out.push(CStmt::WriteStmt(compile_expr(s)?, compile_expr(v)?));
                    e = body;
                }
                If(c, a, b) => {
                    self.note(e, None);
                    let c = compile_expr(c)?;
                    let a = self.stmts(a, tail)?;
                    let b = self.stmts(b, tail)?;
                    out.push(CStmt::IfStmt(c, a, b));
                    return Ok(out);
                }
                WithFrame(b) => {
                    self.note(e, None);
                    let b = self.stmts(b, tail)?;
                    out.push(CStmt::Block(b));
                    return Ok(out);
                }
                _ => {
                    self.note(e, None);
                    let ce = compile_expr(e)?;
                    out.push(if tail { CStmt::Return(ce) } else { CStmt::ExprStmt(ce) });
                    return Ok(out);
                }
            }
        }
    }

    /// `let _ = e1 in …`: a nested frame, a branch, or a pure expression.
    fn anon(&mut self, whole: &LExpr, e1: &LExpr) -> Result<CStmt, LowerError> {
        match e1 {
            LExpr::WithFrame(b) => {
                self.note(whole, None);
                Ok(CStmt::Block(self.stmts(b, false)?))
            }
            LExpr::If(c, a, b) => {
                self.note(whole, None);
                let c = compile_expr(c)?;
                let a = self.stmts(a, false)?;
                let b = self.stmts(b, false)?;
                Ok(CStmt::IfStmt(c, a, b))
            }
            _ => {
                self.note(whole, None);
                Ok(CStmt::ExprStmt(compile_expr(e1)?))
            }
        }
    }
}

/// Statements for `e` in tail position: the final one is a `return`.
pub fn compile_stmts(e: &LExpr) -> Result<Vec<CStmt>, LowerError> {
    Compiler { func: "@entry".into(), next: 0, map: vec![] }.stmts(e, true)
}

pub fn compile_program(p: &ElaboratedLProgram) -> Result<LoweringOutput, LowerError> {
    let mut c = Compiler { func: String::new(), next: 0, map: vec![] };
    let mut decls = vec![];
    for d in &p.program.decls {
        match d {
            LDecl::Fun { name, param, param_ty, ret_ty, body } => {
                let LExpr::WithFrame(inner) = body else {
                    return Err(LowerError::NotCompilable {
                        reason: CompileReason::MissingWithFrameAtTopLevel,
                        location: format!("function `{name}`"),
                    });
                };
                c.func = name.clone();
                c.next = 0;
                c.note(body, None);
                let ss = c.stmts(inner, true)?;
                decls.push(CDecl::Fun(CFun {
                    name: name.clone(),
                    params: vec![(param.clone(), param_ty.clone())],
                    ret: ret_ty.clone(),
                    body: vec![CStmt::Block(ss)],
                }));
            }
            LDecl::Val { name, ty, value } => {
                decls.push(CDecl::Val { name: name.clone(), ty: ty.clone(), value: value.clone() })
            }
        }
    }
    c.func = "@entry".into();
    c.next = 0;
    let entry = match &p.program.entry {
        Some(e) => c.stmts(e, true)?,
        None => vec![],
    };
    Ok(LoweringOutput { program: CProgram { decls }, entry, source_map: c.map })
}

pub fn source_map_json(m: &[SourceEntry]) -> serde_json::Value {
    serde_json::to_value(m).expect("serializable")
}

// ---------------------------------------------------------------------------
// Back-translation

fn nbt<T>(msg: impl Into<String>) -> Result<T, LowerError> {
    Err(LowerError::NotBackTranslatable(msg.into()))
}

pub fn back_translate_expr(e: &CExpr) -> LExpr {
    match e {
        CExpr::ConstInt(n) => LExpr::ConstInt(*n),
        CExpr::ConstUnit => LExpr::ConstUnit,
        CExpr::Var(x) => LExpr::Var(x.clone()),
        CExpr::PtrAdd(a, b) => LExpr::SubBuf(Box::new(back_translate_expr(a)), Box::new(back_translate_expr(b))),
        CExpr::RecordLit(fs) => LExpr::RecordLit(fs.iter().map(|(f, e)| (f.clone(), back_translate_expr(e))).collect()),
        CExpr::Proj(r, f) => LExpr::Proj(Box::new(back_translate_expr(r)), f.clone()),
        CExpr::PtrField(s, f) => LExpr::StructField(Box::new(back_translate_expr(s)), f.clone()),
        CExpr::Loc(b, n, p) => LExpr::Loc(*b, *n, p.clone()),
        CExpr::PrimOp(op, a, b) => {
            LExpr::PrimOp(*op, Box::new(back_translate_expr(a)), Box::new(back_translate_expr(b)))
        }
    }
}

enum Item<'a> {
    Alloc(&'a Ty, &'a Name, u32, &'a CExpr),
    Stmt(&'a CStmt),
}

fn wrap(item: &Item, body: LExpr) -> Result<LExpr, LowerError> {
    let b = Box::new(body);
    let bx = |e: &CExpr| Box::new(back_translate_expr(e));
    Ok(match item {
        Item::Alloc(t, x, n, init) => {
            if matches!(t, Ty::MutStruct(_)) && *n == 1 {
                LExpr::NewStruct((*x).clone(), bx(init), (*t).clone(), b)
            } else {
                LExpr::NewBuf((*x).clone(), *n, bx(init), (*t).clone(), b)
            }
        }
        Item::Stmt(s) => match s {
            CStmt::VarDecl(t, x, e) => LExpr::Let(x.clone(), t.clone(), bx(e), b),
            CStmt::Call { ty, dst, f, args } => {
                let [arg] = args.as_slice() else {
                    return nbt(format!("call to `{f}` with {} arguments", args.len()));
                };
                LExpr::App(dst.clone().unwrap_or_else(|| "_".into()), ty.clone(), f.clone(), bx(arg), b)
            }
            CStmt::ReadStmt(t, x, CExpr::PtrAdd(p, i)) => LExpr::ReadBuf(x.clone(), t.clone(), bx(p), bx(i), b),
            CStmt::ReadStmt(t, x, e) => LExpr::ReadStruct(x.clone(), t.clone(), bx(e), b),
            CStmt::WriteStmt(CExpr::PtrAdd(p, i), v) => LExpr::WriteBuf(bx(p), bx(i), bx(v), b),
            CStmt::WriteStmt(e, v) => LExpr::WriteStruct(bx(e), bx(v), b),
            CStmt::IfStmt(c, x, y) => {
                LExpr::LetAnon(Box::new(LExpr::If(bx(c), Box::new(back_translate(x)?), Box::new(back_translate(y)?))), b)
            }
            CStmt::Block(ss) => LExpr::LetAnon(Box::new(LExpr::WithFrame(Box::new(back_translate(ss)?))), b),
            CStmt::ExprStmt(e) => LExpr::LetAnon(bx(e), b),
            CStmt::Return(_) => return nbt("return before the end of a statement list"),
            CStmt::ArrDecl(_, x, _) => return nbt(format!("array `{x}` declared without its initializer")),
            CStmt::Memset(..) => return nbt("memset not directly after its array declaration"),
        },
    })
}

/// Inverse of compilation on its image.
pub fn back_translate(ss: &[CStmt]) -> Result<LExpr, LowerError> {
    let mut items = Vec::with_capacity(ss.len());
    let mut i = 0;
    while i < ss.len() {
        match (&ss[i], ss.get(i + 1)) {
            (CStmt::ArrDecl(t, x, n), Some(CStmt::Memset(CExpr::Var(y), m, init))) if x == y && n == m => {
                items.push(Item::Alloc(t, x, *n, init));
                i += 2;
            }
            (s, _) => {
                items.push(Item::Stmt(s));
                i += 1;
            }
        }
    }
    let Some(last) = items.pop() else {
        return Ok(LExpr::ConstUnit);
    };
    let mut acc = match last {
        Item::Stmt(CStmt::Return(e)) | Item::Stmt(CStmt::ExprStmt(e)) => back_translate_expr(e),
        Item::Stmt(CStmt::Block(ss)) => LExpr::WithFrame(Box::new(back_translate(ss)?)),
        Item::Stmt(CStmt::IfStmt(c, a, b)) => LExpr::If(
            Box::new(back_translate_expr(c)),
            Box::new(back_translate(a)?),
            Box::new(back_translate(b)?),
        ),
        other => wrap(&other, LExpr::ConstUnit)?,
    };
    for item in items.iter().rev() {
        acc = wrap(item, acc)?;
    }
    Ok(acc)
}

pub fn back_translate_decl(d: &CDecl) -> Result<LDecl, LowerError> {
    match d {
        CDecl::Val { name, ty, value } => Ok(LDecl::Val { name: name.clone(), ty: ty.clone(), value: value.clone() }),
        CDecl::Fun(f) => {
            let [(param, param_ty)] = f.params.as_slice() else {
                return nbt(format!("function `{}` has {} parameters", f.name, f.params.len()));
            };
            let [CStmt::Block(ss)] = f.body.as_slice() else {
                return nbt(format!("body of `{}` is not a single block", f.name));
            };
            Ok(LDecl::Fun {
                name: f.name.clone(),
                param: param.clone(),
                param_ty: param_ty.clone(),
                ret_ty: f.ret.clone(),
                body: LExpr::WithFrame(Box::new(back_translate(ss)?)),
            })
        }
    }
}

pub fn back_translate_program(p: &CProgram, entry: &[CStmt]) -> Result<LProgram, LowerError> {
    let decls = p.decls.iter().map(back_translate_decl).collect::<Result<_, _>>()?;
    let entry = if entry.is_empty() { None } else { Some(back_translate(entry)?) };
    Ok(LProgram { decls, entry })
}

// ---------------------------------------------------------------------------
// Unravel

fn close(mut e: LExpr, vars: &HashMap<Name, Value>) -> LExpr {
    let mut names: Vec<_> = vars.keys().collect();
    names.sort();
    for x in names {
        subst(&mut e, x, &vars[x].to_lexpr());
    }
    e
}

/// The λow* expression a C* configuration denotes: the current statements
/// wrapped by one context per stack frame, innermost first.
pub fn unravel(c: &CConfig) -> Result<LExpr, LowerError> {
    let mut e = close(back_translate(&c.stmts())?, &c.vars);
    for f in c.stack.iter().rev() {
        e = match &f.cont {
            Cont::Discard(rest) if f.mem.is_some() => {
                let popped = LExpr::Pop(Box::new(e));
                if rest.is_empty() {
                    popped
                } else {
                    LExpr::LetAnon(Box::new(popped), Box::new(close(back_translate(rest)?, &f.saved_vars)))
                }
            }
            Cont::Discard(rest) => LExpr::LetAnon(Box::new(e), Box::new(close(back_translate(rest)?, &f.saved_vars))),
            Cont::Receive(t, x, rest) => LExpr::Let(
                x.clone().unwrap_or_else(|| "_".into()),
                t.clone(),
                Box::new(e),
                Box::new(close(back_translate(rest)?, &f.saved_vars)),
            ),
        };
    }
    Ok(e)
}


#[cfg(test)]
mod tests;
