use super::{check_unambiguous, fresh, has_struct_returns, is_hoisted, is_struct_free, PassError, PassReport, PassResult};
use crate::ast::{CDecl, CExpr, CProgram, CStmt, Name, Ty, Value};
use crate::csem::names_in;
use std::collections::{BTreeSet, HashMap};

fn esc(s: &str) -> String {
    s.replace('_', "__")
}

/// Scalar name for the field path `path` of struct variable `x`; user
/// underscores are doubled so distinct paths never mangle alike.
pub fn mangle(x: &str, path: &[Name]) -> String {
    let mut out = esc(x);
    for f in path {
        out.push('_');
        out.push_str(&esc(f));
    }
    out
}

/// Atomic field paths of a type, in declaration order.
fn leaves(t: &Ty) -> Vec<(Vec<Name>, Ty)> {
    match t {
        Ty::Record(fds) => fds
            .iter()
            .flat_map(|(f, ft)| {
                leaves(ft).into_iter().map(move |(mut p, t)| {
                    p.insert(0, f.clone());
                    (p, t)
                })
            })
            .collect(),
        t => vec![(vec![], t.clone())],
    }
}

fn ptr_content(t: &Ty) -> Option<Ty> {
    match t {
        Ty::Buf(t) => Some(t.content()),
        Ty::MutStruct(_) => Some(t.content()),
        _ => None,
    }
}

fn ptr_field(p: CExpr, path: &[Name]) -> CExpr {
    path.iter().fold(p, |p, f| CExpr::PtrField(Box::new(p), f.clone()))
}

fn value_at(v: &Value, path: &[Name]) -> Value {
    path.iter().fold(v.clone(), |v, f| v.field(f).cloned().unwrap_or(Value::Undef))
}

fn violated<T>(msg: impl Into<String>) -> Result<T, PassError> {
    Err(PassError::PreconditionViolated(msg.into()))
}

struct Globals {
    types: HashMap<Name, Ty>,
    names: HashMap<(Name, Vec<Name>), Name>,
}

struct Eraser<'a> {
    globals: &'a Globals,
    sigs: &'a HashMap<Name, Vec<(Name, Ty)>>,
    env: HashMap<Name, Ty>,
    names: HashMap<(Name, Vec<Name>), Name>,
    used: BTreeSet<Name>,
    erased: u64,
}

impl Eraser<'_> {
    fn var_ty(&self, x: &str) -> Option<&Ty> {
        self.env.get(x).or_else(|| self.globals.types.get(x))
    }

    fn is_struct_var(&self, x: &str) -> bool {
        self.var_ty(x).is_some_and(Ty::is_record)
    }

    fn name_of(&mut self, x: &Name, path: &[Name]) -> Name {
        if !self.env.contains_key(x) {
            if let Some(n) = self.globals.names.get(&(x.clone(), path.to_vec())) {
                return n.clone();
            }
        }
        let key = (x.clone(), path.to_vec());
        if let Some(n) = self.names.get(&key) {
            return n.clone();
        }
        let n = fresh(&mangle(x, path), &mut self.used);
        self.names.insert(key, n.clone());
        n
    }

    fn ty_of(&self, e: &CExpr) -> Option<Ty> {
        match e {
            CExpr::ConstInt(_) | CExpr::PrimOp(..) => Some(Ty::Int),
            CExpr::ConstUnit => Some(Ty::Unit),
            CExpr::Var(x) => self.var_ty(x).cloned(),
            CExpr::RecordLit(fs) => {
                let mut out = vec![];
                for (f, e) in fs {
                    out.push((f.clone(), self.ty_of(e)?));
                }
                Some(Ty::Record(out))
            }
            CExpr::Proj(e, f) => self.ty_of(e)?.field(f).cloned(),
            CExpr::PtrField(p, f) => Some(Ty::buf(ptr_content(&self.ty_of(p)?)?.field(f)?.clone())),
            CExpr::PtrAdd(p, _) => self.ty_of(p),
            CExpr::Loc(..) => None,
        }
    }

    /// The scalar expression for atomic path `path` inside struct-valued `e`.
    fn field_of(&mut self, e: &CExpr, path: &[Name]) -> Result<CExpr, PassError> {
        match e {
            CExpr::RecordLit(fs) if !path.is_empty() => match fs.iter().find(|(f, _)| *f == path[0]) {
                Some((_, fe)) => self.field_of(fe, &path[1..]),
                None => violated(format!("record literal has no field `{}`", path[0])),
            },
            CExpr::Proj(inner, f) => {
                let mut p = vec![f.clone()];
                p.extend_from_slice(path);
                self.field_of(inner, &p)
            }
            CExpr::Var(x) if self.is_struct_var(x) => Ok(CExpr::Var(self.name_of(x, path))),
            _ if path.is_empty() => self.expr(e),
            _ => violated(format!("cannot take field `{}` of a non-struct expression", path.join("."))),
        }
    }

    /// An expression of atomic type.
    fn expr(&mut self, e: &CExpr) -> Result<CExpr, PassError> {
        Ok(match e {
            CExpr::Proj(..) => self.field_of(e, &[])?,
            CExpr::RecordLit(_) => return violated("record literal in scalar position"),
            CExpr::Var(x) if self.is_struct_var(x) => return violated(format!("struct `{x}` used as a scalar")),
            CExpr::PtrAdd(a, b) => CExpr::PtrAdd(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            CExpr::PrimOp(op, a, b) => CExpr::PrimOp(*op, Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            CExpr::PtrField(p, f) => CExpr::PtrField(Box::new(self.expr(p)?), f.clone()),
            e => e.clone(),
        })
    }

    fn record_content(&self, p: &CExpr) -> Option<Ty> {
        self.ty_of(p).as_ref().and_then(ptr_content).filter(Ty::is_record)
    }

    fn stmts(&mut self, ss: &[CStmt]) -> Result<Vec<CStmt>, PassError> {
        let mut out = Vec::with_capacity(ss.len());
        for s in ss {
            match s {
                CStmt::VarDecl(t, x, e) => {
                    self.env.insert(x.clone(), t.clone());
                    if t.is_record() {
                        self.erased += 1;
                        for (path, ft) in leaves(t) {
                            let v = self.field_of(e, &path)?;
                            out.push(CStmt::VarDecl(ft, self.name_of(x, &path), v));
                        }
                    } else {
                        out.push(CStmt::VarDecl(t.clone(), x.clone(), self.expr(e)?));
                    }
                }
                CStmt::ReadStmt(t, x, p) => {
                    let p = self.expr(p)?;
                    self.env.insert(x.clone(), t.clone());
                    if t.is_record() {
                        self.erased += 1;
                        let ptr = fresh(&format!("{x}_ptr"), &mut self.used);
                        self.env.insert(ptr.clone(), Ty::buf(t.clone()));
                        out.push(CStmt::VarDecl(Ty::buf(t.clone()), ptr.clone(), p));
                        for (path, ft) in leaves(t) {
                            let dst = self.name_of(x, &path);
                            out.push(CStmt::ReadStmt(ft, dst, ptr_field(CExpr::Var(ptr.clone()), &path)));
                        }
                    } else {
                        out.push(CStmt::ReadStmt(t.clone(), x.clone(), p));
                    }
                }
                CStmt::ArrDecl(t, x, _) => {
                    self.env.insert(x.clone(), Ty::buf(t.clone()));
                    out.push(s.clone());
                }
                CStmt::Memset(p, n, e) => match self.record_content(p) {
                    Some(t) => {
                        let base = self.expr(p)?;
                        for k in 0..*n {
                            let cell = if k == 0 {
                                base.clone()
                            } else {
                                CExpr::PtrAdd(Box::new(base.clone()), Box::new(CExpr::ConstInt(k as i32)))
                            };
                            for (path, _) in leaves(&t) {
                                let v = self.field_of(e, &path)?;
                                out.push(CStmt::WriteStmt(ptr_field(cell.clone(), &path), v));
                            }
                        }
                    }
                    None => out.push(CStmt::Memset(self.expr(p)?, *n, self.expr(e)?)),
                },
                CStmt::WriteStmt(p, e) => match self.record_content(p) {
                    Some(t) => {
                        let base = self.expr(p)?;
                        for (path, _) in leaves(&t) {
                            let v = self.field_of(e, &path)?;
                            out.push(CStmt::WriteStmt(ptr_field(base.clone(), &path), v));
                        }
                    }
                    None => out.push(CStmt::WriteStmt(self.expr(p)?, self.expr(e)?)),
                },
                CStmt::Call { ty, dst, f, args } => {
                    if ty.is_record() && dst.is_some() {
                        return violated(format!("call to `{f}` still returns a struct"));
                    }
                    let params = self.sigs.get(f).cloned().unwrap_or_default();
                    let mut new_args = vec![];
                    for (i, a) in args.iter().enumerate() {
                        match params.get(i) {
                            Some((_, pt)) if pt.is_record() => {
                                for (path, _) in leaves(pt) {
                                    new_args.push(self.field_of(a, &path)?);
                                }
                            }
                            _ => new_args.push(self.expr(a)?),
                        }
                    }
                    if let Some(x) = dst {
                        self.env.insert(x.clone(), ty.clone());
                    }
                    out.push(CStmt::Call { ty: ty.clone(), dst: dst.clone(), f: f.clone(), args: new_args });
                }
                CStmt::IfStmt(c, a, b) => {
                    let c = self.expr(c)?;
                    out.push(CStmt::IfStmt(c, self.stmts(a)?, self.stmts(b)?));
                }
                CStmt::Block(ss) => out.push(CStmt::Block(self.stmts(ss)?)),
                CStmt::ExprStmt(e) => {
                    if self.ty_of(e).is_some_and(|t| t.is_record()) {
                        out.push(CStmt::ExprStmt(CExpr::ConstUnit));
                    } else {
                        out.push(CStmt::ExprStmt(self.expr(e)?));
                    }
                }
                CStmt::Return(e) => {
                    if self.ty_of(e).is_some_and(|t| t.is_record()) {
                        return violated("a struct value is returned");
                    }
                    out.push(CStmt::Return(self.expr(e)?));
                }
            }
        }
        Ok(out)
    }
}

/// Replace struct-typed locals, parameters and globals by one scalar per
/// atomic field, and struct reads/writes by per-field accesses.
pub fn erase_structs(p: &CProgram, entry: &[CStmt]) -> PassResult {
    check_unambiguous(p, entry)?;
    if !is_hoisted(p, entry) {
        return violated("erase_structs expects a hoisted program");
    }
    if has_struct_returns(p) {
        return violated("erase_structs expects no struct-returning functions");
    }
    let mut all_names: BTreeSet<Name> = names_in(&[], entry);
    for f in p.funs() {
        all_names.extend(names_in(&f.params, &f.body));
    }
    all_names.extend(super::global_names(p));
    let mut globals = Globals { types: HashMap::new(), names: HashMap::new() };
    let mut decls = vec![];
    let mut report = PassReport::new("erase_structs");
    for d in &p.decls {
        if let CDecl::Val { name, ty, value } = d {
            globals.types.insert(name.clone(), ty.clone());
            if ty.is_record() {
                report.bump("erased_globals", 1);
                for (path, ft) in leaves(ty) {
                    let n = fresh(&mangle(name, &path), &mut all_names);
                    globals.names.insert((name.clone(), path.clone()), n.clone());
                    decls.push(CDecl::Val { name: n, ty: ft, value: value_at(value, &path) });
                }
                continue;
            }
        }
        decls.push(d.clone());
    }
    let sigs: HashMap<Name, Vec<(Name, Ty)>> = p.funs().map(|f| (f.name.clone(), f.params.clone())).collect();
    let new_eraser = |params: &[(Name, Ty)], body: &[CStmt]| {
        let mut used = names_in(params, body);
        used.extend(all_names.iter().cloned());
        Eraser { globals: &globals, sigs: &sigs, env: HashMap::new(), names: HashMap::new(), used, erased: 0 }
    };
    for d in decls.iter_mut() {
        let CDecl::Fun(f) = d else { continue };
        let mut er = new_eraser(&f.params, &f.body);
        let mut params = vec![];
        for (x, t) in &f.params {
            er.env.insert(x.clone(), t.clone());
            if t.is_record() {
                er.erased += 1;
                for (path, ft) in leaves(t) {
                    params.push((er.name_of(x, &path), ft));
                }
            } else {
                params.push((x.clone(), t.clone()));
            }
        }
        f.body = er.stmts(&f.body)?;
        f.params = params;
        report.bump("erased_vars", er.erased);
    }
    let mut er = new_eraser(&[], entry);
    let entry = er.stmts(entry)?;
    report.bump("erased_vars", er.erased);
    let p = CProgram { decls };
    report.checks.insert("struct_free".into(), is_struct_free(&p, &entry));
    Ok((p, entry, report))
}
