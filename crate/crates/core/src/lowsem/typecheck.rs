use crate::ast::{LDecl, LExpr, LProgram, Name, Ty, Value};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{location}: expected {expected}, found {found}")]
    Mismatch { location: String, expected: String, found: String },
    #[error("{location}: unbound identifier `{name}`")]
    UnboundIdentifier { location: String, name: Name },
    #[error("{location}: abstract value misuse: {what}")]
    AbstractMisuse { location: String, what: String },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
}

/// Typing context for [`typecheck`].
#[derive(Clone, Debug, Default)]
pub struct TypeEnv {
    /// Signatures of program functions; filled from the program itself.
    pub fun_sigs: BTreeMap<Name, (Ty, Ty)>,
    /// Block types, only meaningful when checking machine states.
    pub store_ty: BTreeMap<u64, Ty>,
    /// Types of the entry expression's free variables.
    pub var_env: BTreeMap<Name, Ty>,
    /// Secret-interface functions, typed over abstract names.
    pub abstract_iface: BTreeMap<Name, (Ty, Ty)>,
}

/// A program that passed [`typecheck`], together with the signatures used.
#[derive(Clone, Debug)]
pub struct ElaboratedLProgram {
    pub program: LProgram,
    pub sigs: BTreeMap<Name, (Ty, Ty)>,
    pub entry_ty: Option<Ty>,
}

struct Checker<'a> {
    sigs: &'a BTreeMap<Name, (Ty, Ty)>,
    globals: &'a BTreeMap<Name, Ty>,
    store: &'a BTreeMap<u64, Ty>,
    scope: Vec<(Name, Ty)>,
    ctx: String,
}

fn head(e: &LExpr) -> &'static str {
    match e {
        LExpr::ConstInt(_) => "integer literal",
        LExpr::ConstUnit => "()",
        LExpr::Var(_) => "variable",
        LExpr::RecordLit(_) => "record literal",
        LExpr::Proj(..) => "projection",
        LExpr::StructField(..) => "field location",
        LExpr::SubBuf(..) => "subbuf",
        LExpr::If(..) => "if",
        LExpr::Let(..) => "let",
        LExpr::LetAnon(..) => "let _",
        LExpr::App(..) => "application",
        LExpr::NewBuf(..) => "newbuf",
        LExpr::ReadBuf(..) => "readbuf",
        LExpr::WriteBuf(..) => "writebuf",
        LExpr::NewStruct(..) => "newstruct",
        LExpr::ReadStruct(..) => "readstruct",
        LExpr::WriteStruct(..) => "writestruct",
        LExpr::WithFrame(_) => "withframe",
        LExpr::Pop(_) => "pop",
        LExpr::Loc(..) => "loc",
        LExpr::PrimOp(..) => "operator",
    }
}

impl Checker<'_> {
    fn loc(&self, e: &LExpr) -> String {
        format!("{} ({})", self.ctx, head(e))
    }

    fn mismatch<T>(&self, e: &LExpr, expected: impl ToString, found: &Ty) -> Result<T, TypeError> {
        Err(TypeError::Mismatch { location: self.loc(e), expected: expected.to_string(), found: found.to_string() })
    }

    fn invalid<T>(&self, e: &LExpr, message: impl Into<String>) -> Result<T, TypeError> {
        Err(TypeError::Invalid { location: self.loc(e), message: message.into() })
    }

    fn valid(&self, e: &LExpr, t: &Ty) -> Result<(), TypeError> {
        t.check_valid().or_else(|m| self.invalid(e, m))
    }

    /// Expect an Int in a position that would inspect it.
    fn int(&mut self, e: &LExpr, what: &str) -> Result<(), TypeError> {
        match self.ty(e)? {
            Ty::Int => Ok(()),
            Ty::Abstract(n) => Err(TypeError::AbstractMisuse {
                location: self.loc(e),
                what: format!("{what} on a value of abstract type `{n}`"),
            }),
            t => self.mismatch(e, "int", &t),
        }
    }

    fn expect(&mut self, e: &LExpr, want: &Ty) -> Result<(), TypeError> {
        let t = self.ty(e)?;
        if &t == want {
            Ok(())
        } else {
            self.mismatch(e, want, &t)
        }
    }

    fn buf_elem(&mut self, e: &LExpr) -> Result<Ty, TypeError> {
        match self.ty(e)? {
            Ty::Buf(t) => Ok(*t),
            t => self.mismatch(e, "a buffer", &t),
        }
    }

    fn struct_ty(&mut self, e: &LExpr) -> Result<Ty, TypeError> {
        match self.ty(e)? {
            t @ Ty::MutStruct(_) => Ok(t),
            t => self.mismatch(e, "a mutable struct", &t),
        }
    }

    fn bind<T>(&mut self, x: &str, t: Ty, f: impl FnOnce(&mut Self) -> T) -> T {
        self.scope.push((x.to_string(), t));
        let r = f(self);
        self.scope.pop();
        r
    }

    fn ty(&mut self, e: &LExpr) -> Result<Ty, TypeError> {
        use LExpr::*;
        match e {
            ConstInt(_) => Ok(Ty::Int),
            ConstUnit => Ok(Ty::Unit),
            Var(x) => {
                if let Some((_, t)) = self.scope.iter().rev().find(|(y, _)| y == x) {
                    return Ok(t.clone());
                }
                match self.globals.get(x) {
                    Some(t) => Ok(t.clone()),
                    None => Err(TypeError::UnboundIdentifier { location: self.loc(e), name: x.clone() }),
                }
            }
            RecordLit(fs) => {
                let mut out = Vec::new();
                for (f, fe) in fs {
                    if out.iter().any(|(g, _): &(Name, Ty)| g == f) {
                        return self.invalid(e, format!("duplicate field `{f}`"));
                    }
                    out.push((f.clone(), self.ty(fe)?));
                }
                if out.is_empty() {
                    return self.invalid(e, "empty record");
                }
                Ok(Ty::Record(out))
            }
            Proj(r, fd) => match self.ty(r)? {
                Ty::Record(fs) => match fs.iter().find(|(f, _)| f == fd) {
                    Some((_, t)) => Ok(t.clone()),
                    None => self.invalid(e, format!("record has no field `{fd}`")),
                },
                Ty::Abstract(n) => Err(TypeError::AbstractMisuse {
                    location: self.loc(e),
                    what: format!("projection on a value of abstract type `{n}`"),
                }),
                t => self.mismatch(e, "a record", &t),
            },
            StructField(s, fd) => match self.struct_ty(s)? {
                Ty::MutStruct(fs) => match fs.iter().find(|(f, _)| f == fd) {
                    Some((_, t @ Ty::MutStruct(_))) => Ok(t.clone()),
                    Some((_, t)) => self.mismatch(e, "a nested struct field", t),
                    None => self.invalid(e, format!("struct has no field `{fd}`")),
                },
                _ => unreachable!(),
            },
            SubBuf(b, i) => {
                let t = self.buf_elem(b)?;
                self.int(i, "pointer arithmetic")?;
                Ok(Ty::buf(t))
            }
            If(c, a, b) => {
                self.int(c, "branching")?;
                let ta = self.ty(a)?;
                self.expect(b, &ta)?;
                Ok(ta)
            }
            Let(x, t, e1, body) => {
                self.valid(e, t)?;
                self.expect(e1, t)?;
                self.bind(x, t.clone(), |c| c.ty(body))
            }
            LetAnon(e1, body) => {
                self.ty(e1)?;
                self.ty(body)
            }
            App(x, t, f, arg, body) => {
                let Some((a, r)) = self.sigs.get(f).cloned() else {
                    return Err(TypeError::UnboundIdentifier { location: self.loc(e), name: f.clone() });
                };
                self.expect(arg, &a)?;
                if &r != t {
                    return self.mismatch(e, t, &r);
                }
                self.bind(x, r, |c| c.ty(body))
            }
            NewBuf(x, n, init, t, body) => {
                self.valid(e, t)?;
                if *n == 0 {
                    return self.invalid(e, "buffer length must be positive");
                }
                self.expect(init, &t.content())?;
                self.bind(x, Ty::buf(t.clone()), |c| c.ty(body))
            }
            ReadBuf(x, t, b, i, body) => {
                let elem = self.buf_elem(b)?;
                self.int(i, "indexing")?;
                if elem.content() != *t {
                    return self.mismatch(e, t, &elem.content());
                }
                self.bind(x, t.clone(), |c| c.ty(body))
            }
            WriteBuf(b, i, v, body) => {
                let elem = self.buf_elem(b)?;
                self.int(i, "indexing")?;
                self.expect(v, &elem.content())?;
                self.ty(body)
            }
            NewStruct(x, init, t, body) => {
                self.valid(e, t)?;
                if !matches!(t, Ty::MutStruct(_)) {
                    return self.mismatch(e, "a struct type annotation", t);
                }
                self.expect(init, &t.content())?;
                self.bind(x, t.clone(), |c| c.ty(body))
            }
            ReadStruct(x, t, s, body) => {
                let st = self.struct_ty(s)?;
                if st.content() != *t {
                    return self.mismatch(e, t, &st.content());
                }
                self.bind(x, t.clone(), |c| c.ty(body))
            }
            WriteStruct(s, v, body) => {
                let st = self.struct_ty(s)?;
                self.expect(v, &st.content())?;
                self.ty(body)
            }
            WithFrame(b) => self.ty(b),
            Pop(b) => self.ty(b),
            Loc(b, _, path) => match self.store.get(b) {
                Some(t) => {
                    let ct = t.content();
                    match ct.at_path(path) {
                        Some(Ty::Record(fs)) if !path.is_empty() => Ok(Ty::MutStruct(fs)),
                        Some(_) if path.is_empty() => match t {
                            Ty::MutStruct(_) => Ok(t.clone()),
                            _ => Ok(Ty::buf(t.clone())),
                        },
                        _ => self.invalid(e, "location does not match its block type"),
                    }
                }
                None => self.invalid(e, format!("unknown block {b}")),
            },
            PrimOp(_, a, b) => {
                self.int(a, "arithmetic")?;
                self.int(b, "arithmetic")?;
                Ok(Ty::Int)
            }
        }
    }
}

fn value_has_ty(v: &Value, t: &Ty) -> bool {
    match (v, t) {
        (Value::IntV(_), Ty::Int) | (Value::UnitV, Ty::Unit) => true,
        (Value::RecordV(vs), Ty::Record(ts)) => {
            vs.len() == ts.len() && vs.iter().zip(ts).all(|((f, v), (g, t))| f == g && value_has_ty(v, t))
        }
        _ => false,
    }
}

/// Simply-typed checking of a whole program (functions, globals, entry).
pub fn typecheck(p: &LProgram, env: &TypeEnv) -> Result<ElaboratedLProgram, TypeError> {
    let mut sigs = env.abstract_iface.clone();
    let mut globals = BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    for (f, sig) in &env.fun_sigs {
        sigs.entry(f.clone()).or_insert_with(|| sig.clone());
    }
    for d in &p.decls {
        if !seen.insert(d.name().to_string()) || env.abstract_iface.contains_key(d.name()) {
            return Err(TypeError::Invalid {
                location: format!("declaration `{}`", d.name()),
                message: "duplicate top-level name".into(),
            });
        }
        match d {
            LDecl::Fun { name, param_ty, ret_ty, .. } => {
                sigs.insert(name.clone(), (param_ty.clone(), ret_ty.clone()));
            }
            LDecl::Val { name, ty, value } => {
                if !value_has_ty(value, ty) {
                    return Err(TypeError::Mismatch {
                        location: format!("val `{name}`"),
                        expected: ty.to_string(),
                        found: value.to_string(),
                    });
                }
                globals.insert(name.clone(), ty.clone());
            }
        }
    }
    for d in &p.decls {
        if let LDecl::Fun { name, param, param_ty, ret_ty, body } = d {
            for t in [param_ty, ret_ty] {
                t.check_valid().map_err(|m| TypeError::Invalid { location: format!("function `{name}`"), message: m })?;
            }
            if body.has_internal() {
                return Err(TypeError::Invalid {
                    location: format!("function `{name}`"),
                    message: "machine-internal construct in source".into(),
                });
            }
            let mut c = Checker {
                sigs: &sigs,
                globals: &globals,
                store: &env.store_ty,
                scope: vec![(param.clone(), param_ty.clone())],
                ctx: format!("function `{name}`"),
            };
            let t = c.ty(body)?;
            if &t != ret_ty {
                return Err(TypeError::Mismatch {
                    location: format!("function `{name}` (body)"),
                    expected: ret_ty.to_string(),
                    found: t.to_string(),
                });
            }
        }
    }
    let entry_ty = match &p.entry {
        Some(e) => Some(typecheck_expr(e, &sigs, &globals, env)?),
        None => None,
    };
    Ok(ElaboratedLProgram { program: p.clone(), sigs, entry_ty })
}

fn typecheck_expr(
    e: &LExpr,
    sigs: &BTreeMap<Name, (Ty, Ty)>,
    globals: &BTreeMap<Name, Ty>,
    env: &TypeEnv,
) -> Result<Ty, TypeError> {
    let mut c = Checker {
        sigs,
        globals,
        store: &env.store_ty,
        scope: env.var_env.iter().map(|(x, t)| (x.clone(), t.clone())).collect(),
        ctx: "entry".into(),
    };
    c.ty(e)
}

/// Type of a standalone expression against an already-checked program.
pub fn typecheck_entry(p: &ElaboratedLProgram, e: &LExpr, env: &TypeEnv) -> Result<Ty, TypeError> {
    let globals: BTreeMap<Name, Ty> = p
        .program
        .decls
        .iter()
        .filter_map(|d| match d {
            LDecl::Val { name, ty, .. } => Some((name.clone(), ty.clone())),
            _ => None,
        })
        .collect();
    typecheck_expr(e, &p.sigs, &globals, env)
}
