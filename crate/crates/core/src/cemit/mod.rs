//! C11 text generation for fully lowered C* programs.

use crate::ast::{CDecl, CExpr, CFun, CProgram, CStmt, Name, PrimOp, Ty, Value};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("program is not fully lowered: {0}")]
    NotFullyLowered(String),
    #[error("`{0}` is not a usable C identifier")]
    InvalidIdentifier(Name),
}

#[derive(Clone, Debug)]
pub struct EmitConfig {
    /// Base name of the emitted files (`<name>.c`, `<name>.h`).
    pub name: String,
    pub indent: usize,
    pub annotations: bool,
    /// Entry variables fed by extern getters, `get_<y>()`.
    pub secret_params: Vec<(Name, Ty)>,
    /// Representation of abstract types.
    pub abstract_types: BTreeMap<Name, Ty>,
}

impl Default for EmitConfig {
    fn default() -> Self {
        EmitConfig {
            name: "program".into(),
            indent: 2,
            annotations: false,
            secret_params: vec![],
            abstract_types: BTreeMap::new(),
        }
    }
}

pub const ANNOT_HEADER_NAME: &str = "kremlite_annot.h";

/// No-op trace annotation macros.
pub fn annot_header() -> String {
    "#ifndef KREMLITE_ANNOT_H\n#define KREMLITE_ANNOT_H\n\n\
     #define KRML_ANNOT_READ(p) ((void)0)\n\
     #define KRML_ANNOT_WRITE(p) ((void)0)\n\
     #define KRML_ANNOT_BR(c) ((void)0)\n\n\
     #endif\n"
        .to_string()
}

const C_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern",
    "float", "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return", "short", "signed",
    "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while", "_Bool",
    "_Complex", "_Imaginary", "_Alignas", "_Alignof", "_Atomic", "_Generic", "_Noreturn", "_Static_assert",
    "_Thread_local", "main", "printf", "NULL", "int32_t", "uint32_t",
];

fn check_ident(x: &str) -> Result<(), EmitError> {
    let mut cs = x.chars();
    let ok = cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !C_KEYWORDS.contains(&x);
    if ok {
        Ok(())
    } else {
        Err(EmitError::InvalidIdentifier(x.into()))
    }
}

struct Types<'a> {
    abstract_types: &'a BTreeMap<Name, Ty>,
    /// Record type → typedef name.
    names: HashMap<Ty, String>,
    /// Typedefs in dependency order.
    defs: Vec<String>,
}

impl Types<'_> {
    fn resolve(&self, t: &Ty) -> Result<Ty, EmitError> {
        Ok(t.expand(&|n| self.abstract_types.get(n).cloned()))
            .and_then(|t| if t.mentions_abstract() { Err(EmitError::NotFullyLowered(format!("abstract type in {t}"))) } else { Ok(t) })
    }

    fn register(&mut self, t: &Ty, base: &str) -> Result<(), EmitError> {
        let t = self.resolve(t)?;
        match &t {
            Ty::Buf(e) => self.register(e, base),
            Ty::MutStruct(_) => self.register(&t.content(), base),
            Ty::Record(fds) => {
                if self.names.contains_key(&t) {
                    return Ok(());
                }
                for (f, ft) in fds {
                    self.register(ft, &format!("{base}_{f}"))?;
                }
                let name = format!("{base}_t");
                let mut def = "typedef struct {\n".to_string();
                let mut any = false;
                for (f, ft) in fds {
                    if *ft == Ty::Unit {
                        continue;
                    }
                    any = true;
                    let _ = writeln!(def, "  {} {};", self.c_ty(ft)?, f);
                }
                if !any {
                    return Err(EmitError::NotFullyLowered(format!("struct {t} has no data fields")));
                }
                let _ = write!(def, "}} {name};");
                self.defs.push(def);
                self.names.insert(t, name);
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn c_ty(&self, t: &Ty) -> Result<String, EmitError> {
        let t = self.resolve(t)?;
        Ok(match &t {
            Ty::Int => "int32_t".into(),
            Ty::Unit => "void".into(),
            Ty::Buf(e) => format!("{}*", self.c_ty(&e.content())?),
            Ty::MutStruct(_) => format!("{}*", self.c_ty(&t.content())?),
            Ty::Record(_) => match self.names.get(&t) {
                Some(n) => n.clone(),
                None => return Err(EmitError::NotFullyLowered(format!("struct type {t} outside any buffer"))),
            },
            Ty::Abstract(n) => return Err(EmitError::NotFullyLowered(format!("abstract type `{n}`"))),
        })
    }
}

fn collect_types(p: &CProgram, entry: &[CStmt], types: &mut Types) -> Result<(), EmitError> {
    let mut units: Vec<(&str, &[(Name, Ty)], &[CStmt])> =
        p.funs().map(|f| (f.name.as_str(), f.params.as_slice(), f.body.as_slice())).collect();
    units.push(("main", &[], entry));
    for (fname, params, body) in units {
        for (x, t) in params {
            types.register(t, &format!("{fname}_{x}"))?;
        }
        let mut found = vec![];
        crate::ast::walk_stmts(body, &mut |s| match s {
            CStmt::ArrDecl(t, x, _) | CStmt::VarDecl(t, x, _) | CStmt::ReadStmt(t, x, _) => {
                found.push((t.clone(), x.clone()))
            }
            CStmt::Call { ty, dst: Some(x), .. } => found.push((ty.clone(), x.clone())),
            _ => {}
        });
        for (t, x) in found {
            types.register(&t, &format!("{fname}_{x}"))?;
        }
    }
    Ok(())
}

struct Emitter<'a> {
    cfg: &'a EmitConfig,
    types: &'a Types<'a>,
    sigs: &'a HashMap<Name, Vec<Ty>>,
    out: String,
    level: usize,
    /// Variables of unit type in the current function.
    units: BTreeSet<Name>,
    /// Entry variables that read secret getters.
    secrets: BTreeSet<Name>,
    in_main: bool,
    ret_unit: bool,
}

impl Emitter<'_> {
    fn line(&mut self, s: &str) {
        for _ in 0..self.level * self.cfg.indent {
            self.out.push(' ');
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn var(&self, x: &str) -> Result<String, EmitError> {
        if self.in_main && self.secrets.contains(x) {
            return Ok(format!("_{x}"));
        }
        if self.units.contains(x) {
            return Err(EmitError::NotFullyLowered(format!("unit variable `{x}` used as a value")));
        }
        check_ident(x)?;
        Ok(x.to_string())
    }

    fn expr(&self, e: &CExpr) -> Result<String, EmitError> {
        Ok(match e {
            CExpr::ConstInt(n) if *n == i32::MIN => "(-2147483647 - 1)".into(),
            CExpr::ConstInt(n) if *n < 0 => format!("({n})"),
            CExpr::ConstInt(n) => n.to_string(),
            CExpr::Var(x) => self.var(x)?,
            CExpr::PtrAdd(p, i) => format!("({} + {})", self.expr(p)?, self.expr(i)?),
            CExpr::PtrField(..) => format!("&{}", self.deref(e)?),
            CExpr::PrimOp(op, a, b) => {
                let (a, b) = (self.expr(a)?, self.expr(b)?);
                match op {
                    PrimOp::Add | PrimOp::Sub | PrimOp::Mul => {
                        format!("(int32_t)((uint32_t){a} {} (uint32_t){b})", op.symbol())
                    }
                    PrimOp::Lt | PrimOp::Eq => format!("(int32_t)({a} {} {b})", op.symbol()),
                    PrimOp::And | PrimOp::Or | PrimOp::Xor => format!("({a} {} {b})", op.symbol()),
                }
            }
            CExpr::ConstUnit => return Err(EmitError::NotFullyLowered("unit value in a value position".into())),
            CExpr::RecordLit(_) => return Err(EmitError::NotFullyLowered("record literal".into())),
            CExpr::Proj(..) => return Err(EmitError::NotFullyLowered("record projection".into())),
            CExpr::Loc(..) => return Err(EmitError::NotFullyLowered("machine location".into())),
        })
    }

    /// The lvalue a pointer expression designates.
    fn deref(&self, p: &CExpr) -> Result<String, EmitError> {
        Ok(match p {
            CExpr::PtrField(q, f) => match &**q {
                CExpr::PtrField(..) | CExpr::PtrAdd(..) => format!("{}.{f}", self.deref(q)?),
                q => format!("{}->{f}", self.expr(q)?),
            },
            CExpr::PtrAdd(b, i) => format!("{}[{}]", self.expr(b)?, self.expr(i)?),
            e => format!("(*{})", self.expr(e)?),
        })
    }

    fn annot(&mut self, mac: &str, arg: &str) {
        if self.cfg.annotations {
            self.line(&format!("KRML_ANNOT_{mac}({arg});"));
        }
    }

    fn is_unit_expr(&self, e: &CExpr) -> bool {
        match e {
            CExpr::ConstUnit => true,
            CExpr::Var(x) => self.units.contains(x),
            _ => false,
        }
    }

    fn stmts(&mut self, ss: &[CStmt]) -> Result<(), EmitError> {
        let mut consumed = BTreeSet::new();
        for (i, s) in ss.iter().enumerate() {
            if consumed.contains(&i) {
                continue;
            }
            match s {
                CStmt::VarDecl(t, x, e) => {
                    if *t == Ty::Unit {
                        self.units.insert(x.clone());
                        continue;
                    }
                    check_ident(x)?;
                    let l = format!("{} {x} = {};", self.types.c_ty(t)?, self.expr(e)?);
                    self.line(&l);
                }
                CStmt::ArrDecl(t, x, n) => {
                    check_ident(x)?;
                    if *t == Ty::Unit {
                        return Err(EmitError::NotFullyLowered(format!("array `{x}` of unit")));
                    }
                    let ct = self.types.c_ty(&t.content())?;
                    if let Some(j) = zero_fill(ss, i, x, *n, &consumed) {
                        consumed.insert(j);
                        self.line(&format!("{ct} {x}[{n}] = {{ 0 }};"));
                        for k in 0..*n {
                            self.annot("WRITE", &format!("{x} + {k}"));
                        }
                    } else {
                        self.line(&format!("{ct} {x}[{n}];"));
                    }
                }
                CStmt::Memset(p, n, v) => {
                    let (p, v) = (self.expr(p)?, self.expr(v)?);
                    self.line(&format!("for (uint32_t _i = 0; _i < {n}U; _i++) {{"));
                    self.level += 1;
                    self.annot("WRITE", &format!("{p} + _i"));
                    self.line(&format!("{p}[_i] = {v};"));
                    self.level -= 1;
                    self.line("}");
                }
                CStmt::Call { ty, dst, f, args } => {
                    check_ident(f)?;
                    let ptys = self.sigs.get(f).ok_or_else(|| EmitError::NotFullyLowered(format!("unknown function `{f}`")))?;
                    let mut cargs = vec![];
                    for (k, a) in args.iter().enumerate() {
                        if ptys.get(k) == Some(&Ty::Unit) {
                            continue;
                        }
                        cargs.push(self.expr(a)?);
                    }
                    let call = format!("{f}({})", cargs.join(", "));
                    match dst {
                        Some(x) if *ty != Ty::Unit => {
                            check_ident(x)?;
                            let l = format!("{} {x} = {call};", self.types.c_ty(ty)?);
                            self.line(&l);
                        }
                        Some(x) => {
                            self.units.insert(x.clone());
                            self.line(&format!("{call};"));
                        }
                        None => self.line(&format!("{call};")),
                    }
                }
                CStmt::ReadStmt(t, x, p) => {
                    check_ident(x)?;
                    let ptr = self.expr(p)?;
                    self.annot("READ", &ptr);
                    let l = format!("{} {x} = {};", self.types.c_ty(t)?, self.deref(p)?);
                    self.line(&l);
                }
                CStmt::WriteStmt(p, v) => {
                    let ptr = self.expr(p)?;
                    self.annot("WRITE", &ptr);
                    let l = format!("{} = {};", self.deref(p)?, self.expr(v)?);
                    self.line(&l);
                }
                CStmt::IfStmt(c, a, b) => {
                    let c = self.expr(c)?;
                    self.annot("BR", &c);
                    self.line(&format!("if ({c}) {{"));
                    self.level += 1;
                    self.stmts(a)?;
                    self.level -= 1;
                    if b.iter().any(|s| !matches!(s, CStmt::ExprStmt(_))) {
                        self.line("} else {");
                        self.level += 1;
                        self.stmts(b)?;
                        self.level -= 1;
                    }
                    self.line("}");
                }
                CStmt::Block(inner) => {
                    self.line("{");
                    self.level += 1;
                    self.stmts(inner)?;
                    self.level -= 1;
                    self.line("}");
                }
                CStmt::ExprStmt(_) => {}
                CStmt::Return(e) => {
                    if self.in_main {
                        if !self.is_unit_expr(e) {
                            let v = self.expr(e)?;
                            self.line(&format!("printf(\"%\" PRId32 \"\\n\", (int32_t){v});"));
                        }
                        self.line("return 0;");
                    } else if self.ret_unit {
                        self.line("return;");
                    } else {
                        let v = self.expr(e)?;
                        self.line(&format!("return {v};"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn prototype(f: &CFun, types: &Types) -> Result<String, EmitError> {
    check_ident(&f.name)?;
    if f.ret.is_record() {
        return Err(EmitError::NotFullyLowered(format!("`{}` returns a struct", f.name)));
    }
    let ret = types.c_ty(&f.ret)?;
    let mut ps = vec![];
    for (x, t) in &f.params {
        if *t == Ty::Unit {
            continue;
        }
        if t.is_record() {
            return Err(EmitError::NotFullyLowered(format!("struct parameter `{x}` of `{}`", f.name)));
        }
        check_ident(x)?;
        ps.push(format!("{} {x}", types.c_ty(t)?));
    }
    let ps = if ps.is_empty() { "void".to_string() } else { ps.join(", ") };
    Ok(format!("{ret} {}({ps})", f.name))
}

fn c_value(v: &Value) -> Result<String, EmitError> {
    match v {
        Value::IntV(n) if *n == i32::MIN => Ok("(-2147483647 - 1)".into()),
        Value::IntV(n) => Ok(n.to_string()),
        _ => Err(EmitError::NotFullyLowered(format!("global of value {v}"))),
    }
}

fn prepare<'a>(p: &CProgram, entry: &[CStmt], cfg: &'a EmitConfig) -> Result<Types<'a>, EmitError> {
    let mut types = Types { abstract_types: &cfg.abstract_types, names: HashMap::new(), defs: vec![] };
    collect_types(p, entry, &mut types)?;
    Ok(types)
}

fn guard(name: &str) -> String {
    let g: String = name.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' }).collect();
    format!("KREMLITE_{g}_H")
}

pub fn emit_header(p: &CProgram, entry: &[CStmt], cfg: &EmitConfig) -> Result<String, EmitError> {
    let types = prepare(p, entry, cfg)?;
    let g = guard(&cfg.name);
    let mut out = format!("#ifndef {g}\n#define {g}\n\n#include <stdint.h>\n");
    if cfg.annotations {
        let _ = writeln!(out, "#include \"{ANNOT_HEADER_NAME}\"");
    }
    let mut body = String::new();
    for d in &types.defs {
        let _ = writeln!(body, "{d}\n");
    }
    for d in &p.decls {
        match d {
            CDecl::Val { name, ty, .. } => {
                check_ident(name)?;
                let _ = writeln!(body, "extern const {} {name};", types.c_ty(ty)?);
            }
            CDecl::Fun(f) => {
                let _ = writeln!(body, "{};", prototype(f, &types)?);
            }
        }
    }
    for (y, t) in &cfg.secret_params {
        check_ident(y)?;
        let _ = writeln!(body, "extern {} get_{y}(void);", types.c_ty(t)?);
    }
    if !body.is_empty() {
        out.push('\n');
        out.push_str(&body);
    }
    let _ = write!(out, "\n#endif\n");
    Ok(out)
}

pub fn emit_c(p: &CProgram, entry: &[CStmt], cfg: &EmitConfig) -> Result<String, EmitError> {
    let types = prepare(p, entry, cfg)?;
    let sigs: HashMap<Name, Vec<Ty>> =
        p.funs().map(|f| (f.name.clone(), f.params.iter().map(|(_, t)| t.clone()).collect())).collect();
    let mut em = Emitter {
        cfg,
        types: &types,
        sigs: &sigs,
        out: String::new(),
        level: 0,
        units: BTreeSet::new(),
        secrets: cfg.secret_params.iter().map(|(y, _)| y.clone()).collect(),
        in_main: false,
        ret_unit: false,
    };
    if !entry.is_empty() {
        em.line("#include <inttypes.h>");
        em.line("#include <stdio.h>");
    }
    em.line(&format!("#include \"{}.h\"", cfg.name));
    for d in &p.decls {
        match d {
            CDecl::Val { name, ty, value } => {
                em.line("");
                em.line(&format!("const {} {name} = {};", types.c_ty(ty)?, c_value(value)?));
            }
            CDecl::Fun(f) => {
                em.line("");
                em.line(&format!("{} {{", prototype(f, &types)?));
                em.level = 1;
                em.units = f.params.iter().filter(|(_, t)| *t == Ty::Unit).map(|(x, _)| x.clone()).collect();
                em.ret_unit = f.ret == Ty::Unit;
                flatten_body(&mut em, &f.body)?;
                em.level = 0;
                em.line("}");
            }
        }
    }
    if !entry.is_empty() {
        let globals = crate::passes::free_vars(entry, &global_set(p));
        if let Some(y) = globals.iter().find(|y| !em.secrets.contains(*y)) {
            return Err(EmitError::NotFullyLowered(format!("entry variable `{y}` has no getter")));
        }
        em.line("");
        em.line("int main(void) {");
        em.level = 1;
        em.in_main = true;
        em.units.clear();
        for (y, t) in &cfg.secret_params {
            let l = format!("{} _{y} = get_{y}();", types.c_ty(t)?);
            em.line(&l);
        }
        let rest = match entry {
            [CStmt::Block(inner)] => inner.as_slice(),
            ss => ss,
        };
        em.stmts(rest)?;
        if !matches!(rest.last(), Some(CStmt::Return(_))) {
            em.line("return 0;");
        }
        em.level = 0;
        em.line("}");
    }
    Ok(em.out)
}

/// Index of the memset zero-filling the array declared at `i`, when only
/// declarations and placeholders separate the two.
fn zero_fill(ss: &[CStmt], i: usize, x: &str, n: u32, consumed: &BTreeSet<usize>) -> Option<usize> {
    for (j, s) in ss.iter().enumerate().skip(i + 1) {
        match s {
            CStmt::Memset(CExpr::Var(y), m, CExpr::ConstInt(0)) if y == x && *m == n => return Some(j),
            CStmt::ArrDecl(..) | CStmt::ExprStmt(CExpr::ConstUnit) => {}
            _ if consumed.contains(&j) => {}
            _ => return None,
        }
    }
    None
}

/// A body that is a single block is emitted as the function's own braces.
fn flatten_body(em: &mut Emitter, body: &[CStmt]) -> Result<(), EmitError> {
    match body {
        [CStmt::Block(inner)] => em.stmts(inner),
        ss => em.stmts(ss),
    }
}

fn global_set(p: &CProgram) -> BTreeSet<Name> {
    p.decls
        .iter()
        .filter_map(|d| match d {
            CDecl::Val { name, .. } => Some(name.clone()),
            _ => None,
        })
        .collect()
}
