//! Shared syntax: types, both abstract syntaxes, values, locations and trace
//! events, plus the surface parser and the pretty-printers.

use serde::{Deserialize, Serialize};
use std::fmt;

mod parse;
mod pretty;

pub(crate) use parse::Parser;
pub use parse::{parse_expr, parse_program, parse_ty, parse_value, Lexer, SyntaxError, Tok, Token};
pub use pretty::{
    pretty_cexpr, pretty_cstar, pretty_cstmts, pretty_lexpr, pretty_lexpr_internal, pretty_lowstar,
    pretty_ty, pretty_value, InternalConstructError,
};

pub type Name = String;
pub type BlockId = u64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ty {
    Int,
    Unit,
    Record(Vec<(Name, Ty)>),
    Buf(Box<Ty>),
    MutStruct(Vec<(Name, Ty)>),
    Abstract(Name),
}

impl Ty {
    pub fn buf(t: Ty) -> Ty {
        Ty::Buf(Box::new(t))
    }

    /// What a memory cell of this declared type holds. Nested mutable structs
    /// are stored inline, so their contents are plain records.
    pub fn content(&self) -> Ty {
        match self {
            Ty::MutStruct(fds) => {
                Ty::Record(fds.iter().map(|(f, t)| (f.clone(), t.content())).collect())
            }
            t => t.clone(),
        }
    }

    pub fn field(&self, fd: &str) -> Option<&Ty> {
        match self {
            Ty::Record(fds) | Ty::MutStruct(fds) => fds.iter().find(|(f, _)| f == fd).map(|(_, t)| t),
            _ => None,
        }
    }

    /// Type found by walking a field path into a cell of content type `self`.
    pub fn at_path(&self, path: &[Name]) -> Option<Ty> {
        let mut t = self.clone();
        for fd in path {
            t = t.field(fd)?.clone();
        }
        Some(t)
    }

    pub fn is_record(&self) -> bool {
        matches!(self, Ty::Record(_))
    }

    pub fn mentions_abstract(&self) -> bool {
        match self {
            Ty::Abstract(_) => true,
            Ty::Int | Ty::Unit => false,
            Ty::Buf(t) => t.mentions_abstract(),
            Ty::Record(fds) | Ty::MutStruct(fds) => fds.iter().any(|(_, t)| t.mentions_abstract()),
        }
    }

    /// Replace abstract type names using `delta`.
    pub fn expand(&self, delta: &dyn Fn(&str) -> Option<Ty>) -> Ty {
        match self {
            Ty::Abstract(n) => delta(n).unwrap_or_else(|| self.clone()),
            Ty::Int | Ty::Unit => self.clone(),
            Ty::Buf(t) => Ty::buf(t.expand(delta)),
            Ty::Record(fds) => Ty::Record(fds.iter().map(|(f, t)| (f.clone(), t.expand(delta))).collect()),
            Ty::MutStruct(fds) => {
                Ty::MutStruct(fds.iter().map(|(f, t)| (f.clone(), t.expand(delta))).collect())
            }
        }
    }

    /// Validity: distinct, non-empty field lists everywhere.
    pub fn check_valid(&self) -> Result<(), String> {
        match self {
            Ty::Int | Ty::Unit | Ty::Abstract(_) => Ok(()),
            Ty::Buf(t) => t.check_valid(),
            Ty::Record(fds) | Ty::MutStruct(fds) => {
                if fds.is_empty() {
                    return Err(format!("empty field list in {self}"));
                }
                for (i, (f, t)) in fds.iter().enumerate() {
                    if fds[..i].iter().any(|(g, _)| g == f) {
                        return Err(format!("duplicate field `{f}` in {self}"));
                    }
                    t.check_valid()?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_ty(self))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrimOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Lt,
    Eq,
}

impl PrimOp {
    pub const ALL: [PrimOp; 8] =
        [PrimOp::Add, PrimOp::Sub, PrimOp::Mul, PrimOp::And, PrimOp::Or, PrimOp::Xor, PrimOp::Lt, PrimOp::Eq];

    pub fn apply(self, a: i32, b: i32) -> i32 {
        match self {
            PrimOp::Add => a.wrapping_add(b),
            PrimOp::Sub => a.wrapping_sub(b),
            PrimOp::Mul => a.wrapping_mul(b),
            PrimOp::And => a & b,
            PrimOp::Or => a | b,
            PrimOp::Xor => a ^ b,
            PrimOp::Lt => (a < b) as i32,
            PrimOp::Eq => (a == b) as i32,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            PrimOp::Add => "+",
            PrimOp::Sub => "-",
            PrimOp::Mul => "*",
            PrimOp::And => "&",
            PrimOp::Or => "|",
            PrimOp::Xor => "^",
            PrimOp::Lt => "<",
            PrimOp::Eq => "==",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn level(self) -> u8 {
        match self {
            PrimOp::Lt | PrimOp::Eq => 1,
            PrimOp::Or => 2,
            PrimOp::Xor => 3,
            PrimOp::And => 4,
            PrimOp::Add | PrimOp::Sub => 5,
            PrimOp::Mul => 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Loc {
    pub block: BlockId,
    pub offset: i64,
    pub path: Vec<Name>,
}

impl Loc {
    pub fn new(block: BlockId, offset: i64) -> Loc {
        Loc { block, offset, path: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Value {
    IntV(i32),
    UnitV,
    RecordV(Vec<(Name, Value)>),
    LocV(Loc),
    Undef,
}

impl Value {
    pub fn field(&self, fd: &str) -> Option<&Value> {
        match self {
            Value::RecordV(fs) => fs.iter().find(|(f, _)| f == fd).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn contains_undef(&self) -> bool {
        match self {
            Value::Undef => true,
            Value::RecordV(fs) => fs.iter().any(|(_, v)| v.contains_undef()),
            _ => false,
        }
    }

    /// The uninitialized cell for content type `t`: records keep their shape so
    /// individual fields can be written before the whole is read.
    pub fn undef_of(t: &Ty) -> Value {
        match t {
            Ty::Record(fds) => Value::RecordV(fds.iter().map(|(f, t)| (f.clone(), Value::undef_of(t))).collect()),
            _ => Value::Undef,
        }
    }

    pub fn to_lexpr(&self) -> LExpr {
        match self {
            Value::IntV(n) => LExpr::ConstInt(*n),
            Value::UnitV | Value::Undef => LExpr::ConstUnit,
            Value::RecordV(fs) => LExpr::RecordLit(fs.iter().map(|(f, v)| (f.clone(), v.to_lexpr())).collect()),
            Value::LocV(l) => LExpr::Loc(l.block, l.offset, l.path.clone()),
        }
    }

    pub fn to_cexpr(&self) -> CExpr {
        match self {
            Value::IntV(n) => CExpr::ConstInt(*n),
            Value::UnitV | Value::Undef => CExpr::ConstUnit,
            Value::RecordV(fs) => CExpr::RecordLit(fs.iter().map(|(f, v)| (f.clone(), v.to_cexpr())).collect()),
            Value::LocV(l) => CExpr::Loc(l.block, l.offset, l.path.clone()),
        }
    }

    /// Best-effort type of a value; locations have no recoverable element type.
    pub fn ty_of(&self) -> Option<Ty> {
        match self {
            Value::IntV(_) => Some(Ty::Int),
            Value::UnitV => Some(Ty::Unit),
            Value::RecordV(fs) => {
                let mut out = Vec::new();
                for (f, v) in fs {
                    out.push((f.clone(), v.ty_of()?));
                }
                Some(Ty::Record(out))
            }
            Value::LocV(_) | Value::Undef => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_value(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LExpr {
    ConstInt(i32),
    ConstUnit,
    Var(Name),
    RecordLit(Vec<(Name, LExpr)>),
    Proj(Box<LExpr>, Name),
    StructField(Box<LExpr>, Name),
    SubBuf(Box<LExpr>, Box<LExpr>),
    If(Box<LExpr>, Box<LExpr>, Box<LExpr>),
    Let(Name, Ty, Box<LExpr>, Box<LExpr>),
    LetAnon(Box<LExpr>, Box<LExpr>),
    /// `let x : t = f arg in body`
    App(Name, Ty, Name, Box<LExpr>, Box<LExpr>),
    /// `let x = newbuf n (init : t) in body`
    NewBuf(Name, u32, Box<LExpr>, Ty, Box<LExpr>),
    /// `let x : t = readbuf e1 e2 in body`
    ReadBuf(Name, Ty, Box<LExpr>, Box<LExpr>, Box<LExpr>),
    WriteBuf(Box<LExpr>, Box<LExpr>, Box<LExpr>, Box<LExpr>),
    /// `let x = newstruct (init : t) in body`, `t` a mutable struct type
    NewStruct(Name, Box<LExpr>, Ty, Box<LExpr>),
    ReadStruct(Name, Ty, Box<LExpr>, Box<LExpr>),
    WriteStruct(Box<LExpr>, Box<LExpr>, Box<LExpr>),
    WithFrame(Box<LExpr>),
    Pop(Box<LExpr>),
    Loc(BlockId, i64, Vec<Name>),
    PrimOp(PrimOp, Box<LExpr>, Box<LExpr>),
}

/// Shorthand constructors, mostly for tests and the generator.
pub mod lx {
    use super::*;

    pub fn int(n: i32) -> LExpr {
        LExpr::ConstInt(n)
    }
    pub fn unit() -> LExpr {
        LExpr::ConstUnit
    }
    pub fn var(x: &str) -> LExpr {
        LExpr::Var(x.into())
    }
    pub fn prim(op: PrimOp, a: LExpr, b: LExpr) -> LExpr {
        LExpr::PrimOp(op, Box::new(a), Box::new(b))
    }
    pub fn proj(e: LExpr, fd: &str) -> LExpr {
        LExpr::Proj(Box::new(e), fd.into())
    }
    pub fn record(fs: Vec<(&str, LExpr)>) -> LExpr {
        LExpr::RecordLit(fs.into_iter().map(|(f, e)| (f.to_string(), e)).collect())
    }
    pub fn withframe(e: LExpr) -> LExpr {
        LExpr::WithFrame(Box::new(e))
    }
    pub fn let_(x: &str, t: Ty, e: LExpr, body: LExpr) -> LExpr {
        LExpr::Let(x.into(), t, Box::new(e), Box::new(body))
    }
    pub fn seq(e: LExpr, body: LExpr) -> LExpr {
        LExpr::LetAnon(Box::new(e), Box::new(body))
    }
    pub fn if_(c: LExpr, a: LExpr, b: LExpr) -> LExpr {
        LExpr::If(Box::new(c), Box::new(a), Box::new(b))
    }
    pub fn newbuf(x: &str, n: u32, init: LExpr, t: Ty, body: LExpr) -> LExpr {
        LExpr::NewBuf(x.into(), n, Box::new(init), t, Box::new(body))
    }
    pub fn readbuf(x: &str, t: Ty, b: LExpr, i: LExpr, body: LExpr) -> LExpr {
        LExpr::ReadBuf(x.into(), t, Box::new(b), Box::new(i), Box::new(body))
    }
    pub fn writebuf(b: LExpr, i: LExpr, v: LExpr, body: LExpr) -> LExpr {
        LExpr::WriteBuf(Box::new(b), Box::new(i), Box::new(v), Box::new(body))
    }
    pub fn app(x: &str, t: Ty, f: &str, arg: LExpr, body: LExpr) -> LExpr {
        LExpr::App(x.into(), t, f.into(), Box::new(arg), Box::new(body))
    }
}

impl LExpr {
    pub fn is_value(&self) -> bool {
        match self {
            LExpr::ConstInt(_) | LExpr::ConstUnit | LExpr::Loc(..) => true,
            LExpr::RecordLit(fs) => fs.iter().all(|(_, e)| e.is_value()),
            _ => false,
        }
    }

    pub fn as_value(&self) -> Option<Value> {
        match self {
            LExpr::ConstInt(n) => Some(Value::IntV(*n)),
            LExpr::ConstUnit => Some(Value::UnitV),
            LExpr::Loc(b, n, p) => Some(Value::LocV(Loc { block: *b, offset: *n, path: p.clone() })),
            LExpr::RecordLit(fs) => {
                let mut out = Vec::with_capacity(fs.len());
                for (f, e) in fs {
                    out.push((f.clone(), e.as_value()?));
                }
                Some(Value::RecordV(out))
            }
            _ => None,
        }
    }

    /// True when the term contains `Pop` or `Loc`.
    pub fn has_internal(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, LExpr::Pop(_) | LExpr::Loc(..)) {
                found = true;
            }
        });
        found
    }

    /// Pre-order traversal.
    pub fn walk(&self, f: &mut dyn FnMut(&LExpr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn children(&self) -> Vec<&LExpr> {
        use LExpr::*;
        match self {
            ConstInt(_) | ConstUnit | Var(_) | Loc(..) => vec![],
            RecordLit(fs) => fs.iter().map(|(_, e)| e).collect(),
            Proj(e, _) | StructField(e, _) | WithFrame(e) | Pop(e) => vec![e],
            SubBuf(a, b) | PrimOp(_, a, b) | Let(_, _, a, b) | LetAnon(a, b) | App(_, _, _, a, b) => vec![a, b],
            If(a, b, c) | ReadBuf(_, _, a, b, c) | WriteStruct(a, b, c) => vec![a, b, c],
            NewBuf(_, _, a, _, b) | NewStruct(_, a, _, b) | ReadStruct(_, _, a, b) => vec![a, b],
            WriteBuf(a, b, c, d) => vec![a, b, c, d],
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LDecl {
    Fun { name: Name, param: Name, param_ty: Ty, ret_ty: Ty, body: LExpr },
    Val { name: Name, ty: Ty, value: Value },
}

impl LDecl {
    pub fn name(&self) -> &str {
        match self {
            LDecl::Fun { name, .. } | LDecl::Val { name, .. } => name,
        }
    }
}

/// A source file: declarations plus an optional entry expression.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LProgram {
    pub decls: Vec<LDecl>,
    pub entry: Option<LExpr>,
}

impl LProgram {
    pub fn fun(&self, f: &str) -> Option<(&Name, &Ty, &Ty, &LExpr)> {
        self.decls.iter().find_map(|d| match d {
            LDecl::Fun { name, param, param_ty, ret_ty, body } if name == f => Some((param, param_ty, ret_ty, body)),
            _ => None,
        })
    }

    pub fn globals(&self) -> Vec<(&Name, &Value)> {
        self.decls
            .iter()
            .filter_map(|d| match d {
                LDecl::Val { name, value, .. } => Some((name, value)),
                _ => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CExpr {
    ConstInt(i32),
    ConstUnit,
    Var(Name),
    PtrAdd(Box<CExpr>, Box<CExpr>),
    RecordLit(Vec<(Name, CExpr)>),
    Proj(Box<CExpr>, Name),
    PtrField(Box<CExpr>, Name),
    Loc(BlockId, i64, Vec<Name>),
    PrimOp(PrimOp, Box<CExpr>, Box<CExpr>),
}

impl CExpr {
    pub fn var(x: &str) -> CExpr {
        CExpr::Var(x.into())
    }

    pub fn walk(&self, f: &mut dyn FnMut(&CExpr)) {
        f(self);
        match self {
            CExpr::PtrAdd(a, b) | CExpr::PrimOp(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            CExpr::RecordLit(fs) => fs.iter().for_each(|(_, e)| e.walk(f)),
            CExpr::Proj(e, _) | CExpr::PtrField(e, _) => e.walk(f),
            _ => {}
        }
    }

    pub fn vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let CExpr::Var(x) = e {
                out.push(x.clone());
            }
        });
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CStmt {
    VarDecl(Ty, Name, CExpr),
    ArrDecl(Ty, Name, u32),
    Memset(CExpr, u32, CExpr),
    /// `t x = f(args)`, or `f(args)` with the result discarded when `dst` is `None`.
    Call { ty: Ty, dst: Option<Name>, f: Name, args: Vec<CExpr> },
    ReadStmt(Ty, Name, CExpr),
    WriteStmt(CExpr, CExpr),
    IfStmt(CExpr, Vec<CStmt>, Vec<CStmt>),
    Block(Vec<CStmt>),
    ExprStmt(CExpr),
    Return(CExpr),
}

impl CStmt {
    /// Pre-order traversal over statements, descending into blocks and branches.
    pub fn walk(&self, f: &mut dyn FnMut(&CStmt)) {
        f(self);
        match self {
            CStmt::IfStmt(_, a, b) => {
                a.iter().for_each(|s| s.walk(f));
                b.iter().for_each(|s| s.walk(f));
            }
            CStmt::Block(ss) => ss.iter().for_each(|s| s.walk(f)),
            _ => {}
        }
    }

    /// Expressions directly held by this statement.
    pub fn exprs(&self) -> Vec<&CExpr> {
        match self {
            CStmt::VarDecl(_, _, e) | CStmt::ReadStmt(_, _, e) | CStmt::ExprStmt(e) | CStmt::Return(e) => vec![e],
            CStmt::Memset(a, _, b) | CStmt::WriteStmt(a, b) => vec![a, b],
            CStmt::Call { args, .. } => args.iter().collect(),
            CStmt::IfStmt(c, _, _) => vec![c],
            CStmt::ArrDecl(..) | CStmt::Block(_) => vec![],
        }
    }

    /// Name declared by this statement, if any.
    pub fn declared(&self) -> Option<&Name> {
        match self {
            CStmt::VarDecl(_, x, _) | CStmt::ArrDecl(_, x, _) | CStmt::ReadStmt(_, x, _) => Some(x),
            CStmt::Call { dst: Some(x), .. } => Some(x),
            _ => None,
        }
    }
}

pub fn walk_stmts(ss: &[CStmt], f: &mut dyn FnMut(&CStmt)) {
    for s in ss {
        s.walk(f);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CFun {
    pub name: Name,
    pub params: Vec<(Name, Ty)>,
    pub ret: Ty,
    pub body: Vec<CStmt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CDecl {
    Fun(CFun),
    Val { name: Name, ty: Ty, value: Value },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CProgram {
    pub decls: Vec<CDecl>,
}

impl CProgram {
    pub fn fun(&self, f: &str) -> Option<&CFun> {
        self.decls.iter().find_map(|d| match d {
            CDecl::Fun(fun) if fun.name == f => Some(fun),
            _ => None,
        })
    }

    pub fn funs(&self) -> impl Iterator<Item = &CFun> {
        self.decls.iter().filter_map(|d| match d {
            CDecl::Fun(f) => Some(f),
            _ => None,
        })
    }

    pub fn funs_mut(&mut self) -> impl Iterator<Item = &mut CFun> {
        self.decls.iter_mut().filter_map(|d| match d {
            CDecl::Fun(f) => Some(f),
            _ => None,
        })
    }

    pub fn global(&self, x: &str) -> Option<&Value> {
        self.decls.iter().find_map(|d| match d {
            CDecl::Val { name, value, .. } if name == x => Some(value),
            _ => None,
        })
    }
}

// ---------------------------------------------------------------------------
// Traces

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Read,
    Write,
    BrT,
    BrF,
}

/// Owner of an abstract location: a function, or the entry statements.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FnRef {
    Entry,
    Fun(Name),
}

impl fmt::Display for FnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FnRef::Entry => f.write_str("@entry"),
            FnRef::Fun(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocationLabel {
    Concrete { block: BlockId, offset: i64, path: Vec<Name> },
    AbstractVar { func: FnRef, depth: u32, var: Name, offset: i64, path: Vec<Name> },
}

impl LocationLabel {
    pub fn path(&self) -> &[Name] {
        match self {
            LocationLabel::Concrete { path, .. } | LocationLabel::AbstractVar { path, .. } => path,
        }
    }

    pub fn with_field(&self, fd: &str) -> LocationLabel {
        let mut l = self.clone();
        match &mut l {
            LocationLabel::Concrete { path, .. } | LocationLabel::AbstractVar { path, .. } => path.push(fd.into()),
        }
        l
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub kind: EventKind,
    pub loc: Option<LocationLabel>,
    pub elem_ty: Option<Ty>,
}

pub type Trace = Vec<TraceEvent>;

impl TraceEvent {
    pub fn read(loc: LocationLabel, ty: Ty) -> TraceEvent {
        TraceEvent { kind: EventKind::Read, loc: Some(loc), elem_ty: Some(ty) }
    }
    pub fn write(loc: LocationLabel, ty: Ty) -> TraceEvent {
        TraceEvent { kind: EventKind::Write, loc: Some(loc), elem_ty: Some(ty) }
    }
    pub fn branch(taken: bool) -> TraceEvent {
        let kind = if taken { EventKind::BrT } else { EventKind::BrF };
        TraceEvent { kind, loc: None, elem_ty: None }
    }
    pub fn concrete(kind: EventKind, block: BlockId, offset: i64, path: Vec<Name>, ty: Ty) -> TraceEvent {
        TraceEvent { kind, loc: Some(LocationLabel::Concrete { block, offset, path }), elem_ty: Some(ty) }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::{json, Map, Value as J};
        let ev = match self.kind {
            EventKind::Read => "read",
            EventKind::Write => "write",
            EventKind::BrT => "brT",
            EventKind::BrF => "brF",
        };
        let mut m = Map::new();
        m.insert("ev".into(), json!(ev));
        match &self.loc {
            Some(LocationLabel::Concrete { block, offset, path }) => {
                m.insert("b".into(), json!(block));
                m.insert("n".into(), json!(offset));
                m.insert("fds".into(), json!(path));
            }
            Some(LocationLabel::AbstractVar { func, depth, var, offset, path }) => {
                m.insert("fn".into(), json!(func.to_string()));
                m.insert("depth".into(), json!(depth));
                m.insert("var".into(), json!(var));
                m.insert("n".into(), json!(offset));
                m.insert("fds".into(), json!(path));
            }
            None => {}
        }
        if let Some(t) = &self.elem_ty {
            m.insert("ty".into(), J::String(t.to_string()));
        }
        J::Object(m)
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = |l: &LocationLabel| match l {
            LocationLabel::Concrete { block, offset, path } => format!("b{block},{offset},[{}]", path.join(".")),
            LocationLabel::AbstractVar { func, depth, var, offset, path } => {
                format!("{func}#{depth}:{var},{offset},[{}]", path.join("."))
            }
        };
        match (self.kind, &self.loc) {
            (EventKind::BrT, _) => f.write_str("brT"),
            (EventKind::BrF, _) => f.write_str("brF"),
            (EventKind::Read, Some(l)) => write!(f, "read({})", loc(l)),
            (EventKind::Write, Some(l)) => write!(f, "write({})", loc(l)),
            (k, None) => write!(f, "{k:?}(?)"),
        }
    }
}

/// One JSON object per line.
pub fn trace_to_jsonl(t: &[TraceEvent]) -> String {
    let mut s = String::new();
    for e in t {
        s.push_str(&e.to_json().to_string());
        s.push('\n');
    }
    s
}

pub fn trace_to_json(t: &[TraceEvent]) -> serde_json::Value {
    serde_json::Value::Array(t.iter().map(TraceEvent::to_json).collect())
}

/// Versioned, constructor-tagged JSON document for tooling.
pub fn lowstar_to_json(p: &LProgram) -> String {
    serde_json::to_string_pretty(&serde_json::json!({ "version": 1, "lowstar": p })).expect("serializable")
}

pub fn cstar_to_json(p: &CProgram, entry: &[CStmt]) -> String {
    serde_json::to_string_pretty(&serde_json::json!({ "version": 1, "cstar": p, "entry": entry }))
        .expect("serializable")
}

pub fn lowstar_from_json(s: &str) -> Result<LProgram, serde_json::Error> {
    #[derive(Deserialize)]
    struct Doc {
        version: u32,
        lowstar: LProgram,
    }
    let d: Doc = serde_json::from_str(s)?;
    if d.version != 1 {
        return Err(serde::de::Error::custom(format!("unsupported version {}", d.version)));
    }
    Ok(d.lowstar)
}

#[cfg(test)]
mod tests;

// ---------------------------------------------------------------------------
// Outcomes

/// Big-stepped behaviour of a fuel-bounded run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Terminates { value: Value, trace: Trace },
    GoesWrong { trace: Trace, diag: String },
    Timeout { trace: Trace },
}

impl Outcome {
    pub fn trace(&self) -> &Trace {
        match self {
            Outcome::Terminates { trace, .. } | Outcome::GoesWrong { trace, .. } | Outcome::Timeout { trace } => trace,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::Terminates { .. } => "terminates",
            Outcome::GoesWrong { .. } => "goes_wrong",
            Outcome::Timeout { .. } => "timeout",
        }
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            Outcome::Terminates { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        m.insert("kind".into(), self.kind().into());
        match self {
            Outcome::Terminates { value, .. } => {
                m.insert("value".into(), value.to_string().into());
            }
            Outcome::GoesWrong { diag, .. } => {
                m.insert("diagnostic".into(), diag.clone().into());
            }
            Outcome::Timeout { .. } => {}
        }
        m.insert("events".into(), self.trace().len().into());
        m.insert("trace".into(), trace_to_json(self.trace()));
        serde_json::Value::Object(m)
    }
}
