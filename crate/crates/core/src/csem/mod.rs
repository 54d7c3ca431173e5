//! The C* abstract machine: pure expression evaluation, small-step statement
//! reduction over a stack of call and block frames, and the four event models.

use crate::ast::{
    BlockId, CExpr, CFun, CProgram, CStmt, EventKind, FnRef, Loc, LocationLabel, Name, Outcome, TraceEvent, Ty,
    Value,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVar(Name),
    #[error("projection `.{0}` on a non-record")]
    ProjOnNonRecord(Name),
    #[error("pointer arithmetic on a non-location")]
    PtrAddOnNonLoc,
    #[error("pointer arithmetic on a field location")]
    FieldOnNonEmptyMismatch,
    #[error("operator applied to non-integers")]
    NonIntOperand,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CStuck {
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("dead block {0}")]
    DeadBlock(BlockId),
    #[error("out of bounds: block {block} offset {offset}")]
    OutOfBounds { block: BlockId, offset: i64 },
    #[error("read of uninitialized memory in block {0}")]
    UninitializedRead(BlockId),
    #[error("bad field path {0:?}")]
    BadFieldPath(Vec<Name>),
    #[error("memset through a field location")]
    MemsetWithFieldPath,
    #[error("memory access through a non-location")]
    NotALocation,
    #[error("array declaration outside a block")]
    ArrDeclOutsideBlock,
    #[error("unbound function `{0}`")]
    UnboundFunction(Name),
    #[error("`{0}` called with the wrong number of arguments")]
    ArityMismatch(Name),
    #[error("return at empty stack with statements left")]
    ReturnAtEmptyStack,
    #[error("branch on a value that is neither an integer nor a location")]
    BadCondition,
    #[error("function body finished without returning")]
    FellOffFunction,
    #[error("entry finished without returning")]
    NoReturn,
    #[error("block {0} not found in any frame")]
    BlockNotFound(BlockId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventModel {
    Concrete,
    AbstractC3,
    AbstractC4,
    AbstractC5,
}

impl std::str::FromStr for EventModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "concrete" => Ok(EventModel::Concrete),
            "c3" | "abstractc3" => Ok(EventModel::AbstractC3),
            "c4" | "abstractc4" => Ok(EventModel::AbstractC4),
            "c5" | "abstractc5" => Ok(EventModel::AbstractC5),
            _ => Err(format!("unknown event model `{s}` (concrete, c3, c4, c5)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CBlock {
    pub ty: Ty,
    pub cells: Vec<Value>,
}

pub type Vars = HashMap<Name, Value>;

/// Continuations keep their statements in execution order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cont {
    Discard(Vec<CStmt>),
    /// `t x = □; ss` for calls; `x` is `None` when the result is dropped.
    Receive(Ty, Option<Name>, Vec<CStmt>),
}

#[derive(Clone, Debug)]
pub struct CFrame {
    pub mem: Option<BTreeMap<BlockId, CBlock>>,
    pub saved_vars: Vars,
    pub cont: Cont,
    pub enrich_fn: FnRef,
    pub enrich_arrays: BTreeSet<Name>,
    /// For block frames: call frames of `enrich_fn` below this one.
    pub depth: u32,
}

#[derive(Clone, Debug)]
pub struct CConfig {
    pub stack: Vec<CFrame>,
    pub vars: Vars,
    /// Pending statements, next one last.
    rev_stmts: Vec<CStmt>,
    pub enrich_fn: FnRef,
    pub enrich_arrays: BTreeSet<Name>,
    pub counter: BlockId,
    pub model: EventModel,
    owner: HashMap<BlockId, usize>,
    calls: HashMap<FnRef, u32>,
}

pub enum CStep {
    Stepped(Vec<TraceEvent>),
    Done(Value),
    Stuck(CStuck),
}

/// Program prepared for execution.
pub struct CCode {
    funs: HashMap<Name, Rc<CFun>>,
    globals: HashMap<Name, Value>,
    res_vars: HashMap<(FnRef, Name), Name>,
}

/// All identifiers a function mentions: parameters, declarations, uses.
pub fn names_in(params: &[(Name, Ty)], body: &[CStmt]) -> BTreeSet<Name> {
    let mut out: BTreeSet<Name> = params.iter().map(|(x, _)| x.clone()).collect();
    crate::ast::walk_stmts(body, &mut |s| {
        if let Some(x) = s.declared() {
            out.insert(x.clone());
        }
        for e in s.exprs() {
            out.extend(e.vars());
        }
    });
    out
}

/// Fresh out-location name for the result of a struct-returning call bound to `x`.
pub fn fun_res_var(caller: &FnRef, x: &str, used: &BTreeSet<Name>) -> Name {
    let f = match caller {
        FnRef::Entry => "entry",
        FnRef::Fun(f) => f.as_str(),
    };
    let base = format!("__ret_{f}_{x}");
    if !used.contains(&base) {
        return base;
    }
    (1..).map(|k| format!("{base}_{k}")).find(|n| !used.contains(n)).expect("infinite")
}

impl CCode {
    pub fn new(p: &CProgram, entry: &[CStmt]) -> CCode {
        let funs: HashMap<Name, Rc<CFun>> = p.funs().map(|f| (f.name.clone(), Rc::new(f.clone()))).collect();
        let globals = p
            .decls
            .iter()
            .filter_map(|d| match d {
                crate::ast::CDecl::Val { name, value, .. } => Some((name.clone(), value.clone())),
                _ => None,
            })
            .collect();
        let mut res_vars = HashMap::new();
        let returns_struct = |f: &str| funs.get(f).is_some_and(|f| f.ret.is_record());
        let mut scan = |caller: FnRef, params: &[(Name, Ty)], body: &[CStmt]| {
            let used = names_in(params, body);
            crate::ast::walk_stmts(body, &mut |s| {
                if let CStmt::Call { dst: Some(x), f, .. } = s {
                    if returns_struct(f) {
                        res_vars.insert((caller.clone(), x.clone()), fun_res_var(&caller, x, &used));
                    }
                }
            });
        };
        for f in p.funs() {
            scan(FnRef::Fun(f.name.clone()), &f.params, &f.body);
        }
        scan(FnRef::Entry, &[], entry);
        CCode { funs, globals, res_vars }
    }

    pub fn globals(&self) -> &HashMap<Name, Value> {
        &self.globals
    }
}

pub fn eval_cexpr(e: &CExpr, globals: &HashMap<Name, Value>, vars: &Vars) -> Result<Value, EvalError> {
    Ok(match e {
        CExpr::ConstInt(n) => Value::IntV(*n),
        CExpr::ConstUnit => Value::UnitV,
        CExpr::Var(x) => match vars.get(x).or_else(|| globals.get(x)) {
            Some(v) => v.clone(),
            None => return Err(EvalError::UnboundVar(x.clone())),
        },
        CExpr::PtrAdd(a, b) => match (eval_cexpr(a, globals, vars)?, eval_cexpr(b, globals, vars)?) {
            (Value::LocV(l), Value::IntV(k)) => {
                if !l.path.is_empty() {
                    return Err(EvalError::FieldOnNonEmptyMismatch);
                }
                Value::LocV(Loc { block: l.block, offset: l.offset + k as i64, path: vec![] })
            }
            _ => return Err(EvalError::PtrAddOnNonLoc),
        },
        CExpr::RecordLit(fs) => {
            let mut out = Vec::with_capacity(fs.len());
            for (f, e) in fs {
                out.push((f.clone(), eval_cexpr(e, globals, vars)?));
            }
            Value::RecordV(out)
        }
        CExpr::Proj(r, fd) => match eval_cexpr(r, globals, vars)? {
            v @ Value::RecordV(_) => v.field(fd).cloned().ok_or_else(|| EvalError::ProjOnNonRecord(fd.clone()))?,
            _ => return Err(EvalError::ProjOnNonRecord(fd.clone())),
        },
        CExpr::PtrField(p, fd) => match eval_cexpr(p, globals, vars)? {
            Value::LocV(mut l) => {
                l.path.push(fd.clone());
                Value::LocV(l)
            }
            _ => return Err(EvalError::PtrAddOnNonLoc),
        },
        CExpr::Loc(b, n, p) => Value::LocV(Loc { block: *b, offset: *n, path: p.clone() }),
        CExpr::PrimOp(op, a, b) => match (eval_cexpr(a, globals, vars)?, eval_cexpr(b, globals, vars)?) {
            (Value::IntV(x), Value::IntV(y)) => Value::IntV(op.apply(x, y)),
            _ => return Err(EvalError::NonIntOperand),
        },
    })
}

// ---------------------------------------------------------------------------
// Memory

fn navigate<'a>(cell: &'a mut Value, path: &[Name]) -> Result<&'a mut Value, CStuck> {
    let mut v = cell;
    for fd in path {
        v = match v {
            Value::RecordV(fs) => match fs.iter_mut().find(|(f, _)| f == fd) {
                Some((_, v)) => v,
                None => return Err(CStuck::BadFieldPath(path.to_vec())),
            },
            _ => return Err(CStuck::BadFieldPath(path.to_vec())),
        };
    }
    Ok(v)
}

fn block_in<'a>(frames: &'a mut [CFrame], idx: Option<usize>, b: BlockId) -> Result<&'a mut CBlock, CStuck> {
    match idx {
        Some(i) => frames[i].mem.as_mut().and_then(|m| m.get_mut(&b)).ok_or(CStuck::DeadBlock(b)),
        None => frames
            .iter_mut()
            .rev()
            .find_map(|f| f.mem.as_mut().and_then(|m| m.get_mut(&b)))
            .ok_or(CStuck::DeadBlock(b)),
    }
}

fn cell<'a>(blk: &'a mut CBlock, l: &Loc) -> Result<(&'a mut Value, Ty), CStuck> {
    if l.offset < 0 || l.offset as usize >= blk.cells.len() {
        return Err(CStuck::OutOfBounds { block: l.block, offset: l.offset });
    }
    let ty = blk.ty.content().at_path(&l.path).ok_or_else(|| CStuck::BadFieldPath(l.path.clone()))?;
    Ok((navigate(&mut blk.cells[l.offset as usize], &l.path)?, ty))
}

/// Read the value at `loc`, failing on uninitialized cells.
pub fn mem_get(stack: &mut [CFrame], loc: &Loc) -> Result<Value, CStuck> {
    get_at(stack, None, loc)
}

pub fn mem_set(stack: &mut [CFrame], loc: &Loc, v: Value) -> Result<Ty, CStuck> {
    set_at(stack, None, loc, v)
}

pub fn mem_memset(stack: &mut [CFrame], loc: &Loc, count: u32, v: Value) -> Result<Ty, CStuck> {
    memset_at(stack, None, loc, count, v)
}

fn get_at(stack: &mut [CFrame], idx: Option<usize>, loc: &Loc) -> Result<Value, CStuck> {
    let blk = block_in(stack, idx, loc.block)?;
    let (v, _) = cell(blk, loc)?;
    if v.contains_undef() {
        return Err(CStuck::UninitializedRead(loc.block));
    }
    Ok(v.clone())
}

fn set_at(stack: &mut [CFrame], idx: Option<usize>, loc: &Loc, nv: Value) -> Result<Ty, CStuck> {
    let blk = block_in(stack, idx, loc.block)?;
    let (v, ty) = cell(blk, loc)?;
    *v = nv;
    Ok(ty)
}

fn memset_at(stack: &mut [CFrame], idx: Option<usize>, loc: &Loc, count: u32, v: Value) -> Result<Ty, CStuck> {
    if !loc.path.is_empty() {
        return Err(CStuck::MemsetWithFieldPath);
    }
    let blk = block_in(stack, idx, loc.block)?;
    let end = loc.offset + count as i64;
    if loc.offset < 0 || end > blk.cells.len() as i64 {
        return Err(CStuck::OutOfBounds { block: loc.block, offset: end.min(blk.cells.len() as i64).max(loc.offset) });
    }
    for k in loc.offset..end {
        blk.cells[k as usize] = v.clone();
    }
    Ok(blk.ty.content())
}

// ---------------------------------------------------------------------------
// Configurations

impl CConfig {
    pub fn new(vars: Vars, stmts: Vec<CStmt>, model: EventModel) -> CConfig {
        let mut rev_stmts = stmts;
        rev_stmts.reverse();
        CConfig {
            stack: vec![],
            vars,
            rev_stmts,
            enrich_fn: FnRef::Entry,
            enrich_arrays: BTreeSet::new(),
            counter: 0,
            model,
            owner: HashMap::new(),
            calls: HashMap::new(),
        }
    }

    /// Pending statements in execution order.
    pub fn stmts(&self) -> Vec<CStmt> {
        self.rev_stmts.iter().rev().cloned().collect()
    }

    pub fn next_stmt(&self) -> Option<&CStmt> {
        self.rev_stmts.last()
    }

    fn pop_frame(&mut self) -> CFrame {
        let f = self.stack.pop().expect("non-empty stack");
        match &f.mem {
            Some(m) => {
                for b in m.keys() {
                    self.owner.remove(b);
                }
            }
            None => {
                if let Some(n) = self.calls.get_mut(&f.enrich_fn) {
                    *n -= 1;
                }
            }
        }
        self.enrich_fn = f.enrich_fn.clone();
        self.enrich_arrays = f.enrich_arrays.clone();
        f
    }

    fn label(&self, l: &Loc) -> Result<LocationLabel, CStuck> {
        match self.model {
            EventModel::Concrete => {
                Ok(LocationLabel::Concrete { block: l.block, offset: l.offset, path: l.path.clone() })
            }
            _ => {
                let (func, depth, var) = var_of_block(self, l.block)?;
                Ok(LocationLabel::AbstractVar { func, depth, var, offset: l.offset, path: l.path.clone() })
            }
        }
    }

    fn event(&self, kind: EventKind, l: &Loc, ty: Ty) -> Result<TraceEvent, CStuck> {
        Ok(TraceEvent { kind, loc: Some(self.label(l)?), elem_ty: Some(ty) })
    }

    fn eval(&self, code: &CCode, e: &CExpr) -> Result<Value, CStuck> {
        Ok(eval_cexpr(e, &code.globals, &self.vars)?)
    }

    fn eval_loc(&self, code: &CCode, e: &CExpr) -> Result<Loc, CStuck> {
        match self.eval(code, e)? {
            Value::LocV(l) => Ok(l),
            _ => Err(CStuck::NotALocation),
        }
    }

    /// Debug validator for the structural invariants of the enriched machine.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for (i, f) in self.stack.iter().enumerate() {
            let Some(m) = &f.mem else { continue };
            let (vars, arrays) = match self.stack.get(i + 1) {
                Some(g) => (&g.saved_vars, &g.enrich_arrays),
                None => (&self.vars, &self.enrich_arrays),
            };
            for b in m.keys() {
                if !seen.insert(*b) {
                    return Err(format!("block {b} owned by two frames"));
                }
                let base = Value::LocV(Loc::new(*b, 0));
                let owners: Vec<_> = arrays.iter().filter(|x| vars.get(*x) == Some(&base)).collect();
                if owners.len() != 1 {
                    return Err(format!("block {b} is named by {} declared arrays", owners.len()));
                }
            }
        }
        Ok(())
    }
}

/// Owner of a live block: function, recursion depth and array variable.
pub fn var_of_block(c: &CConfig, b: BlockId) -> Result<(FnRef, u32, Name), CStuck> {
    let i = match c.owner.get(&b) {
        Some(&i) => i,
        None => c
            .stack
            .iter()
            .position(|f| f.mem.as_ref().is_some_and(|m| m.contains_key(&b)))
            .ok_or(CStuck::BlockNotFound(b))?,
    };
    let frame = &c.stack[i];
    let (vars, arrays) = match c.stack.get(i + 1) {
        Some(g) => (&g.saved_vars, &g.enrich_arrays),
        None => (&c.vars, &c.enrich_arrays),
    };
    let base = Value::LocV(Loc::new(b, 0));
    let x = arrays.iter().find(|x| vars.get(*x) == Some(&base)).ok_or(CStuck::BlockNotFound(b))?;
    Ok((frame.enrich_fn.clone(), frame.depth, x.clone()))
}

/// Render a raw concrete event under the configuration's event model.
pub fn reinterpret_event(c: &CConfig, raw: &TraceEvent) -> Result<Vec<TraceEvent>, CStuck> {
    let ev = match (&raw.loc, c.model) {
        (Some(LocationLabel::Concrete { block, offset, path }), m) if m != EventModel::Concrete => {
            let (func, depth, var) = var_of_block(c, *block)?;
            TraceEvent {
                kind: raw.kind,
                loc: Some(LocationLabel::AbstractVar { func, depth, var, offset: *offset, path: path.clone() }),
                elem_ty: raw.elem_ty.clone(),
            }
        }
        _ => raw.clone(),
    };
    Ok(if c.model == EventModel::AbstractC5 { expand_fields(ev) } else { vec![ev] })
}

/// Split a struct-typed access into its atomic-field accesses, in declaration order.
pub fn expand_fields(ev: TraceEvent) -> Vec<TraceEvent> {
    match (&ev.elem_ty, &ev.loc) {
        (Some(Ty::Record(fds)), Some(loc)) if matches!(ev.kind, EventKind::Read | EventKind::Write) => fds
            .iter()
            .flat_map(|(f, t)| {
                expand_fields(TraceEvent { kind: ev.kind, loc: Some(loc.with_field(f)), elem_ty: Some(t.clone()) })
            })
            .collect(),
        _ => vec![ev],
    }
}

pub fn step_cstar(code: &CCode, c: &mut CConfig) -> CStep {
    match step_inner(code, c) {
        Ok(Some(evs)) => {
            if c.model == EventModel::AbstractC5 {
                CStep::Stepped(evs.into_iter().flat_map(expand_fields).collect())
            } else {
                CStep::Stepped(evs)
            }
        }
        Ok(None) => match c.rev_stmts.last() {
            Some(CStmt::Return(e)) => match c.eval(code, e) {
                Ok(v) => CStep::Done(v),
                Err(s) => CStep::Stuck(s),
            },
            _ => unreachable!(),
        },
        Err(s) => CStep::Stuck(s),
    }
}

/// `Ok(None)` signals a final configuration.
fn step_inner(code: &CCode, c: &mut CConfig) -> Result<Option<Vec<TraceEvent>>, CStuck> {
    let Some(s) = c.rev_stmts.pop() else {
        return match c.stack.last() {
            Some(f) if f.mem.is_some() => {
                let f = c.pop_frame();
                c.vars = f.saved_vars;
                match f.cont {
                    Cont::Discard(ss) => c.rev_stmts = ss.into_iter().rev().collect(),
                    Cont::Receive(..) => unreachable!("block frames discard"),
                }
                Ok(Some(vec![]))
            }
            Some(_) => Err(CStuck::FellOffFunction),
            None => Err(CStuck::NoReturn),
        };
    };
    let mut evs = vec![];
    match s {
        CStmt::VarDecl(_, x, e) => {
            let v = c.eval(code, &e)?;
            c.vars.insert(x, v);
        }
        CStmt::ArrDecl(t, x, n) => {
            let top = match c.stack.last_mut() {
                Some(CFrame { mem: Some(m), .. }) => m,
                _ => return Err(CStuck::ArrDeclOutsideBlock),
            };
            let b = c.counter;
            c.counter += 1;
            top.insert(b, CBlock { cells: vec![Value::undef_of(&t.content()); n as usize], ty: t });
            c.owner.insert(b, c.stack.len() - 1);
            c.vars.insert(x.clone(), Value::LocV(Loc::new(b, 0)));
            c.enrich_arrays.insert(x);
        }
        CStmt::Memset(p, m, e) => {
            let l = c.eval_loc(code, &p)?;
            let v = c.eval(code, &e)?;
            let idx = c.owner.get(&l.block).copied();
            let ty = memset_at(&mut c.stack, idx, &l, m, v)?;
            for k in 0..m as i64 {
                let lk = Loc { block: l.block, offset: l.offset + k, path: vec![] };
                evs.push(c.event(EventKind::Write, &lk, ty.clone())?);
            }
        }
        CStmt::ReadStmt(t, x, e) => {
            let l = c.eval_loc(code, &e)?;
            let idx = c.owner.get(&l.block).copied();
            let v = get_at(&mut c.stack, idx, &l)?;
            evs.push(c.event(EventKind::Read, &l, t)?);
            c.vars.insert(x, v);
        }
        CStmt::WriteStmt(p, e) => {
            let l = c.eval_loc(code, &p)?;
            let v = c.eval(code, &e)?;
            let idx = c.owner.get(&l.block).copied();
            let ty = set_at(&mut c.stack, idx, &l, v)?;
            evs.push(c.event(EventKind::Write, &l, ty)?);
        }
        CStmt::IfStmt(e, a, b) => {
            let taken = match c.eval(code, &e)? {
                Value::IntV(n) => n != 0,
                Value::LocV(_) => true,
                _ => return Err(CStuck::BadCondition),
            };
            evs.push(TraceEvent::branch(taken));
            c.rev_stmts.extend((if taken { a } else { b }).into_iter().rev());
        }
        CStmt::Block(ss) => {
            let rest: Vec<CStmt> = std::mem::take(&mut c.rev_stmts).into_iter().rev().collect();
            let depth = c.calls.get(&c.enrich_fn).copied().unwrap_or(0);
            c.stack.push(CFrame {
                mem: Some(BTreeMap::new()),
                saved_vars: c.vars.clone(),
                cont: Cont::Discard(rest),
                enrich_fn: c.enrich_fn.clone(),
                enrich_arrays: c.enrich_arrays.clone(),
                depth,
            });
            c.rev_stmts = ss.into_iter().rev().collect();
        }
        CStmt::ExprStmt(e) => {
            c.eval(code, &e)?;
        }
        CStmt::Call { ty, dst, f, args } => {
            let mut vals = Vec::with_capacity(args.len());
            for a in &args {
                vals.push(c.eval(code, a)?);
            }
            let fun = code.funs.get(&f).ok_or_else(|| CStuck::UnboundFunction(f.clone()))?.clone();
            if fun.params.len() != vals.len() {
                return Err(CStuck::ArityMismatch(f));
            }
            let rest: Vec<CStmt> = std::mem::take(&mut c.rev_stmts).into_iter().rev().collect();
            *c.calls.entry(c.enrich_fn.clone()).or_default() += 1;
            c.stack.push(CFrame {
                mem: None,
                saved_vars: std::mem::take(&mut c.vars),
                cont: Cont::Receive(ty, dst, rest),
                enrich_fn: std::mem::replace(&mut c.enrich_fn, FnRef::Fun(f)),
                enrich_arrays: std::mem::take(&mut c.enrich_arrays),
                depth: 0,
            });
            c.vars = fun.params.iter().map(|(x, _)| x.clone()).zip(vals).collect();
            c.rev_stmts = fun.body.iter().rev().cloned().collect();
        }
        CStmt::Return(e) => {
            let v = c.eval(code, &e)?;
            match c.stack.last() {
                None => {
                    if !c.rev_stmts.is_empty() {
                        return Err(CStuck::ReturnAtEmptyStack);
                    }
                    c.rev_stmts.push(CStmt::Return(v.to_cexpr()));
                    return Ok(None);
                }
                Some(f) if f.mem.is_some() => {
                    c.pop_frame();
                    c.vars = Vars::new();
                    c.rev_stmts = vec![CStmt::Return(v.to_cexpr())];
                }
                Some(_) => {
                    let callee = c.enrich_fn.clone();
                    let f = c.pop_frame();
                    c.vars = f.saved_vars;
                    let struct_ret = match &callee {
                        FnRef::Fun(g) => code.funs.get(g).is_some_and(|g| g.ret.is_record()),
                        FnRef::Entry => false,
                    };
                    let (ty, dst, rest) = match f.cont {
                        Cont::Receive(t, x, ss) => (t, x, ss),
                        Cont::Discard(ss) => (Ty::Unit, None, ss),
                    };
                    if struct_ret && matches!(c.model, EventModel::AbstractC4 | EventModel::AbstractC5) {
                        evs.extend(struct_return_events(code, c, &ty, dst.as_ref()));
                    }
                    if let Some(x) = dst {
                        c.vars.insert(x, v);
                    }
                    c.rev_stmts = rest.into_iter().rev().collect();
                }
            }
        }
    }
    Ok(Some(evs))
}

/// The events a struct-returning call would perform through an out-location.
fn struct_return_events(code: &CCode, c: &CConfig, ty: &Ty, dst: Option<&Name>) -> Vec<TraceEvent> {
    let Some(x) = dst else {
        return vec![TraceEvent::branch(false)];
    };
    let caller = c.enrich_fn.clone();
    let depth = c.calls.get(&caller).copied().unwrap_or(0);
    let var = code.res_vars.get(&(caller.clone(), x.clone())).cloned().unwrap_or_else(|| {
        fun_res_var(&caller, x, &BTreeSet::new())
    });
    let loc = LocationLabel::AbstractVar { func: caller, depth, var, offset: 0, path: vec![] };
    vec![TraceEvent::branch(true), TraceEvent::write(loc.clone(), ty.clone()), TraceEvent::read(loc, ty.clone())]
}

/// Run `entry` from the empty stack with initial variables `v0`.
pub fn run_cstar(p: &CProgram, v0: &BTreeMap<Name, Value>, entry: &[CStmt], fuel: u64, model: EventModel) -> Outcome {
    let code = CCode::new(p, entry);
    let mut c = CConfig::new(v0.iter().map(|(k, v)| (k.clone(), v.clone())).collect(), entry.to_vec(), model);
    run_config(&code, &mut c, fuel)
}

pub fn run_config(code: &CCode, c: &mut CConfig, fuel: u64) -> Outcome {
    let mut trace = Vec::new();
    for _ in 0..fuel {
        match step_cstar(code, c) {
            CStep::Stepped(evs) => trace.extend(evs),
            CStep::Done(value) => return Outcome::Terminates { value, trace },
            CStep::Stuck(s) => return Outcome::GoesWrong { trace, diag: s.to_string() },
        }
    }
    if c.stack.is_empty() && c.rev_stmts.len() == 1 {
        if let Some(CStmt::Return(e)) = c.rev_stmts.last() {
            if let Ok(value) = c.eval(code, e) {
                return Outcome::Terminates { value, trace };
            }
        }
    }
    Outcome::Timeout { trace }
}

#[cfg(test)]
mod tests;
