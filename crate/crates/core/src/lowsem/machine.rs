use super::ElaboratedLProgram;
use crate::ast::{BlockId, EventKind, LDecl, LExpr, Loc, Name, Outcome, TraceEvent, Ty, Value};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LStuck {
    #[error("out of bounds: block {block} offset {offset}")]
    OutOfBounds { block: BlockId, offset: i64 },
    #[error("dead block {0}")]
    DeadBlock(BlockId),
    #[error("allocation with no enclosing frame")]
    NoTopFrame,
    #[error("unbound function `{0}`")]
    UnboundFunction(Name),
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("pop with an empty frame stack")]
    PopOfNonValue,
    #[error("bad field path {0:?}")]
    BadFieldPath(Vec<Name>),
    #[error("ill-formed redex: {0}")]
    BadRedex(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LBlock {
    pub ty: Ty,
    pub cells: Vec<Value>,
}

pub type LFrame = BTreeMap<BlockId, LBlock>;

/// A parent node whose evaluation-position child `idx` is being reduced.
#[derive(Clone, Debug)]
struct Hole {
    node: LExpr,
    idx: usize,
}

/// Machine state: frame stack, the term under evaluation and the allocator.
///
/// The term is kept as a focused subterm plus its enclosing parents so that
/// deep recursion does not turn into deep Rust recursion; [`LConfig::expr`]
/// plugs it back together.
#[derive(Clone, Debug)]
pub struct LConfig {
    pub stack: Vec<LFrame>,
    pub counter: BlockId,
    focus: LExpr,
    holes: Vec<Hole>,
    owner: HashMap<BlockId, usize>,
}

pub enum LStep {
    Stepped(Vec<TraceEvent>),
    Done(Value),
    Stuck(LStuck),
}

/// Function table with top-level values already substituted.
pub struct LowCode {
    funs: HashMap<Name, (Name, LExpr)>,
    globals: Vec<(Name, LExpr)>,
}

impl LowCode {
    pub fn new(p: &ElaboratedLProgram) -> LowCode {
        let globals: Vec<(Name, LExpr)> =
            p.program.globals().into_iter().map(|(x, v)| (x.clone(), v.to_lexpr())).collect();
        let mut funs = HashMap::new();
        for d in &p.program.decls {
            if let LDecl::Fun { name, param, body, .. } = d {
                let mut body = body.clone();
                for (g, v) in &globals {
                    if g != param {
                        subst(&mut body, g, v);
                    }
                }
                funs.insert(name.clone(), (param.clone(), body));
            }
        }
        LowCode { funs, globals }
    }

    pub fn close(&self, e: &LExpr) -> LExpr {
        let mut e = e.clone();
        for (g, v) in &self.globals {
            subst(&mut e, g, v);
        }
        e
    }
}

/// Capture-avoiding substitution of a closed value `v` for `x`.
pub fn subst(e: &mut LExpr, x: &str, v: &LExpr) {
    use LExpr::*;
    match e {
        Var(y) if y == x => *e = v.clone(),
        ConstInt(_) | ConstUnit | Var(_) | Loc(..) => {}
        RecordLit(fs) => fs.iter_mut().for_each(|(_, e)| subst(e, x, v)),
        Proj(a, _) | StructField(a, _) | WithFrame(a) | Pop(a) => subst(a, x, v),
        SubBuf(a, b) | PrimOp(_, a, b) | LetAnon(a, b) => {
            subst(a, x, v);
            subst(b, x, v);
        }
        If(a, b, c) => {
            subst(a, x, v);
            subst(b, x, v);
            subst(c, x, v);
        }
        Let(y, _, a, body) | App(y, _, _, a, body) | NewBuf(y, _, a, _, body) | NewStruct(y, a, _, body) => {
            subst(a, x, v);
            if y != x {
                subst(body, x, v);
            }
        }
        ReadBuf(y, _, a, b, body) => {
            subst(a, x, v);
            subst(b, x, v);
            if y != x {
                subst(body, x, v);
            }
        }
        ReadStruct(y, _, a, body) => {
            subst(a, x, v);
            if y != x {
                subst(body, x, v);
            }
        }
        WriteBuf(a, b, c, body) => {
            subst(a, x, v);
            subst(b, x, v);
            subst(c, x, v);
            subst(body, x, v);
        }
        WriteStruct(a, b, body) => {
            subst(a, x, v);
            subst(b, x, v);
            subst(body, x, v);
        }
    }
}

/// Number of children in evaluation position, left to right.
fn slots(e: &LExpr) -> usize {
    use LExpr::*;
    match e {
        RecordLit(fs) => fs.len(),
        Proj(..) | StructField(..) | If(..) | Let(..) | LetAnon(..) | App(..) | NewBuf(..) | NewStruct(..)
        | ReadStruct(..) | Pop(_) => 1,
        SubBuf(..) | PrimOp(..) | ReadBuf(..) | WriteStruct(..) => 2,
        WriteBuf(..) => 3,
        ConstInt(_) | ConstUnit | Var(_) | Loc(..) | WithFrame(_) => 0,
    }
}

fn slot_mut(e: &mut LExpr, i: usize) -> &mut LExpr {
    use LExpr::*;
    match (e, i) {
        (RecordLit(fs), i) => &mut fs[i].1,
        (Proj(a, _) | StructField(a, _) | If(a, _, _) | Let(_, _, a, _) | LetAnon(a, _) | Pop(a), 0) => a,
        (App(_, _, _, a, _) | NewBuf(_, _, a, _, _) | NewStruct(_, a, _, _) | ReadStruct(_, _, a, _), 0) => a,
        (SubBuf(a, _) | PrimOp(_, a, _) | ReadBuf(_, _, a, _, _) | WriteStruct(a, _, _) | WriteBuf(a, _, _, _), 0) => a,
        (SubBuf(_, b) | PrimOp(_, _, b) | ReadBuf(_, _, _, b, _) | WriteStruct(_, b, _) | WriteBuf(_, b, _, _), 1) => b,
        (WriteBuf(_, _, c, _), 2) => c,
        _ => unreachable!("no evaluation slot {i}"),
    }
}

fn next_hole(e: &mut LExpr) -> Option<usize> {
    (0..slots(e)).find(|&i| !slot_mut(e, i).is_value())
}

impl LConfig {
    pub fn new(expr: LExpr) -> LConfig {
        LConfig { stack: vec![], counter: 0, focus: expr, holes: vec![], owner: HashMap::new() }
    }

    /// The whole term, with the focused subterm plugged back into its parents.
    pub fn expr(&self) -> LExpr {
        let mut e = self.focus.clone();
        for h in self.holes.iter().rev() {
            let mut node = h.node.clone();
            *slot_mut(&mut node, h.idx) = e;
            e = node;
        }
        e
    }

    /// The subterm the next step will reduce.
    pub fn focus(&self) -> &LExpr {
        &self.focus
    }

    /// Pending `pop` markers in the term (equals the stack depth).
    pub fn pending_pops(&self) -> usize {
        let mut n = 0;
        let mut count = |e: &LExpr| {
            e.walk(&mut |x| {
                if matches!(x, LExpr::Pop(_)) {
                    n += 1
                }
            })
        };
        count(&self.focus);
        for h in &self.holes {
            if matches!(h.node, LExpr::Pop(_)) {
                n += 1;
            }
        }
        // holes store their child as a placeholder, so walking them would not double count
        n
    }

    pub fn block(&self, b: BlockId) -> Option<&LBlock> {
        self.owner.get(&b).and_then(|&i| self.stack[i].get(&b))
    }

    fn alloc(&mut self, ty: Ty, cells: Vec<Value>) -> Result<BlockId, LStuck> {
        let top = self.stack.len().checked_sub(1).ok_or(LStuck::NoTopFrame)?;
        let b = self.counter;
        self.counter += 1;
        self.stack[top].insert(b, LBlock { ty, cells });
        self.owner.insert(b, top);
        Ok(b)
    }

    fn cell_mut(&mut self, l: &Loc) -> Result<(&mut Value, Ty), LStuck> {
        let &i = self.owner.get(&l.block).ok_or(LStuck::DeadBlock(l.block))?;
        let blk = self.stack[i].get_mut(&l.block).ok_or(LStuck::DeadBlock(l.block))?;
        if l.offset < 0 || l.offset as usize >= blk.cells.len() {
            return Err(LStuck::OutOfBounds { block: l.block, offset: l.offset });
        }
        let ty = blk.ty.content().at_path(&l.path).ok_or_else(|| LStuck::BadFieldPath(l.path.clone()))?;
        let mut v = &mut blk.cells[l.offset as usize];
        for fd in &l.path {
            v = match v {
                Value::RecordV(fs) => match fs.iter_mut().find(|(f, _)| f == fd) {
                    Some((_, v)) => v,
                    None => return Err(LStuck::BadFieldPath(l.path.clone())),
                },
                _ => return Err(LStuck::BadFieldPath(l.path.clone())),
            };
        }
        Ok((v, ty))
    }

    fn read(&mut self, l: &Loc, ty: &Ty) -> Result<(Value, TraceEvent), LStuck> {
        let (v, _) = self.cell_mut(l)?;
        let v = v.clone();
        Ok((v, TraceEvent::concrete(EventKind::Read, l.block, l.offset, l.path.clone(), ty.clone())))
    }

    fn write(&mut self, l: &Loc, nv: Value) -> Result<TraceEvent, LStuck> {
        let (v, ty) = self.cell_mut(l)?;
        *v = nv;
        Ok(TraceEvent::concrete(EventKind::Write, l.block, l.offset, l.path.clone(), ty))
    }
}

fn as_loc(e: &LExpr) -> Result<Loc, LStuck> {
    match e {
        LExpr::Loc(b, n, p) => Ok(Loc { block: *b, offset: *n, path: p.clone() }),
        _ => Err(LStuck::BadRedex(format!("expected a location, found {e:?}"))),
    }
}

fn as_int(e: &LExpr) -> Result<i32, LStuck> {
    match e {
        LExpr::ConstInt(n) => Ok(*n),
        _ => Err(LStuck::BadRedex(format!("expected an integer, found {e:?}"))),
    }
}

fn as_buf(e: &LExpr) -> Result<Loc, LStuck> {
    let l = as_loc(e)?;
    if !l.path.is_empty() {
        return Err(LStuck::BadRedex("buffer operation on a struct field location".into()));
    }
    Ok(l)
}

fn bind(x: &str, v: &LExpr, mut body: LExpr) -> LExpr {
    subst(&mut body, x, v);
    body
}

/// One small step. Moving the focus in and out of evaluation contexts is not
/// a step; only applying a reduction rule is.
pub fn step_low(code: &LowCode, c: &mut LConfig) -> LStep {
    loop {
        if c.focus.is_value() {
            match c.holes.pop() {
                None => return LStep::Done(c.focus.as_value().expect("value")),
                Some(Hole { mut node, idx }) => {
                    *slot_mut(&mut node, idx) = std::mem::replace(&mut c.focus, LExpr::ConstUnit);
                    c.focus = node;
                    continue;
                }
            }
        }
        if let Some(i) = next_hole(&mut c.focus) {
            let child = std::mem::replace(slot_mut(&mut c.focus, i), LExpr::ConstUnit);
            let node = std::mem::replace(&mut c.focus, child);
            c.holes.push(Hole { node, idx: i });
            continue;
        }
        let redex = std::mem::replace(&mut c.focus, LExpr::ConstUnit);
        return match reduce(code, c, redex) {
            Ok((next, events)) => {
                c.focus = next;
                LStep::Stepped(events)
            }
            Err(s) => LStep::Stuck(s),
        };
    }
}

fn reduce(code: &LowCode, c: &mut LConfig, e: LExpr) -> Result<(LExpr, Vec<TraceEvent>), LStuck> {
    use LExpr::*;
    let silent = |e| Ok((e, vec![]));
    match e {
        Var(x) => Err(LStuck::UnboundVariable(x)),
        Proj(r, fd) => match *r {
            RecordLit(fs) => match fs.into_iter().find(|(f, _)| *f == fd) {
                Some((_, v)) => silent(v),
                None => Err(LStuck::BadFieldPath(vec![fd])),
            },
            other => Err(LStuck::BadRedex(format!("projection of {other:?}"))),
        },
        StructField(s, fd) => {
            let mut l = as_loc(&s)?;
            l.path.push(fd);
            silent(Loc(l.block, l.offset, l.path))
        }
        SubBuf(b, i) => {
            let l = as_buf(&b)?;
            silent(Loc(l.block, l.offset + as_int(&i)? as i64, vec![]))
        }
        If(cond, a, b) => {
            let n = as_int(&cond)?;
            Ok(if n != 0 { (*a, vec![TraceEvent::branch(true)]) } else { (*b, vec![TraceEvent::branch(false)]) })
        }
        Let(x, _, v, body) => silent(bind(&x, &v, *body)),
        LetAnon(_, body) => silent(*body),
        App(x, t, f, arg, body) => {
            let (param, fbody) = code.funs.get(&f).ok_or(LStuck::UnboundFunction(f.clone()))?;
            let inst = bind(param, &arg, fbody.clone());
            silent(Let(x, t, Box::new(inst), body))
        }
        NewBuf(x, n, init, t, body) => {
            let v = init.as_value().expect("value");
            let b = c.alloc(t.clone(), vec![v; n as usize])?;
            let ct = t.content();
            let evs = (0..n as i64).map(|i| TraceEvent::concrete(EventKind::Write, b, i, vec![], ct.clone())).collect();
            Ok((bind(&x, &Loc(b, 0, vec![]), *body), evs))
        }
        NewStruct(x, init, t, body) => {
            let v = init.as_value().expect("value");
            let b = c.alloc(t.clone(), vec![v])?;
            let ev = TraceEvent::concrete(EventKind::Write, b, 0, vec![], t.content());
            Ok((bind(&x, &Loc(b, 0, vec![]), *body), vec![ev]))
        }
        ReadBuf(x, t, b, i, body) => {
            let mut l = as_buf(&b)?;
            l.offset += as_int(&i)? as i64;
            let (v, ev) = c.read(&l, &t)?;
            Ok((bind(&x, &v.to_lexpr(), *body), vec![ev]))
        }
        WriteBuf(b, i, v, body) => {
            let mut l = as_buf(&b)?;
            l.offset += as_int(&i)? as i64;
            let ev = c.write(&l, v.as_value().expect("value"))?;
            Ok((*body, vec![ev]))
        }
        ReadStruct(x, t, s, body) => {
            let l = as_loc(&s)?;
            let (v, ev) = c.read(&l, &t)?;
            Ok((bind(&x, &v.to_lexpr(), *body), vec![ev]))
        }
        WriteStruct(s, v, body) => {
            let l = as_loc(&s)?;
            let ev = c.write(&l, v.as_value().expect("value"))?;
            Ok((*body, vec![ev]))
        }
        WithFrame(body) => {
            c.stack.push(LFrame::new());
            silent(Pop(body))
        }
        Pop(v) => {
            let frame = c.stack.pop().ok_or(LStuck::PopOfNonValue)?;
            for b in frame.keys() {
                c.owner.remove(b);
            }
            silent(*v)
        }
        PrimOp(op, a, b) => silent(ConstInt(op.apply(as_int(&a)?, as_int(&b)?))),
        ConstInt(_) | ConstUnit | Loc(..) | RecordLit(_) => unreachable!("values are not redexes"),
    }
}

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Run `entry` (with `subst` applied) for at most `fuel` steps.
pub fn run_low(p: &ElaboratedLProgram, entry: &LExpr, subst_map: &BTreeMap<Name, Value>, fuel: u64) -> Outcome {
    let code = LowCode::new(p);
    let mut e = entry.clone();
    for (x, v) in subst_map {
        subst(&mut e, x, &v.to_lexpr());
    }
    let mut c = LConfig::new(code.close(&e));
    run_config(&code, &mut c, fuel)
}

pub fn run_config(code: &LowCode, c: &mut LConfig, fuel: u64) -> Outcome {
    let mut trace = Vec::new();
    for _ in 0..fuel {
        match step_low(code, c) {
            LStep::Stepped(evs) => trace.extend(evs),
            LStep::Done(value) => return Outcome::Terminates { value, trace },
            LStep::Stuck(s) => return Outcome::GoesWrong { trace, diag: s.to_string() },
        }
    }
    // a value reached with the last unit of fuel still terminates
    if let LStep::Done(value) = peek_done(c) {
        return Outcome::Terminates { value, trace };
    }
    Outcome::Timeout { trace }
}

fn peek_done(c: &LConfig) -> LStep {
    if c.holes.is_empty() && c.focus.is_value() {
        LStep::Done(c.focus.as_value().expect("value"))
    } else {
        LStep::Stepped(vec![])
    }
}
