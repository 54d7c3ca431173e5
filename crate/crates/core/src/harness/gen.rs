use super::secret::masking_interface;
use super::Subst;
use crate::ast::{LDecl, LExpr, LProgram, Name, PrimOp, Ty, Value};
use crate::lowsem::{typecheck, ElaboratedLProgram, TypeEnv};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// What the generator may use. `faulting` additionally plants one
/// out-of-bounds access; without it every index is in bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Features {
    pub buffers: bool,
    pub structs: bool,
    pub records: bool,
    pub subbufs: bool,
    pub field_locs: bool,
    pub conditionals: bool,
    pub functions: bool,
    pub recursion: bool,
    pub nesting: bool,
    pub struct_returns: bool,
    pub faulting: bool,
    /// Entry returns an int.
    pub int_result: bool,
    /// Entry reads abstract `limb` secrets through the masking interface.
    pub secrets: bool,
}

impl Features {
    pub fn safe() -> Features {
        Features {
            buffers: true,
            structs: true,
            records: true,
            subbufs: true,
            field_locs: true,
            conditionals: true,
            functions: true,
            recursion: true,
            nesting: true,
            struct_returns: true,
            faulting: false,
            int_result: false,
            secrets: false,
        }
    }

    pub fn buffers_only() -> Features {
        Features {
            structs: false,
            records: false,
            field_locs: false,
            struct_returns: false,
            ..Features::safe()
        }
    }

    pub fn faulting() -> Features {
        Features { faulting: true, ..Features::safe() }
    }
}

#[derive(Clone, Debug)]
pub struct GenProgram {
    pub program: ElaboratedLProgram,
    pub entry: LExpr,
    /// Candidate values for the entry's public inputs.
    pub inputs: Vec<Subst>,
    /// Entry variables of abstract type (only with `secrets`).
    pub secrets: Vec<(Name, Ty)>,
}

pub const INPUTS: [&str; 2] = ["in0", "in1"];
pub const SECRETS: [&str; 2] = ["sec0", "sec1"];
const INPUT_CANDIDATES: usize = 3;

fn pair() -> Ty {
    Ty::Record(vec![("x".into(), Ty::Int), ("y".into(), Ty::Int)])
}

fn wide() -> Ty {
    Ty::Record(vec![("lo".into(), Ty::Int), ("hi".into(), pair())])
}

fn flat_struct() -> Ty {
    Ty::MutStruct(vec![("a".into(), Ty::Int), ("b".into(), Ty::Int)])
}

fn nested_struct() -> Ty {
    Ty::MutStruct(vec![("c".into(), Ty::Int), ("inner".into(), flat_struct())])
}

fn limb() -> Ty {
    Ty::Abstract("limb".into())
}

#[derive(Clone, Debug)]
struct BufVar {
    name: Name,
    elem: Ty,
    len: u32,
}

#[derive(Clone, Debug)]
struct FunSig {
    name: Name,
    param_ty: Ty,
    ret: Ty,
    /// Buffer fields of the parameter record and the length each requires.
    buf_fields: Vec<(Name, u32)>,
    recursive: bool,
}

/// Variables in scope, by kind.
#[derive(Clone, Debug, Default)]
struct Env {
    ints: Vec<Name>,
    recs: Vec<(Name, Ty)>,
    bufs: Vec<BufVar>,
    structs: Vec<(Name, Ty)>,
    limbs: Vec<Name>,
    next: usize,
}

/// A function body under construction may call itself with a smaller counter.
#[derive(Clone)]
struct SelfCall {
    sig: FunSig,
    counter: Name,
}

struct Gen {
    rng: ChaCha8Rng,
    f: Features,
    funs: Vec<FunSig>,
    fault_planted: bool,
    in_entry: bool,
    self_call: Option<SelfCall>,
}

/// A statement: a binder applied to the rest of the block.
type Stmt = Box<dyn FnOnce(LExpr) -> LExpr>;

impl Gen {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn fresh(&mut self, env: &mut Env, prefix: &str) -> Name {
        let n = format!("{prefix}{}", env.next);
        env.next += 1;
        n
    }

    fn small(&mut self) -> i32 {
        self.rng.gen_range(-4..=20)
    }

    // -- expressions --------------------------------------------------------

    fn int_leaf(&mut self, env: &Env) -> LExpr {
        let mut opts: Vec<u8> = vec![0];
        if !env.ints.is_empty() {
            opts.extend([1, 1, 1]);
        }
        if !env.recs.is_empty() {
            opts.push(2);
        }
        match *opts.choose(&mut self.rng).expect("non-empty") {
            1 => LExpr::Var(env.ints.choose(&mut self.rng).expect("ints").clone()),
            2 => {
                let (r, t) = env.recs.choose(&mut self.rng).expect("recs").clone();
                self.int_path(LExpr::Var(r), &t)
            }
            _ => LExpr::ConstInt(self.small()),
        }
    }

    /// Project from a record expression down to some int field.
    fn int_path(&mut self, mut e: LExpr, t: &Ty) -> LExpr {
        let mut t = t.clone();
        loop {
            match t {
                Ty::Record(fs) => {
                    let (f, ft) = fs.choose(&mut self.rng).expect("fields").clone();
                    e = LExpr::Proj(Box::new(e), f);
                    t = ft;
                }
                _ => return e,
            }
        }
    }

    fn int_expr(&mut self, env: &Env, depth: u32) -> LExpr {
        if depth == 0 || self.chance(0.45) {
            return self.int_leaf(env);
        }
        let op = *[PrimOp::Add, PrimOp::Sub, PrimOp::Mul, PrimOp::And, PrimOp::Or, PrimOp::Xor, PrimOp::Lt, PrimOp::Eq]
            .choose(&mut self.rng)
            .expect("ops");
        LExpr::PrimOp(op, Box::new(self.int_expr(env, depth - 1)), Box::new(self.int_expr(env, depth - 1)))
    }

    fn value_of(&mut self, env: &Env, t: &Ty) -> LExpr {
        match t {
            Ty::Int => self.int_expr(env, 2),
            Ty::Unit => LExpr::ConstUnit,
            Ty::Abstract(_) => LExpr::Var(env.limbs.choose(&mut self.rng).expect("limbs").clone()),
            Ty::Record(fs) => {
                let same: Vec<Name> = env.recs.iter().filter(|(_, u)| u == t).map(|(r, _)| r.clone()).collect();
                if !same.is_empty() && self.chance(0.4) {
                    return LExpr::Var(same.choose(&mut self.rng).expect("same").clone());
                }
                LExpr::RecordLit(fs.iter().map(|(f, t)| (f.clone(), self.value_of(env, t))).collect())
            }
            Ty::Buf(_) | Ty::MutStruct(_) => unreachable!("no literals of reference type"),
        }
    }

    /// An index below `len`: a constant, or an input masked into range.
    fn index(&mut self, env: &Env, len: u32) -> LExpr {
        let pow = 1u32 << (31 - len.leading_zeros());
        if pow >= 2 && !env.ints.is_empty() && self.chance(0.3) {
            let v = LExpr::Var(env.ints.choose(&mut self.rng).expect("ints").clone());
            return LExpr::PrimOp(PrimOp::And, Box::new(v), Box::new(LExpr::ConstInt(pow as i32 - 1)));
        }
        LExpr::ConstInt(self.rng.gen_range(0..len) as i32)
    }

    fn elem_ty(&mut self) -> Ty {
        let mut opts = vec![Ty::Int, Ty::Int];
        if self.f.records {
            opts.push(pair());
        }
        if self.f.structs {
            opts.push(flat_struct());
        }
        opts.choose(&mut self.rng).expect("elem").clone()
    }

    fn rec_ty(&mut self) -> Ty {
        if self.chance(0.6) {
            pair()
        } else {
            wide()
        }
    }

    fn bind_content(&mut self, env: &mut Env, t: &Ty, prefix: &str) -> Name {
        let x = self.fresh(env, prefix);
        match t {
            Ty::Int => env.ints.push(x.clone()),
            Ty::Abstract(_) => env.limbs.push(x.clone()),
            t => env.recs.push((x.clone(), t.clone())),
        }
        x
    }

    // -- statements ---------------------------------------------------------

    /// One statement; may extend `env` with the variables it binds.
    fn stmt(&mut self, env: &mut Env, budget: &mut usize, depth: u32) -> Stmt {
        *budget = budget.saturating_sub(1);
        let f = self.f;
        let mut kinds: Vec<(u32, u8)> = vec![(3, 0)];
        if f.records {
            kinds.push((1, 1));
        }
        if f.buffers {
            kinds.push((3, 2));
            if !env.bufs.is_empty() {
                kinds.extend([(4, 3), (4, 4)]);
                if f.subbufs {
                    kinds.push((1, 5));
                }
            }
        }
        if f.structs {
            kinds.push((1, 6));
            if !env.structs.is_empty() {
                kinds.extend([(2, 7), (2, 8)]);
                if f.field_locs && env.structs.iter().any(|(_, t)| t.field("inner").is_some()) {
                    kinds.push((1, 9));
                }
            }
        }
        if depth < 3 && *budget > 2 {
            if f.nesting {
                kinds.push((2, 10));
            }
            if f.conditionals {
                kinds.push((2, 11));
            }
        }
        if f.functions && (!self.funs.is_empty() || self.self_call.is_some()) {
            kinds.push((3, 12));
        }
        if f.secrets && self.in_entry {
            kinds.push((4, 13));
            if f.buffers {
                kinds.push((2, 14));
            }
        }
        if f.faulting && !self.fault_planted && self.in_entry && depth == 0 && !env.bufs.is_empty() && self.chance(0.3) {
            return self.fault(env);
        }
        let total: u32 = kinds.iter().map(|(w, _)| w).sum();
        let mut pick = self.rng.gen_range(0..total);
        let kind = kinds.iter().find(|(w, _)| if pick < *w { true } else { pick -= w; false }).expect("kind").1;
        match kind {
            1 => {
                let t = self.rec_ty();
                let e = self.value_of(env, &t);
                let x = self.bind_content(env, &t, "r");
                Box::new(move |rest| LExpr::Let(x, t, Box::new(e), Box::new(rest)))
            }
            2 => {
                let t = self.elem_ty();
                let min = if matches!(t, Ty::MutStruct(_)) { 2 } else { 1 };
                let len = self.rng.gen_range(min..=5);
                let init = self.value_of(env, &t.content());
                let x = self.fresh(env, "b");
                env.bufs.push(BufVar { name: x.clone(), elem: t.clone(), len });
                Box::new(move |rest| LExpr::NewBuf(x, len, Box::new(init), t, Box::new(rest)))
            }
            3 => {
                let b = env.bufs.choose(&mut self.rng).expect("bufs").clone();
                let i = self.index(env, b.len);
                let t = b.elem.content();
                let x = self.bind_content(env, &t, "v");
                Box::new(move |rest| LExpr::ReadBuf(x, t, Box::new(LExpr::Var(b.name)), Box::new(i), Box::new(rest)))
            }
            4 => {
                let b = env.bufs.choose(&mut self.rng).expect("bufs").clone();
                let i = self.index(env, b.len);
                let v = self.value_of(env, &b.elem.content());
                Box::new(move |rest| {
                    LExpr::WriteBuf(Box::new(LExpr::Var(b.name)), Box::new(i), Box::new(v), Box::new(rest))
                })
            }
            5 => {
                let b = env.bufs.choose(&mut self.rng).expect("bufs").clone();
                let k = self.rng.gen_range(0..b.len);
                let x = self.fresh(env, "s");
                let t = Ty::buf(b.elem.clone());
                env.bufs.push(BufVar { name: x.clone(), elem: b.elem.clone(), len: b.len - k });
                let e = LExpr::SubBuf(Box::new(LExpr::Var(b.name)), Box::new(LExpr::ConstInt(k as i32)));
                Box::new(move |rest| LExpr::Let(x, t, Box::new(e), Box::new(rest)))
            }
            6 => {
                let t = if self.chance(0.5) { flat_struct() } else { nested_struct() };
                let init = self.value_of(env, &t.content());
                let x = self.fresh(env, "st");
                env.structs.push((x.clone(), t.clone()));
                Box::new(move |rest| LExpr::NewStruct(x, Box::new(init), t, Box::new(rest)))
            }
            7 => {
                let (s, t) = env.structs.choose(&mut self.rng).expect("structs").clone();
                let ct = t.content();
                let x = self.bind_content(env, &ct, "r");
                Box::new(move |rest| LExpr::ReadStruct(x, ct, Box::new(LExpr::Var(s)), Box::new(rest)))
            }
            8 => {
                let (s, t) = env.structs.choose(&mut self.rng).expect("structs").clone();
                let v = self.value_of(env, &t.content());
                Box::new(move |rest| LExpr::WriteStruct(Box::new(LExpr::Var(s)), Box::new(v), Box::new(rest)))
            }
            9 => {
                let nested: Vec<_> = env.structs.iter().filter(|(_, t)| t.field("inner").is_some()).cloned().collect();
                let (s, t) = nested.choose(&mut self.rng).expect("nested").clone();
                let ft = t.field("inner").expect("inner").clone();
                let x = self.fresh(env, "fl");
                env.structs.push((x.clone(), ft.clone()));
                let e = LExpr::StructField(Box::new(LExpr::Var(s)), "inner".into());
                Box::new(move |rest| LExpr::Let(x, ft, Box::new(e), Box::new(rest)))
            }
            10 => {
                let inner = self.sub_block(env, budget, depth);
                Box::new(move |rest| LExpr::LetAnon(Box::new(LExpr::WithFrame(Box::new(inner))), Box::new(rest)))
            }
            11 => {
                let c = self.int_expr(env, 2);
                let framed = self.chance(0.7);
                let a = self.sub_block(env, budget, depth);
                let b = if self.chance(0.2) { LExpr::ConstUnit } else { self.sub_block(env, budget, depth) };
                let wrap = |e: LExpr| if framed { LExpr::WithFrame(Box::new(e)) } else { e };
                let e = LExpr::If(Box::new(c), Box::new(wrap(a)), Box::new(wrap(b)));
                Box::new(move |rest| LExpr::LetAnon(Box::new(e), Box::new(rest)))
            }
            12 => self.call(env),
            13 => {
                let x = self.fresh(env, "l");
                let e = if env.limbs.is_empty() || self.chance(0.2) {
                    let arg = self.int_expr(env, 1);
                    LExpr::App(x.clone(), limb(), "limb_of".into(), Box::new(arg), Box::new(LExpr::ConstUnit))
                } else {
                    let op = *["land", "lor", "lxor", "ladd", "lsub", "eq_mask", "gte_mask"]
                        .choose(&mut self.rng)
                        .expect("prims");
                    let a = self.value_of(env, &limb());
                    let b = self.value_of(env, &limb());
                    let arg = LExpr::RecordLit(vec![("a".into(), a), ("b".into(), b)]);
                    LExpr::App(x.clone(), limb(), op.into(), Box::new(arg), Box::new(LExpr::ConstUnit))
                };
                env.limbs.push(x);
                Box::new(move |rest| match e {
                    LExpr::App(x, t, f, a, _) => LExpr::App(x, t, f, a, Box::new(rest)),
                    _ => unreachable!(),
                })
            }
            14 => {
                let len = self.rng.gen_range(1..=4);
                let init = self.value_of(env, &limb());
                let x = self.fresh(env, "lb");
                env.bufs.push(BufVar { name: x.clone(), elem: limb(), len });
                Box::new(move |rest| LExpr::NewBuf(x, len, Box::new(init), limb(), Box::new(rest)))
            }
            _ => {
                let e = self.int_expr(env, 2);
                let x = self.bind_content(env, &Ty::Int, "x");
                Box::new(move |rest| LExpr::Let(x, Ty::Int, Box::new(e), Box::new(rest)))
            }
        }
    }

    /// An out-of-bounds read or write on a top-level entry buffer.
    fn fault(&mut self, env: &mut Env) -> Stmt {
        self.fault_planted = true;
        let b = env.bufs.choose(&mut self.rng).expect("bufs").clone();
        let i = LExpr::ConstInt((b.len + self.rng.gen_range(0..3)) as i32);
        if self.chance(0.5) {
            let t = b.elem.content();
            let x = self.bind_content(env, &t, "v");
            Box::new(move |rest| LExpr::ReadBuf(x, t, Box::new(LExpr::Var(b.name)), Box::new(i), Box::new(rest)))
        } else {
            let v = self.value_of(env, &b.elem.content());
            Box::new(move |rest| LExpr::WriteBuf(Box::new(LExpr::Var(b.name)), Box::new(i), Box::new(v), Box::new(rest)))
        }
    }

    /// A nested block ending in `()`. Names continue from the parent's
    /// counter, so sibling blocks reuse names.
    fn sub_block(&mut self, env: &Env, budget: &mut usize, depth: u32) -> LExpr {
        let mut inner = env.clone();
        let n = self.rng.gen_range(1..=(*budget).clamp(1, 4));
        *budget = budget.saturating_sub(n);
        let mut b = n;
        self.chain(&mut inner, &mut b, depth + 1, &Ty::Unit)
    }

    /// Statements until the budget runs out, then a final expression of `t`.
    fn chain(&mut self, env: &mut Env, budget: &mut usize, depth: u32, t: &Ty) -> LExpr {
        let mut stmts = vec![];
        while *budget > 0 {
            stmts.push(self.stmt(env, budget, depth));
        }
        let mut e = self.tail(env, t, depth);
        while let Some(s) = stmts.pop() {
            e = s(e);
        }
        e
    }

    fn tail(&mut self, env: &mut Env, t: &Ty, depth: u32) -> LExpr {
        if self.f.conditionals && depth < 3 && *t != Ty::Unit && self.chance(0.15) {
            let c = self.int_expr(env, 2);
            let mut b1 = self.rng.gen_range(0..3);
            let a = self.chain(&mut env.clone(), &mut b1, depth + 1, t);
            let mut b2 = self.rng.gen_range(0..3);
            let b = self.chain(&mut env.clone(), &mut b2, depth + 1, t);
            return LExpr::If(Box::new(c), Box::new(a), Box::new(b));
        }
        self.value_of(env, t)
    }

    // -- calls --------------------------------------------------------------

    fn call(&mut self, env: &mut Env) -> Stmt {
        let recurse = self.self_call.is_some() && (self.funs.is_empty() || self.chance(0.5));
        let (sig, self_counter) = match self.self_call.clone() {
            Some(sc) if recurse => (sc.sig, Some(sc.counter)),
            _ => (self.funs.choose(&mut self.rng).expect("funs").clone(), None),
        };
        // buffers long enough for each buffer field; allocate when missing
        let mut pre: Vec<Stmt> = vec![];
        let mut fields = vec![];
        let Ty::Record(pfs) = &sig.param_ty else { unreachable!("record parameters") };
        for (f, ft) in pfs {
            let e = match ft {
                Ty::Buf(_) => {
                    let need = sig.buf_fields.iter().find(|(g, _)| g == f).expect("buf field").1;
                    let ok: Vec<BufVar> =
                        env.bufs.iter().filter(|b| b.elem == Ty::Int && b.len >= need).cloned().collect();
                    match ok.choose(&mut self.rng) {
                        Some(b) => LExpr::Var(b.name.clone()),
                        None => {
                            let x = self.fresh(env, "b");
                            let init = self.int_expr(env, 1);
                            env.bufs.push(BufVar { name: x.clone(), elem: Ty::Int, len: need });
                            let x2 = x.clone();
                            pre.push(Box::new(move |rest| {
                                LExpr::NewBuf(x2, need, Box::new(init), Ty::Int, Box::new(rest))
                            }));
                            LExpr::Var(x)
                        }
                    }
                }
                _ if f == "n" && sig.recursive => match &self_counter {
                    Some(n) => LExpr::PrimOp(PrimOp::Sub, Box::new(LExpr::Var(n.clone())), Box::new(LExpr::ConstInt(1))),
                    None => {
                        if !env.ints.is_empty() && self.chance(0.4) {
                            let v = LExpr::Var(env.ints.choose(&mut self.rng).expect("ints").clone());
                            LExpr::PrimOp(PrimOp::And, Box::new(v), Box::new(LExpr::ConstInt(3)))
                        } else {
                            LExpr::ConstInt(self.rng.gen_range(0..4))
                        }
                    }
                },
                t => self.value_of(env, t),
            };
            fields.push((f.clone(), e));
        }
        let arg = LExpr::RecordLit(fields);
        let discard = sig.ret == Ty::Unit || self.chance(0.2);
        let x = if discard { "_".to_string() } else { self.bind_content(env, &sig.ret, "c") };
        let (f, t) = (sig.name, sig.ret);
        Box::new(move |rest| {
            let mut e = LExpr::App(x, t, f, Box::new(arg), Box::new(rest));
            for p in pre.into_iter().rev() {
                e = p(e);
            }
            e
        })
    }

    // -- functions ----------------------------------------------------------

    fn function(&mut self, k: usize, size: usize) -> LDecl {
        let recursive = self.f.recursion && self.chance(0.4);
        let name = format!("f{k}");
        let mut pfs: Vec<(Name, Ty)> = vec![];
        let mut buf_fields = vec![];
        if recursive {
            pfs.push(("n".into(), Ty::Int));
        }
        pfs.push(("a".into(), Ty::Int));
        if self.f.buffers && self.chance(0.6) {
            let need = self.rng.gen_range(1..=3);
            pfs.push(("data".into(), Ty::buf(Ty::Int)));
            buf_fields.push(("data".to_string(), need));
        }
        if self.f.records && self.chance(0.5) {
            pfs.push(("r".into(), pair()));
        }
        let param_ty = Ty::Record(pfs.clone());
        let mut rets = vec![Ty::Int, Ty::Unit];
        if self.f.struct_returns {
            rets.extend([pair(), pair()]);
        }
        let ret = rets.choose(&mut self.rng).expect("ret").clone();
        let sig = FunSig { name: name.clone(), param_ty: param_ty.clone(), ret: ret.clone(), buf_fields, recursive };

        // unpack the parameter into locals
        let mut env = Env::default();
        let mut unpack: Vec<Stmt> = vec![];
        for (f, t) in &pfs {
            let x = self.fresh(&mut env, "p");
            match t {
                Ty::Int => env.ints.push(x.clone()),
                Ty::Buf(_) => {
                    let need = sig.buf_fields.iter().find(|(g, _)| g == f).expect("field").1;
                    env.bufs.push(BufVar { name: x.clone(), elem: Ty::Int, len: need });
                }
                t => env.recs.push((x.clone(), t.clone())),
            }
            let (t, f) = (t.clone(), f.clone());
            unpack.push(Box::new(move |rest| {
                LExpr::Let(x, t, Box::new(LExpr::Proj(Box::new(LExpr::Var("p".into())), f)), Box::new(rest))
            }));
        }
        let counter = env.ints.first().cloned().expect("first field is an int");
        let mut budget = self.rng.gen_range(1..=size.max(1));
        let body = if recursive {
            // if n < 1 then base else (… recursive call …)
            let base = self.value_of(&env, &ret);
            self.self_call = Some(SelfCall { sig: sig.clone(), counter: counter.clone() });
            let mut step_env = env.clone();
            let call = self.call(&mut step_env);
            self.self_call = None;
            let before = self.chain(&mut step_env, &mut budget, 1, &ret);
            let step = call(before);
            let c = LExpr::PrimOp(PrimOp::Lt, Box::new(LExpr::Var(counter)), Box::new(LExpr::ConstInt(1)));
            LExpr::If(Box::new(c), Box::new(base), Box::new(step))
        } else {
            self.chain(&mut env, &mut budget, 0, &ret)
        };
        let mut body = body;
        while let Some(s) = unpack.pop() {
            body = s(body);
        }
        self.funs.push(sig);
        LDecl::Fun { name, param: "p".into(), param_ty, ret_ty: ret, body: LExpr::WithFrame(Box::new(body)) }
    }
}

/// Generate a well-typed, compilable program. Deterministic in `seed`.
pub fn gen_program(seed: u64, size: usize, f: Features) -> GenProgram {
    assert!(size > 0, "size budget must be positive");
    let mut g =
        Gen { rng: ChaCha8Rng::seed_from_u64(seed), f, funs: vec![], fault_planted: false, in_entry: false, self_call: None };
    let mut decls = vec![];
    if f.functions {
        let n = g.rng.gen_range(0..=3);
        for k in 0..n {
            decls.push(g.function(k, size / 4));
        }
    }
    if f.records && g.chance(0.3) {
        let v = g.rng.gen_range(-5..50);
        decls.push(LDecl::Val { name: "g0".into(), ty: Ty::Int, value: Value::IntV(v) });
    }
    g.in_entry = true;
    let mut env = Env::default();
    // secret-parametric programs take no public inputs
    if !f.secrets {
        env.ints.extend(INPUTS.iter().map(|s| s.to_string()));
    }
    if decls.iter().any(|d| d.name() == "g0") {
        env.ints.push("g0".into());
    }
    let mut secrets = vec![];
    if f.secrets {
        env.limbs.extend(SECRETS.iter().map(|s| s.to_string()));
        secrets = SECRETS.iter().map(|s| (s.to_string(), limb())).collect();
    }
    let ret = if f.int_result {
        Ty::Int
    } else if f.secrets && g.chance(0.5) {
        Ty::Record(vec![("pub".into(), Ty::Int), ("sec".into(), limb())])
    } else {
        [Ty::Int, Ty::Int, Ty::Unit, pair()].choose(&mut g.rng).expect("ret").clone()
    };
    let ret = if !f.records && ret.is_record() && !f.secrets { Ty::Int } else { ret };
    let mut budget = size;
    // a buffer up front gives the fault somewhere to land
    let mut lead: Option<Stmt> = None;
    if f.faulting && f.buffers {
        let len = g.rng.gen_range(1..=4);
        let init = g.int_expr(&env, 1);
        let x = g.fresh(&mut env, "b");
        env.bufs.push(BufVar { name: x.clone(), elem: Ty::Int, len });
        lead = Some(Box::new(move |rest| LExpr::NewBuf(x, len, Box::new(init), Ty::Int, Box::new(rest))));
    }
    let mut body = g.chain(&mut env, &mut budget, 0, &ret);
    if f.faulting && !g.fault_planted && !env.bufs.is_empty() {
        // no statement drew the fault: read past the end just before the result
        let b = env.bufs[0].clone();
        let i = LExpr::ConstInt(b.len as i32);
        body = LExpr::ReadBuf(
            "oob".into(),
            b.elem.content(),
            Box::new(LExpr::Var(b.name)),
            Box::new(i),
            Box::new(body),
        );
    }
    if let Some(l) = lead {
        body = l(body);
    }
    let entry = LExpr::WithFrame(Box::new(body));
    let program = LProgram { decls, entry: Some(entry.clone()) };
    let mut env_ty = TypeEnv::default();
    if f.secrets {
        let iface = masking_interface();
        env_ty = TypeEnv { var_env: env_ty.var_env, ..iface.type_env() };
        env_ty.var_env.extend(secrets.iter().cloned());
    }
    if !f.secrets {
        env_ty.var_env.extend(INPUTS.iter().map(|s| (s.to_string(), Ty::Int)));
    }
    let elaborated = match typecheck(&program, &env_ty) {
        Ok(p) => p,
        Err(e) => panic!("generator produced an ill-typed program (seed {seed}): {e}"),
    };
    let candidates = if f.secrets { 1 } else { INPUT_CANDIDATES };
    let inputs = (0..candidates)
        .map(|_| {
            INPUTS
                .iter()
                .filter(|_| !f.secrets)
                .map(|x| {
                    let v = if g.chance(0.5) { g.rng.gen_range(-8..=8) } else { g.rng.gen() };
                    (x.to_string(), Value::IntV(v))
                })
                .collect::<BTreeMap<_, _>>()
        })
        .collect();
    GenProgram { program: elaborated, entry, inputs, secrets }
}
