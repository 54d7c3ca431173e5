use super::{compare_outcomes, locate_low, Status, Subst, Verdict};
use crate::ast::{LDecl, LExpr, LProgram, Name, Parser, SyntaxError, Ty, Value};
use crate::lowsem::{run_low, typecheck, TypeEnv, TypeError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Primitive {
    pub name: Name,
    pub param: Name,
    pub param_ty: Ty,
    pub ret_ty: Ty,
    /// Implementation over the concrete representation types.
    pub body: LExpr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SecretInterface {
    pub abstract_types: BTreeMap<Name, Ty>,
    pub primitives: Vec<Primitive>,
    pub secret_vars: BTreeMap<Name, Ty>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IfaceError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("interface: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SecretError {
    #[error("type error: {0}")]
    TypecheckFailure(#[from] TypeError),
    #[error("primitive `{primitive}` is not secret independent")]
    PrimitiveNotSecretIndependent { primitive: Name, verdict: Box<Verdict> },
    #[error("secret `{0}` has a type with no literal values")]
    UnsupportedSecret(Name),
}

/// Parse an interface file:
///
/// ```text
/// abstract limb = int
/// secret key : limb
/// primitive fun eq_mask (p : {a : limb, b : limb}) : limb = 0 - (p.a == p.b)
/// ```
pub fn parse_iface(src: &str) -> Result<SecretInterface, IfaceError> {
    let mut p = Parser::new(src)?;
    let mut iface = SecretInterface::default();
    while !p.at_eof() {
        if p.eat_kw("abstract") {
            let n = p.ident()?;
            p.expect_sym("=")?;
            let t = p.ty()?;
            if t.mentions_abstract() {
                return Err(IfaceError::Invalid(format!("representation of `{n}` must be concrete")));
            }
            iface.abstract_types.insert(n, t);
        } else if p.eat_kw("secret") {
            let x = p.ident()?;
            p.expect_sym(":")?;
            iface.secret_vars.insert(x, p.ty()?);
        } else if p.eat_kw("primitive") {
            p.expect_kw("fun")?;
            let LDecl::Fun { name, param, param_ty, ret_ty, body } = p.fun_rest()? else { unreachable!() };
            iface.primitives.push(Primitive { name, param, param_ty, ret_ty, body });
        } else {
            return p.error("expected `abstract`, `secret` or `primitive`").map_err(Into::into);
        }
    }
    iface.validate()?;
    Ok(iface)
}

fn signature_ok(t: &Ty, delta: &BTreeMap<Name, Ty>) -> bool {
    match t {
        Ty::Int | Ty::Unit => true,
        Ty::Abstract(n) => delta.contains_key(n),
        Ty::Record(fs) => fs.iter().all(|(_, t)| signature_ok(t, delta)),
        Ty::Buf(_) | Ty::MutStruct(_) => false,
    }
}

impl SecretInterface {
    fn validate(&self) -> Result<(), IfaceError> {
        for p in &self.primitives {
            if !signature_ok(&p.param_ty, &self.abstract_types) || !signature_ok(&p.ret_ty, &self.abstract_types) {
                return Err(IfaceError::Invalid(format!(
                    "primitive `{}` may only mention declared abstract types, int, unit and records of those",
                    p.name
                )));
            }
        }
        for (x, t) in &self.secret_vars {
            if !signature_ok(t, &self.abstract_types) {
                return Err(IfaceError::Invalid(format!("secret `{x}` has an unsupported type {t}")));
            }
        }
        Ok(())
    }

    pub fn expand(&self, t: &Ty) -> Ty {
        t.expand(&|n| self.abstract_types.get(n).cloned())
    }

    /// Typing context: primitives at their abstract signatures, secrets at
    /// their declared types.
    pub fn type_env(&self) -> TypeEnv {
        TypeEnv {
            abstract_iface: self.primitives.iter().map(|p| (p.name.clone(), (p.param_ty.clone(), p.ret_ty.clone()))).collect(),
            var_env: self.secret_vars.clone(),
            ..TypeEnv::default()
        }
    }

    fn primitive_decl(&self, p: &Primitive) -> LDecl {
        let body = match &p.body {
            b @ LExpr::WithFrame(_) => b.clone(),
            b => LExpr::WithFrame(Box::new(b.clone())),
        };
        LDecl::Fun {
            name: p.name.clone(),
            param: p.param.clone(),
            param_ty: self.expand(&p.param_ty),
            ret_ty: self.expand(&p.ret_ty),
            body: expand_expr(&body, self),
        }
    }
}

/// The masking interface used by the demo and the generator: limbs are
/// ints, and every operation on them is branch-free.
pub fn masking_interface() -> SecretInterface {
    parse_iface(MASKING).expect("built-in interface parses")
}

const MASKING: &str = "
abstract limb = int
primitive fun limb_of (x : int) : limb = x
primitive fun land (p : {a : limb, b : limb}) : limb = p.a & p.b
primitive fun lor (p : {a : limb, b : limb}) : limb = p.a | p.b
primitive fun lxor (p : {a : limb, b : limb}) : limb = p.a ^ p.b
primitive fun ladd (p : {a : limb, b : limb}) : limb = p.a + p.b
primitive fun lsub (p : {a : limb, b : limb}) : limb = p.a - p.b
primitive fun eq_mask (p : {a : limb, b : limb}) : limb = 0 - (p.a == p.b)
primitive fun gte_mask (p : {a : limb, b : limb}) : limb = (p.a < p.b) - 1
";

// ---------------------------------------------------------------------------
// Expansion to concrete types

fn expand_expr(e: &LExpr, iface: &SecretInterface) -> LExpr {
    use LExpr::*;
    let x = |e: &LExpr| Box::new(expand_expr(e, iface));
    let t = |t: &Ty| iface.expand(t);
    match e {
        ConstInt(_) | ConstUnit | Var(_) | Loc(..) => e.clone(),
        RecordLit(fs) => RecordLit(fs.iter().map(|(f, e)| (f.clone(), expand_expr(e, iface))).collect()),
        Proj(a, f) => Proj(x(a), f.clone()),
        StructField(a, f) => StructField(x(a), f.clone()),
        SubBuf(a, b) => SubBuf(x(a), x(b)),
        If(a, b, c) => If(x(a), x(b), x(c)),
        Let(n, ty, a, b) => Let(n.clone(), t(ty), x(a), x(b)),
        LetAnon(a, b) => LetAnon(x(a), x(b)),
        App(n, ty, f, a, b) => App(n.clone(), t(ty), f.clone(), x(a), x(b)),
        NewBuf(n, k, a, ty, b) => NewBuf(n.clone(), *k, x(a), t(ty), x(b)),
        ReadBuf(n, ty, a, i, b) => ReadBuf(n.clone(), t(ty), x(a), x(i), x(b)),
        WriteBuf(a, i, v, b) => WriteBuf(x(a), x(i), x(v), x(b)),
        NewStruct(n, a, ty, b) => NewStruct(n.clone(), x(a), t(ty), x(b)),
        ReadStruct(n, ty, a, b) => ReadStruct(n.clone(), t(ty), x(a), x(b)),
        WriteStruct(a, v, b) => WriteStruct(x(a), x(v), x(b)),
        WithFrame(a) => WithFrame(x(a)),
        Pop(a) => Pop(x(a)),
        PrimOp(op, a, b) => PrimOp(*op, x(a), x(b)),
    }
}

/// The program with abstract types replaced by their representations and
/// the primitives linked in as ordinary functions (placed first).
pub fn expand_program(p: &LProgram, iface: &SecretInterface) -> LProgram {
    let mut decls: Vec<LDecl> = iface.primitives.iter().map(|pr| iface.primitive_decl(pr)).collect();
    for d in &p.decls {
        decls.push(match d {
            LDecl::Fun { name, param, param_ty, ret_ty, body } => LDecl::Fun {
                name: name.clone(),
                param: param.clone(),
                param_ty: iface.expand(param_ty),
                ret_ty: iface.expand(ret_ty),
                body: expand_expr(body, iface),
            },
            LDecl::Val { name, ty, value } => LDecl::Val { name: name.clone(), ty: iface.expand(ty), value: value.clone() },
        });
    }
    LProgram { decls, entry: p.entry.as_ref().map(|e| expand_expr(e, iface)) }
}

// ---------------------------------------------------------------------------
// Secret inputs

fn random_int(rng: &mut ChaCha8Rng) -> i32 {
    // small values make branch outcomes on secrets likely to differ
    if rng.gen_bool(0.5) {
        rng.gen_range(-3..=3)
    } else {
        rng.gen()
    }
}

fn random_value(t: &Ty, rng: &mut ChaCha8Rng) -> Option<Value> {
    Some(match t {
        Ty::Int => Value::IntV(random_int(rng)),
        Ty::Unit => Value::UnitV,
        Ty::Record(fs) => {
            let mut out = Vec::with_capacity(fs.len());
            for (f, t) in fs {
                out.push((f.clone(), random_value(t, rng)?));
            }
            Value::RecordV(out)
        }
        _ => return None,
    })
}

/// `n` seeded pairs of secret assignments at the representation types.
pub fn random_pairs(iface: &SecretInterface, n: usize, seed: u64) -> Result<Vec<(Subst, Subst)>, SecretError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pair = (Subst::new(), Subst::new());
        for (x, t) in &iface.secret_vars {
            let t = iface.expand(t);
            for side in [&mut pair.0, &mut pair.1] {
                let v = random_value(&t, &mut rng).ok_or_else(|| SecretError::UnsupportedSecret(x.clone()))?;
                side.insert(x.clone(), v);
            }
        }
        out.push(pair);
    }
    Ok(out)
}

/// Equal except under abstract types.
fn equiv_mod_secrets(a: &Value, b: &Value, t: &Ty) -> bool {
    match (a, b, t) {
        (_, _, Ty::Abstract(_)) => true,
        (Value::RecordV(xs), Value::RecordV(ys), Ty::Record(ts)) => {
            xs.len() == ys.len()
                && xs.iter().zip(ys).zip(ts).all(|(((f, x), (g, y)), (_, t))| f == g && equiv_mod_secrets(x, y, t))
        }
        _ => a == b,
    }
}

// ---------------------------------------------------------------------------
// The check

/// Run the entry on each pair of secret assignments and require identical
/// traces and outcome kinds, and results equal modulo secrets. When a pair
/// diverges, each primitive is tested alone on related inputs so that a
/// leaky primitive takes the blame.
pub fn check_secret_independence(
    p: &LProgram,
    entry: &LExpr,
    iface: &SecretInterface,
    pairs: &[(Subst, Subst)],
    fuel: u64,
) -> Result<Verdict, SecretError> {
    let mut src = p.clone();
    src.entry = Some(entry.clone());
    let typed = typecheck(&src, &iface.type_env())?;
    let entry_ty = typed.entry_ty.clone().unwrap_or(Ty::Unit);
    let concrete = typecheck(&expand_program(&src, iface), &TypeEnv {
        var_env: iface.secret_vars.iter().map(|(x, t)| (x.clone(), iface.expand(t))).collect(),
        ..TypeEnv::default()
    })?;
    let centry = concrete.program.entry.clone().expect("entry");
    let mut merged = Verdict::pass();
    for (i, (r1, r2)) in pairs.iter().enumerate() {
        let l = run_low(&concrete, &centry, r1, fuel);
        let r = run_low(&concrete, &centry, r2, fuel);
        let mut v = compare_outcomes(l, r, &|a, b| equiv_mod_secrets(a, b, &entry_ty));
        if v.status == Status::Fail {
            if let Some(d) = &mut v.first_divergence {
                d.case = Some(i);
                d.left_at = locate_low(&concrete, &centry, r1, d.index, fuel);
                d.right_at = locate_low(&concrete, &centry, r2, d.index, fuel);
            }
            v.notes.insert(0, format!("secret pair {i} distinguishable"));
            blame_primitives(iface, fuel)?;
            return Ok(v);
        }
        if v.status == Status::PassWithWarning {
            merged.status = Status::PassWithWarning;
            merged.notes.extend(v.notes.iter().map(|n| format!("pair {i}: {n}")));
        }
        if i == 0 {
            merged.left = v.left;
            merged.right = v.right;
        }
    }
    merged.notes.push(format!("{} secret pairs checked", pairs.len()));
    Ok(merged)
}

/// Values of `t` related modulo secrets: public parts shared, abstract
/// parts drawn independently.
fn related_values(t: &Ty, iface: &SecretInterface, rng: &mut ChaCha8Rng) -> Option<(Value, Value)> {
    Some(match t {
        Ty::Abstract(_) => {
            let rt = iface.expand(t);
            (random_value(&rt, rng)?, random_value(&rt, rng)?)
        }
        Ty::Record(fs) => {
            let (mut a, mut b) = (vec![], vec![]);
            for (f, t) in fs {
                let (x, y) = related_values(t, iface, rng)?;
                a.push((f.clone(), x));
                b.push((f.clone(), y));
            }
            (Value::RecordV(a), Value::RecordV(b))
        }
        t => {
            let v = random_value(t, rng)?;
            (v.clone(), v)
        }
    })
}

const PRIMITIVE_TRIALS: usize = 32;

fn blame_primitives(iface: &SecretInterface, fuel: u64) -> Result<(), SecretError> {
    let linked = typecheck(&expand_program(&LProgram::default(), iface), &TypeEnv::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for prim in &iface.primitives {
        let call = LExpr::WithFrame(Box::new(LExpr::App(
            "r".into(),
            iface.expand(&prim.ret_ty),
            prim.name.clone(),
            Box::new(LExpr::Var("arg".into())),
            Box::new(LExpr::Var("r".into())),
        )));
        for _ in 0..PRIMITIVE_TRIALS {
            let Some((a, b)) = related_values(&prim.param_ty, iface, &mut rng) else { break };
            let l = run_low(&linked, &call, &[("arg".to_string(), a)].into(), fuel);
            let r = run_low(&linked, &call, &[("arg".to_string(), b)].into(), fuel);
            let v = compare_outcomes(l, r, &|x, y| equiv_mod_secrets(x, y, &prim.ret_ty));
            if v.status == Status::Fail {
                return Err(SecretError::PrimitiveNotSecretIndependent { primitive: prim.name.clone(), verdict: Box::new(v) });
            }
        }
    }
    Ok(())
}
