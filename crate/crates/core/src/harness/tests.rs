use super::*;
use crate::ast::{parse_expr, parse_program, EventKind, Ty};
use crate::lower::back_translate_program;
use crate::lowsem::{run_low, typecheck, TypeEnv};
use crate::passes::{disambiguate, hoist, is_hoisted};

const BUF7: &str = "withframe (let x = newbuf 2 (0:int) in let _ = writebuf x 1 7 in let y:int = readbuf x 1 in y)";

fn elaborate(src: &str) -> (ElaboratedLProgram, LExpr) {
    let p = typecheck(&parse_program(src).unwrap(), &TypeEnv::default()).unwrap();
    let e = p.program.entry.clone().unwrap();
    (p, e)
}

fn w(b: u64) -> TraceEvent {
    TraceEvent::concrete(EventKind::Write, b, 0, vec![], Ty::Int)
}

#[test]
fn identical_traces_pass() {
    let t = vec![w(0), TraceEvent::branch(true)];
    assert_eq!(diff_traces(&t, &t, Modulo::Literal).status, Status::Pass);
}

#[test]
fn block_renaming_only_under_rename_blocks() {
    let (a, b) = (vec![w(0)], vec![w(1)]);
    assert_eq!(diff_traces(&a, &b, Modulo::RenameBlocks).status, Status::Pass);
    let v = diff_traces(&a, &b, Modulo::Literal);
    assert_eq!(v.status, Status::Fail);
    assert_eq!(v.first_divergence.unwrap().index, 0);
}

#[test]
fn branch_mismatch_fails_at_zero() {
    let v = diff_traces(&[TraceEvent::branch(true), w(0)], &[TraceEvent::branch(false), w(0)], Modulo::Literal);
    let d = v.first_divergence.unwrap();
    assert_eq!((d.index, d.left.unwrap().kind, d.right.unwrap().kind), (0, EventKind::BrT, EventKind::BrF));
}

#[test]
fn buf7_machines_agree() {
    let (p, e) = elaborate(&format!("entry {BUF7}"));
    let v = check_equivalence(&p, &e, &Subst::new(), 10_000).unwrap();
    assert_eq!(v.status, Status::Pass);
    let l = v.left.unwrap();
    assert_eq!(l.trace().len(), 4);
    assert_eq!(l.value(), Some(&Value::IntV(7)));
    assert_eq!(v.right.unwrap().trace(), l.trace());
}

#[test]
fn out_of_bounds_goes_wrong_on_both_sides() {
    let (p, e) = elaborate("entry withframe (let x = newbuf 2 (1:int) in let y:int = readbuf x 5 in y)");
    let v = check_equivalence(&p, &e, &Subst::new(), 10_000).unwrap();
    assert_eq!(v.status, Status::Pass);
    assert_eq!(v.left.as_ref().unwrap().kind(), "goes_wrong");
    assert_eq!(v.right.as_ref().unwrap().kind(), "goes_wrong");
    assert_eq!(v.left.unwrap().trace().len(), 2);
}

#[test]
fn unit_entry_passes_with_empty_traces() {
    let (p, e) = elaborate("entry ()");
    let v = check_equivalence(&p, &e, &Subst::new(), 10).unwrap();
    assert_eq!(v.status, Status::Pass);
    assert!(v.left.unwrap().trace().is_empty());
}

#[test]
fn timeout_with_matching_prefix_warns() {
    let (p, e) = elaborate("fun loop (x:int) : int = withframe (let _ = if x then () else () in let y:int = loop x in y)
entry withframe (let r:int = loop 1 in r)");
    let v = check_equivalence(&p, &e, &Subst::new(), 500).unwrap();
    assert_eq!(v.status, Status::PassWithWarning, "{:?}", v.notes);
}

#[test]
fn not_compilable_is_an_error() {
    let (p, e) = elaborate("fun f (x:int) : int = x\nentry withframe (let y:int = f 1 in y)");
    assert!(check_equivalence(&p, &e, &Subst::new(), 100).is_err());
}

const IF_ELSE: &str = "fun f (c:int) : int = withframe (
  if c then withframe (let x = newbuf 1 (18:int) in let v:int = readbuf x 0 in v)
  else withframe (let x = newbuf 1 (42:int) in let v:int = readbuf x 0 in v + 1))
entry withframe (let a:int = f 1 in let b:int = f 0 in a + b)";

fn lowered(src: &str) -> (CProgram, Vec<CStmt>) {
    let (p, _) = elaborate(src);
    let out = compile_program(&p).unwrap();
    (out.program, out.entry)
}

#[test]
fn hoisting_the_if_else_example_passes() {
    let (p, e) = lowered(IF_ELSE);
    let (p1, e1, _) = disambiguate(&p, &e);
    let v = check_pass(&p1, &e1, "hoist", 10_000, &[]).unwrap();
    assert_eq!(v.status, Status::Pass);
    assert_eq!(v.left.unwrap().value(), Some(&Value::IntV(61)));
}

#[test]
fn struct_return_passes_under_c4() {
    let src = "fun mk (n:int) : {a:int, b:int} = withframe ({a = n, b = n + 1})
entry withframe (let p:{a:int, b:int} = mk 2 in let q:{a:int, b:int} = mk p.b in p.a + q.b)";
    let (p, e) = lowered(src);
    let (p1, e1, _) = disambiguate(&p, &e);
    let (p2, e2, _) = hoist(&p1, &e1).unwrap();
    let v = check_pass(&p2, &e2, "struct_return", 10_000, &[]).unwrap();
    assert_eq!(v.status, Status::Pass, "{:?}", v.first_divergence);
    assert_eq!(v.left.unwrap().value(), Some(&Value::IntV(6)));
}

#[test]
fn broken_hoist_is_caught() {
    let (p, e) = lowered(IF_ELSE);
    let (p1, e1, _) = disambiguate(&p, &e);
    let (mut p2, e2, _) = hoist(&p1, &e1).unwrap();
    assert!(is_hoisted(&p2, &e2));
    // move the else branch's initializer out of its branch, in front of the if
    for f in p2.funs_mut() {
        let [CStmt::Block(inner)] = f.body.as_mut_slice() else { panic!() };
        let at = inner.iter().position(|s| matches!(s, CStmt::IfStmt(..))).unwrap();
        let CStmt::IfStmt(_, _, els) = &mut inner[at] else { unreachable!() };
        let [CStmt::Block(b)] = els.as_mut_slice() else { panic!("{els:?}") };
        let ms = b.iter().position(|s| matches!(s, CStmt::Memset(..))).unwrap();
        let m = b.remove(ms);
        inner.insert(at, m);
    }
    let t = Transform { source: (&p1, &e1), target: (&p2, &e2), models: pass_models("hoist") };
    let v = check_transform(&t, 10_000, &[]);
    assert_eq!(v.status, Status::Fail);
    let d = v.first_divergence.unwrap();
    assert_eq!(d.index, 0);
    assert!(d.right_at.as_ref().unwrap().contains("memset"), "{d:?}");
}

// ---------------------------------------------------------------------------
// Secret independence

const NORMALIZE: &str = include_str!("../../corpus/normalize.lows");
const LIMB: &str = include_str!("../../corpus/limb.iface");

fn secret_check(src: &str, iface: &SecretInterface, pairs: usize) -> Result<Verdict, SecretError> {
    let p = parse_program(src).unwrap();
    let e = p.entry.clone().unwrap();
    let pairs = random_pairs(iface, pairs, 7)?;
    check_secret_independence(&p, &e, iface, &pairs, 100_000)
}

#[test]
fn masked_normalize_is_secret_independent() {
    let iface = parse_iface(LIMB).unwrap();
    let v = secret_check(NORMALIZE, &iface, 100).unwrap();
    assert_eq!(v.status, Status::Pass, "{:?}", v.first_divergence);
}

#[test]
fn branching_on_a_secret_is_rejected_by_typing() {
    let iface = parse_iface(LIMB).unwrap();
    let src = "entry withframe (let a = newbuf 1 (0:int) in if s0 then () else ())";
    assert!(matches!(secret_check(src, &iface, 4), Err(SecretError::TypecheckFailure(_))));
}

#[test]
fn leaky_branch_diverges_at_the_branch() {
    let iface = parse_iface("secret key : int").unwrap();
    let src = "entry withframe (let a = newbuf 1 (0:int) in let b = newbuf 1 (0:int) in
      let _ = if key then (let _ = writebuf a 0 1 in ()) else (let _ = writebuf b 0 1 in ()) in ())";
    let v = secret_check(src, &iface, 50).unwrap();
    assert_eq!(v.status, Status::Fail);
    let d = v.first_divergence.unwrap();
    assert_eq!(d.index, 2);
    let kinds = (d.left.unwrap().kind, d.right.unwrap().kind);
    assert!(matches!(kinds, (EventKind::BrT, EventKind::BrF) | (EventKind::BrF, EventKind::BrT)));
}

#[test]
fn equal_secrets_always_pass() {
    let iface = parse_iface("secret key : int").unwrap();
    let src = "entry withframe (let a = newbuf 2 (0:int) in let v:int = readbuf a (key & 1) in v)";
    let p = parse_program(src).unwrap();
    let e = p.entry.clone().unwrap();
    let pairs: Vec<_> = random_pairs(&iface, 20, 1).unwrap().into_iter().map(|(a, _)| (a.clone(), a)).collect();
    let v = check_secret_independence(&p, &e, &iface, &pairs, 10_000).unwrap();
    assert_eq!(v.status, Status::Pass);
}

#[test]
fn leaky_primitive_is_blamed() {
    let iface = parse_iface(
        "abstract limb = int
secret s : limb
primitive fun bad (x : limb) : limb = withframe (let a = newbuf 2 (0:int) in let v:int = readbuf a (x & 1) in v)",
    )
    .unwrap();
    let src = "entry withframe (let r:limb = bad s in r)";
    match secret_check(src, &iface, 50) {
        Err(SecretError::PrimitiveNotSecretIndependent { primitive, .. }) => assert_eq!(primitive, "bad"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn results_compared_modulo_secrets() {
    let iface = parse_iface(LIMB).unwrap();
    let src = "entry withframe (let m:limb = land {a = s0, b = s1} in {pub = 3, sec = m})";
    assert_eq!(secret_check(src, &iface, 20).unwrap().status, Status::Pass);
}

#[test]
fn iface_rejects_buffers_in_primitive_signatures() {
    assert!(parse_iface("abstract limb = int\nprimitive fun f (x : buf limb) : int = 0").is_err());
    assert!(parse_iface("primitive fun f (x : limb) : int = 0").is_err());
}

// ---------------------------------------------------------------------------
// Generator

#[test]
fn generator_is_deterministic() {
    let a = gen_program(42, 40, Features::safe());
    let b = gen_program(42, 40, Features::safe());
    assert_eq!(a.program.program, b.program.program);
    assert_eq!(a.inputs, b.inputs);
}

#[test]
fn buffers_only_has_no_struct_constructs() {
    for seed in 0..30 {
        let g = gen_program(seed, 30, Features::buffers_only());
        let mut found = false;
        let check = |e: &LExpr, found: &mut bool| {
            e.walk(&mut |x| {
                if matches!(x, LExpr::NewStruct(..) | LExpr::ReadStruct(..) | LExpr::WriteStruct(..) | LExpr::StructField(..)) {
                    *found = true;
                }
            })
        };
        check(&g.entry, &mut found);
        for d in &g.program.program.decls {
            if let crate::ast::LDecl::Fun { body, .. } = d {
                check(body, &mut found);
            }
        }
        assert!(!found, "seed {seed}");
    }
}

#[test]
fn safe_programs_do_not_go_wrong() {
    for seed in 0..60 {
        let g = gen_program(seed, 40, Features::safe());
        for s in &g.inputs {
            let o = run_low(&g.program, &g.entry, s, 100_000);
            assert_eq!(o.kind(), "terminates", "seed {seed}: {o:?}");
        }
    }
}

#[test]
fn generated_programs_pass_equivalence_and_round_trip() {
    for seed in 0..40 {
        let g = gen_program(seed, 40, Features::safe());
        let v = check_equivalence(&g.program, &g.entry, &g.inputs[0], 100_000).unwrap();
        assert_eq!(v.status, Status::Pass, "seed {seed}: {:?} {:?}", v.first_divergence, v.notes);
        let out = compile_program(&g.program).unwrap();
        let back = back_translate_program(&out.program, &out.entry).unwrap();
        assert_eq!(back, g.program.program, "seed {seed}");
    }
}

#[test]
fn faulting_programs_agree_on_failure() {
    let mut wrong = 0;
    for seed in 0..40 {
        let g = gen_program(seed, 30, Features::faulting());
        let v = check_equivalence(&g.program, &g.entry, &g.inputs[0], 100_000).unwrap();
        assert!(v.passed(), "seed {seed}: {:?}", v.first_divergence);
        wrong += (v.left.unwrap().kind() == "goes_wrong") as usize;
    }
    assert!(wrong > 20, "{wrong}");
}

#[test]
fn secret_programs_pass() {
    for seed in 0..20 {
        let g = gen_program(seed, 30, Features { secrets: true, ..Features::safe() });
        let iface = SecretInterface { secret_vars: g.secrets.iter().cloned().collect(), ..masking_interface() };
        let pairs = random_pairs(&iface, 10, seed).unwrap();
        let v = check_secret_independence(&g.program.program, &g.entry, &iface, &pairs, 100_000).unwrap();
        assert!(v.passed(), "seed {seed}: {:?}", v.first_divergence);
    }
}

#[test]
fn parse_expr_smoke() {
    assert!(parse_expr(BUF7).is_ok());
}
