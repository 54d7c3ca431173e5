use super::*;
use crate::ast::{parse_program, Outcome, Value};
use crate::csem::{run_cstar, EventModel};
use crate::lower::compile_program;
use crate::lowsem::{typecheck, TypeEnv};

fn lower(src: &str) -> (CProgram, Vec<CStmt>) {
    let p = typecheck(&parse_program(src).unwrap(), &TypeEnv::default()).unwrap();
    let out = compile_program(&p).unwrap();
    (out.program, out.entry)
}

fn run(p: &CProgram, entry: &[CStmt], model: EventModel) -> Outcome {
    run_cstar(p, &BTreeMap::new(), entry, 100_000, model)
}

fn arrays(ss: &[CStmt]) -> Vec<Name> {
    let mut out = vec![];
    crate::ast::walk_stmts(ss, &mut |s| {
        if let CStmt::ArrDecl(_, x, _) = s {
            out.push(x.clone());
        }
    });
    out
}

const SIBLINGS: &str = "entry withframe (
  let _ = withframe (let x = newbuf 1 (1:int) in ()) in
  let _ = withframe (let x = newbuf 1 (2:int) in let v:int = readbuf x 0 in v) in
  let x:int = 3 in x)";

#[test]
fn sibling_arrays_are_numbered() {
    let (p, e) = lower(SIBLINGS);
    assert!(check_unambiguous(&p, &e).is_err());
    let (p2, e2, report) = disambiguate(&p, &e);
    assert_eq!(arrays(&e2), vec!["x_0", "x_1"]);
    assert_eq!(report.checks["unambiguous"], true);
    assert_eq!(run(&p, &e, EventModel::Concrete), run(&p2, &e2, EventModel::Concrete));
}

#[test]
fn scalar_colliding_with_array_is_renamed() {
    let (p, e) = lower("entry withframe (let y:int = 1 in let _ = withframe (let y = newbuf 1 (0:int) in ()) in y)");
    let (p2, e2, report) = disambiguate(&p, &e);
    assert_eq!(arrays(&e2), vec!["y"]);
    assert_eq!(report.renamings.len(), 1);
    assert_eq!(report.renamings[0].old, "y");
    assert_ne!(report.renamings[0].new, "y");
    assert_eq!(run(&p, &e, EventModel::Concrete), run(&p2, &e2, EventModel::Concrete));
}

#[test]
fn unambiguous_program_is_unchanged() {
    let (p, e) = lower("entry withframe (let b = newbuf 2 (0:int) in let v:int = readbuf b 1 in v)");
    let (p2, e2, report) = disambiguate(&p, &e);
    assert_eq!((p, e), (p2, e2));
    assert!(report.renamings.is_empty());
}

const IF_ELSE: &str = "fun f (c:int) : int = withframe (
  if c then withframe (let x = newbuf 1 (18:int) in let v:int = readbuf x 0 in v)
  else withframe (let x = newbuf 1 (42:int) in let v:int = readbuf x 0 in v + 1))
entry withframe (let a:int = f 1 in let b:int = f 0 in a + b)";

#[test]
fn if_else_arrays_hoisted_with_branch_memsets() {
    let (p, e) = lower(IF_ELSE);
    assert!(matches!(hoist(&p, &e), Err(PassError::AmbiguousVariables(_))));
    let (p1, e1, _) = disambiguate(&p, &e);
    let (p2, e2, report) = hoist(&p1, &e1).unwrap();
    assert_eq!(report.stats["hoisted_arrays"], 2);
    assert!(report.checks["hoisted"]);
    let f = p2.fun("f").unwrap();
    let [CStmt::Block(inner)] = f.body.as_slice() else { panic!() };
    assert!(matches!(&inner[0], CStmt::ArrDecl(_, x, 1) if x == "x_0"));
    assert!(matches!(&inner[1], CStmt::ArrDecl(_, x, 1) if x == "x_1"));
    let mut memsets = 0;
    crate::ast::walk_stmts(&inner[2..], &mut |s| memsets += matches!(s, CStmt::Memset(..)) as usize);
    assert_eq!(memsets, 2);
    let before = run(&p1, &e1, EventModel::AbstractC3);
    let after = run(&p2, &e2, EventModel::AbstractC3);
    assert_eq!(before.value(), Some(&Value::IntV(61)));
    assert_eq!(before, after);
}

#[test]
fn hoisting_changes_concrete_but_not_abstract_traces() {
    let src = "entry withframe (
      let a = newbuf 1 (0:int) in
      let _ = if 0 then withframe (let b = newbuf 1 (1:int) in ()) else () in
      let c = newbuf 1 (2:int) in let v:int = readbuf c 0 in v)";
    let (p, e) = lower(src);
    let (p2, e2, _) = hoist(&p, &e).unwrap();
    assert_ne!(run(&p, &e, EventModel::Concrete), run(&p2, &e2, EventModel::Concrete));
    assert_eq!(run(&p, &e, EventModel::AbstractC3), run(&p2, &e2, EventModel::AbstractC3));
}

#[test]
fn array_free_program_is_only_wrapped() {
    let (p, e) = lower("fun g (x:int) : int = withframe (x + 1) entry let r:int = g 1 in r");
    let (p2, e2, _) = hoist(&p, &e).unwrap();
    assert_eq!(p, p2);
    assert_eq!(e2, vec![CStmt::Block(e)]);
}

const MK: &str = "fun mk (n:int) : {left:int, right:int} = withframe ({left = n, right = n + 1})
fun id (n:int) : int = withframe n
entry withframe (
  let p:{left:int, right:int} = mk 3 in
  let _ : {left:int, right:int} = mk 4 in
  let q:int = id 2 in
  p.right + q)";

#[test]
fn struct_return_adds_out_pointer() {
    let (p, e) = lower(MK);
    let (p1, e1, _) = hoist(&p, &e).unwrap();
    let (p2, e2, report) = struct_return(&p1, &e1).unwrap();
    assert!(report.checks["no_struct_returns"]);
    let mk = p2.fun("mk").unwrap();
    assert_eq!(mk.ret, Ty::Unit);
    assert_eq!(mk.params[0].1, Ty::buf(Ty::Record(vec![("left".into(), Ty::Int), ("right".into(), Ty::Int)])));
    assert_eq!(p2.fun("id"), p1.fun("id"));
    let [CStmt::Block(inner)] = e2.as_slice() else { panic!() };
    assert!(matches!(&inner[0], CStmt::ArrDecl(_, x, 1) if x == "__ret_entry_p"));
    assert!(matches!(&inner[1], CStmt::Call { dst: None, args, .. } if args[0] == CExpr::var("__ret_entry_p")));
    assert!(matches!(&inner[2], CStmt::ReadStmt(_, x, _) if x == "p"));
    assert!(matches!(&inner[3], CStmt::Call { dst: None, args, .. } if args[0] == CExpr::ConstInt(0)));
    let src = run(&p1, &e1, EventModel::AbstractC4);
    let tgt = run(&p2, &e2, EventModel::AbstractC3);
    assert_eq!(src.value(), Some(&Value::IntV(6)));
    assert_eq!(src, tgt);
}

const ERASE: &str = "val iterations : int = 3
fun f (p:{r:{left:int, right:int}, n:int}) : int = withframe (
  if p.n < 1 then p.r.left + p.r.right
  else let q:int = f {r = {left = p.r.right, right = p.r.left + 1}, n = p.n - 1} in q)
entry withframe (
  let s = newstruct ({left = 1, right = 2} : struct {left:int, right:int}) in
  let u:{left:int, right:int} = readstruct s in
  let _ = writestruct s {left = u.right, right = u.left} in
  let w:{left:int, right:int} = readstruct s in
  let b = newbuf 2 ({left = 0, right = 0} : {left:int, right:int}) in
  let _ = writebuf b 1 w in
  let v:int = f {r = w, n = iterations} in v)";

#[test]
fn erase_splits_struct_parameters() {
    let (p, e) = lower(ERASE);
    let (p1, e1, _) = hoist(&p, &e).unwrap();
    let (p2, e2, report) = erase_structs(&p1, &e1).unwrap();
    assert!(report.checks["struct_free"], "{p2:#?}");
    let f = p2.fun("f").unwrap();
    let names: Vec<_> = f.params.iter().map(|(x, _)| x.as_str()).collect();
    assert_eq!(names, vec!["p_r_left", "p_r_right", "p_n"]);
    assert!(report.stats["erased_vars"] >= 3);
    let src = run(&p1, &e1, EventModel::AbstractC5);
    let tgt = run(&p2, &e2, EventModel::AbstractC5);
    assert!(matches!(src, Outcome::Terminates { .. }), "{src:?}");
    assert_eq!(src, tgt);
}

#[test]
fn struct_read_goes_through_pointer_temp() {
    let (p, e) = lower(ERASE);
    let (p1, e1, _) = hoist(&p, &e).unwrap();
    let (_, e2, _) = erase_structs(&p1, &e1).unwrap();
    let mut saw = false;
    crate::ast::walk_stmts(&e2, &mut |s| {
        if let CStmt::VarDecl(Ty::Buf(_), x, _) = s {
            saw |= x == "u_ptr";
        }
    });
    assert!(saw);
    let mut reads = vec![];
    crate::ast::walk_stmts(&e2, &mut |s| {
        if let CStmt::ReadStmt(_, x, _) = s {
            reads.push(x.clone());
        }
    });
    assert_eq!(&reads[..2], &["u_left", "u_right"]);
}

#[test]
fn mangling_is_injective_on_underscores() {
    assert_eq!(mangle("r", &["left".into()]), "r_left");
    assert_ne!(mangle("a_b", &["c".into()]), mangle("a", &["b_c".into()]));
}

#[test]
fn struct_free_program_is_identity_under_erasure() {
    let (p, e) = lower("entry withframe (let b = newbuf 2 (0:int) in let v:int = readbuf b 1 in v)");
    let (p1, e1, _) = hoist(&p, &e).unwrap();
    let (p2, e2, _) = erase_structs(&p1, &e1).unwrap();
    assert_eq!((p1, e1), (p2, e2));
}

#[test]
fn full_pipeline_preserves_results() {
    for src in [MK, ERASE, IF_ELSE, SIBLINGS] {
        let (p, e) = lower(src);
        let stages = pipeline(&p, &e).unwrap();
        let last = stages.last().unwrap();
        assert!(is_struct_free(&last.program, &last.entry));
        assert!(is_hoisted(&last.program, &last.entry));
        let a = run(&p, &e, EventModel::Concrete);
        let b = run(&last.program, &last.entry, EventModel::Concrete);
        assert_eq!(a.value(), b.value());
    }
}
