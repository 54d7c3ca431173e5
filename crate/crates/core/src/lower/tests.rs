use super::*;
use crate::ast::{parse_expr, parse_program, Outcome};
use crate::csem::{run_cstar, step_cstar, CCode, CStep, EventModel};
use crate::lowsem::{run_low, typecheck, TypeEnv};
use std::collections::BTreeMap;

fn elab(src: &str) -> ElaboratedLProgram {
    typecheck(&parse_program(src).unwrap(), &TypeEnv::default()).unwrap()
}

fn both(src: &str) -> (Outcome, Outcome) {
    let p = elab(src);
    let out = compile_program(&p).unwrap();
    let low = run_low(&p, p.program.entry.as_ref().unwrap(), &BTreeMap::new(), 100_000);
    let c = run_cstar(&out.program, &BTreeMap::new(), &out.entry, 100_000, EventModel::Concrete);
    (low, c)
}

#[test]
fn readbuf_becomes_read_of_pointer_sum() {
    let e = parse_expr("let x:int = readbuf b i in x").unwrap();
    let ss = compile_stmts(&e).unwrap();
    assert_eq!(
        ss,
        vec![
            CStmt::ReadStmt(
                Ty::Int,
                "x".into(),
                CExpr::PtrAdd(Box::new(CExpr::var("b")), Box::new(CExpr::var("i")))
            ),
            CStmt::Return(CExpr::var("x")),
        ]
    );
}

#[test]
fn function_without_withframe_is_rejected() {
    let p = elab("fun f (y:int):int = y");
    match compile_program(&p) {
        Err(LowerError::NotCompilable { reason, .. }) => assert_eq!(reason, CompileReason::MissingWithFrameAtTopLevel),
        other => panic!("{other:?}"),
    }
}

#[test]
fn entry_block_shape_and_round_trip() {
    let e = parse_expr("withframe (let x = newbuf 1 (0:int) in let r:int = readbuf x 0 in r)").unwrap();
    let ss = compile_stmts(&e).unwrap();
    let CStmt::Block(inner) = &ss[0] else { panic!("{ss:?}") };
    assert!(matches!(inner[0], CStmt::ArrDecl(Ty::Int, _, 1)));
    assert!(matches!(inner[1], CStmt::Memset(_, 1, CExpr::ConstInt(0))));
    assert!(matches!(inner[2], CStmt::ReadStmt(..)));
    assert_eq!(inner[3], CStmt::Return(CExpr::var("r")));
    assert_eq!(back_translate(&ss).unwrap(), e);
}

#[test]
fn block_statement_back_translates_to_anonymous_frame() {
    let ss = vec![CStmt::Block(vec![CStmt::ExprStmt(CExpr::ConstInt(1))]), CStmt::Return(CExpr::ConstInt(2))];
    assert_eq!(back_translate(&ss).unwrap(), parse_expr("let _ = withframe 1 in 2").unwrap());
}

#[test]
fn lone_array_declaration_is_not_back_translatable() {
    let ss = vec![CStmt::ArrDecl(Ty::Int, "x".into(), 3), CStmt::Return(CExpr::ConstUnit)];
    assert!(matches!(back_translate(&ss), Err(LowerError::NotBackTranslatable(_))));
}

#[test]
fn value_position_frames_are_rejected() {
    let e = parse_expr("let x:int = withframe 1 in x").unwrap();
    match compile_stmts(&e) {
        Err(LowerError::NotCompilable { reason, .. }) => assert_eq!(reason, CompileReason::WithFrameInValuePosition),
        other => panic!("{other:?}"),
    }
    let e = parse_expr("let x:int = (let y:int = 1 in y) in x").unwrap();
    assert!(matches!(
        compile_stmts(&e),
        Err(LowerError::NotCompilable { reason: CompileReason::EffectfulSubexpression, .. })
    ));
}

const PROG: &str = "
fun sum (p:{b:buf int, n:int}) : int = withframe (
  if p.n < 1 then 0 else
  let v:int = readbuf p.b (p.n - 1) in
  let r:int = sum {b = p.b, n = p.n - 1} in
  v + r)
fun fill (b:buf int) : unit = withframe (
  let _ = writebuf b 0 3 in
  let _ = writebuf b 1 4 in ())
entry withframe (
  let b = newbuf 3 (1:int) in
  let _ : unit = fill b in
  let s = newstruct ({a = 1, c = 2} : struct {a:int, c:int}) in
  let _ = writestruct s {a = 5, c = 6} in
  let q:{a:int, c:int} = readstruct s in
  let _ = if q.a < 5 then withframe (let t = newbuf 1 (0:int) in ()) else () in
  let r:int = sum {b = b, n = 3} in
  r + q.c)";

#[test]
fn traces_agree_between_machines() {
    let (low, c) = both(PROG);
    assert_eq!(low.value(), Some(&Value::IntV(14)));
    assert_eq!(low, c);
}

#[test]
fn program_round_trip() {
    let p = elab(PROG);
    let out = compile_program(&p).unwrap();
    let back = back_translate_program(&out.program, &out.entry).unwrap();
    assert_eq!(back, p.program);
}

#[test]
fn source_map_covers_every_statement() {
    let p = elab(PROG);
    let out = compile_program(&p).unwrap();
    let mut count = 0;
    for f in out.program.funs() {
        crate::ast::walk_stmts(&f.body, &mut |_| count += 1);
    }
    crate::ast::walk_stmts(&out.entry, &mut |_| count += 1);
    assert_eq!(out.source_map.len(), count);
}

#[test]
fn unravel_initial_config_is_entry() {
    let p = elab(PROG);
    let out = compile_program(&p).unwrap();
    let c = CConfig::new(Default::default(), out.entry.clone(), EventModel::Concrete);
    assert_eq!(&unravel(&c).unwrap(), p.program.entry.as_ref().unwrap());
}

#[test]
fn unravel_after_block_step_has_pop() {
    let e = parse_expr("withframe (let x = newbuf 1 (0:int) in let r:int = readbuf x 0 in r)").unwrap();
    let ss = compile_stmts(&e).unwrap();
    let code = CCode::new(&CProgram::default(), &ss);
    let mut c = CConfig::new(Default::default(), ss, EventModel::Concrete);
    assert!(matches!(step_cstar(&code, &mut c), CStep::Stepped(_)));
    let LExpr::WithFrame(inner) = e else { unreachable!() };
    assert_eq!(unravel(&c).unwrap(), LExpr::Pop(inner));
}

#[test]
fn unravel_rejects_foreign_statements() {
    let c = CConfig::new(
        Default::default(),
        vec![CStmt::ArrDecl(Ty::Int, "x".into(), 1), CStmt::Return(CExpr::ConstUnit)],
        EventModel::Concrete,
    );
    assert!(unravel(&c).is_err());
}
