use super::*;
use crate::ast::*;
use std::collections::BTreeMap;

const BUF7: &str = "withframe (let x = newbuf 2 (0:int) in let _ = writebuf x 1 7 in let y:int = readbuf x 1 in y)";

fn elab(src: &str) -> ElaboratedLProgram {
    typecheck(&parse_program(src).unwrap(), &TypeEnv::default()).unwrap()
}

fn run(src: &str, fuel: u64) -> Outcome {
    let p = elab(src);
    run_low(&p, p.program.entry.as_ref().unwrap(), &BTreeMap::new(), fuel)
}

fn w(b: u64, n: i64) -> TraceEvent {
    TraceEvent::concrete(EventKind::Write, b, n, vec![], Ty::Int)
}

#[test]
fn typechecks_branch_on_int() {
    elab("fun f (x:int):int = withframe (if x then 1 else 0)");
}

#[test]
fn branching_on_abstract_is_misuse() {
    let p = parse_program("entry if s then 1 else 0").unwrap();
    let env = TypeEnv { var_env: [("s".to_string(), Ty::Abstract("limb".into()))].into(), ..Default::default() };
    assert!(matches!(typecheck(&p, &env), Err(TypeError::AbstractMisuse { .. })));
}

#[test]
fn unit_index_is_type_error() {
    let p = parse_program("entry withframe (let b = newbuf 1 (0:int) in let v:int = readbuf b () in v)").unwrap();
    match typecheck(&p, &TypeEnv::default()) {
        Err(TypeError::Mismatch { expected, found, .. }) => {
            assert_eq!(expected, "int");
            assert_eq!(found, "unit");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unbound_identifier() {
    let p = parse_program("entry y").unwrap();
    assert!(matches!(typecheck(&p, &TypeEnv::default()), Err(TypeError::UnboundIdentifier { .. })));
}

#[test]
fn if_zero_steps_to_else_with_brf() {
    let p = elab("");
    let code = LowCode::new(&p);
    let mut c = LConfig::new(parse_expr("if 0 then 1 else 2").unwrap());
    match step_low(&code, &mut c) {
        LStep::Stepped(evs) => assert_eq!(evs, vec![TraceEvent::branch(false)]),
        _ => panic!(),
    }
    assert_eq!(c.expr(), LExpr::ConstInt(2));
}

#[test]
fn buf7_trace() {
    let out = run(&format!("entry {BUF7}"), DEFAULT_FUEL);
    let read = TraceEvent::concrete(EventKind::Read, 0, 1, vec![], Ty::Int);
    assert_eq!(out, Outcome::Terminates { value: Value::IntV(7), trace: vec![w(0, 0), w(0, 1), w(0, 1), read] });
}

#[test]
fn read_after_pop_is_dead_block() {
    let src = "fun mk (u:unit) : buf int = withframe (let b = newbuf 1 (3:int) in b)
               entry withframe (let b : buf int = mk () in let v : int = readbuf b 0 in v)";
    match run(src, 1000) {
        Outcome::GoesWrong { diag, .. } => assert!(diag.contains("dead block"), "{diag}"),
        o => panic!("{o:?}"),
    }
}

#[test]
fn unit_entry_terminates_immediately() {
    assert_eq!(run("entry ()", 10), Outcome::Terminates { value: Value::UnitV, trace: vec![] });
}

#[test]
fn self_recursion_times_out() {
    let out = run("fun loop (x:int):int = withframe (let y:int = loop x in y)\nentry let r:int = loop 1 in r", 5000);
    assert!(matches!(out, Outcome::Timeout { .. }));
}

#[test]
fn deep_recursion_does_not_overflow() {
    let src = "fun down (n:int):int = withframe (if n < 1 then 0 else let r:int = down (n - 1) in r + 1)
               entry let r:int = down 50000 in r";
    assert_eq!(run(src, 10_000_000).value(), Some(&Value::IntV(50000)));
}

#[test]
fn newbuf_outside_frame_is_stuck() {
    let p = elab("");
    let out = run_low(&p, &parse_expr("let b = newbuf 1 (0:int) in ()").unwrap(), &BTreeMap::new(), 10);
    assert!(matches!(out, Outcome::GoesWrong { ref diag, .. } if diag.contains("no enclosing frame")));
}

#[test]
fn structs_and_field_locations() {
    let src = "entry withframe (
        let s = newstruct ({a = 1, inner = {c = 2}} : struct {a:int, inner: struct {c:int}}) in
        let _ = writestruct (&s->inner) {c = 5} in
        let r : {a:int, inner:{c:int}} = readstruct s in
        r.inner.c + r.a)";
    let out = run(src, 1000);
    assert_eq!(out.value(), Some(&Value::IntV(6)));
    let t = out.trace();
    assert_eq!(t.len(), 3);
    assert_eq!(t[1].loc, Some(LocationLabel::Concrete { block: 0, offset: 0, path: vec!["inner".into()] }));
    assert_eq!(t[1].elem_ty, Some(Ty::Record(vec![("c".into(), Ty::Int)])));
}

#[test]
fn frame_balance_holds_during_run() {
    let p = elab("fun f (n:int):int = withframe (let b = newbuf 1 (n:int) in let v:int = readbuf b 0 in v)");
    let code = LowCode::new(&p);
    let mut c = LConfig::new(parse_expr("withframe (let a:int = f 3 in let _ = withframe 1 in a)").unwrap());
    loop {
        assert_eq!(c.pending_pops(), c.stack.len());
        match step_low(&code, &mut c) {
            LStep::Stepped(_) => {}
            LStep::Done(v) => {
                assert_eq!(v, Value::IntV(3));
                break;
            }
            LStep::Stuck(s) => panic!("{s}"),
        }
    }
}

#[test]
fn globals_are_inlined() {
    let out = run("val k : int = 40\nfun f (x:int):int = withframe (x + k)\nentry let r:int = f 2 in r", 100);
    assert_eq!(out.value(), Some(&Value::IntV(42)));
}

#[test]
fn runs_are_deterministic() {
    let a = run(&format!("entry {BUF7}"), 100);
    let b = run(&format!("entry {BUF7}"), 100);
    assert_eq!(trace_to_jsonl(a.trace()), trace_to_jsonl(b.trace()));
}
