use super::*;
use crate::ast::{CDecl, PrimOp};

fn v(x: &str) -> CExpr {
    CExpr::var(x)
}

fn add(a: CExpr, n: i32) -> CExpr {
    CExpr::PtrAdd(Box::new(a), Box::new(CExpr::ConstInt(n)))
}

fn buf_int() -> Ty {
    Ty::buf(Ty::Int)
}

fn run(p: &CProgram, entry: Vec<CStmt>, model: EventModel) -> Outcome {
    run_cstar(p, &BTreeMap::new(), &entry, 10_000, model)
}

#[test]
fn ptr_add_offsets_location() {
    let e = add(CExpr::Loc(3, 4, vec![]), 3);
    let got = eval_cexpr(&e, &HashMap::new(), &Vars::new()).unwrap();
    assert_eq!(got, Value::LocV(Loc::new(3, 7)));
}

#[test]
fn ptr_add_rejects_field_location() {
    let e = add(CExpr::Loc(3, 0, vec!["a".into()]), 1);
    assert_eq!(eval_cexpr(&e, &HashMap::new(), &Vars::new()), Err(EvalError::FieldOnNonEmptyMismatch));
}

#[test]
fn memset_then_read_trace() {
    let entry = vec![
        CStmt::Block(vec![
            CStmt::ArrDecl(Ty::Int, "x".into(), 2),
            CStmt::Memset(v("x"), 2, CExpr::ConstInt(0)),
            CStmt::ReadStmt(Ty::Int, "y".into(), add(v("x"), 1)),
        ]),
        CStmt::Return(CExpr::ConstUnit),
    ];
    let out = run(&CProgram::default(), entry, EventModel::Concrete);
    let expected = vec![
        TraceEvent::concrete(EventKind::Write, 0, 0, vec![], Ty::Int),
        TraceEvent::concrete(EventKind::Write, 0, 1, vec![], Ty::Int),
        TraceEvent::concrete(EventKind::Read, 0, 1, vec![], Ty::Int),
    ];
    assert_eq!(out, Outcome::Terminates { value: Value::UnitV, trace: expected });
}

#[test]
fn uninitialized_read_is_stuck() {
    let entry = vec![
        CStmt::Block(vec![
            CStmt::ArrDecl(Ty::Int, "x".into(), 2),
            CStmt::ReadStmt(Ty::Int, "y".into(), v("x")),
        ]),
        CStmt::Return(CExpr::ConstUnit),
    ];
    match run(&CProgram::default(), entry, EventModel::Concrete) {
        Outcome::GoesWrong { diag, .. } => assert!(diag.contains("uninitialized")),
        o => panic!("{o:?}"),
    }
}

#[test]
fn arr_decl_needs_a_block() {
    let entry = vec![CStmt::ArrDecl(Ty::Int, "x".into(), 1), CStmt::Return(CExpr::ConstUnit)];
    match run(&CProgram::default(), entry, EventModel::Concrete) {
        Outcome::GoesWrong { diag, .. } => assert_eq!(diag, CStuck::ArrDeclOutsideBlock.to_string()),
        o => panic!("{o:?}"),
    }
}

#[test]
fn out_of_bounds_write() {
    let entry = vec![
        CStmt::Block(vec![
            CStmt::ArrDecl(Ty::Int, "x".into(), 2),
            CStmt::WriteStmt(add(v("x"), 2), CExpr::ConstInt(1)),
        ]),
        CStmt::Return(CExpr::ConstUnit),
    ];
    assert!(matches!(run(&CProgram::default(), entry, EventModel::Concrete), Outcome::GoesWrong { .. }));
}

#[test]
fn return_with_leftover_statements_is_stuck() {
    let entry = vec![CStmt::Return(CExpr::ConstInt(1)), CStmt::ExprStmt(CExpr::ConstUnit)];
    match run(&CProgram::default(), entry, EventModel::Concrete) {
        Outcome::GoesWrong { diag, .. } => assert_eq!(diag, CStuck::ReturnAtEmptyStack.to_string()),
        o => panic!("{o:?}"),
    }
}

/// `f(n)`: recursive; each activation owns one array `x`.
fn recursive_program() -> CProgram {
    let body = vec![CStmt::Block(vec![
        CStmt::ArrDecl(Ty::Int, "x".into(), 1),
        CStmt::WriteStmt(v("x"), v("n")),
        CStmt::IfStmt(
            v("n"),
            vec![CStmt::Call {
                ty: Ty::Unit,
                dst: None,
                f: "f".into(),
                args: vec![CExpr::PrimOp(PrimOp::Sub, Box::new(v("n")), Box::new(CExpr::ConstInt(1)))],
            }],
            vec![],
        ),
        CStmt::Return(CExpr::ConstUnit),
    ])];
    CProgram {
        decls: vec![CDecl::Fun(CFun { name: "f".into(), params: vec![("n".into(), Ty::Int)], ret: Ty::Unit, body })],
    }
}

#[test]
fn var_of_block_reports_owner_and_depth() {
    let p = recursive_program();
    let entry = vec![
        CStmt::Block(vec![
            CStmt::ArrDecl(Ty::Int, "x".into(), 1),
            CStmt::Call { ty: Ty::Unit, dst: None, f: "f".into(), args: vec![CExpr::ConstInt(2)] },
            CStmt::Return(CExpr::ConstUnit),
        ]),
    ];
    let code = CCode::new(&p, &entry);
    let mut c = CConfig::new(Vars::new(), entry, EventModel::AbstractC3);
    // Run until the innermost activation (n = 0) has allocated its array.
    while c.counter < 4 {
        assert!(matches!(step_cstar(&code, &mut c), CStep::Stepped(_)));
        c.check_invariants().unwrap();
    }
    assert_eq!(var_of_block(&c, 0).unwrap(), (FnRef::Entry, 0, "x".into()));
    assert_eq!(var_of_block(&c, 1).unwrap(), (FnRef::Fun("f".into()), 0, "x".into()));
    assert_eq!(var_of_block(&c, 3).unwrap(), (FnRef::Fun("f".into()), 2, "x".into()));
    let raw = TraceEvent::concrete(EventKind::Write, 3, 0, vec![], Ty::Int);
    let abs = reinterpret_event(&c, &raw).unwrap();
    assert_eq!(
        abs[0].loc,
        Some(LocationLabel::AbstractVar { func: FnRef::Fun("f".into()), depth: 2, var: "x".into(), offset: 0, path: vec![] })
    );
}

#[test]
fn abstract_traces_are_allocation_independent() {
    let p = recursive_program();
    let entry = |pad: bool| {
        let mut ss = vec![];
        if pad {
            ss.push(CStmt::ArrDecl(Ty::Int, "pad".into(), 1));
        }
        ss.push(CStmt::Call { ty: Ty::Unit, dst: None, f: "f".into(), args: vec![CExpr::ConstInt(3)] });
        ss.push(CStmt::Return(CExpr::ConstUnit));
        vec![CStmt::Block(ss)]
    };
    let a = run(&p, entry(false), EventModel::AbstractC3);
    let b = run(&p, entry(true), EventModel::AbstractC3);
    assert_eq!(a, b);
    let ca = run(&p, entry(false), EventModel::Concrete);
    let cb = run(&p, entry(true), EventModel::Concrete);
    assert_ne!(ca, cb);
}

fn pair() -> Ty {
    Ty::Record(vec![("a".into(), Ty::Int), ("b".into(), Ty::Int)])
}

fn struct_returning() -> CProgram {
    let g = CFun {
        name: "g".into(),
        params: vec![],
        ret: pair(),
        body: vec![CStmt::Block(vec![CStmt::Return(CExpr::RecordLit(vec![
            ("a".into(), CExpr::ConstInt(1)),
            ("b".into(), CExpr::ConstInt(2)),
        ]))])],
    };
    CProgram { decls: vec![CDecl::Fun(g)] }
}

#[test]
fn struct_return_events_in_c4_and_c5() {
    let p = struct_returning();
    let entry = vec![
        CStmt::Call { ty: pair(), dst: Some("r".into()), f: "g".into(), args: vec![] },
        CStmt::Call { ty: pair(), dst: None, f: "g".into(), args: vec![] },
        CStmt::Return(CExpr::Proj(Box::new(v("r")), "b".into())),
    ];
    assert_eq!(run(&p, entry.clone(), EventModel::AbstractC3).trace(), &vec![]);
    let c4 = run(&p, entry.clone(), EventModel::AbstractC4);
    let loc = LocationLabel::AbstractVar { func: FnRef::Entry, depth: 0, var: "__ret_entry_r".into(), offset: 0, path: vec![] };
    assert_eq!(
        c4,
        Outcome::Terminates {
            value: Value::IntV(2),
            trace: vec![
                TraceEvent::branch(true),
                TraceEvent::write(loc.clone(), pair()),
                TraceEvent::read(loc.clone(), pair()),
                TraceEvent::branch(false),
            ]
        }
    );
    let c5 = run(&p, entry, EventModel::AbstractC5);
    assert_eq!(c5.trace().len(), 6);
    assert_eq!(c5.trace()[1], TraceEvent::write(loc.with_field("a"), Ty::Int));
    assert_eq!(c5.trace()[4], TraceEvent::read(loc.with_field("b"), Ty::Int));
}

#[test]
fn fun_res_var_avoids_collisions() {
    let used: BTreeSet<Name> = ["__ret_f_x".to_string(), "__ret_f_x_1".to_string()].into();
    assert_eq!(fun_res_var(&FnRef::Fun("f".into()), "x", &used), "__ret_f_x_2");
    assert_eq!(fun_res_var(&FnRef::Entry, "y", &used), "__ret_entry_y");
}

#[test]
fn fuel_exhaustion_is_timeout() {
    let f = CFun {
        name: "loop".into(),
        params: vec![],
        ret: Ty::Unit,
        body: vec![CStmt::Call { ty: Ty::Unit, dst: None, f: "loop".into(), args: vec![] }, CStmt::Return(CExpr::ConstUnit)],
    };
    let p = CProgram { decls: vec![CDecl::Fun(f)] };
    let entry = vec![CStmt::Call { ty: Ty::Unit, dst: None, f: "loop".into(), args: vec![] }, CStmt::Return(CExpr::ConstUnit)];
    assert!(matches!(run_cstar(&p, &BTreeMap::new(), &entry, 500, EventModel::Concrete), Outcome::Timeout { .. }));
}

#[test]
fn dangling_pointer_read_is_dead_block() {
    let g = CFun {
        name: "g".into(),
        params: vec![],
        ret: buf_int(),
        body: vec![CStmt::Block(vec![
            CStmt::ArrDecl(Ty::Int, "x".into(), 1),
            CStmt::Memset(v("x"), 1, CExpr::ConstInt(0)),
            CStmt::Return(v("x")),
        ])],
    };
    let p = CProgram { decls: vec![CDecl::Fun(g)] };
    let entry = vec![
        CStmt::Call { ty: buf_int(), dst: Some("p".into()), f: "g".into(), args: vec![] },
        CStmt::ReadStmt(Ty::Int, "y".into(), v("p")),
        CStmt::Return(v("y")),
    ];
    match run(&p, entry, EventModel::Concrete) {
        Outcome::GoesWrong { diag, .. } => assert!(diag.contains("dead block")),
        o => panic!("{o:?}"),
    }
}
