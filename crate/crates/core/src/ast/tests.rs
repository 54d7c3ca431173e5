use super::*;

#[test]
fn parses_smallest_function() {
    let p = parse_program("fun id (x:int) : int = withframe x").unwrap();
    assert_eq!(
        p.decls,
        vec![LDecl::Fun {
            name: "id".into(),
            param: "x".into(),
            param_ty: Ty::Int,
            ret_ty: Ty::Int,
            body: LExpr::WithFrame(Box::new(LExpr::Var("x".into()))),
        }]
    );
}

#[test]
fn parses_literal_expression() {
    assert_eq!(parse_expr("42").unwrap(), LExpr::ConstInt(42));
    assert_eq!(parse_expr("-7").unwrap(), LExpr::ConstInt(-7));
}

#[test]
fn missing_let_body_is_a_syntax_error() {
    let err = parse_expr("let x = newbuf 2 (0:int) in readbuf x 5").unwrap_err();
    assert!(err.message.contains("expected"), "{err}");
    assert!(parse_expr("let x = newbuf 2 (0:int) in").is_err());
}

#[test]
fn round_trips_id() {
    let p = parse_program("fun id (x:int) : int = withframe x").unwrap();
    let text = pretty_lowstar(&p).unwrap();
    assert_eq!(parse_program(&text).unwrap(), p);
}

#[test]
fn prints_record_literal() {
    let e = lx::record(vec![("left", lx::int(1)), ("right", lx::int(2))]);
    assert_eq!(pretty_lexpr(&e).unwrap(), "{left = 1, right = 2}");
}

#[test]
fn refuses_internal_constructs() {
    assert_eq!(pretty_lexpr(&LExpr::Loc(0, 0, vec![])), Err(InternalConstructError("loc")));
    assert!(pretty_lexpr(&LExpr::Pop(Box::new(lx::unit()))).is_err());
}

#[test]
fn precedence_and_negatives_round_trip() {
    for src in [
        "1 + 2 * 3",
        "(1 + 2) * 3",
        "1 - (2 - 3)",
        "a - -5",
        "(a < b) == 1",
        "x & 3 | y ^ 1",
        "let r : int = f (-1) in r",
        "let y : int = f in y",
        "&(&s->a)->b",
        "subbuf (subbuf b 1) 2",
        "(if c then 1 else 2) + 3",
        "let _ : unit = f {a = 1, b = {c = 2}} in ()",
        "withframe (let x = newstruct ({a = 1} : struct {a:int}) in let v : {a:int} = readstruct x in v.a)",
    ] {
        let e = parse_expr(src).unwrap();
        let printed = pretty_lexpr(&e).unwrap();
        assert_eq!(parse_expr(&printed).unwrap(), e, "{src} => {printed}");
    }
}

#[test]
fn comparison_does_not_chain() {
    assert!(parse_expr("a < b < c").is_err());
}

#[test]
fn types_parse() {
    assert_eq!(parse_ty("buf {a:int, b:limb}").unwrap(), Ty::buf(Ty::Record(vec![("a".into(), Ty::Int), ("b".into(), Ty::Abstract("limb".into()))])));
    assert!(Ty::Record(vec![("a".into(), Ty::Int), ("a".into(), Ty::Unit)]).check_valid().is_err());
}

#[test]
fn trace_json_shape() {
    let e = TraceEvent::concrete(EventKind::Write, 0, 1, vec![], Ty::Int);
    assert_eq!(e.to_json().to_string(), r#"{"b":0,"ev":"write","fds":[],"n":1,"ty":"int"}"#);
    assert_eq!(TraceEvent::branch(false).to_json().to_string(), r#"{"ev":"brF"}"#);
}

#[test]
fn json_document_round_trips() {
    let p = parse_program("val k : int = 3\nfun f (x:int) : int = withframe (x + k)\nentry let r : int = f 1 in r").unwrap();
    assert_eq!(lowstar_from_json(&lowstar_to_json(&p)).unwrap(), p);
}
