//! Differential check of source against compiled code, and what a
//! reported divergence looks like for a broken transformation.
use kremlite::ast::{parse_program, CStmt};
use kremlite::csem::EventModel;
use kremlite::harness::{check_equivalence, check_transform, Subst, Transform};
use kremlite::lower::compile_program;
use kremlite::lowsem::{typecheck, TypeEnv};

fn main() {
    let p = parse_program(include_str!("../corpus/buf7.lows")).unwrap();
    let typed = typecheck(&p, &TypeEnv::default()).unwrap();
    let v = check_equivalence(&typed, p.entry.as_ref().unwrap(), &Subst::new(), 10_000).unwrap();
    println!("compile: {:?}", v.status);

    // drop the write: traces now differ at event 2
    let out = compile_program(&typed).unwrap();
    let mut broken = out.entry.clone();
    if let CStmt::Block(ss) = &mut broken[0] {
        ss.retain(|s| !matches!(s, CStmt::WriteStmt(..)));
    }
    let t = Transform {
        source: (&out.program, &out.entry),
        target: (&out.program, &broken),
        models: (EventModel::Concrete, EventModel::Concrete),
    };
    let v = check_transform(&t, 10_000, &[Subst::new()]);
    println!("{}", serde_json::to_string_pretty(&v.to_json()).unwrap());
}
