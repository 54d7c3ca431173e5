//! Lower to C*, print it, and run it under each event model.
use kremlite::ast::{parse_program, pretty_cstar, pretty_cstmts};
use kremlite::csem::{run_cstar, EventModel};
use kremlite::lower::compile_program;
use kremlite::lowsem::{typecheck, TypeEnv};
use std::collections::BTreeMap;

fn main() {
    let src = include_str!("../corpus/buf7.lows");
    let typed = typecheck(&parse_program(src).unwrap(), &TypeEnv::default()).unwrap();
    let out = compile_program(&typed).unwrap();
    print!("{}", pretty_cstar(&out.program));
    println!("entry:\n{}", pretty_cstmts(&out.entry));
    for m in [EventModel::Concrete, EventModel::AbstractC3] {
        let o = run_cstar(&out.program, &BTreeMap::new(), &out.entry, 10_000, m);
        let evs: Vec<String> = o.trace().iter().map(|e| e.to_string()).collect();
        println!("{m:?}: {} -> {:?}", evs.join(" "), o.value());
    }
}
