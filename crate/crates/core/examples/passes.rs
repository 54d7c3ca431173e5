//! Run the whole pass pipeline on the struct-erasure benchmark, checking
//! each pass against its event models.
use kremlite::ast::{parse_program, pretty_cstar};
use kremlite::harness::{check_pass, Subst};
use kremlite::lower::compile_program;
use kremlite::lowsem::{typecheck, TypeEnv};
use kremlite::passes::{run_pass, PIPELINE};

fn main() {
    // a short run keeps the checks quick
    let src = include_str!("../corpus/structerase.lows").replace("100000", "10");
    let typed = typecheck(&parse_program(&src).unwrap(), &TypeEnv::default()).unwrap();
    let out = compile_program(&typed).unwrap();
    let (mut p, mut e) = (out.program, out.entry);
    for pass in PIPELINE {
        let v = check_pass(&p, &e, pass, 100_000, &[Subst::new()]).unwrap();
        let (p2, e2, report) = run_pass(pass, &p, &e).unwrap();
        println!("{pass:<14} {:?} {:?}", v.status, report.stats);
        (p, e) = (p2, e2);
    }
    print!("{}", pretty_cstar(&p));
}
