//! Generate random programs and check each one end to end.
use kremlite::ast::pretty_lowstar;
use kremlite::harness::{check_equivalence, gen_program, Features, Status};

fn main() {
    let g = gen_program(7, 15, Features::safe());
    println!("{}", pretty_lowstar(&g.program.program).unwrap());
    let mut ok = 0;
    for seed in 0..100 {
        let g = gen_program(seed, 40, Features::faulting());
        let v = check_equivalence(&g.program, &g.entry, &g.inputs[0], 100_000).unwrap();
        ok += (v.status != Status::Fail) as usize;
    }
    println!("faulting programs agreeing on outcome and trace: {ok}/100");
}
