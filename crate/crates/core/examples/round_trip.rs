//! Compile, then read the C* back as source: the result is the original.
use kremlite::ast::{parse_program, pretty_lowstar};
use kremlite::lower::{back_translate_program, compile_program};
use kremlite::lowsem::{typecheck, TypeEnv};

fn main() {
    let p = parse_program(include_str!("../corpus/structerase.lows")).unwrap();
    let typed = typecheck(&p, &TypeEnv::default()).unwrap();
    let out = compile_program(&typed).unwrap();
    let back = back_translate_program(&out.program, &out.entry).unwrap();
    println!("{}", pretty_lowstar(&back).unwrap());
    println!("identical: {}", back == p);
}
