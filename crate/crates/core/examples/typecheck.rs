//! Parse a program, type-check it and show the inferred entry type.
use kremlite::ast::parse_program;
use kremlite::lowsem::{typecheck, TypeEnv};

const SRC: &str = "
fun sum (p : {b : buf int, n : int}) : int =
  withframe (
    let x:int = readbuf p.b 0 in
    let y:int = readbuf p.b 1 in
    x + y + p.n)

entry withframe (
  let b = newbuf 2 (20:int) in
  let r:int = sum {b = b, n = 2} in
  r)
";

fn main() {
    let p = parse_program(SRC).expect("parses");
    let typed = typecheck(&p, &TypeEnv::default()).expect("well typed");
    for (f, (a, r)) in &typed.sigs {
        println!("{f} : {a} -> {r}");
    }
    println!("entry : {}", typed.entry_ty.unwrap());

    let bad = parse_program("entry withframe (let r:{a:int} = {a = 2} in 1 + r)").unwrap();
    match typecheck(&bad, &TypeEnv::default()) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
}
