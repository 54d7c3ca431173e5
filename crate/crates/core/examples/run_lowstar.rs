//! Run the source-level machine and print the memory-event trace.
use kremlite::ast::{parse_program, Value};
use kremlite::lowsem::{run_low, typecheck, TypeEnv};
use std::collections::BTreeMap;

fn main() {
    let src = "entry withframe (
      let x = newbuf 3 (0:int) in
      let _ = if k then (let _ = writebuf x 0 1 in ()) else (let _ = writebuf x 2 1 in ()) in
      let y:int = readbuf x 2 in
      y)";
    let p = parse_program(src).unwrap();
    let env = TypeEnv { var_env: BTreeMap::from([("k".into(), kremlite::ast::Ty::Int)]), ..TypeEnv::default() };
    let typed = typecheck(&p, &env).unwrap();
    for k in [0, 1] {
        let s = BTreeMap::from([("k".to_string(), Value::IntV(k))]);
        let o = run_low(&typed, p.entry.as_ref().unwrap(), &s, 10_000);
        let evs: Vec<String> = o.trace().iter().map(|e| e.to_string()).collect();
        println!("k={k}: {} -> {:?}", evs.join(" "), o.value());
    }
}
