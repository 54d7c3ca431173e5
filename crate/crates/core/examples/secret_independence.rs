//! Check masked code against random secret pairs, and catch a leak.
use kremlite::ast::parse_program;
use kremlite::harness::{check_secret_independence, parse_iface, random_pairs};

fn main() {
    let iface = parse_iface(include_str!("../corpus/limb.iface")).unwrap();
    let p = parse_program(include_str!("../corpus/normalize.lows")).unwrap();
    let pairs = random_pairs(&iface, 100, 1).unwrap();
    let v = check_secret_independence(&p, p.entry.as_ref().unwrap(), &iface, &pairs, 100_000).unwrap();
    println!("normalize: {:?} ({})", v.status, v.notes.join("; "));

    let leaky = parse_iface(include_str!("../corpus/leaky.iface")).unwrap();
    let p = parse_program(include_str!("../corpus/leaky_index.lows")).unwrap();
    let pairs = random_pairs(&leaky, 100, 1).unwrap();
    let v = check_secret_independence(&p, p.entry.as_ref().unwrap(), &leaky, &pairs, 100_000).unwrap();
    let d = v.first_divergence.unwrap();
    println!("leaky_index: {:?} at event {}: {:?} vs {:?}", v.status, d.index, d.left, d.right);

    // branching on an abstract secret does not even type-check
    let branchy = parse_program("entry withframe (let m:limb = land {a = s0, b = s1} in if m then 1 else 0)").unwrap();
    match check_secret_independence(&branchy, branchy.entry.as_ref().unwrap(), &iface, &[], 1000) {
        Err(e) => println!("branch on secret: {e}"),
        Ok(v) => println!("branch on secret: {:?}", v.status),
    }
}
