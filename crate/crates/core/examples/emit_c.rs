//! Emit C for the masked normalize routine, linked against its interface.
use kremlite::cli::{emit_files, load};
use std::collections::BTreeMap;
use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let l = load(&dir.join("normalize.lows"), Some(&dir.join("limb.iface")), &BTreeMap::new()).unwrap();
    for (name, text) in emit_files(&l, "normalize", false).unwrap() {
        println!("// ---- {name}\n{text}");
    }
}
