//! Regenerates the shipped LDPC codes under `codes/`.
//!
//! cargo run --release -p ringshape --example gen_codes

use std::path::PathBuf;

use ringshape::ldpc::{construct, LdpcCode};

const LENGTH: usize = 1872;
const INFO_DEGREE: usize = 3;

fn main() -> ringshape::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("codes");
    for (name, k, seed) in [("r1_2", 936, 12), ("r5_8", 1170, 58), ("r3_4", 1404, 34)] {
        let code = LdpcCode::new(construct::peg_ira(LENGTH, k, INFO_DEGREE, seed))?;
        let path = dir.join(format!("ldpc_{LENGTH}_{name}.alist"));
        std::fs::write(&path, code.to_alist()).map_err(|e| ringshape::Error::io(&path, e))?;
        println!("{} n={} k={}", path.display(), code.n(), code.k());
    }
    Ok(())
}
