//! Runs the numerical self-check suites, as `aesthetic-mtl verify` does.
//!
//! ```text
//! cargo run --release --example verify
//! ```

use aesthetic_mtl::verify::{run, VerifyOptions};

fn main() -> aesthetic_mtl::Result<()> {
    let mut failed = false;
    for outcome in run(&VerifyOptions::default())? {
        println!("{outcome}");
        failed |= !outcome.passed;
    }
    if failed {
        std::process::exit(1);
    }
    Ok(())
}
