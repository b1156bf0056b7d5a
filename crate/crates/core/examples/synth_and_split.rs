//! Synthetic dataset generation, persistence and the seeded split.
//!
//! ```text
//! cargo run --example synth_and_split -- [out_dir]
//! ```

use std::path::PathBuf;

use aesthetic_mtl::data::{load_dataset, split, synth_generate, write_dataset, SplitSpec, SynthConfig};
use aesthetic_mtl::metrics::pcc;
use aesthetic_mtl::Dimension;

fn main() -> aesthetic_mtl::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "runs/synth-example".into()));
    let records = synth_generate(&SynthConfig::default())?;
    write_dataset(&out, &records)?;
    let loaded = load_dataset(&out)?;
    assert_eq!(loaded.len(), records.len());

    let means = |d: Dimension| -> Vec<f64> { loaded.iter().map(|r| r.targets[d as usize].mean_score()).collect() };
    let overall = means(Dimension::Overall);
    for d in Dimension::ALL {
        println!("PCC({}, Overall) = {:.3}", d.title(), pcc(&means(d), &overall)?);
    }

    let (train, val, test) = split(loaded, &SplitSpec::default())?;
    println!("split: {} train / {} val / {} test", train.len(), val.len(), test.len());
    println!("first test ids: {:?}", test.iter().take(3).map(|r| &r.id).collect::<Vec<_>>());
    println!("dataset in {}", out.display());
    Ok(())
}
