//! PCC / SCC / RMSE of predicted mean scores per dimension.
//!
//! ```text
//! cargo run --example evaluate
//! ```
//!
//! Shrinks ground-truth distributions toward uniform. The mean score moves
//! affinely toward 3, so PCC and SCC stay at 1 while RMSE grows; then
//! permutes predictions across images to show the correlations collapse.

use aesthetic_mtl::data::{synth_generate, SynthConfig};
use aesthetic_mtl::metrics::{evaluate, Predictions};
use aesthetic_mtl::score_dist::ScoreDistribution;

fn main() -> aesthetic_mtl::Result<()> {
    let records = synth_generate(&SynthConfig { n: 300, ..SynthConfig::default() })?;
    let truth: Predictions = records.iter().map(|r| (r.id.clone(), r.targets)).collect();

    for blend in [0.0, 0.5, 0.9] {
        let pred: Predictions = truth
            .iter()
            .map(|(id, t)| {
                let mixed = t.map(|d| {
                    let p: Vec<f64> = d.probs().iter().map(|v| (1.0 - blend) * v + blend / 5.0).collect();
                    ScoreDistribution::new(&p).expect("convex mix of distributions")
                });
                (id.clone(), mixed)
            })
            .collect();
        let report = evaluate(&pred, &truth)?;
        println!("blend toward uniform {blend}:");
        print!("{}", report.to_pretty());
    }

    let mut shuffled = truth.clone();
    let n = shuffled.len();
    for i in 0..n {
        shuffled[i].1 = truth[(i * 7 + 3) % n].1;
    }
    println!("predictions permuted across images:");
    print!("{}", evaluate(&shuffled, &truth)?.to_pretty());
    Ok(())
}
