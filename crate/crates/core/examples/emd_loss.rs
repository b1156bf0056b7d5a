//! EMD between score distributions and its gradient through softmax.
//!
//! ```text
//! cargo run --example emd_loss
//! ```

use aesthetic_mtl::score_dist::{emd_grad_logits, emd_loss, EmdConfig, ScoreDistribution};

fn main() -> aesthetic_mtl::Result<()> {
    let truth = ScoreDistribution::new(&[0.05, 0.1, 0.2, 0.4, 0.25])?;
    let far = ScoreDistribution::point_mass(1)?;
    let near = ScoreDistribution::new(&[0.05, 0.15, 0.2, 0.35, 0.25])?;

    for r in [1.0, 2.0] {
        let cfg = EmdConfig::new(r)?;
        println!(
            "r={r}: EMD(truth, near) = {:.5}, EMD(truth, point mass at 1) = {:.5}",
            emd_loss(&truth, &near, cfg),
            emd_loss(&truth, &far, cfg)
        );
    }
    println!("mean scores: truth {:.3}, near {:.3}", truth.mean_score(), near.mean_score());

    let logits = [0.0, 0.5, 1.0, 0.2, -0.3];
    let pred = ScoreDistribution::from_logits(&logits)?;
    let g = emd_grad_logits(&truth, &logits, EmdConfig::default())?;
    println!("prediction {:?}", pred.probs());
    println!("dEMD/dlogits {g:?}");
    Ok(())
}
