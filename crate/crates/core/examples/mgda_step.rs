//! One MGDA-UB update on a small network.
//!
//! ```text
//! cargo run --example mgda_step
//! ```
//!
//! Computes per-task representation gradients from one shared encoder pass,
//! solves for δ, and takes a momentum step: the encoder follows
//! `Σ δ_t ∇L^t`, every head its own gradient.

use aesthetic_mtl::data::{synth_generate, to_samples, LabeledSample, Preprocess, SampleBatch, Strategy, SynthConfig};
use aesthetic_mtl::moo::{frank_wolfe_min_norm, multi_task_pass, update_direction, FrankWolfeConfig};
use aesthetic_mtl::nn::{apply_update, Architecture, ModelParams};
use aesthetic_mtl::score_dist::EmdConfig;

fn main() -> aesthetic_mtl::Result<()> {
    let records = synth_generate(&SynthConfig { n: 32, ..SynthConfig::default() })?;
    let samples = to_samples(&records, &Preprocess::new(Strategy::PadRescale))?;
    let refs: Vec<&LabeledSample> = samples.iter().collect();
    let batch = SampleBatch::from_samples(&refs, 4)?;

    let mut params = ModelParams::init(Architecture::desk(16), 7)?;
    let mut velocity = vec![0.0; params.arch.total_len()];
    let cfg = EmdConfig::default();

    for step in 1..=5 {
        let pass = multi_task_pass(&params, &batch, cfg)?;
        let report = frank_wolfe_min_norm(&pass.representation_gradients()?, FrankWolfeConfig::default())?;
        println!(
            "step {step}: losses {:.4?} δ {:.3?} ‖Σδ∇‖ {:.2e}",
            pass.losses(),
            report.delta.as_slice(),
            report.combined_norm
        );
        let dir = update_direction(&params, &pass, &report.delta)?;
        apply_update(&mut params, &dir, 0.05, &mut velocity, 0.9)?;
    }
    Ok(())
}
