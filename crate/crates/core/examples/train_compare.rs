//! Paired comparison of linear-uniform and MGDA-UB training on synthetic data.
//!
//! ```text
//! cargo run --release --example train_compare -- [seeds] [epochs] [lr] [first_seed]
//! ```
//!
//! For each seed both modes train on the same dataset, split and
//! initialization. Reports mean validation EMD and held-out SCC of predicted
//! mean scores against the noiseless generating scores.

use aesthetic_mtl::data::{split, synth_generate, to_samples, Preprocess, SampleRecord, Source, SplitSpec, Strategy, SynthConfig};
use aesthetic_mtl::metrics::scc;
use aesthetic_mtl::trainer::{predict_features, train, Mode, TrainConfig};
use aesthetic_mtl::Dimension;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds: u64 = args.first().map_or(Ok(10), |s| s.parse())?;
    let epochs: usize = args.get(1).map_or(Ok(40), |s| s.parse())?;
    let lr: f64 = args.get(2).map_or(Ok(0.01), |s| s.parse())?;
    let first: u64 = args.get(3).map_or(Ok(0), |s| s.parse())?;

    let synth = SynthConfig::default();
    let mut wins = 0;
    let mut totals = [0.0; 2];
    for seed in first..first + seeds {
        let records = synth_generate(&SynthConfig { seed, ..synth.clone() })?;
        let (tr, va, te) = split(records, &SplitSpec { seed, ..SplitSpec::default() })?;
        let pre = Preprocess::new(Strategy::PadRescale);
        let (tr, va) = (to_samples(&tr, &pre)?, to_samples(&va, &pre)?);

        let mut val = [0.0; 2];
        let mut line = format!("seed {seed:2}:");
        for (k, mode) in [Mode::Linear, Mode::MgdaUb].into_iter().enumerate() {
            let cfg = TrainConfig { mode, epochs, lr, seed, ..TrainConfig::default() };
            let out = train(&cfg, &tr, &va)?;
            let best = &out.log.epochs[out.best_epoch - 1];
            val[k] = best.val_loss.iter().sum::<f64>() / best.val_loss.len() as f64;
            let sccs = held_out_scc(&out.best, &te, &synth)?;
            line += &format!(
                "  {:<7} val {:.5} (epoch {:3}) scc {}",
                mode.name(),
                val[k],
                out.best_epoch,
                sccs.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join("/")
            );
        }
        totals[0] += val[0];
        totals[1] += val[1];
        if val[1] <= val[0] {
            wins += 1;
        }
        println!("{line}");
    }
    println!(
        "mean val EMD: linear {:.5}, mgda-ub {:.5}",
        totals[0] / seeds as f64,
        totals[1] / seeds as f64
    );
    println!("mgda-ub <= linear on {wins} of {seeds} seeds");
    Ok(())
}

fn held_out_scc(
    params: &aesthetic_mtl::nn::ModelParams,
    test: &[SampleRecord],
    synth: &SynthConfig,
) -> Result<Vec<f64>, Box<dyn std::error::Error>> {
    let x: Vec<Vec<f64>> = test
        .iter()
        .map(|r| match &r.source {
            Source::Features(f) => f.clone(),
            _ => unreachable!("synthetic records carry features"),
        })
        .collect();
    let pred = predict_features(params, &x)?;
    let mut out = Vec::new();
    for d in Dimension::ALL {
        let t = d as usize;
        let p: Vec<f64> = pred.iter().map(|v| v[t].mean_score()).collect();
        let g: Vec<f64> = x.iter().map(|f| synth.profile.clean_means(f)[t]).collect();
        out.push(scc(&p, &g)?);
    }
    Ok(out)
}
