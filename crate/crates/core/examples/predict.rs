//! Train briefly, checkpoint, reload and predict images.
//!
//! ```text
//! cargo run --release --example predict -- [image...]
//! ```
//!
//! The model trains on a few generated images with known targets; any image
//! paths given are scored with the reloaded checkpoint.

use aesthetic_mtl::data::{
    distribution_with_mean, load_image, to_samples, Preprocess, SampleRecord, Source, Strategy,
};
use aesthetic_mtl::nn::Checkpoint;
use aesthetic_mtl::trainer::{predict, train, TrainConfig};
use aesthetic_mtl::Dimension;
use image::{Rgb, RgbImage};

fn main() -> aesthetic_mtl::Result<()> {
    // brighter images score higher on every dimension
    let records: Vec<SampleRecord> = (0..40u32)
        .map(|i| {
            let level = (i * 6) as u8;
            let img = RgbImage::from_fn(320, 200, |x, _| Rgb([level, level / 2 + (x % 16) as u8, level]));
            let mean = 1.2 + 3.6 * i as f64 / 39.0;
            let d = distribution_with_mean(mean, 0.8)?;
            Ok(SampleRecord { id: format!("img{i:02}"), source: Source::Pixels(img), targets: [d; 4] })
        })
        .collect::<aesthetic_mtl::Result<_>>()?;
    let pre = Preprocess::new(Strategy::PadRescale);
    let samples = to_samples(&records, &pre)?;
    let cfg = TrainConfig { lr: 0.05, epochs: 80, latent_dim: 16, ..TrainConfig::default() };
    let out = train(&cfg, &samples[..32], &samples[32..]).map_err(|e| e.source)?;

    let path = std::env::temp_dir().join("aesthetic-mtl-example.ckpt");
    Checkpoint::new(out.best).save(&path)?;
    let params = Checkpoint::load(&path)?.params;
    println!("checkpoint round trip through {}", path.display());

    let mut images = vec![
        ("dark".to_owned(), RgbImage::from_pixel(320, 200, Rgb([20, 10, 20]))),
        ("bright".to_owned(), RgbImage::from_pixel(320, 200, Rgb([230, 115, 230]))),
    ];
    for p in std::env::args().skip(1) {
        images.push((p.clone(), load_image(p.as_ref())?));
    }
    let imgs: Vec<RgbImage> = images.iter().map(|(_, i)| i.clone()).collect();
    for ((name, _), dists) in images.iter().zip(predict(&params, &imgs, &pre)?) {
        let scores: Vec<String> = Dimension::ALL
            .iter()
            .zip(&dists)
            .map(|(d, s)| format!("{} {:.2}", d.title(), s.mean_score()))
            .collect();
        println!("{name}: {}", scores.join(", "));
    }
    Ok(())
}
