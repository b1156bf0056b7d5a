//! Letterboxing and multi-patch extraction.
//!
//! ```text
//! cargo run --example preprocess -- [image] [out_dir]
//! ```
//!
//! Without an image argument a synthetic 600 × 800 gradient is used.

use std::path::PathBuf;

use aesthetic_mtl::data::{letterbox, load_image, multi_patch, PatchConfig, CANVAS_HEIGHT, CANVAS_WIDTH};
use image::{Rgb, RgbImage};

fn main() -> aesthetic_mtl::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let img = match args.first() {
        Some(p) => load_image(p.as_ref())?,
        None => RgbImage::from_fn(800, 600, |x, y| Rgb([(x / 4) as u8, (y / 3) as u8, 128])),
    };
    let out = PathBuf::from(args.get(1).map_or("runs/preprocess", String::as_str));
    std::fs::create_dir_all(&out)?;

    let (canvas, place) = letterbox(&img, CANVAS_HEIGHT, CANVAS_WIDTH)?;
    println!(
        "{}x{} -> canvas {}x{}, content {}x{} at ({}, {})",
        img.width(),
        img.height(),
        canvas.width(),
        canvas.height(),
        place.width,
        place.height,
        place.left,
        place.top
    );
    canvas.save(out.join("letterbox.png"))?;

    let cfg = PatchConfig { with_global: true, seed: 3, ..PatchConfig::default() };
    for (i, p) in multi_patch(&img, &cfg)?.iter().enumerate() {
        let kind = if p.global { "global" } else { "local" };
        println!("patch {i} ({kind}): window {:?}", p.window);
        p.image.save(out.join(format!("patch-{i}-{kind}.png")))?;
    }
    println!("images written to {}", out.display());
    Ok(())
}
