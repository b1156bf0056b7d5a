//! Dataset ingestion, image preprocessing and the synthetic generator.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::RgbImage;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::score_dist::{ScoreDistribution, NUM_LEVELS};
use crate::{seed, Dimension, NUM_TASKS};

/// Letterbox canvas height.
pub const CANVAS_HEIGHT: u32 = 454;
/// Letterbox canvas width.
pub const CANVAS_WIDTH: u32 = 984;

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const FEATURES_FILE: &str = "features.csv";

/// Features plus one column of target distributions per task.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    features: Matrix,
    targets: Vec<Vec<ScoreDistribution>>,
}

impl SampleBatch {
    /// `targets[t][i]` is the target of row `i` for task `t`.
    pub fn new(features: Matrix, targets: Vec<Vec<ScoreDistribution>>) -> Result<Self> {
        if let Some(v) = features
            .as_slice()
            .iter()
            .find(|v| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::invalid(format!("feature value {v} outside [0, 1]")));
        }
        if targets.iter().any(|t| t.len() != features.rows()) {
            return Err(Error::invalid("target count does not match batch rows"));
        }
        Ok(Self { features, targets })
    }

    pub fn from_samples(samples: &[&LabeledSample], n_tasks: usize) -> Result<Self> {
        if n_tasks > NUM_TASKS {
            return Err(Error::invalid(format!("at most {NUM_TASKS} tasks")));
        }
        let rows: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
        let features = Matrix::from_rows(&rows)?;
        let targets = (0..n_tasks)
            .map(|t| samples.iter().map(|s| s.targets[t]).collect())
            .collect();
        Self::new(features, targets)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_tasks(&self) -> usize {
        self.targets.len()
    }

    pub fn targets(&self, t: usize) -> Result<&[ScoreDistribution]> {
        self.targets
            .get(t)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("batch has no targets for task {t}")))
    }

    /// Rows `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> SampleBatch {
        SampleBatch {
            features: self.features.select_rows(idx),
            targets: self
                .targets
                .iter()
                .map(|col| idx.iter().map(|&i| col[i]).collect())
                .collect(),
        }
    }
}

/// Where a record's pixels or features come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Path(PathBuf),
    Pixels(RgbImage),
    Features(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub id: String,
    pub source: Source,
    /// Targets in [`Dimension::ALL`] order.
    pub targets: [ScoreDistribution; NUM_TASKS],
}

/// A record reduced to an encoder input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub id: String,
    pub features: Vec<f64>,
    pub targets: [ScoreDistribution; NUM_TASKS],
}

// ---------------------------------------------------------------------------
// manifest

pub fn manifest_header() -> Vec<String> {
    let mut h = vec!["id".to_owned(), "path".to_owned()];
    for d in Dimension::ALL {
        for c in 1..=NUM_LEVELS {
            h.push(format!("{}_{c}", d.column_prefix()));
        }
    }
    h
}

fn float_text(v: f64) -> String {
    format!("{v:?}")
}

/// Reads a manifest: header row, then `id,path` and 20 probabilities per row.
pub fn load_manifest(path: &Path) -> Result<Vec<SampleRecord>> {
    let text = fs::read_to_string(path)?;
    parse_manifest(&text, path)
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Vec<SampleRecord>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let expected = manifest_header();
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    for (i, name) in expected.iter().enumerate() {
        match header.get(i) {
            Some(h) if h.trim() == name => {}
            Some(h) => {
                return Err(Error::parse(
                    path,
                    1,
                    format!("column {} is '{h}', expected '{name}'", i + 1),
                ))
            }
            None => return Err(Error::parse(path, 1, format!("missing column '{name}'"))),
        }
    }
    if header.len() != expected.len() {
        return Err(Error::parse(path, 1, "unexpected extra columns"));
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != expected.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, found {}", expected.len(), rec.len()),
            ));
        }
        let id = rec[0].trim().to_owned();
        if id.is_empty() {
            return Err(Error::parse(path, line, "empty id"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::parse(path, line, format!("duplicate id '{id}'")));
        }
        let mut targets = [ScoreDistribution::uniform(); NUM_TASKS];
        for (t, dim) in Dimension::ALL.iter().enumerate() {
            let mut probs = [0.0; NUM_LEVELS];
            for (c, p) in probs.iter_mut().enumerate() {
                let col = 2 + t * NUM_LEVELS + c;
                *p = rec[col].trim().parse().map_err(|_| {
                    Error::parse(
                        path,
                        line,
                        format!("row '{id}': bad number '{}' in {}", &rec[col], expected[col]),
                    )
                })?;
            }
            targets[t] = ScoreDistribution::new(&probs).map_err(|e| {
                Error::parse(path, line, format!("row '{id}', {}: {e}", dim.column_prefix()))
            })?;
        }
        out.push(SampleRecord {
            id,
            source: Source::Path(PathBuf::from(rec[1].trim())),
            targets,
        });
    }
    Ok(out)
}

/// Writes records in manifest format. Records without a path get
/// `path_for_unpathed` in the path column.
pub fn write_manifest(path: &Path, records: &[SampleRecord], path_for_unpathed: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(manifest_header()).map_err(csv_io)?;
    for r in records {
        let p = match &r.source {
            Source::Path(p) => p.to_string_lossy().into_owned(),
            _ => path_for_unpathed.to_owned(),
        };
        let mut row = vec![r.id.clone(), p];
        for d in &r.targets {
            row.extend(d.probs().iter().map(|&v| float_text(v)));
        }
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Writes `id,x_0..x_{D-1}` rows for every record with a feature source.
pub fn write_features(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let dim = records
        .iter()
        .find_map(|r| match &r.source {
            Source::Features(f) => Some(f.len()),
            _ => None,
        })
        .unwrap_or(0);
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    let mut header = vec!["id".to_owned()];
    header.extend((0..dim).map(|i| format!("x_{i}")));
    w.write_record(&header).map_err(csv_io)?;
    for r in records {
        if let Source::Features(f) = &r.source {
            let mut row = vec![r.id.clone()];
            row.extend(f.iter().map(|&v| float_text(v)));
            w.write_record(&row).map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_features(path: &Path) -> Result<HashMap<String, Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_io)?;
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let vals = rec
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        out.insert(rec[0].to_owned(), vals);
    }
    Ok(out)
}

/// Writes `manifest.csv` (and `features.csv` for feature-sourced records)
/// into `dir`.
pub fn write_dataset(dir: &Path, records: &[SampleRecord]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_manifest(&dir.join(MANIFEST_FILE), records, FEATURES_FILE)?;
    if records.iter().any(|r| matches!(r.source, Source::Features(_))) {
        write_features(&dir.join(FEATURES_FILE), records)?;
    }
    Ok(())
}

/// Loads `dir/manifest.csv`. Rows whose path column names the feature file
/// are joined with `dir/features.csv`; other paths are resolved against
/// `dir`.
pub fn load_dataset(dir: &Path) -> Result<Vec<SampleRecord>> {
    let manifest = dir.join(MANIFEST_FILE);
    let mut records = load_manifest(&manifest)?;
    let feature_path = dir.join(FEATURES_FILE);
    let features = if feature_path.exists() {
        Some(load_features(&feature_path)?)
    } else {
        None
    };
    for r in &mut records {
        if let Source::Path(p) = &r.source {
            if p.as_os_str() == FEATURES_FILE {
                let f = features
                    .as_ref()
                    .and_then(|m| m.get(&r.id))
                    .ok_or_else(|| Error::invalid(format!("no features for '{}'", r.id)))?;
                r.source = Source::Features(f.clone());
            } else if p.is_relative() {
                r.source = Source::Path(dir.join(p));
            }
        }
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// split

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64, seed: u64) -> Result<Self> {
        let s = Self {
            train_frac,
            val_frac,
            test_frac,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let f = [self.train_frac, self.val_frac, self.test_frac];
        if f.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::invalid("split fractions must be positive"));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("split fractions must sum to 1"));
        }
        Ok(())
    }

    /// (train, val, test) sizes: val and test are floored, train takes the
    /// remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
        let val = floor(self.val_frac);
        let test = floor(self.test_frac);
        (n - val - test, val, test)
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.8,
            val_frac: 0.1,
            test_frac: 0.1,
            seed: 0,
        }
    }
}

/// Seeded shuffle, then contiguous train/val/test partition.
pub fn split<T>(items: Vec<T>, spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    spec.validate()?;
    let (n_train, n_val, _) = spec.sizes(items.len());
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut seed::stream(spec.seed, "split"));
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    let mut take = |range: std::ops::Range<usize>| -> Vec<T> {
        order[range]
            .iter()
            .map(|&i| slots[i].take().expect("each index once"))
            .collect()
    };
    let n = order.len();
    let train = take(0..n_train);
    let val = take(n_train..n_train + n_val);
    let test = take(n_train + n_val..n);
    Ok((train, val, test))
}

// ---------------------------------------------------------------------------
// images

/// Where the scaled content sits inside a letterbox canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub top: u32,
    pub left: u32,
    pub height: u32,
    pub width: u32,
}

/// Scales `img` by the largest factor that fits the canvas, keeping the
/// aspect ratio, and centers it on a black canvas.
pub fn letterbox(img: &RgbImage, canvas_h: u32, canvas_w: u32) -> Result<(RgbImage, Placement)> {
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::invalid("image has a zero dimension"));
    }
    if canvas_h == 0 || canvas_w == 0 {
        return Err(Error::invalid("canvas has a zero dimension"));
    }
    let scale = (canvas_h as f64 / h as f64).min(canvas_w as f64 / w as f64);
    let nh = ((h as f64 * scale).round() as u32).clamp(1, canvas_h);
    let nw = ((w as f64 * scale).round() as u32).clamp(1, canvas_w);
    let content = if (nw, nh) == (w, h) {
        img.clone()
    } else {
        imageops::resize(img, nw, nh, FilterType::Triangle)
    };
    let place = Placement {
        top: (canvas_h - nh) / 2,
        left: (canvas_w - nw) / 2,
        height: nh,
        width: nw,
    };
    let mut canvas = RgbImage::new(canvas_w, canvas_h);
    imageops::replace(&mut canvas, &content, place.left.into(), place.top.into());
    Ok((canvas, place))
}

/// Letterboxes onto the 454 × 984 (height × width) canvas.
pub fn pad_and_rescale(img: &RgbImage) -> Result<RgbImage> {
    Ok(letterbox(img, CANVAS_HEIGHT, CANVAS_WIDTH)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropWindow {
    pub top: u32,
    pub left: u32,
    pub height: u32,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub image: RgbImage,
    /// Crop window in the (possibly upscaled) source image.
    pub window: CropWindow,
    pub global: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchConfig {
    pub n_local: usize,
    pub patch_height: u32,
    pub patch_width: u32,
    pub with_global: bool,
    pub n_global: usize,
    /// Upscale images smaller than a patch instead of failing.
    pub allow_upscale: bool,
    pub seed: u64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            n_local: 4,
            patch_height: 227,
            patch_width: 492,
            with_global: false,
            n_global: 2,
            allow_upscale: true,
            seed: 0,
        }
    }
}

/// Local patches are raw crops at seeded positions. Global patches crop a
/// random window with the patch's aspect ratio, between half and all of the
/// largest such window, and resize it to the patch size.
pub fn multi_patch(img: &RgbImage, cfg: &PatchConfig) -> Result<Vec<Patch>> {
    let (ph, pw) = (cfg.patch_height, cfg.patch_width);
    if ph == 0 || pw == 0 {
        return Err(Error::invalid("patch size must be positive"));
    }
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::invalid("image has a zero dimension"));
    }
    let src = if ph > h || pw > w {
        if !cfg.allow_upscale {
            return Err(Error::invalid(format!(
                "patch {ph}x{pw} larger than image {h}x{w}"
            )));
        }
        let s = (ph as f64 / h as f64).max(pw as f64 / w as f64);
        let nh = ((h as f64 * s).ceil() as u32).max(ph);
        let nw = ((w as f64 * s).ceil() as u32).max(pw);
        imageops::resize(img, nw, nh, FilterType::Triangle)
    } else {
        img.clone()
    };
    let (w, h) = src.dimensions();
    let mut rng = seed::stream(cfg.seed, "patch");
    let mut out = Vec::with_capacity(cfg.n_local + cfg.n_global);
    for _ in 0..cfg.n_local {
        let top = rng.random_range(0..=h - ph);
        let left = rng.random_range(0..=w - pw);
        let image = imageops::crop_imm(&src, left, top, pw, ph).to_image();
        out.push(Patch {
            image,
            window: CropWindow {
                top,
                left,
                height: ph,
                width: pw,
            },
            global: false,
        });
    }
    if cfg.with_global {
        let aspect = ph as f64 / pw as f64;
        let max_h = if (h as f64 / w as f64) >= aspect {
            ((w as f64) * aspect).round().max(1.0) as u32
        } else {
            h
        };
        let min_frac = (ph as f64 / max_h as f64).max(0.5).min(1.0);
        for _ in 0..cfg.n_global {
            let frac = if min_frac < 1.0 {
                rng.random_range(min_frac..=1.0)
            } else {
                1.0
            };
            let wh = ((max_h as f64 * frac).round() as u32).clamp(1, h);
            let ww = ((wh as f64 / aspect).round() as u32).clamp(1, w);
            let top = rng.random_range(0..=h - wh);
            let left = rng.random_range(0..=w - ww);
            let crop = imageops::crop_imm(&src, left, top, ww, wh).to_image();
            let image = imageops::resize(&crop, pw, ph, FilterType::Triangle);
            out.push(Patch {
                image,
                window: CropWindow {
                    top,
                    left,
                    height: wh,
                    width: ww,
                },
                global: true,
            });
        }
    }
    Ok(out)
}

/// Image preprocessing strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    PadRescale,
    Mp,
    MpGp,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::PadRescale => "pad-rescale",
            Strategy::Mp => "mp",
            Strategy::MpGp => "mp-gp",
        }
    }
}

/// How images become encoder inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocess {
    pub strategy: Strategy,
    /// Every view is downsampled to this grid (height, width) and flattened
    /// as HWC values in [0, 1].
    pub grid: (u32, u32),
    pub patches: PatchConfig,
}

impl Preprocess {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            grid: (16, 32),
            patches: PatchConfig {
                with_global: strategy == Strategy::MpGp,
                ..PatchConfig::default()
            },
        }
    }

    pub fn feature_dim(&self) -> usize {
        (self.grid.0 * self.grid.1 * 3) as usize
    }

    /// Encoder inputs for one image: one view for pad-rescale, one per patch
    /// for the multi-patch strategies.
    pub fn views(&self, img: &RgbImage) -> Result<Vec<Vec<f64>>> {
        match self.strategy {
            Strategy::PadRescale => Ok(vec![downsample(&pad_and_rescale(img)?, self.grid)]),
            Strategy::Mp | Strategy::MpGp => {
                let mut cfg = self.patches.clone();
                cfg.with_global = self.strategy == Strategy::MpGp;
                Ok(multi_patch(img, &cfg)?
                    .iter()
                    .map(|p| downsample(&p.image, self.grid))
                    .collect())
            }
        }
    }
}

/// Resizes to `grid` (height, width) and flattens to HWC values in [0, 1].
pub fn downsample(img: &RgbImage, grid: (u32, u32)) -> Vec<f64> {
    let (gh, gw) = grid;
    let small = if img.dimensions() == (gw, gh) {
        img.clone()
    } else {
        imageops::resize(img, gw, gh, FilterType::Triangle)
    };
    small
        .pixels()
        .flat_map(|p| p.0.map(|c| f64::from(c) / 255.0))
        .collect()
}

pub fn load_image(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path)?.to_rgb8())
}

/// Encoder inputs for a record. Feature-sourced records yield their feature
/// vector; images go through `pre`.
pub fn record_views(record: &SampleRecord, pre: &Preprocess) -> Result<Vec<Vec<f64>>> {
    match &record.source {
        Source::Features(f) => Ok(vec![f.clone()]),
        Source::Pixels(img) => pre.views(img),
        Source::Path(p) => pre.views(&load_image(p)?),
    }
}

/// Flattens records into training samples, one per view.
pub fn to_samples(records: &[SampleRecord], pre: &Preprocess) -> Result<Vec<LabeledSample>> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        for features in record_views(r, pre)? {
            out.push(LabeledSample {
                id: r.id.clone(),
                features,
                targets: r.targets,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// synthetic data

/// Mixing coefficients of the synthetic generator.
///
/// Features are iid uniform on [0, 1]. Two factor scores are centered sums
/// of disjoint feature groups: `a` over features 0..4, `h` over 4..8.
/// Features 8..10 and 10..12 feed dimension-specific terms `sf` and `sc`.
///
/// ```text
/// fineness     = a + specific·sf
/// colorfulness = a + specific·sc
/// harmony      = h + harmony_shared·a
/// overall      = a + overall_harmony·h
/// ```
///
/// Each latent is mapped affinely onto [1.25, 4.75] using its exact range
/// over the feature cube, then turned into a unimodal distribution with
/// exactly that mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthProfile {
    pub specific: f64,
    pub harmony_shared: f64,
    pub overall_harmony: f64,
    /// Width of the per-image rater kernel, in score levels.
    pub spread: f64,
}

impl Default for SynthProfile {
    fn default() -> Self {
        Self {
            specific: 0.5,
            harmony_shared: 0.1,
            overall_harmony: 0.15,
            spread: 0.8,
        }
    }
}

/// Minimum feature dimension the profile reads.
pub const SYNTH_MIN_FEATURES: usize = 12;

const SCORE_LO: f64 = 1.25;
const SCORE_HI: f64 = 4.75;

impl SynthProfile {
    pub fn validate(&self) -> Result<()> {
        let w = [self.specific, self.harmony_shared, self.overall_harmony];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("profile weights must be finite and non-negative"));
        }
        if !self.spread.is_finite() || self.spread <= 0.0 {
            return Err(Error::invalid("profile spread must be positive"));
        }
        Ok(())
    }

    /// Linear weights per dimension over the first 12 features, plus the
    /// constant offset.
    fn projections(&self) -> [([f64; SYNTH_MIN_FEATURES], f64); NUM_TASKS] {
        let group = |range: std::ops::Range<usize>, w: f64, into: &mut [f64; SYNTH_MIN_FEATURES]| {
            let mut offset = 0.0;
            for i in range {
                into[i] += w;
                offset -= 0.5 * w;
            }
            offset
        };
        let mut out = [([0.0; SYNTH_MIN_FEATURES], 0.0); NUM_TASKS];
        // fineness
        let (w, b) = &mut out[0];
        *b = group(0..4, 1.0, w) + group(8..10, self.specific, w);
        // colorfulness
        let (w, b) = &mut out[1];
        *b = group(0..4, 1.0, w) + group(10..12, self.specific, w);
        // harmony
        let (w, b) = &mut out[2];
        *b = group(4..8, 1.0, w) + group(0..4, self.harmony_shared, w);
        // overall
        let (w, b) = &mut out[3];
        *b = group(0..4, 1.0, w) + group(4..8, self.overall_harmony, w);
        out
    }

    fn latents(&self, x: &[f64]) -> [(f64, f64, f64); NUM_TASKS] {
        self.projections().map(|(w, b)| {
            let v = b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
            let lo = b + w.iter().filter(|v| **v < 0.0).sum::<f64>();
            let hi = b + w.iter().filter(|v| **v > 0.0).sum::<f64>();
            (v, lo, hi)
        })
    }

    /// Noise-free mean scores of a feature vector, in dimension order.
    pub fn clean_means(&self, x: &[f64]) -> [f64; NUM_TASKS] {
        self.latents(x)
            .map(|(v, lo, hi)| SCORE_LO + (SCORE_HI - SCORE_LO) * (v - lo) / (hi - lo))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub feature_dim: usize,
    pub profile: SynthProfile,
    /// Latent noise as a multiple of each latent's standard deviation.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            feature_dim: 16,
            profile: SynthProfile::default(),
            noise: 0.1,
            seed: 0,
        }
    }
}

/// Distribution over levels 1..=5 of the form `p_c ∝ exp(κc − c²/(2σ²))`
/// whose mean equals `mean` (in the open interval (1, 5)).
pub fn distribution_with_mean(mean: f64, spread: f64) -> Result<ScoreDistribution> {
    if !(mean > 1.0 && mean < NUM_LEVELS as f64) {
        return Err(Error::invalid(format!("mean {mean} outside (1, {NUM_LEVELS})")));
    }
    let probs_for = |kappa: f64| -> [f64; NUM_LEVELS] {
        let logits: Vec<f64> = (1..=NUM_LEVELS)
            .map(|c| {
                let c = c as f64;
                kappa * c - c * c / (2.0 * spread * spread)
            })
            .collect();
        crate::score_dist::softmax(&logits)
    };
    let mean_for = |kappa: f64| -> f64 {
        probs_for(kappa)
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    };
    // mean is increasing in κ
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean_for(lo) > mean {
        lo *= 2.0;
    }
    while mean_for(hi) < mean {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_for(mid) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + mid.abs()) {
            break;
        }
    }
    ScoreDistribution::new(&probs_for(0.5 * (lo + hi)))
}

/// Correlated four-dimension dataset with feature-vector sources. Record `i`
/// draws from its own stream, so output does not depend on generation order.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Vec<SampleRecord>> {
    if cfg.n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if cfg.feature_dim < SYNTH_MIN_FEATURES {
        return Err(Error::invalid(format!(
            "feature_dim must be at least {SYNTH_MIN_FEATURES}"
        )));
    }
    if !cfg.noise.is_finite() || cfg.noise < 0.0 {
        return Err(Error::invalid("noise must be non-negative"));
    }
    cfg.profile.validate()?;
    let stds: Vec<f64> = cfg
        .profile
        .projections()
        .iter()
        .map(|(w, _)| (w.iter().map(|v| v * v).sum::<f64>() / 12.0).sqrt())
        .collect();
    let width = (cfg.n - 1).to_string().len();
    (0..cfg.n)
        .map(|i| {
            let mut rng = seed::stream(cfg.seed, &format!("synth/{i}"));
            let x: Vec<f64> = (0..cfg.feature_dim).map(|_| rng.random_range(0.0..1.0)).collect();
            let lat = cfg.profile.latents(&x);
            let mut targets = [ScoreDistribution::uniform(); NUM_TASKS];
            for t in 0..NUM_TASKS {
                let (v, lo, hi) = lat[t];
                let eps: f64 = StandardNormal.sample(&mut rng);
                let noisy = v + cfg.noise * stds[t] * eps;
                let mean = (SCORE_LO + (SCORE_HI - SCORE_LO) * (noisy - lo) / (hi - lo))
                    .clamp(1.05, NUM_LEVELS as f64 - 0.05);
                targets[t] = distribution_with_mean(mean, cfg.profile.spread)?;
            }
            Ok(SampleRecord {
                id: format!("s{i:0width$}"),
                source: Source::Features(x),
                targets,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::pcc;
    use proptest::prelude::*;

    fn gradient_image(h: u32, w: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            image::Rgb([(x % 251) as u8, (y % 241) as u8, ((x + y) % 7) as u8 + 1])
        })
    }

    #[test]
    fn letterbox_identity_on_canvas_shape() {
        let img = gradient_image(454, 984);
        assert_eq!(pad_and_rescale(&img).unwrap(), img);
    }

    #[test]
    fn letterbox_exact_double() {
        let img = gradient_image(227, 492);
        let (out, place) = letterbox(&img, CANVAS_HEIGHT, CANVAS_WIDTH).unwrap();
        assert_eq!(out.dimensions(), (984, 454));
        assert_eq!(place, Placement { top: 0, left: 0, height: 454, width: 984 });
    }

    #[test]
    fn letterbox_square_pads_columns() {
        let img = gradient_image(454, 454);
        let (out, place) = letterbox(&img, CANVAS_HEIGHT, CANVAS_WIDTH).unwrap();
        assert_eq!(place.left, 265);
        assert_eq!(place.width, 454);
        for y in 0..454 {
            for x in (0..265).chain(719..984) {
                assert_eq!(out.get_pixel(x, y).0, [0, 0, 0]);
            }
        }
        assert_eq!(out.get_pixel(265, 10), img.get_pixel(0, 10));
    }

    #[test]
    fn letterbox_rejects_empty() {
        assert!(pad_and_rescale(&RgbImage::new(0, 5)).is_err());
    }

    #[test]
    fn patch_equal_to_image() {
        let img = gradient_image(20, 30);
        let cfg = PatchConfig {
            n_local: 1,
            patch_height: 20,
            patch_width: 30,
            ..PatchConfig::default()
        };
        let p = multi_patch(&img, &cfg).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].image, img);
    }

    #[test]
    fn patch_too_large_without_upscale() {
        let img = gradient_image(20, 30);
        let cfg = PatchConfig {
            patch_height: 40,
            patch_width: 30,
            allow_upscale: false,
            ..PatchConfig::default()
        };
        assert!(multi_patch(&img, &cfg).is_err());
        let cfg = PatchConfig { allow_upscale: true, ..cfg };
        let p = multi_patch(&img, &cfg).unwrap();
        assert!(p.iter().all(|p| p.image.dimensions() == (30, 40)));
    }

    #[test]
    fn global_patch_keeps_patch_aspect() {
        let img = gradient_image(908, 1968);
        let cfg = PatchConfig {
            n_local: 0,
            with_global: true,
            n_global: 1,
            seed: 3,
            ..PatchConfig::default()
        };
        let p = multi_patch(&img, &cfg).unwrap();
        assert_eq!(p.len(), 1);
        let win = p[0].window;
        assert!(p[0].global);
        // aspect within one pixel of rounding
        let expect_w = win.height as f64 * 492.0 / 227.0;
        assert!((win.width as f64 - expect_w).abs() <= 1.0, "{win:?}");
        assert_eq!(p[0].image.dimensions(), (492, 227));
    }

    #[test]
    fn patches_are_seed_deterministic() {
        let img = gradient_image(300, 600);
        let cfg = PatchConfig { with_global: true, seed: 9, ..PatchConfig::default() };
        assert_eq!(multi_patch(&img, &cfg).unwrap(), multi_patch(&img, &cfg).unwrap());
    }

    fn manifest_row(id: &str, probs: &[f64; 20]) -> String {
        let vals: Vec<String> = probs.iter().map(|v| v.to_string()).collect();
        format!("{id},img/{id}.png,{}\n", vals.join(","))
    }

    #[test]
    fn manifest_parsing() {
        let header = manifest_header().join(",") + "\n";
        let good = [0.2; 20];
        let text = header.clone() + &manifest_row("a", &good) + &manifest_row("b", &good) + &manifest_row("c", &good);
        let recs = parse_manifest(&text, Path::new("m.csv")).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[1].source, Source::Path("img/b.png".into()));

        let mut bad = good;
        bad[5..10].copy_from_slice(&[0.2, 0.2, 0.2, 0.2, 0.1]);
        let text = header.clone() + &manifest_row("a", &good) + &manifest_row("short", &bad);
        let err = parse_manifest(&text, Path::new("m.csv")).unwrap_err().to_string();
        assert!(err.contains("m.csv:3") && err.contains("short"), "{err}");

        assert!(parse_manifest("", Path::new("m.csv")).unwrap().is_empty());
        assert!(parse_manifest(&header, Path::new("m.csv")).unwrap().is_empty());

        let dup = header.clone() + &manifest_row("a", &good) + &manifest_row("a", &good);
        assert!(parse_manifest(&dup, Path::new("m.csv")).unwrap_err().to_string().contains("duplicate"));

        let missing = header.replace(",overall_5", "") ;
        assert!(parse_manifest(&missing, Path::new("m.csv")).is_err());
    }

    #[test]
    fn manifest_header_text() {
        let h = manifest_header().join(",");
        assert!(h.starts_with("id,path,fine_1,fine_2,fine_3,fine_4,fine_5,color_1"));
        assert!(h.ends_with("overall_4,overall_5"));
        assert_eq!(manifest_header().len(), 22);
    }

    #[test]
    fn dataset_round_trip() {
        let recs = synth_generate(&SynthConfig { n: 25, seed: 4, ..SynthConfig::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &recs).unwrap();
        assert_eq!(load_dataset(dir.path()).unwrap(), recs);
    }

    #[test]
    fn split_sizes() {
        let s = SplitSpec::new(0.8, 0.1, 0.1, 1).unwrap();
        assert_eq!(s.sizes(10), (8, 1, 1));
        assert_eq!(s.sizes(1091), (873, 109, 109));
        let (a, b, c) = split((0..10).collect::<Vec<_>>(), &s).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
        assert_eq!(split((0..10).collect::<Vec<_>>(), &s).unwrap(), (a, b, c));
        assert!(SplitSpec::new(0.8, 0.1, 0.2, 1).is_err());
        assert!(SplitSpec::new(1.0, 0.0, 0.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 0usize..300, seed in any::<u64>()) {
            let spec = SplitSpec { seed, ..SplitSpec::default() };
            let (a, b, c) = split((0..n).collect::<Vec<_>>(), &spec).unwrap();
            let mut all: Vec<usize> = a.into_iter().chain(b).chain(c).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn letterbox_preserves_aspect(h in 1u32..1200, w in 1u32..2400) {
            let img = RgbImage::new(w, h);
            let (out, p) = letterbox(&img, CANVAS_HEIGHT, CANVAS_WIDTH).unwrap();
            prop_assert_eq!(out.dimensions(), (CANVAS_WIDTH, CANVAS_HEIGHT));
            let scale = (454.0 / h as f64).min(984.0 / w as f64);
            prop_assert!((p.width as f64 - w as f64 * scale).abs() <= 1.0);
            prop_assert!((p.height as f64 - h as f64 * scale).abs() <= 1.0);
        }

        #[test]
        fn exact_mean_distributions(m in 1.01f64..4.99, s in 0.3f64..2.0) {
            let d = distribution_with_mean(m, s).unwrap();
            prop_assert!((d.mean_score() - m).abs() < 1e-9);
            let p = d.probs();
            let mode = (0..5).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
            prop_assert!(p[..=mode].windows(2).all(|w| w[0] <= w[1] + 1e-15));
            prop_assert!(p[mode..].windows(2).all(|w| w[0] + 1e-15 >= w[1]));
        }
    }

    #[test]
    fn synth_correlation_profile() {
        let recs = synth_generate(&SynthConfig::default()).unwrap();
        let means = |t: usize| recs.iter().map(|r| r.targets[t].mean_score()).collect::<Vec<_>>();
        let fine_overall = pcc(&means(0), &means(3)).unwrap();
        let harmony_overall = pcc(&means(2), &means(3)).unwrap();
        assert!(fine_overall > 0.7, "{fine_overall}");
        assert!(harmony_overall.abs() < 0.4, "{harmony_overall}");
    }

    #[test]
    fn noiseless_synth_is_linear_in_features() {
        let cfg = SynthConfig { n: 200, noise: 0.0, seed: 2, ..SynthConfig::default() };
        let recs = synth_generate(&cfg).unwrap();
        for r in &recs {
            let Source::Features(x) = &r.source else { panic!() };
            let clean = cfg.profile.clean_means(x);
            for t in 0..NUM_TASKS {
                assert!((r.targets[t].mean_score() - clean[t]).abs() < 1e-9);
            }
        }
        let fine: Vec<f64> = recs.iter().map(|r| r.targets[0].mean_score()).collect();
        let proj: Vec<f64> = recs
            .iter()
            .map(|r| match &r.source {
                Source::Features(x) => x[0..4].iter().sum::<f64>() + 0.5 * x[8..10].iter().sum::<f64>(),
                _ => unreachable!(),
            })
            .collect();
        assert!((pcc(&fine, &proj).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn synth_determinism_and_errors() {
        let cfg = SynthConfig { n: 30, seed: 5, ..SynthConfig::default() };
        assert_eq!(synth_generate(&cfg).unwrap(), synth_generate(&cfg).unwrap());
        assert!(synth_generate(&SynthConfig { n: 0, ..cfg.clone() }).is_err());
        let bad = SynthProfile { spread: -1.0, ..SynthProfile::default() };
        assert!(synth_generate(&SynthConfig { profile: bad, ..cfg }).is_err());
    }
}
