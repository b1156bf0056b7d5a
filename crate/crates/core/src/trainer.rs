//! Training loop for the linear-weighted and MGDA-UB modes.
//!
//! Every step runs one encoder forward for the batch, computes each task's
//! loss and gradients, picks task weights `δ` (fixed in linear mode, the
//! min-norm point of the representation gradients in MGDA-UB mode), and
//! applies one momentum step: the encoder moves along `Σ δ_t ∇L^t`, each
//! head along its own gradient.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{LabeledSample, Preprocess, SampleBatch, SampleRecord, Strategy};
use crate::error::{Error, Result};
use crate::metrics::Predictions;
use crate::moo::{frank_wolfe_min_norm, multi_task_pass, update_direction, FrankWolfeConfig, SolverReport, TaskWeights};
use crate::nn::{apply_update, encode_features, head_forward, Activation, Architecture, Checkpoint, Matrix, ModelParams};
use crate::score_dist::{emd_loss, EmdConfig, ScoreDistribution};
use crate::{seed, NUM_TASKS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Linear,
    MgdaUb,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Linear => "linear",
            Mode::MgdaUb => "mgda-ub",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Mode::Linear),
            "mgda-ub" => Ok(Mode::MgdaUb),
            other => Err(Error::invalid(format!("unknown mode '{other}'"))),
        }
    }
}

/// Training configuration. Serialized as a flat TOML table; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Linear-mode task weights; uniform when absent.
    pub task_weights: Option<Vec<f64>>,
    pub lr: f64,
    pub momentum: f64,
    pub lr_halve_every: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub emd_r: f64,
    pub preprocessing: Strategy,
    pub encoder_hidden: Vec<usize>,
    pub latent_dim: usize,
    pub head_hidden: Vec<usize>,
    pub activation: Activation,
    /// Number of heads; the first `n_tasks` dimensions are trained.
    pub n_tasks: usize,
    /// Recompute `δ` every this many steps.
    pub delta_stride: usize,
    pub fw_max_iter: usize,
    pub fw_tol: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::MgdaUb,
            task_weights: None,
            lr: 1e-4,
            momentum: 0.9,
            lr_halve_every: 30,
            epochs: 60,
            batch_size: 16,
            seed: 0,
            emd_r: 2.0,
            preprocessing: Strategy::PadRescale,
            encoder_hidden: vec![64, 64],
            latent_dim: 32,
            head_hidden: Vec::new(),
            activation: Activation::Relu,
            n_tasks: NUM_TASKS,
            delta_stride: 1,
            fw_max_iter: 250,
            fw_tol: 1e-6,
            val_frac: 0.1,
            test_frac: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::invalid("lr must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must be in [0, 1)"));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.lr_halve_every == 0 || self.delta_stride == 0 {
            return Err(Error::invalid("epochs, batch_size, lr_halve_every and delta_stride must be >= 1"));
        }
        if self.n_tasks == 0 || self.n_tasks > NUM_TASKS {
            return Err(Error::invalid(format!("n_tasks must be in 1..={NUM_TASKS}")));
        }
        EmdConfig::new(self.emd_r)?;
        self.linear_weights()?;
        Ok(())
    }

    pub fn emd(&self) -> EmdConfig {
        EmdConfig::new(self.emd_r).expect("validated")
    }

    pub fn fw(&self) -> FrankWolfeConfig {
        FrankWolfeConfig {
            max_iter: self.fw_max_iter,
            tol: self.fw_tol,
        }
    }

    pub fn linear_weights(&self) -> Result<TaskWeights> {
        match &self.task_weights {
            None => Ok(TaskWeights::uniform(self.n_tasks)),
            Some(w) if w.len() == self.n_tasks => TaskWeights::new(w.clone()),
            Some(w) => Err(Error::invalid(format!(
                "{} task weights for {} tasks",
                w.len(),
                self.n_tasks
            ))),
        }
    }

    pub fn architecture(&self, input_dim: usize) -> Architecture {
        Architecture {
            input_dim,
            encoder_hidden: self.encoder_hidden.clone(),
            latent_dim: self.latent_dim,
            head_hidden: self.head_hidden.clone(),
            n_tasks: self.n_tasks,
            activation: self.activation,
        }
    }

    /// Learning rate of 1-based `epoch`: halved every `lr_halve_every` epochs.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        lr_schedule(self.lr, self.lr_halve_every, epoch)
    }
}

/// `lr0 · 0.5^⌊(epoch − 1) / halve_every⌋` for 1-based `epoch`.
pub fn lr_schedule(lr0: f64, halve_every: usize, epoch: usize) -> f64 {
    let k = (epoch.max(1) - 1) / halve_every.max(1);
    lr0 * 0.5f64.powi(k as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRecord {
    pub epoch: usize,
    pub step: usize,
    pub delta: Vec<f64>,
    pub combined_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub mode: Mode,
    pub epochs: Vec<EpochRecord>,
    /// Solver output of every step where `δ` was recomputed (MGDA-UB only).
    pub deltas: Vec<DeltaRecord>,
}

const LOG_MAGIC: &str = "# aesthetic-mtl train log v1";

impl TrainLog {
    pub fn lr_trace(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.lr).collect()
    }

    /// Comma-separated log:
    ///
    /// ```text
    /// # aesthetic-mtl train log v1
    /// mode,<linear|mgda-ub>
    /// epoch,<e>,<lr>,train,<loss per task>,val,<loss per task>
    /// delta,<e>,<step>,<iterations>,<converged>,<norm>,<δ per task>
    /// ```
    pub fn to_csv(&self) -> String {
        let mut s = format!("{LOG_MAGIC}\nmode,{}\n", self.mode.name());
        let list = |v: &[f64]| v.iter().map(|x| format!(",{x:?}")).collect::<String>();
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "epoch,{},{:?},train{},val{}",
                e.epoch,
                e.lr,
                list(&e.train_loss),
                list(&e.val_loss)
            );
        }
        for d in &self.deltas {
            let _ = writeln!(
                s,
                "delta,{},{},{},{},{:?}{}",
                d.epoch,
                d.step,
                d.iterations,
                d.converged,
                d.combined_norm,
                list(&d.delta)
            );
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut mode = None;
        let mut epochs = Vec::new();
        let mut deltas = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let err = |m: &str| Error::parse(path, n, m.to_owned());
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(&format!("bad number '{s}'")));
            let int = |s: &str| s.parse::<usize>().map_err(|_| err(&format!("bad integer '{s}'")));
            match cells[0] {
                "mode" => mode = Some(Mode::parse(cells.get(1).copied().unwrap_or("")).map_err(|e| err(&e.to_string()))?),
                "epoch" => {
                    let ti = cells.iter().position(|c| *c == "train").ok_or_else(|| err("missing train"))?;
                    let vi = cells.iter().position(|c| *c == "val").ok_or_else(|| err("missing val"))?;
                    if cells.len() < 3 || ti != 3 || vi < ti {
                        return Err(err("malformed epoch row"));
                    }
                    epochs.push(EpochRecord {
                        epoch: int(cells[1])?,
                        lr: num(cells[2])?,
                        train_loss: cells[ti + 1..vi].iter().map(|c| num(c)).collect::<Result<_>>()?,
                        val_loss: cells[vi + 1..].iter().map(|c| num(c)).collect::<Result<_>>()?,
                    });
                }
                "delta" => {
                    if cells.len() < 7 {
                        return Err(err("malformed delta row"));
                    }
                    deltas.push(DeltaRecord {
                        epoch: int(cells[1])?,
                        step: int(cells[2])?,
                        iterations: int(cells[3])?,
                        converged: cells[4].parse().map_err(|_| err("bad flag"))?,
                        combined_norm: num(cells[5])?,
                        delta: cells[6..].iter().map(|c| num(c)).collect::<Result<_>>()?,
                    });
                }
                other => return Err(err(&format!("unknown row kind '{other}'"))),
            }
        }
        Ok(Self {
            mode: mode.ok_or_else(|| Error::parse(path, 0, "missing mode row"))?,
            epochs,
            deltas,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the lowest mean validation EMD.
    pub best: ModelParams,
    pub best_epoch: usize,
    /// State after the final epoch, for resuming.
    pub last: Checkpoint,
    pub log: TrainLog,
}

/// A numeric failure mid-training, with everything produced before it.
#[derive(Debug, thiserror::Error)]
#[error("training aborted at epoch {epoch}: {source}")]
pub struct TrainAbort {
    pub epoch: usize,
    #[source]
    pub source: Error,
    /// Best parameters seen before the failure.
    pub best: Option<ModelParams>,
    pub log: TrainLog,
}

impl TrainAbort {
    fn setup(source: Error, mode: Mode) -> Self {
        Self {
            epoch: 0,
            source,
            best: None,
            log: TrainLog {
                mode,
                epochs: Vec::new(),
                deltas: Vec::new(),
            },
        }
    }
}

/// Mean loss per task over `samples`.
pub fn evaluate_losses(params: &ModelParams, samples: &[LabeledSample], cfg: EmdConfig) -> Result<Vec<f64>> {
    let t = params.n_tasks();
    if samples.is_empty() {
        return Ok(vec![f64::NAN; t]);
    }
    let mut totals = vec![0.0; t];
    for chunk in samples.chunks(256) {
        let refs: Vec<&LabeledSample> = chunk.iter().collect();
        let batch = SampleBatch::from_samples(&refs, t)?;
        let reps = encode_features(params, batch.features())?;
        for (task, total) in totals.iter_mut().enumerate() {
            let logits = head_forward(params, task, &reps)?;
            for (r, y) in batch.targets(task)?.iter().enumerate() {
                let p = ScoreDistribution::from_logits(logits.row(r))?;
                *total += emd_loss(y, &p, cfg);
            }
        }
    }
    Ok(totals.into_iter().map(|v| v / samples.len() as f64).collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_finite(losses: &[f64], what: &str) -> Result<()> {
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric {
            layer: what.to_owned(),
            detail: format!("non-finite loss {losses:?}"),
        });
    }
    Ok(())
}

/// Trains from a fresh initialization.
pub fn train(
    config: &TrainConfig,
    train_set: &[LabeledSample],
    val_set: &[LabeledSample],
) -> std::result::Result<TrainOutcome, TrainAbort> {
    let setup = || -> Result<Checkpoint> {
        config.validate()?;
        let first = train_set
            .first()
            .ok_or_else(|| Error::invalid("training set is empty"))?;
        let params = ModelParams::init(config.architecture(first.features.len()), config.seed)?;
        Ok(Checkpoint::new(params))
    };
    let start = setup().map_err(|e| TrainAbort::setup(e, config.mode))?;
    resume(config, train_set, val_set, start)
}

/// Continues from `start` at epoch `start.epoch + 1` through
/// `config.epochs`, keeping the learning-rate schedule aligned.
pub fn resume(
    config: &TrainConfig,
    train_set: &[LabeledSample],
    val_set: &[LabeledSample],
    start: Checkpoint,
) -> std::result::Result<TrainOutcome, TrainAbort> {
    let mut log = TrainLog {
        mode: config.mode,
        epochs: Vec::new(),
        deltas: Vec::new(),
    };
    let abort = |epoch: usize, source: Error, best: Option<ModelParams>, log: TrainLog| TrainAbort {
        epoch,
        source,
        best,
        log,
    };
    if let Err(e) = config.validate() {
        return Err(abort(start.epoch, e, None, log));
    }
    if train_set.is_empty() {
        return Err(abort(start.epoch, Error::invalid("training set is empty"), None, log));
    }
    let cfg = config.emd();
    let t = config.n_tasks;
    let mut params = start.params;
    if params.arch != config.architecture(train_set[0].features.len()) {
        return Err(abort(
            start.epoch,
            Error::invalid("checkpoint architecture does not match the configuration"),
            None,
            log,
        ));
    }
    let mut velocity = start
        .velocity
        .unwrap_or_else(|| vec![0.0; params.arch.total_len()]);
    let select_on = if val_set.is_empty() { train_set } else { val_set };
    let mut best_score = match evaluate_losses(&params, select_on, cfg) {
        Ok(l) if start.epoch > 0 => mean(&l),
        Ok(_) => f64::INFINITY,
        Err(e) => return Err(abort(start.epoch, e, None, log)),
    };
    let mut best = params.clone();
    let mut best_epoch = start.epoch;
    let linear = match config.linear_weights() {
        Ok(w) => w,
        Err(e) => return Err(abort(start.epoch, e, None, log)),
    };
    let mut delta = match config.mode {
        Mode::Linear => linear.clone(),
        Mode::MgdaUb => TaskWeights::uniform(t),
    };
    let mut global_step = start.epoch * train_set.len().div_ceil(config.batch_size);

    for epoch in start.epoch + 1..=config.epochs {
        let lr = config.lr_at(epoch);
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        {
            use rand::seq::SliceRandom;
            order.shuffle(&mut seed::stream(config.seed, &format!("shuffle/{epoch}")));
        }
        let step_result = (|| -> Result<()> {
            for (step, idx) in order.chunks(config.batch_size).enumerate() {
                let refs: Vec<&LabeledSample> = idx.iter().map(|&i| &train_set[i]).collect();
                let batch = SampleBatch::from_samples(&refs, t)?;
                let pass = multi_task_pass(&params, &batch, cfg)?;
                check_finite(&pass.losses(), "batch loss")?;
                if config.mode == Mode::MgdaUb && global_step % config.delta_stride == 0 {
                    let report: SolverReport = frank_wolfe_min_norm(&pass.representation_gradients()?, config.fw())?;
                    log.deltas.push(DeltaRecord {
                        epoch,
                        step,
                        delta: report.delta.as_slice().to_vec(),
                        combined_norm: report.combined_norm,
                        iterations: report.iterations,
                        converged: report.converged,
                    });
                    delta = report.delta;
                }
                let dir = update_direction(&params, &pass, &delta)?;
                apply_update(&mut params, &dir, lr, &mut velocity, config.momentum)?;
                global_step += 1;
            }
            Ok(())
        })();
        if let Err(e) = step_result {
            return Err(abort(epoch, e, Some(best), log));
        }
        let losses = evaluate_losses(&params, train_set, cfg)
            .and_then(|tr| check_finite(&tr, "train evaluation").map(|_| tr))
            .and_then(|tr| {
                let va = evaluate_losses(&params, val_set, cfg)?;
                if !val_set.is_empty() {
                    check_finite(&va, "validation evaluation")?;
                }
                Ok((tr, va))
            });
        let (train_loss, val_loss) = match losses {
            Ok(l) => l,
            Err(e) => return Err(abort(epoch, e, Some(best), log)),
        };
        let score = if val_set.is_empty() { mean(&train_loss) } else { mean(&val_loss) };
        if score < best_score {
            best_score = score;
            best = params.clone();
            best_epoch = epoch;
        }
        log.epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            val_loss,
        });
    }

    Ok(TrainOutcome {
        best,
        best_epoch,
        last: Checkpoint {
            params,
            epoch: config.epochs.max(start.epoch),
            velocity: Some(velocity),
        },
        log,
    })
}

/// Distributions per task for each feature row.
pub fn predict_features(params: &ModelParams, rows: &[Vec<f64>]) -> Result<Vec<Vec<ScoreDistribution>>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let x = Matrix::from_rows(rows)?;
    let reps = encode_features(params, &x)?;
    let mut out = vec![Vec::with_capacity(params.n_tasks()); rows.len()];
    for t in 0..params.n_tasks() {
        let logits = head_forward(params, t, &reps)?;
        for (r, o) in out.iter_mut().enumerate() {
            o.push(ScoreDistribution::from_logits(logits.row(r))?);
        }
    }
    Ok(out)
}

/// Predicts each view of an image and averages the distributions per task.
fn pool_views(params: &ModelParams, views: &[Vec<f64>]) -> Result<Vec<ScoreDistribution>> {
    let per_view = predict_features(params, views)?;
    (0..params.n_tasks())
        .map(|t| {
            let dists: Vec<ScoreDistribution> = per_view.iter().map(|v| v[t]).collect();
            ScoreDistribution::average(&dists)
        })
        .collect()
}

/// Per-image task distributions under `pre`.
pub fn predict(params: &ModelParams, images: &[image::RgbImage], pre: &Preprocess) -> Result<Vec<Vec<ScoreDistribution>>> {
    if params.arch.input_dim != pre.feature_dim() {
        return Err(Error::invalid(format!(
            "model expects {} inputs, preprocessing yields {}",
            params.arch.input_dim,
            pre.feature_dim()
        )));
    }
    images
        .iter()
        .map(|img| pool_views(params, &pre.views(img)?))
        .collect()
}

/// Predictions for manifest records, keyed by id. Requires a four-head model.
pub fn predict_records(params: &ModelParams, records: &[SampleRecord], pre: &Preprocess) -> Result<Predictions> {
    if params.n_tasks() != NUM_TASKS {
        return Err(Error::invalid(format!(
            "record prediction needs {NUM_TASKS} heads, model has {}",
            params.n_tasks()
        )));
    }
    records
        .iter()
        .map(|r| {
            let views = crate::data::record_views(r, pre)?;
            if views.iter().any(|v| v.len() != params.arch.input_dim) {
                return Err(Error::invalid(format!(
                    "record '{}' has {} inputs, model expects {}",
                    r.id,
                    views[0].len(),
                    params.arch.input_dim
                )));
            }
            let d = pool_views(params, &views)?;
            Ok((r.id.clone(), [d[0], d[1], d[2], d[3]]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, to_samples, SynthConfig};

    fn small_config(mode: Mode) -> TrainConfig {
        TrainConfig {
            mode,
            lr: 0.05,
            epochs: 3,
            batch_size: 8,
            seed: 4,
            encoder_hidden: vec![8],
            latent_dim: 6,
            ..TrainConfig::default()
        }
    }

    fn data(n: usize) -> (Vec<LabeledSample>, Vec<LabeledSample>) {
        let recs = synth_generate(&SynthConfig { n, seed: 1, ..SynthConfig::default() }).unwrap();
        let samples = to_samples(&recs, &Preprocess::new(Strategy::PadRescale)).unwrap();
        let val = samples[n * 4 / 5..].to_vec();
        (samples[..n * 4 / 5].to_vec(), val)
    }

    #[test]
    fn lr_schedule_halves() {
        let c = TrainConfig::default();
        assert_eq!(c.lr_at(1), 1e-4);
        assert_eq!(c.lr_at(30), 1e-4);
        assert_eq!(c.lr_at(31), 5e-5);
        assert_eq!(c.lr_at(60), 5e-5);
        assert_eq!(c.lr_at(61), 2.5e-5);
        assert_eq!(c.momentum, 0.9);
    }

    #[test]
    fn config_parsing() {
        let c = TrainConfig::from_toml("mode = \"linear\"\nepochs = 5\n").unwrap();
        assert_eq!(c.mode, Mode::Linear);
        assert_eq!(c.lr, 1e-4);
        let err = TrainConfig::from_toml("learning_rate = 0.1\n").unwrap_err().to_string();
        assert!(err.contains("learning_rate"), "{err}");
        assert!(TrainConfig::from_toml("momentum = 1.0\n").is_err());
        let back = TrainConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn training_is_deterministic() {
        let (tr, va) = data(60);
        let a = train(&small_config(Mode::MgdaUb), &tr, &va).unwrap();
        let b = train(&small_config(Mode::MgdaUb), &tr, &va).unwrap();
        assert_eq!(a.log.to_csv(), b.log.to_csv());
        assert_eq!(a.last.to_text(), b.last.to_text());
        assert!(!a.log.deltas.is_empty());
        for d in &a.log.deltas {
            assert!((d.delta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(d.delta.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn log_round_trip() {
        let (tr, va) = data(40);
        let out = train(&small_config(Mode::MgdaUb), &tr, &va).unwrap();
        let text = out.log.to_csv();
        assert_eq!(TrainLog::parse(&text, Path::new("log")).unwrap(), out.log);
    }

    #[test]
    fn masked_linear_equals_single_task() {
        let (tr, va) = data(48);
        let masked = TrainConfig {
            task_weights: Some(vec![1.0, 0.0, 0.0, 0.0]),
            ..small_config(Mode::Linear)
        };
        let single = TrainConfig {
            n_tasks: 1,
            ..small_config(Mode::Linear)
        };
        let a = train(&masked, &tr, &va).unwrap();
        let b = train(&single, &tr, &va).unwrap();
        for (x, y) in a.log.epochs.iter().zip(&b.log.epochs) {
            assert_eq!(x.train_loss[0].to_bits(), y.train_loss[0].to_bits());
            assert_eq!(x.val_loss[0].to_bits(), y.val_loss[0].to_bits());
        }
        assert_eq!(a.last.params.shared, b.last.params.shared);
    }

    #[test]
    fn resume_continues_schedule() {
        let (tr, va) = data(40);
        let short = TrainConfig { epochs: 2, lr_halve_every: 2, ..small_config(Mode::MgdaUb) };
        let first = train(&short, &tr, &va).unwrap();
        let long = TrainConfig { epochs: 5, ..short.clone() };
        let cont = resume(&long, &tr, &va, first.last.clone()).unwrap();
        let epochs: Vec<usize> = cont.log.epochs.iter().map(|e| e.epoch).collect();
        assert_eq!(epochs, vec![3, 4, 5]);
        for e in &cont.log.epochs {
            assert_eq!(e.lr, lr_schedule(long.lr, 2, e.epoch));
        }
        // a straight 5-epoch run passes through the same states
        let straight = train(&long, &tr, &va).unwrap();
        assert_eq!(straight.last.to_text(), cont.last.to_text());
    }

    #[test]
    fn zero_model_predicts_uniform() {
        let arch = Architecture { input_dim: Preprocess::new(Strategy::PadRescale).feature_dim(), ..Architecture::desk(1) };
        let p = ModelParams::zeros(arch).unwrap();
        let img = image::RgbImage::from_pixel(40, 60, image::Rgb([10, 200, 30]));
        let out = predict(&p, &[img], &Preprocess::new(Strategy::PadRescale)).unwrap();
        assert!(out[0].iter().all(|d| *d == ScoreDistribution::uniform()));
    }

    #[test]
    fn numeric_failure_aborts_with_best_checkpoint() {
        let (tr, va) = data(40);
        let cfg = TrainConfig { lr: 1e300, momentum: 0.0, activation: Activation::Identity, ..small_config(Mode::Linear) };
        let err = train(&cfg, &tr, &va).unwrap_err();
        assert!(matches!(err.source, Error::Numeric { .. }), "{err}");
        assert!(err.best.is_some());
    }
}
