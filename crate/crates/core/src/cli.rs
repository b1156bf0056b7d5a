//! Command-line front end: `synth`, `train`, `eval`, `predict`, `verify`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage, configuration or
//! input error, 3 numeric abort during training.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{
    load_dataset, load_manifest, split, to_samples, write_dataset, write_manifest, Preprocess, SampleRecord, Source,
    SplitSpec, Strategy, SynthConfig,
};
use crate::error::Error;
use crate::metrics::{evaluate, Predictions};
use crate::nn::Checkpoint;
use crate::trainer::{predict, predict_records, resume, train, Mode, TrainAbort, TrainConfig};
use crate::verify::{self, Suite, VerifyOptions};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "AESTHETIC_MTL_OUT";

#[derive(Debug, Parser)]
#[command(name = "aesthetic-mtl", version, about = "Multi-task aesthetic score distribution prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with known inter-dimension correlations.
    Synth(SynthArgs),
    /// Train a model on a dataset directory.
    Train(TrainArgs),
    /// Score predictions against ground truth (PCC, SCC, RMSE).
    Eval(EvalArgs),
    /// Predict score distributions for images or a dataset.
    Predict(PredictArgs),
    /// Run the numerical self-checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    /// Label noise as a fraction of each dimension's spread.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory containing manifest.csv.
    #[arg(long)]
    pub data: PathBuf,
    /// TOML training configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = ["linear", "mgda-ub"])]
    pub mode: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Continue from a `last.ckpt` written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
    pub checkpoint: Option<PathBuf>,
    /// Predictions in manifest format.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// `split.csv` written by `train`; restricts evaluation to `--split`.
    #[arg(long, requires = "split")]
    pub split_file: Option<PathBuf>,
    #[arg(long, value_parser = ["train", "val", "test"])]
    pub split: Option<String>,
    #[arg(long, default_value = "pad-rescale", value_parser = strategy_parser)]
    pub strategy: Strategy,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset directory whose records are predicted.
    #[arg(long, conflicts_with = "images", required_unless_present = "images")]
    pub data: Option<PathBuf>,
    /// Image files.
    pub images: Vec<PathBuf>,
    #[arg(long, default_value = "pad-rescale", value_parser = strategy_parser)]
    pub strategy: Strategy,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = ["emd-grad", "net-grad", "fw-oracle", "support", "emd-props"])]
    pub only: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, hide = true)]
    pub corrupt_gradient: bool,
}

fn strategy_parser(s: &str) -> std::result::Result<Strategy, String> {
    [Strategy::PadRescale, Strategy::Mp, Strategy::MpGp]
        .into_iter()
        .find(|v| v.name() == s)
        .ok_or_else(|| format!("expected pad-rescale, mp or mp-gp, got '{s}'"))
}

/// Failure of a subcommand with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Numeric { .. }) { 3 } else { 2 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses `std::env::args` and runs the command.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

/// `--out`, else `$AESTHETIC_MTL_OUT/<command>`, else `runs/<command>`.
fn out_dir(out: Option<PathBuf>, command: &str) -> std::result::Result<PathBuf, Failure> {
    let dir = out.unwrap_or_else(|| {
        std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"))
            .join(command)
    });
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    Ok(dir)
}

#[derive(Debug, Serialize)]
struct RunManifest {
    tool: String,
    version: String,
    command: String,
    data: String,
    /// Last completed epoch.
    epoch: usize,
    best_epoch: usize,
    aborted: bool,
    artifacts: Vec<String>,
    config: TrainConfig,
}

fn synth(a: SynthArgs) -> CliResult {
    let cfg = SynthConfig {
        n: a.n,
        feature_dim: a.feature_dim,
        noise: a.noise,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let records = crate::data::synth_generate(&cfg)?;
    let dir = out_dir(a.out, "synth")?;
    write_dataset(&dir, &records)?;
    println!("wrote {} samples to {}", records.len(), dir.display());
    Ok(())
}

fn load_config(a: &TrainArgs) -> std::result::Result<TrainConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::from_toml(&std::fs::read_to_string(p).map_err(Error::from)?)?,
        None => TrainConfig::default(),
    };
    if let Some(m) = &a.mode {
        cfg.mode = Mode::parse(m)?;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(lr) = a.lr {
        cfg.lr = lr;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train_cmd(a: TrainArgs) -> CliResult {
    let cfg = load_config(&a)?;
    let records = load_dataset(&a.data)?;
    let spec = SplitSpec::new(1.0 - cfg.val_frac - cfg.test_frac, cfg.val_frac, cfg.test_frac, cfg.seed)?;
    let (tr, va, te) = split(records, &spec)?;
    let pre = Preprocess::new(cfg.preprocessing);
    let train_set = to_samples(&tr, &pre)?;
    let val_set = to_samples(&va, &pre)?;
    let dir = out_dir(a.out.clone(), "train")?;

    let mut split_csv = String::from("id,split\n");
    for (name, part) in [("train", &tr), ("val", &va), ("test", &te)] {
        for r in part.iter() {
            split_csv.push_str(&format!("{},{name}\n", r.id));
        }
    }
    std::fs::write(dir.join("split.csv"), split_csv).map_err(Error::from)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml()).map_err(Error::from)?;

    let outcome = match &a.resume {
        Some(p) => resume(&cfg, &train_set, &val_set, Checkpoint::load(p)?),
        None => train(&cfg, &train_set, &val_set),
    };
    let mut artifacts = vec!["split.csv".to_owned(), "config.toml".to_owned()];
    let (epoch, best_epoch, aborted, failure) = match outcome {
        Ok(out) => {
            Checkpoint::new(out.best.clone()).save(&dir.join("best.ckpt"))?;
            out.last.save(&dir.join("last.ckpt"))?;
            out.log.save(&dir.join("train_log.csv"))?;
            artifacts.extend(["best.ckpt", "last.ckpt", "train_log.csv"].map(String::from));
            if let Some(e) = out.log.epochs.last() {
                println!(
                    "epoch {}: train {:?} val {:?} (best epoch {})",
                    e.epoch, e.train_loss, e.val_loss, out.best_epoch
                );
            }
            (out.last.epoch, out.best_epoch, false, None)
        }
        Err(TrainAbort {
            epoch,
            source,
            best,
            log,
        }) => {
            if let Some(b) = best {
                Checkpoint::new(b).save(&dir.join("best.ckpt"))?;
                artifacts.push("best.ckpt".into());
            }
            log.save(&dir.join("train_log.csv"))?;
            artifacts.push("train_log.csv".into());
            let code = if matches!(source, Error::Numeric { .. }) { 3 } else { 2 };
            let last = log.epochs.last().map_or(0, |e| e.epoch);
            (
                last,
                0,
                true,
                Some(Failure {
                    code,
                    message: format!("training aborted at epoch {epoch}: {source}"),
                }),
            )
        }
    };
    artifacts.push("run_manifest.toml".into());
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        command: "train".to_owned(),
        data: a.data.display().to_string(),
        epoch,
        best_epoch,
        aborted,
        artifacts,
        config: cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::invalid(format!("run manifest: {e}")))?;
    std::fs::write(dir.join("run_manifest.toml"), text).map_err(Error::from)?;
    match failure {
        Some(f) => Err(f),
        None => {
            println!("artifacts in {}", dir.display());
            Ok(())
        }
    }
}

fn truth_of(records: &[SampleRecord]) -> Predictions {
    records.iter().map(|r| (r.id.clone(), r.targets)).collect()
}

fn load_split(path: &Path) -> std::result::Result<HashMap<String, String>, Failure> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        if row.len() != 2 {
            return Err(Error::invalid(format!("{}: expected id,split rows", path.display())).into());
        }
        out.insert(row[0].to_owned(), row[1].to_owned());
    }
    Ok(out)
}

fn eval(a: EvalArgs) -> CliResult {
    let mut records = load_dataset(&a.data)?;
    if let (Some(file), Some(which)) = (&a.split_file, &a.split) {
        let labels = load_split(file)?;
        records.retain(|r| labels.get(&r.id) == Some(which));
    }
    let truth = truth_of(&records);
    let predictions = match (&a.checkpoint, &a.predictions) {
        (Some(ckpt), _) => predict_records(&Checkpoint::load(ckpt)?.params, &records, &Preprocess::new(a.strategy))?,
        (None, Some(p)) => {
            let keep: std::collections::HashSet<&str> = truth.iter().map(|(id, _)| id.as_str()).collect();
            let mut preds = truth_of(&load_manifest(p)?);
            if a.split_file.is_some() {
                preds.retain(|(id, _)| keep.contains(id.as_str()));
            }
            preds
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let report = evaluate(&predictions, &truth)?;
    let dir = out_dir(a.out, "eval")?;
    std::fs::write(dir.join("metrics.csv"), report.to_table()).map_err(Error::from)?;
    print!("{}", report.to_pretty());
    Ok(())
}

fn predict_cmd(a: PredictArgs) -> CliResult {
    let params = Checkpoint::load(&a.checkpoint)?.params;
    let pre = Preprocess::new(a.strategy);
    let records: Vec<SampleRecord> = match &a.data {
        Some(dir) => {
            let recs = load_dataset(dir)?;
            predict_records(&params, &recs, &pre)?
                .into_iter()
                .zip(recs)
                .map(|((id, targets), r)| SampleRecord {
                    id,
                    source: r.source,
                    targets,
                })
                .collect()
        }
        None => {
            if params.n_tasks() != crate::NUM_TASKS {
                return Err(Error::invalid("prediction output needs a four-head model").into());
            }
            let mut out = Vec::with_capacity(a.images.len());
            for p in &a.images {
                let img = crate::data::load_image(p)?;
                let d = predict(&params, &[img], &pre)?.remove(0);
                out.push(SampleRecord {
                    id: p.display().to_string(),
                    source: Source::Path(p.clone()),
                    targets: [d[0], d[1], d[2], d[3]],
                });
            }
            out
        }
    };
    let dir = out_dir(a.out, "predict")?;
    let path = dir.join("predictions.csv");
    write_manifest(&path, &records, "features.csv")?;
    for r in &records {
        let means: Vec<String> = r.targets.iter().map(|d| format!("{:.3}", d.mean_score())).collect();
        println!("{} {}", r.id, means.join(" "));
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn verify_cmd(a: VerifyArgs) -> CliResult {
    let opts = VerifyOptions {
        only: a.only.as_deref().map(Suite::parse).transpose()?,
        seed: a.seed,
        corrupt_gradient: a.corrupt_gradient,
    };
    let outcomes = verify::run(&opts)?;
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failed} verification suite(s) failed"),
        });
    }
    Ok(())
}
