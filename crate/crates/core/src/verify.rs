//! Built-in numerical self-checks behind the `verify` subcommand.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::SampleBatch;
use crate::error::{Error, Result};
use crate::moo::{frank_wolfe_min_norm, FrankWolfeConfig};
use crate::nn::{
    backward_task, encoder_pass, head_forward, task_gradients, task_loss, Activation, Architecture, GradSpace,
    GradientSet, Matrix, ModelParams, RepresentationBatch,
};
use crate::score_dist::{emd_grad_logits, emd_loss, EmdConfig, ScoreDistribution, NUM_LEVELS};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// EMD logit gradient against central differences.
    EmdGrad,
    /// Network gradients against central differences, plus the chain rule
    /// through the representation.
    NetGrad,
    /// Frank-Wolfe against a simplex grid search.
    FwOracle,
    /// Optimality conditions of converged solver output.
    Support,
    /// Symmetry, identity and triangle inequality of the EMD.
    EmdProps,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::EmdGrad, Suite::NetGrad, Suite::FwOracle, Suite::Support, Suite::EmdProps];

    pub fn name(self) -> &'static str {
        match self {
            Suite::EmdGrad => "emd-grad",
            Suite::NetGrad => "net-grad",
            Suite::FwOracle => "fw-oracle",
            Suite::Support => "support",
            Suite::EmdProps => "emd-props",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown verify suite '{s}'")))
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub only: Option<Suite>,
    pub seed: u64,
    /// Test hook: perturbs analytic gradients so the gradient suites must fail.
    pub corrupt_gradient: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub suite: Suite,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.suite.name(), self.detail)
    }
}

pub fn run(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let suites: Vec<Suite> = match opts.only {
        Some(s) => vec![s],
        None => Suite::ALL.to_vec(),
    };
    suites
        .into_iter()
        .map(|s| {
            let mut rng = seed::stream(opts.seed, &format!("verify/{}", s.name()));
            match s {
                Suite::EmdGrad => emd_grad(&mut rng, opts.corrupt_gradient),
                Suite::NetGrad => net_grad(&mut rng, opts.corrupt_gradient),
                Suite::FwOracle => fw_oracle(&mut rng),
                Suite::Support => support(&mut rng),
                Suite::EmdProps => emd_props(&mut rng),
            }
        })
        .collect()
}

const GRAD_TOL: f64 = 1e-4;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_dist(rng: &mut ChaCha8Rng) -> Result<ScoreDistribution> {
    let logits: Vec<f64> = (0..NUM_LEVELS).map(|_| 1.5 * normal(rng)).collect();
    ScoreDistribution::from_logits(&logits)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn corrupt(g: &mut [f64]) {
    let m = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    g[0] += 1e-2 * (m + 1e-3);
}

/// Central differences of `f` around `x`.
fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

fn emd_grad(rng: &mut ChaCha8Rng, corrupt_grad: bool) -> Result<CheckOutcome> {
    let cases = 100;
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        let cfg = EmdConfig::new(if i % 2 == 0 { 2.0 } else { 1.0 })?;
        let y = random_dist(rng)?;
        let z: Vec<f64> = (0..NUM_LEVELS).map(|_| 2.0 * normal(rng)).collect();
        let mut analytic = emd_grad_logits(&y, &z, cfg)?.to_vec();
        if corrupt_grad {
            corrupt(&mut analytic);
        }
        let numeric = numeric_grad(&z, 1e-5, |v| Ok(emd_loss(&y, &ScoreDistribution::from_logits(v)?, cfg)))?;
        worst = worst.max(rel_err(&analytic, &numeric));
    }
    Ok(CheckOutcome {
        suite: Suite::EmdGrad,
        passed: worst < GRAD_TOL,
        detail: format!("{cases} cases, max relative error {worst:.2e} (limit {GRAD_TOL:.0e})"),
    })
}

fn random_batch(rng: &mut ChaCha8Rng, rows: usize, dim: usize, tasks: usize) -> Result<SampleBatch> {
    let x: Vec<f64> = (0..rows * dim).map(|_| rng.random::<f64>()).collect();
    let targets = (0..tasks)
        .map(|_| (0..rows).map(|_| random_dist(rng)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    SampleBatch::new(Matrix::from_vec(rows, dim, x)?, targets)
}

fn net_grad(rng: &mut ChaCha8Rng, corrupt_grad: bool) -> Result<CheckOutcome> {
    let nets = 20;
    let cfg = EmdConfig::default();
    let mut worst_shared: f64 = 0.0;
    let mut worst_rep: f64 = 0.0;
    let mut worst_chain: f64 = 0.0;
    let mut max_params = 0;
    for _ in 0..nets {
        let arch = Architecture {
            input_dim: rng.random_range(2..=6),
            encoder_hidden: vec![rng.random_range(3..=6)],
            latent_dim: rng.random_range(2..=4),
            head_hidden: Vec::new(),
            n_tasks: 4,
            activation: Activation::Tanh,
        };
        max_params = max_params.max(arch.total_len());
        let params = ModelParams::init(arch.clone(), rng.random())?;
        let batch = random_batch(rng, 3, arch.input_dim, 4)?;
        let pass = encoder_pass(&params, batch.features())?;
        for t in 0..4 {
            let mut analytic = backward_task(&params, &batch, t, cfg, GradSpace::Shared)?;
            if corrupt_grad {
                corrupt(&mut analytic);
            }
            let numeric = numeric_grad(&params.shared, 1e-6, |w| {
                let mut p = params.clone();
                p.shared.copy_from_slice(w);
                task_loss(&p, &batch, t, cfg)
            })?;
            worst_shared = worst_shared.max(rel_err(&analytic, &numeric));

            let tg = task_gradients(&params, &pass, &batch, t, cfg)?;
            let rep = pass.representation();
            let targets = batch.targets(t)?;
            let numeric_rep = numeric_grad(rep.as_slice(), 1e-6, |z| {
                let m = Matrix::from_vec(rep.rows(), rep.cols(), z.to_vec())?;
                let logits = head_forward(&params, t, &RepresentationBatch(m))?;
                let mut total = 0.0;
                for (r, y) in targets.iter().enumerate() {
                    total += emd_loss(y, &ScoreDistribution::from_logits(logits.row(r))?, cfg);
                }
                Ok(total / targets.len() as f64)
            })?;
            worst_rep = worst_rep.max(rel_err(tg.representation.as_slice(), &numeric_rep));

            let chained = crate::nn::encoder_backward(&params, &pass, &tg.representation)?;
            let direct = backward_task(&params, &batch, t, cfg, GradSpace::Shared)?;
            let dev = chained
                .iter()
                .zip(&direct)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            worst_chain = worst_chain.max(dev);
        }
    }
    let passed = worst_shared < GRAD_TOL && worst_rep < GRAD_TOL && worst_chain <= 1e-8;
    Ok(CheckOutcome {
        suite: Suite::NetGrad,
        passed,
        detail: format!(
            "{nets} nets (<= {max_params} params, 4 tasks): shared rel err {worst_shared:.2e}, \
             representation rel err {worst_rep:.2e}, chain-rule gap {worst_chain:.2e}"
        ),
    })
}

fn random_grads(rng: &mut ChaCha8Rng, t: usize, dim: usize) -> Result<GradientSet> {
    let grads = (0..t).map(|_| (0..dim).map(|_| normal(rng)).collect()).collect();
    GradientSet::new(GradSpace::Representation, grads)
}

fn combined_norm(g: &GradientSet, w: &[f64]) -> f64 {
    let mut d = vec![0.0; g.dim()];
    for (gt, wt) in g.iter().zip(w) {
        for (a, b) in d.iter_mut().zip(gt) {
            *a += wt * b;
        }
    }
    norm(&d)
}

/// Smallest combined norm over the simplex grid with spacing `1/steps`.
fn grid_min(g: &GradientSet, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    let h = steps as f64;
    match g.len() {
        2 => {
            for i in 0..=steps {
                let a = i as f64 / h;
                best = best.min(combined_norm(g, &[a, 1.0 - a]));
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let (a, b) = (i as f64 / h, j as f64 / h);
                    best = best.min(combined_norm(g, &[a, b, (1.0 - a - b).max(0.0)]));
                }
            }
        }
        _ => unreachable!("grid oracle covers two or three tasks"),
    }
    best
}

fn fw_oracle(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let cases = 100;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut simplex_ok = true;
    for i in 0..cases {
        let t = 2 + i % 2;
        let dim = rng.random_range(1..=5);
        let g = random_grads(rng, t, dim)?;
        let rep = frank_wolfe_min_norm(&g, FrankWolfeConfig::default())?;
        let w = rep.delta.as_slice();
        simplex_ok &= w.iter().all(|v| *v >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        worst_excess = worst_excess.max(rep.combined_norm - grid_min(&g, 100));
    }
    let g = GradientSet::new(
        GradSpace::Representation,
        vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0]],
    )?;
    let origin = frank_wolfe_min_norm(&g, FrankWolfeConfig::default())?.combined_norm;
    let passed = simplex_ok && worst_excess <= 1e-4 && origin < 1e-3;
    Ok(CheckOutcome {
        suite: Suite::FwOracle,
        passed,
        detail: format!(
            "{cases} instances: max(solver - grid) {worst_excess:.2e} (limit 1e-4), \
             on simplex {simplex_ok}, origin-in-hull norm {origin:.1e}"
        ),
    })
}

const SUPPORT_TOL: f64 = 1e-6;

fn support(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let cases = 50;
    let cfg = FrankWolfeConfig::default();
    let mut violations = 0;
    let mut unconverged = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let dim = rng.random_range(3..=8);
        let g = random_grads(rng, 4, dim)?;
        let rep = frank_wolfe_min_norm(&g, cfg)?;
        if !rep.converged {
            unconverged += 1;
            continue;
        }
        let mut d = vec![0.0; dim];
        for (gt, wt) in g.iter().zip(rep.delta.as_slice()) {
            for (a, b) in d.iter_mut().zip(gt) {
                *a += wt * b;
            }
        }
        let dd: f64 = d.iter().map(|x| x * x).sum();
        for gt in g.iter() {
            let gd: f64 = gt.iter().zip(&d).map(|(a, b)| a * b).sum();
            worst = worst.max(dd - gd);
            if gd < dd - SUPPORT_TOL {
                violations += 1;
            }
        }
    }
    Ok(CheckOutcome {
        suite: Suite::Support,
        passed: violations == 0 && unconverged == 0,
        detail: format!(
            "{cases} instances (4 tasks): max(‖d‖² - g·d) {worst:.2e} (limit {SUPPORT_TOL:.0e}), \
             {violations} violations, {unconverged} not converged"
        ),
    })
}

fn emd_props(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let triples = 1000;
    let mut failures = Vec::new();
    for i in 0..triples {
        let [a, b, c] = [random_dist(rng)?, random_dist(rng)?, random_dist(rng)?];
        for r in [1.0, 2.0] {
            let cfg = EmdConfig::new(r)?;
            let (ab, ba) = (emd_loss(&a, &b, cfg), emd_loss(&b, &a, cfg));
            if ab != ba {
                failures.push(format!("symmetry #{i}"));
            }
            if emd_loss(&a, &a, cfg) != 0.0 {
                failures.push(format!("identity #{i}"));
            }
            if ab < 0.0 {
                failures.push(format!("sign #{i}"));
            }
            if ab > emd_loss(&a, &c, cfg) + emd_loss(&c, &b, cfg) + 1e-12 {
                failures.push(format!("triangle #{i} r={r}"));
            }
        }
    }
    Ok(CheckOutcome {
        suite: Suite::EmdProps,
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{triples} triples, r in {{1, 2}}")
        } else {
            format!("{} failures, first {}", failures.len(), failures[0])
        },
    })
}
