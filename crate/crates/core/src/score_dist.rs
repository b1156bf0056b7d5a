//! Ordinal score distributions and the r-norm Earth Mover's Distance.
//!
//! For two distributions over the same ordered levels the EMD reduces to a
//! norm of the difference of their cumulative distribution functions:
//!
//! ```text
//! EMD(y, ŷ) = ( (1/N) Σ_c |CDF_y(c) − CDF_ŷ(c)|^r )^(1/r)
//! ```

use crate::error::{Error, Result};

/// Number of ordinal score levels (scores 1..=5).
pub const NUM_LEVELS: usize = 5;

/// A stored distribution must sum to one within this tolerance.
pub const NORM_TOL: f64 = 1e-9;

/// Inputs whose sum is off by at most this much are renormalized; beyond it
/// they are rejected.
pub const RENORM_TOL: f64 = 1e-6;

/// A probability vector over the five ordinal score levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreDistribution {
    probs: [f64; NUM_LEVELS],
}

impl ScoreDistribution {
    /// Validates `probs`, renormalizing sums within [`RENORM_TOL`] of one.
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.len() != NUM_LEVELS {
            return Err(Error::invalid(format!(
                "score distribution needs {NUM_LEVELS} levels, got {}",
                probs.len()
            )));
        }
        let mut out = [0.0; NUM_LEVELS];
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::invalid(format!(
                    "score distribution entry {} is {p}",
                    i + 1
                )));
            }
            out[i] = p;
        }
        let sum: f64 = out.iter().sum();
        let err = (sum - 1.0).abs();
        if err > RENORM_TOL {
            return Err(Error::invalid(format!(
                "score distribution sums to {sum}, not 1"
            )));
        }
        if err > NORM_TOL {
            out.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(Self { probs: out })
    }

    pub fn uniform() -> Self {
        Self {
            probs: [1.0 / NUM_LEVELS as f64; NUM_LEVELS],
        }
    }

    /// All mass on `level` (1-based).
    pub fn point_mass(level: usize) -> Result<Self> {
        if !(1..=NUM_LEVELS).contains(&level) {
            return Err(Error::invalid(format!("level {level} outside 1..={NUM_LEVELS}")));
        }
        let mut probs = [0.0; NUM_LEVELS];
        probs[level - 1] = 1.0;
        Ok(Self { probs })
    }

    /// Softmax of a logit vector.
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        check_logits(logits)?;
        Ok(Self {
            probs: softmax(logits),
        })
    }

    pub fn probs(&self) -> &[f64; NUM_LEVELS] {
        &self.probs
    }

    pub fn cdf(&self) -> [f64; NUM_LEVELS] {
        let mut acc = 0.0;
        let mut out = [0.0; NUM_LEVELS];
        for (o, p) in out.iter_mut().zip(self.probs.iter()) {
            acc += p;
            *o = acc;
        }
        out
    }

    /// Expected score over levels 1..=5.
    pub fn mean_score(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// Arithmetic mean of several distributions, renormalized.
    pub fn average(items: &[ScoreDistribution]) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("cannot average zero distributions"));
        }
        let mut acc = [0.0; NUM_LEVELS];
        for d in items {
            for (a, p) in acc.iter_mut().zip(d.probs.iter()) {
                *a += p;
            }
        }
        let sum: f64 = acc.iter().sum();
        acc.iter_mut().for_each(|a| *a /= sum);
        Ok(Self { probs: acc })
    }
}

/// Exponent of the EMD norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmdConfig {
    r: f64,
}

impl EmdConfig {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 1.0 {
            return Err(Error::invalid(format!("EMD exponent r must be >= 1, got {r}")));
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

impl Default for EmdConfig {
    fn default() -> Self {
        Self { r: 2.0 }
    }
}

pub fn cdf(d: &ScoreDistribution) -> [f64; NUM_LEVELS] {
    d.cdf()
}

pub fn mean_score(d: &ScoreDistribution) -> f64 {
    d.mean_score()
}

pub fn emd_loss(y: &ScoreDistribution, yhat: &ScoreDistribution, cfg: EmdConfig) -> f64 {
    let diff = cdf_diff(y, yhat.probs());
    loss_from_diff(&diff, cfg.r)
}

/// Gradient of `EMD(y, softmax(logits))` with respect to the logits.
pub fn emd_grad_logits(
    y: &ScoreDistribution,
    logits: &[f64],
    cfg: EmdConfig,
) -> Result<[f64; NUM_LEVELS]> {
    check_logits(logits)?;
    Ok(emd_loss_grad_logits(y, logits, cfg).1)
}

/// Loss and logit gradient in one pass. `logits` must be finite and of
/// length [`NUM_LEVELS`].
pub(crate) fn emd_loss_grad_logits(
    y: &ScoreDistribution,
    logits: &[f64],
    cfg: EmdConfig,
) -> (f64, [f64; NUM_LEVELS]) {
    let p = softmax(logits);
    let diff = cdf_diff(y, &p);
    let r = cfg.r;
    let loss = loss_from_diff(&diff, r);

    // dL/d diff_c
    let n = NUM_LEVELS as f64;
    let s: f64 = diff.iter().map(|d| d.abs().powf(r)).sum();
    let mut d_diff = [0.0; NUM_LEVELS];
    if s > 0.0 {
        let outer = (s / n).powf(1.0 / r - 1.0) / n;
        for (g, &d) in d_diff.iter_mut().zip(diff.iter()) {
            *g = outer * d.abs().powf(r - 1.0) * sign(d);
        }
    }

    // diff_c = CDF_y(c) - Σ_{j<=c} p_j, so dL/dp_j = -Σ_{c>=j} dL/d diff_c
    let mut d_p = [0.0; NUM_LEVELS];
    let mut acc = 0.0;
    for j in (0..NUM_LEVELS).rev() {
        acc += d_diff[j];
        d_p[j] = -acc;
    }

    // softmax backward: dL/dz = p ⊙ (dL/dp − <p, dL/dp>)
    let dot: f64 = p.iter().zip(d_p.iter()).map(|(a, b)| a * b).sum();
    let mut grad = [0.0; NUM_LEVELS];
    for i in 0..NUM_LEVELS {
        grad[i] = p[i] * (d_p[i] - dot);
    }
    (loss, grad)
}

pub(crate) fn softmax(logits: &[f64]) -> [f64; NUM_LEVELS] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_LEVELS];
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits.iter()) {
        *o = (z - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
    out
}

fn check_logits(logits: &[f64]) -> Result<()> {
    if logits.len() != NUM_LEVELS {
        return Err(Error::invalid(format!(
            "expected {NUM_LEVELS} logits, got {}",
            logits.len()
        )));
    }
    if let Some(z) = logits.iter().find(|z| !z.is_finite()) {
        return Err(Error::invalid(format!("non-finite logit {z}")));
    }
    Ok(())
}

fn cdf_diff(y: &ScoreDistribution, p: &[f64; NUM_LEVELS]) -> [f64; NUM_LEVELS] {
    let mut out = [0.0; NUM_LEVELS];
    let (mut cy, mut cp) = (0.0, 0.0);
    for c in 0..NUM_LEVELS {
        cy += y.probs[c];
        cp += p[c];
        out[c] = cy - cp;
    }
    out
}

fn loss_from_diff(diff: &[f64; NUM_LEVELS], r: f64) -> f64 {
    let s: f64 = diff.iter().map(|d| d.abs().powf(r)).sum();
    (s / NUM_LEVELS as f64).powf(1.0 / r)
}

// subgradient 0 at the kink
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
