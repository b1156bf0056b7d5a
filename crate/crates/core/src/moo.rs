//! Min-norm task weighting.
//!
//! Given per-task gradients `g_1..g_T`, find simplex weights `δ` minimizing
//! `‖Σ δ_t g_t‖²`. The minimizer is the point of the gradients' convex hull
//! closest to the origin; descending along it does not increase any task
//! loss to first order. With MGDA-UB the gradients are taken with respect to
//! the shared representation rather than the encoder parameters, so one
//! encoder backward pass serves all tasks.
//!
//! Everything works on the Gram matrix `M_ij = g_i · g_j`, so the solver
//! cost is independent of the gradient dimension after `M` is formed.

use crate::data::SampleBatch;
use crate::error::{Error, Result};
use crate::nn::{
    apply_update, encoder_backward, encoder_pass, task_gradients, EncoderPass, GradSpace,
    GradientSet, Matrix, ModelParams, TaskGradients,
};
use crate::score_dist::EmdConfig;

/// Weights below this are snapped to zero after solving.
pub const WEIGHT_FLOOR: f64 = 1e-9;

/// A point on the task simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskWeights(Vec<f64>);

impl TaskWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("task weights are empty"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("task weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("task weights sum to {sum}, not 1")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(t: usize) -> Self {
        Self(vec![1.0 / t as f64; t])
    }

    pub fn one_hot(t: usize, of: usize) -> Self {
        let mut w = vec![0.0; of];
        w[t] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Zeroes entries below [`WEIGHT_FLOOR`] and renormalizes.
    fn snapped(mut w: Vec<f64>) -> Self {
        for v in &mut w {
            if *v < WEIGHT_FLOOR {
                *v = 0.0;
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        Self(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub delta: TaskWeights,
    /// `‖Σ δ_t g_t‖₂` for the reported `delta`.
    pub combined_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrankWolfeConfig {
    pub max_iter: usize,
    /// Stop once the duality gap `‖d‖² − min_t g_t·d` is at most
    /// `tol · min(1, max_t ‖g_t‖²)`, or at round-off level for very large
    /// gradients.
    pub tol: f64,
}

impl Default for FrankWolfeConfig {
    fn default() -> Self {
        Self {
            max_iter: 250,
            tol: 1e-6,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizer over `γ ∈ [0, 1]` of `‖γ u + (1 − γ) v‖²` from `u·u`, `u·v`,
/// `v·v`. Returns `(γ, squared norm)`; a degenerate segment yields `γ = 1`.
fn min_norm_segment(uu: f64, uv: f64, vv: f64) -> (f64, f64) {
    let denom = uu - 2.0 * uv + vv;
    if denom <= 0.0 {
        return (1.0, uu);
    }
    let gamma = ((vv - uv) / denom).clamp(0.0, 1.0);
    let sq = gamma * gamma * uu + 2.0 * gamma * (1.0 - gamma) * uv + (1.0 - gamma) * (1.0 - gamma) * vv;
    (gamma, sq.max(0.0))
}

/// Closed-form two-task solution `(γ, 1 − γ)`.
pub fn min_norm_2(g1: &[f64], g2: &[f64]) -> Result<TaskWeights> {
    if g1.len() != g2.len() {
        return Err(Error::invalid(format!(
            "gradient dimensions differ: {} vs {}",
            g1.len(),
            g2.len()
        )));
    }
    if g1.iter().chain(g2).any(|v| !v.is_finite()) {
        return Err(Error::invalid("gradients must be finite"));
    }
    let (gamma, _) = min_norm_segment(dot(g1, g1), dot(g1, g2), dot(g2, g2));
    Ok(TaskWeights(vec![gamma, 1.0 - gamma]))
}

fn gram(grads: &GradientSet) -> Vec<Vec<f64>> {
    let t = grads.len();
    let mut m = vec![vec![0.0; t]; t];
    for i in 0..t {
        for j in i..t {
            let v = dot(grads.get(i), grads.get(j));
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

fn combined(grads: &GradientSet, delta: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; grads.dim()];
    for (g, &w) in grads.iter().zip(delta) {
        if w != 0.0 {
            for (a, b) in d.iter_mut().zip(g) {
                *a += w * b;
            }
        }
    }
    d
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Exact minimizer of `δᵀ M δ` on the affine hull of the support of `delta`,
/// if it lies inside the face: solves `M_S δ_S = λ 1`, `Σ δ_S = 1`.
fn face_minimizer(m: &[Vec<f64>], delta: &[f64]) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..delta.len()).filter(|&i| delta[i] > 0.0).collect();
    let k = support.len();
    if k < 2 {
        return None;
    }
    // augmented system [[M_S, -1], [1ᵀ, 0]] [δ_S; λ] = [0; 1]
    let n = k + 1;
    let mut a = vec![vec![0.0; n + 1]; n];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r][c] = m[i][j];
        }
        a[r][k] = -1.0;
        a[k][r] = 1.0;
    }
    a[k][n] = 1.0;
    let scale = support.iter().map(|&i| m[i][i]).fold(0.0, f64::max);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale.max(1.0) {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    let mut out = vec![0.0; delta.len()];
    for (r, &i) in support.iter().enumerate() {
        let v = a[r][n] / a[r][r];
        if !(v.is_finite() && v >= 0.0) {
            return None;
        }
        out[i] = v;
    }
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    Some(out)
}

/// Frank-Wolfe with away steps over the task simplex, starting from the
/// best pair.
///
/// Each iteration compares the Frank-Wolfe vertex `s = argmin_t g_t · d`
/// (lowest index on ties) with the away vertex `a = argmax_{δ_a > 0} g_a · d`
/// and line-searches along whichever direction has the larger gap. Away
/// steps move weight off `a`, which gives linear convergence when the
/// optimum lies on a face of the simplex. Before each step the exact
/// minimizer on the current face is tried and kept when it lowers the norm,
/// so the solver finishes once the optimal support has been found.
pub fn frank_wolfe_min_norm(grads: &GradientSet, cfg: FrankWolfeConfig) -> Result<SolverReport> {
    let t = grads.len();
    if t == 0 {
        return Err(Error::invalid("empty gradient set"));
    }
    if t == 1 {
        return Ok(SolverReport {
            delta: TaskWeights(vec![1.0]),
            combined_norm: norm(grads.get(0)),
            iterations: 0,
            converged: true,
        });
    }
    let m = gram(grads);
    let scale = (0..t).map(|i| m[i][i]).fold(0.0, f64::max);
    // relative below unit scale, absolute above it, never below round-off
    let threshold = (cfg.tol * scale.min(1.0)).max(64.0 * f64::EPSILON * scale * t as f64);

    // best pair
    let mut best = (f64::INFINITY, 0, 1, 1.0);
    for i in 0..t {
        for j in i + 1..t {
            let (gamma, sq) = min_norm_segment(m[i][i], m[i][j], m[j][j]);
            if sq < best.0 {
                best = (sq, i, j, gamma);
            }
        }
    }
    let mut delta = vec![0.0; t];
    delta[best.1] = best.3;
    delta[best.2] += 1.0 - best.3;

    let mut iterations = 0;
    let mut converged = false;
    loop {
        // M δ and δᵀ M δ
        let md: Vec<f64> = (0..t).map(|i| dot(&m[i], &delta)).collect();
        let dd = dot(&delta, &md);
        let mut star = 0;
        for i in 1..t {
            if md[i] < md[star] {
                star = i;
            }
        }
        let gap = dd - md[star];
        if gap <= threshold {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        if let Some(exact) = face_minimizer(&m, &delta) {
            let exact_dd: f64 = (0..t).map(|i| exact[i] * dot(&m[i], &exact)).sum();
            if exact_dd < dd {
                delta = exact;
                iterations += 1;
                continue;
            }
        }
        let mut away = star;
        for i in 0..t {
            if delta[i] > 0.0 && (delta[away] == 0.0 || md[i] > md[away]) {
                away = i;
            }
        }
        let away_gap = md[away] - dd;
        iterations += 1;
        if away_gap > gap && delta[away] < 1.0 {
            // d + γ (d − g_a), γ ∈ [0, δ_a / (1 − δ_a)]
            let denom = dd - 2.0 * md[away] + m[away][away];
            if denom <= 0.0 {
                break;
            }
            let max_step = delta[away] / (1.0 - delta[away]);
            let step = (away_gap / denom).min(max_step);
            for v in delta.iter_mut() {
                *v *= 1.0 + step;
            }
            delta[away] -= step;
            if step == max_step || delta[away] < 0.0 {
                delta[away] = 0.0;
            }
        } else {
            let (gamma, _) = min_norm_segment(dd, md[star], m[star][star]);
            if gamma >= 1.0 {
                // no progress along the segment; round-off regime
                converged = gap <= threshold;
                break;
            }
            for v in delta.iter_mut() {
                *v *= gamma;
            }
            delta[star] += 1.0 - gamma;
        }
    }

    let delta = TaskWeights::snapped(delta);
    let combined_norm = norm(&combined(grads, &delta.0));
    Ok(SolverReport {
        delta,
        combined_norm,
        iterations,
        converged,
    })
}

/// Encoder pass and per-task gradients for one batch.
pub struct MultiTaskPass {
    pub encoder: EncoderPass,
    pub tasks: Vec<TaskGradients>,
}

impl MultiTaskPass {
    pub fn losses(&self) -> Vec<f64> {
        self.tasks.iter().map(|t| t.loss).collect()
    }

    /// Per-task gradients with respect to the representation batch.
    pub fn representation_gradients(&self) -> Result<GradientSet> {
        GradientSet::new(
            GradSpace::Representation,
            self.tasks
                .iter()
                .map(|t| t.representation.as_slice().to_vec())
                .collect(),
        )
    }
}

/// One encoder forward shared by all tasks, then each head's loss and
/// gradients.
pub fn multi_task_pass(params: &ModelParams, batch: &SampleBatch, cfg: EmdConfig) -> Result<MultiTaskPass> {
    let encoder = encoder_pass(params, batch.features())?;
    let tasks = (0..params.n_tasks())
        .map(|t| task_gradients(params, &encoder, batch, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiTaskPass { encoder, tasks })
}

/// MGDA-UB weights: Frank-Wolfe on the representation gradients. The
/// encoder Jacobian factor of the bound does not depend on `δ` and is
/// dropped.
pub fn mgda_ub_weights(
    params: &ModelParams,
    batch: &SampleBatch,
    cfg: EmdConfig,
    fw: FrankWolfeConfig,
) -> Result<SolverReport> {
    let pass = multi_task_pass(params, batch, cfg)?;
    frank_wolfe_min_norm(&pass.representation_gradients()?, fw)
}

/// Shared-parameter direction `Σ δ_t ∇_φ L^t`, obtained by chaining the
/// weighted representation gradient through the encoder once.
pub fn shared_direction(params: &ModelParams, pass: &MultiTaskPass, delta: &TaskWeights) -> Result<Vec<f64>> {
    if delta.len() != pass.tasks.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} tasks",
            delta.len(),
            pass.tasks.len()
        )));
    }
    let first = &pass.tasks[0].representation;
    let mut g = Matrix::zeros(first.rows(), first.cols());
    for (t, &w) in pass.tasks.iter().zip(delta.as_slice()) {
        if w == 0.0 {
            continue;
        }
        for r in 0..g.rows() {
            for (a, b) in g.row_mut(r).iter_mut().zip(t.representation.row(r)) {
                *a += w * b;
            }
        }
    }
    encoder_backward(params, &pass.encoder, &g)
}

/// Full update direction: weighted shared part followed by each head's own
/// unweighted gradient.
pub fn update_direction(params: &ModelParams, pass: &MultiTaskPass, delta: &TaskWeights) -> Result<Vec<f64>> {
    let mut dir = shared_direction(params, pass, delta)?;
    for t in &pass.tasks {
        dir.extend_from_slice(&t.head);
    }
    Ok(dir)
}

/// Momentum step along [`update_direction`]. Returns the pre-update task
/// losses of the batch.
pub fn combine_and_descend(
    params: &mut ModelParams,
    batch: &SampleBatch,
    delta: &TaskWeights,
    cfg: EmdConfig,
    lr: f64,
    velocity: &mut [f64],
    momentum: f64,
) -> Result<Vec<f64>> {
    let pass = multi_task_pass(params, batch, cfg)?;
    let dir = update_direction(params, &pass, delta)?;
    apply_update(params, &dir, lr, velocity, momentum)?;
    Ok(pass.losses())
}
