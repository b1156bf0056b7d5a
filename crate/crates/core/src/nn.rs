//! Shared encoder and per-task heads with exact reverse-mode gradients.
//!
//! The network is `head_t(encoder(x))`. Both halves are fully connected
//! stacks stored as flat parameter vectors; each layer occupies a contiguous
//! slice holding its weight matrix (row-major, `out × in`) followed by its
//! bias. Encoder layers are all activated, including the last one, so the
//! representation is post-activation. Head hidden layers are activated and
//! the final layer emits raw logits.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;

use crate::data::SampleBatch;
use crate::error::{Error, Result};
use crate::score_dist::{emd_loss_grad_logits, EmdConfig, NUM_LEVELS};
use crate::seed;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Rows selected by `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative from the pre-activation and the activated output.
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - post * post,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::invalid(format!("unknown activation '{other}'"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Layer sizes and activation of the encoder and heads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub latent_dim: usize,
    /// Hidden widths inside each head; empty means one FC layer per head.
    pub head_hidden: Vec<usize>,
    pub n_tasks: usize,
    pub activation: Activation,
}

impl Architecture {
    /// Desk-scale default: two hidden layers of 64, latent 32, one FC layer
    /// per task head.
    pub fn desk(input_dim: usize) -> Self {
        Self {
            input_dim,
            encoder_hidden: vec![64, 64],
            latent_dim: 32,
            head_hidden: Vec::new(),
            n_tasks: crate::NUM_TASKS,
            activation: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self
            .encoder_hidden
            .iter()
            .chain(self.head_hidden.iter())
            .chain([&self.input_dim, &self.latent_dim]);
        if dims.into_iter().any(|&d| d == 0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        if self.n_tasks == 0 {
            return Err(Error::invalid("at least one task head is required"));
        }
        Ok(())
    }

    fn encoder(&self) -> Mlp {
        let mut sizes = vec![self.input_dim];
        sizes.extend(&self.encoder_hidden);
        sizes.push(self.latent_dim);
        Mlp::new(&sizes, self.activation, true)
    }

    fn head(&self) -> Mlp {
        let mut sizes = vec![self.latent_dim];
        sizes.extend(&self.head_hidden);
        sizes.push(NUM_LEVELS);
        Mlp::new(&sizes, self.activation, false)
    }

    pub fn shared_len(&self) -> usize {
        self.encoder().num_params()
    }

    pub fn head_len(&self) -> usize {
        self.head().num_params()
    }

    pub fn total_len(&self) -> usize {
        self.shared_len() + self.n_tasks * self.head_len()
    }
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    inp: usize,
    out: usize,
    offset: usize,
}

impl Layer {
    fn len(&self) -> usize {
        self.inp * self.out + self.out
    }
}

/// Fully connected stack over a flat parameter slice.
#[derive(Debug, Clone)]
struct Mlp {
    layers: Vec<Layer>,
    activation: Activation,
    activate_last: bool,
}

struct MlpTrace {
    /// Input to each layer, then the final output.
    acts: Vec<Matrix>,
    /// Pre-activation of each layer.
    pre: Vec<Matrix>,
}

impl Mlp {
    fn new(sizes: &[usize], activation: Activation, activate_last: bool) -> Self {
        let mut offset = 0;
        let layers = sizes
            .windows(2)
            .map(|w| {
                let l = Layer {
                    inp: w[0],
                    out: w[1],
                    offset,
                };
                offset += l.len();
                l
            })
            .collect();
        Self {
            layers,
            activation,
            activate_last,
        }
    }

    fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::len).sum()
    }

    fn activated(&self, l: usize) -> bool {
        self.activate_last || l + 1 < self.layers.len()
    }

    fn forward(&self, params: &[f64], x: &Matrix, name: &str) -> Result<MlpTrace> {
        let mut acts = vec![x.clone()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let input = acts.last().expect("non-empty");
            let w = &params[layer.offset..layer.offset + layer.inp * layer.out];
            let b = &params[layer.offset + layer.inp * layer.out..layer.offset + layer.len()];
            let mut z = Matrix::zeros(input.rows, layer.out);
            for r in 0..input.rows {
                let xr = input.row(r);
                let zr = z.row_mut(r);
                for o in 0..layer.out {
                    let wr = &w[o * layer.inp..(o + 1) * layer.inp];
                    zr[o] = b[o] + wr.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            if let Some(v) = z.data.iter().find(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: format!("{name} layer {li}"),
                    detail: format!("pre-activation {v}"),
                });
            }
            let a = if self.activated(li) {
                let act = self.activation;
                Matrix {
                    rows: z.rows,
                    cols: z.cols,
                    data: z.data.iter().map(|&v| act.apply(v)).collect(),
                }
            } else {
                z.clone()
            };
            pre.push(z);
            acts.push(a);
        }
        Ok(MlpTrace { acts, pre })
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the stack input.
    fn backward(
        &self,
        params: &[f64],
        trace: &MlpTrace,
        grad_out: &Matrix,
        grad: &mut [f64],
        name: &str,
    ) -> Result<Matrix> {
        let mut g = grad_out.clone();
        for li in (0..self.layers.len()).rev() {
            let layer = self.layers[li];
            if self.activated(li) {
                let pre = &trace.pre[li];
                let post = &trace.acts[li + 1];
                for ((gv, &p), &q) in g.data.iter_mut().zip(&pre.data).zip(&post.data) {
                    *gv *= self.activation.derivative(p, q);
                }
            }
            let input = &trace.acts[li];
            let wlen = layer.inp * layer.out;
            let w = &params[layer.offset..layer.offset + wlen];
            let (gw, gb) = grad[layer.offset..layer.offset + layer.len()].split_at_mut(wlen);
            let mut g_in = Matrix::zeros(g.rows, layer.inp);
            for r in 0..g.rows {
                let gr = g.row(r);
                let xr = input.row(r);
                let gir = g_in.row_mut(r);
                for o in 0..layer.out {
                    let go = gr[o];
                    if go == 0.0 {
                        continue;
                    }
                    gb[o] += go;
                    let wr = &w[o * layer.inp..(o + 1) * layer.inp];
                    let gwr = &mut gw[o * layer.inp..(o + 1) * layer.inp];
                    for i in 0..layer.inp {
                        gwr[i] += go * xr[i];
                        gir[i] += go * wr[i];
                    }
                }
            }
            if let Some(v) = g_in.data.iter().find(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: format!("{name} layer {li} (backward)"),
                    detail: format!("gradient {v}"),
                });
            }
            g = g_in;
        }
        Ok(g)
    }

    fn init(&self, rng: &mut impl Rng, out: &mut Vec<f64>) {
        for layer in &self.layers {
            let s = (6.0 / (layer.inp + layer.out) as f64).sqrt();
            for _ in 0..layer.inp * layer.out {
                out.push(rng.random_range(-s..=s));
            }
            out.extend(std::iter::repeat_n(0.0, layer.out));
        }
    }
}

/// Shared encoder weights plus one weight vector per task head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub shared: Vec<f64>,
    pub heads: Vec<Vec<f64>>,
}

impl ModelParams {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            shared: vec![0.0; arch.shared_len()],
            heads: vec![vec![0.0; arch.head_len()]; arch.n_tasks],
            arch,
        })
    }

    /// Glorot-uniform weights, zero biases. The encoder is drawn first, then
    /// heads in task order, all from the `init` stream of `seed`.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seed::stream(seed, "init");
        let mut shared = Vec::with_capacity(arch.shared_len());
        arch.encoder().init(&mut rng, &mut shared);
        let head = arch.head();
        let heads = (0..arch.n_tasks)
            .map(|_| {
                let mut h = Vec::with_capacity(head.num_params());
                head.init(&mut rng, &mut h);
                h
            })
            .collect();
        Ok(Self {
            arch,
            shared,
            heads,
        })
    }

    pub fn from_parts(arch: Architecture, shared: Vec<f64>, heads: Vec<Vec<f64>>) -> Result<Self> {
        arch.validate()?;
        if shared.len() != arch.shared_len() {
            return Err(Error::invalid(format!(
                "encoder needs {} parameters, got {}",
                arch.shared_len(),
                shared.len()
            )));
        }
        if heads.len() != arch.n_tasks || heads.iter().any(|h| h.len() != arch.head_len()) {
            return Err(Error::invalid("head parameter shapes do not match the architecture"));
        }
        let p = Self {
            arch,
            shared,
            heads,
        };
        if !p.iter_all().all(f64::is_finite) {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(p)
    }

    pub fn n_tasks(&self) -> usize {
        self.arch.n_tasks
    }

    fn iter_all(&self) -> impl Iterator<Item = f64> + '_ {
        self.shared
            .iter()
            .chain(self.heads.iter().flatten())
            .copied()
    }

    /// Encoder parameters followed by each head in task order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.iter_all().collect()
    }

    fn check_task(&self, t: usize) -> Result<()> {
        if t >= self.arch.n_tasks {
            return Err(Error::invalid(format!(
                "task index {t} out of range for {} heads",
                self.arch.n_tasks
            )));
        }
        Ok(())
    }
}

/// Encoder outputs for a batch, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationBatch(pub Matrix);

/// Vector space a task gradient lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradSpace {
    /// Encoder parameters.
    Shared,
    /// The flattened representation batch.
    Representation,
}

/// Per-task gradients of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    space: GradSpace,
    grads: Vec<Vec<f64>>,
}

impl GradientSet {
    pub fn new(space: GradSpace, grads: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = grads.first() {
            if grads.iter().any(|g| g.len() != first.len()) {
                return Err(Error::invalid("task gradients differ in dimension"));
            }
        }
        if grads.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("task gradients must be finite"));
        }
        Ok(Self { space, grads })
    }

    pub fn space(&self) -> GradSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.grads.first().map_or(0, Vec::len)
    }

    pub fn get(&self, t: usize) -> &[f64] {
        &self.grads[t]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.grads.iter().map(Vec::as_slice)
    }
}

/// Encoder forward pass with the intermediates needed for backward.
pub struct EncoderPass {
    trace: MlpTrace,
}

impl EncoderPass {
    pub fn representation(&self) -> &Matrix {
        self.trace.acts.last().expect("non-empty")
    }
}

/// Loss and gradients of one task for a batch, averaged over rows.
#[derive(Debug, Clone)]
pub struct TaskGradients {
    pub loss: f64,
    pub head: Vec<f64>,
    pub representation: Matrix,
}

fn check_features(params: &ModelParams, x: &Matrix) -> Result<()> {
    if x.cols != params.arch.input_dim {
        return Err(Error::invalid(format!(
            "batch has {} features, encoder expects {}",
            x.cols, params.arch.input_dim
        )));
    }
    Ok(())
}

pub fn encoder_pass(params: &ModelParams, features: &Matrix) -> Result<EncoderPass> {
    check_features(params, features)?;
    let trace = params
        .arch
        .encoder()
        .forward(&params.shared, features, "encoder")?;
    Ok(EncoderPass { trace })
}

pub fn encode(params: &ModelParams, batch: &SampleBatch) -> Result<RepresentationBatch> {
    encode_features(params, batch.features())
}

pub fn encode_features(params: &ModelParams, features: &Matrix) -> Result<RepresentationBatch> {
    let pass = encoder_pass(params, features)?;
    Ok(RepresentationBatch(pass.representation().clone()))
}

/// Logits of head `t`, one row of [`NUM_LEVELS`] per representation row.
pub fn head_forward(params: &ModelParams, t: usize, reps: &RepresentationBatch) -> Result<Matrix> {
    params.check_task(t)?;
    if reps.0.cols != params.arch.latent_dim {
        return Err(Error::invalid(format!(
            "representation width {} does not match latent_dim {}",
            reps.0.cols, params.arch.latent_dim
        )));
    }
    let trace = params
        .arch
        .head()
        .forward(&params.heads[t], &reps.0, &format!("head {t}"))?;
    Ok(trace.acts.last().expect("non-empty").clone())
}

/// Batch-mean EMD of task `t` and its gradients with respect to the head
/// parameters and the representation batch.
pub fn task_gradients(
    params: &ModelParams,
    pass: &EncoderPass,
    batch: &SampleBatch,
    t: usize,
    cfg: EmdConfig,
) -> Result<TaskGradients> {
    params.check_task(t)?;
    let targets = batch.targets(t)?;
    let reps = pass.representation();
    let head = params.arch.head();
    let name = format!("head {t}");
    let trace = head.forward(&params.heads[t], reps, &name)?;
    let logits = trace.acts.last().expect("non-empty");
    let n = reps.rows as f64;
    let mut loss = 0.0;
    let mut d_logits = Matrix::zeros(logits.rows, NUM_LEVELS);
    for (r, y) in targets.iter().enumerate() {
        let (l, g) = emd_loss_grad_logits(y, logits.row(r), cfg);
        loss += l;
        for (d, v) in d_logits.row_mut(r).iter_mut().zip(g) {
            *d = v / n;
        }
    }
    let mut head_grad = vec![0.0; head.num_params()];
    let representation = head.backward(&params.heads[t], &trace, &d_logits, &mut head_grad, &name)?;
    Ok(TaskGradients {
        loss: loss / n,
        head: head_grad,
        representation,
    })
}

/// Chains a representation gradient through the encoder.
pub fn encoder_backward(
    params: &ModelParams,
    pass: &EncoderPass,
    grad_reps: &Matrix,
) -> Result<Vec<f64>> {
    let rep = pass.representation();
    if grad_reps.rows != rep.rows || grad_reps.cols != rep.cols {
        return Err(Error::invalid("representation gradient shape mismatch"));
    }
    let enc = params.arch.encoder();
    let mut grad = vec![0.0; enc.num_params()];
    enc.backward(&params.shared, &pass.trace, grad_reps, &mut grad, "encoder")?;
    Ok(grad)
}

/// Gradient of the batch-mean EMD of task `t`, in the requested space.
pub fn backward_task(
    params: &ModelParams,
    batch: &SampleBatch,
    t: usize,
    cfg: EmdConfig,
    wrt: GradSpace,
) -> Result<Vec<f64>> {
    let pass = encoder_pass(params, batch.features())?;
    let tg = task_gradients(params, &pass, batch, t, cfg)?;
    match wrt {
        GradSpace::Representation => Ok(tg.representation.into_vec()),
        GradSpace::Shared => encoder_backward(params, &pass, &tg.representation),
    }
}

/// Batch-mean EMD of task `t` (forward only).
pub fn task_loss(params: &ModelParams, batch: &SampleBatch, t: usize, cfg: EmdConfig) -> Result<f64> {
    let reps = encode(params, batch)?;
    let logits = head_forward(params, t, &reps)?;
    let targets = batch.targets(t)?;
    let mut total = 0.0;
    for (r, y) in targets.iter().enumerate() {
        total += emd_loss_grad_logits(y, logits.row(r), cfg).0;
    }
    Ok(total / targets.len() as f64)
}

/// Classical momentum step over the flat parameter vector:
/// `v ← momentum·v + direction`, `p ← p − lr·v`.
pub fn apply_update(
    params: &mut ModelParams,
    direction: &[f64],
    lr: f64,
    velocity: &mut [f64],
    momentum: f64,
) -> Result<()> {
    let n = params.arch.total_len();
    if direction.len() != n || velocity.len() != n {
        return Err(Error::invalid(format!(
            "update needs {n} entries, got direction {} / velocity {}",
            direction.len(),
            velocity.len()
        )));
    }
    for (v, d) in velocity.iter_mut().zip(direction) {
        *v = momentum * *v + d;
    }
    let slots = params
        .shared
        .iter_mut()
        .chain(params.heads.iter_mut().flatten());
    for (p, v) in slots.zip(velocity.iter()) {
        *p -= lr * v;
    }
    Ok(())
}

const CHECKPOINT_MAGIC: &str = "aesthetic-mtl checkpoint v1";

/// Parameters plus the training position needed to resume.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    /// Last completed epoch (0 for an untrained model).
    pub epoch: usize,
    pub velocity: Option<Vec<f64>>,
}

impl Checkpoint {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            epoch: 0,
            velocity: None,
        }
    }

    /// Text layout, one item per line:
    ///
    /// ```text
    /// aesthetic-mtl checkpoint v1
    /// epoch <n>
    /// input_dim <n>
    /// encoder_hidden <w>*
    /// latent_dim <n>
    /// head_hidden <w>*
    /// n_tasks <n>
    /// activation relu|tanh|identity
    /// shared <count>
    /// <count values>
    /// head <t> <count>            (repeated per task)
    /// <count values>
    /// velocity <count>            (optional)
    /// <count values>
    /// ```
    ///
    /// Values are shortest round-trip decimal, so save/load is bit-exact.
    pub fn to_text(&self) -> String {
        let a = &self.params.arch;
        let mut s = String::new();
        let join = |v: &[usize]| {
            v.iter()
                .map(|x| format!(" {x}"))
                .collect::<String>()
        };
        s.push_str(CHECKPOINT_MAGIC);
        s.push('\n');
        s.push_str(&format!("epoch {}\n", self.epoch));
        s.push_str(&format!("input_dim {}\n", a.input_dim));
        s.push_str(&format!("encoder_hidden{}\n", join(&a.encoder_hidden)));
        s.push_str(&format!("latent_dim {}\n", a.latent_dim));
        s.push_str(&format!("head_hidden{}\n", join(&a.head_hidden)));
        s.push_str(&format!("n_tasks {}\n", a.n_tasks));
        s.push_str(&format!("activation {}\n", a.activation));
        let mut section = |header: String, vals: &[f64]| {
            s.push_str(&header);
            s.push('\n');
            for v in vals {
                s.push_str(&format!("{v:?}\n"));
            }
        };
        section(format!("shared {}", self.params.shared.len()), &self.params.shared);
        for (t, h) in self.params.heads.iter().enumerate() {
            section(format!("head {t} {}", h.len()), h);
        }
        if let Some(v) = &self.velocity {
            section(format!("velocity {}", v.len()), v);
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let err = |line: usize, msg: String| Error::parse(path, line, msg);
        let (n, magic) = lines.next().ok_or_else(|| err(1, "empty checkpoint".into()))?;
        if magic != CHECKPOINT_MAGIC {
            return Err(err(n, format!("bad header '{magic}'")));
        }
        let mut field = |key: &str| -> Result<(usize, Vec<String>)> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| err(0, format!("missing '{key}'")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(err(n, format!("expected '{key}'")));
            }
            Ok((n, parts.map(str::to_owned).collect()))
        };
        let uints = |n: usize, v: &[String]| -> Result<Vec<usize>> {
            v.iter()
                .map(|s| s.parse().map_err(|_| err(n, format!("bad integer '{s}'"))))
                .collect()
        };
        let one = |n: usize, v: Vec<usize>| -> Result<usize> {
            match v.as_slice() {
                [x] => Ok(*x),
                _ => Err(err(n, "expected one integer".into())),
            }
        };
        let (n, v) = field("epoch")?;
        let epoch = one(n, uints(n, &v)?)?;
        let (n, v) = field("input_dim")?;
        let input_dim = one(n, uints(n, &v)?)?;
        let (n, v) = field("encoder_hidden")?;
        let encoder_hidden = uints(n, &v)?;
        let (n, v) = field("latent_dim")?;
        let latent_dim = one(n, uints(n, &v)?)?;
        let (n, v) = field("head_hidden")?;
        let head_hidden = uints(n, &v)?;
        let (n, v) = field("n_tasks")?;
        let n_tasks = one(n, uints(n, &v)?)?;
        let (n, v) = field("activation")?;
        let activation = Activation::parse(v.first().map_or("", String::as_str))
            .map_err(|e| err(n, e.to_string()))?;
        let arch = Architecture {
            input_dim,
            encoder_hidden,
            latent_dim,
            head_hidden,
            n_tasks,
            activation,
        };

        let rest: Vec<(usize, &str)> = lines.collect();
        let mut pos = 0;
        let mut values = |expect_key: &str, extra: Option<usize>| -> Result<Option<Vec<f64>>> {
            let Some(&(n, header)) = rest.get(pos) else {
                return Ok(None);
            };
            let parts: Vec<&str> = header.split_whitespace().collect();
            if parts.first() != Some(&expect_key) {
                return Err(err(n, format!("expected '{expect_key}' section")));
            }
            let count_idx = if let Some(t) = extra {
                if parts.get(1).and_then(|s| s.parse::<usize>().ok()) != Some(t) {
                    return Err(err(n, format!("expected head {t}")));
                }
                2
            } else {
                1
            };
            let count: usize = parts
                .get(count_idx)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(n, "missing value count".into()))?;
            pos += 1;
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let &(n, l) = rest
                    .get(pos)
                    .ok_or_else(|| err(n, "truncated value list".into()))?;
                out.push(l.trim().parse::<f64>().map_err(|_| err(n, format!("bad value '{l}'")))?);
                pos += 1;
            }
            Ok(Some(out))
        };
        let shared = values("shared", None)?.ok_or_else(|| err(0, "missing shared section".into()))?;
        let mut heads = Vec::with_capacity(n_tasks);
        for t in 0..n_tasks {
            heads.push(values("head", Some(t))?.ok_or_else(|| err(0, format!("missing head {t}")))?);
        }
        let velocity = values("velocity", None)?;
        let params = ModelParams::from_parts(arch, shared, heads)
            .map_err(|e| err(0, e.to_string()))?;
        if let Some(v) = &velocity {
            if v.len() != params.arch.total_len() {
                return Err(err(0, "velocity length does not match parameters".into()));
            }
        }
        Ok(Self {
            params,
            epoch,
            velocity,
        })
    }
}
