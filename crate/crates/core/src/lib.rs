//! Multi-task prediction of ordinal aesthetic score distributions.
//!
//! A shared encoder feeds one head per aesthetic dimension (fineness,
//! colorfulness, harmony, overall). Each head emits a distribution over five
//! score levels and is trained with the r-norm Earth Mover's Distance. Task
//! gradients on the shared representation are combined by the min-norm point
//! of their convex hull (MGDA-UB), or by a fixed linear weighting.
//!
//! Module map:
//!
//! - [`score_dist`]: score distributions, EMD loss and its logit gradient
//! - [`nn`]: shared MLP encoder, task heads, exact reverse-mode gradients, checkpoints
//! - [`moo`]: two-task closed form, Frank-Wolfe min-norm solver, MGDA-UB weighting
//! - [`data`]: manifests, splits, letterboxing, multi-patch crops, synthetic data
//! - [`metrics`]: PCC, SCC, RMSE and the per-dimension report table
//! - [`trainer`]: the training loop, lr schedule, logs and prediction
//! - [`verify`]: self-checks exposed through the `verify` subcommand
//! - [`cli`]: the command-line front end
//!
//! Runnable walkthroughs live in `examples/`; run them with
//! `cargo run -p aesthetic-mtl --example <name>`.

pub mod cli;
pub mod data;
pub mod error;
pub mod metrics;
pub mod moo;
pub mod nn;
pub mod score_dist;
pub mod seed;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};
pub use score_dist::{EmdConfig, ScoreDistribution, NUM_LEVELS};

/// The four rated aesthetic dimensions, in head order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Fineness,
    Colorfulness,
    Harmony,
    Overall,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Fineness,
        Dimension::Colorfulness,
        Dimension::Harmony,
        Dimension::Overall,
    ];

    /// Column prefix used in manifest files.
    pub fn column_prefix(self) -> &'static str {
        match self {
            Dimension::Fineness => "fine",
            Dimension::Colorfulness => "color",
            Dimension::Harmony => "harmony",
            Dimension::Overall => "overall",
        }
    }

    /// Column title used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Dimension::Fineness => "Fineness",
            Dimension::Colorfulness => "Colorful",
            Dimension::Harmony => "Harmony",
            Dimension::Overall => "Overall",
        }
    }
}

/// Number of aesthetic dimensions (task count of the full model).
pub const NUM_TASKS: usize = 4;
