//! One negative-sampling SGD update.
//!
//! For a target `k`, context mean `h` and negatives `n`, the step loss is
//! `-ln σ(u_k·h) - Σ_n ln σ(-u_n·h)`. All arithmetic runs in f64 on copies of
//! the rows; every gradient is taken at the pre-update parameters.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::matrix::ParamRows;
use crate::corpus::TrainingSample;
use crate::error::{Error, Result};

const CLAMP: f64 = 30.0;
const TABLE_SIZE: usize = 1000;
const TABLE_MAX: f64 = 6.0;

/// Logistic function with its input clamped to `[-30, 30]`, so the result is
/// never exactly 0 or 1.
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-CLAMP, CLAMP);
    1.0 / (1.0 + (-x).exp())
}

/// `ln σ(x)` under the same clamp.
pub fn log_sigmoid(x: f64) -> f64 {
    let x = x.clamp(-CLAMP, CLAMP);
    -(-x).exp().ln_1p()
}

/// How the kernel evaluates σ for gradients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmoidMode {
    #[default]
    Exact,
    /// word2vec-style 1000-entry lookup over `[-6, 6)`, exact outside.
    Table,
}

impl SigmoidMode {
    fn eval(self, x: f64) -> f64 {
        match self {
            SigmoidMode::Exact => sigmoid(x),
            SigmoidMode::Table => {
                if !(-TABLE_MAX..TABLE_MAX).contains(&x) {
                    return sigmoid(x);
                }
                let table = SIGMOID_TABLE.get_or_init(|| {
                    (0..TABLE_SIZE)
                        .map(|i| {
                            let x = (i as f64 / TABLE_SIZE as f64 * 2.0 - 1.0) * TABLE_MAX;
                            sigmoid(x)
                        })
                        .collect()
                });
                let idx = ((x + TABLE_MAX) * (TABLE_SIZE as f64 / TABLE_MAX / 2.0)) as usize;
                table[idx.min(TABLE_SIZE - 1)]
            }
        }
    }
}

static SIGMOID_TABLE: OnceLock<Vec<f64>> = OnceLock::new();

/// Component-wise mean of equally sized vectors, accumulated in f64.
pub fn context_mean(rows: &[&[f32]]) -> Result<Vec<f64>> {
    let first = rows.first().ok_or(Error::Empty("context is empty"))?;
    let dim = first.len();
    let mut mean = vec![0.0f64; dim];
    for row in rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.len(),
            });
        }
        for (m, &v) in mean.iter_mut().zip(*row) {
            *m += f64::from(v);
        }
    }
    let inv = 1.0 / rows.len() as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    Ok(mean)
}

/// Per-step switches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    pub freeze_context: bool,
    pub freeze_target: bool,
    /// Scale the gradient reaching each context row by `1/M` (the derivative
    /// of the mean). When off, every row receives the full gradient of the
    /// mean, as in the original word2vec code.
    pub mean_context_gradient: bool,
    pub sigmoid: SigmoidMode,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            freeze_context: false,
            freeze_target: false,
            mean_context_gradient: true,
            sigmoid: SigmoidMode::Exact,
        }
    }
}

/// Reusable scratch space for repeated steps.
#[derive(Debug, Default)]
pub(crate) struct Kernel {
    dim: usize,
    mean: Vec<f64>,
    grad_mean: Vec<f64>,
    row: Vec<f64>,
    out_rows: Vec<f64>,
    coef: Vec<f64>,
    delta: Vec<f64>,
}

impl Kernel {
    pub(crate) fn new(dim: usize) -> Self {
        Kernel {
            dim,
            mean: vec![0.0; dim],
            grad_mean: vec![0.0; dim],
            row: vec![0.0; dim],
            out_rows: Vec::new(),
            coef: Vec::new(),
            delta: vec![0.0; dim],
        }
    }

    /// Applies one update and returns the pre-update loss. Inputs must
    /// already be validated.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn step<C, T>(
        &mut self,
        target: u32,
        context: &[u32],
        negatives: &[u32],
        ctx: &mut C,
        tgt: &mut T,
        lr: f64,
        opts: &StepOptions,
    ) -> f64
    where
        C: ParamRows + ?Sized,
        T: ParamRows + ?Sized,
    {
        let dim = self.dim;
        self.mean.iter_mut().for_each(|m| *m = 0.0);
        for &c in context {
            ctx.read_row(c as usize, &mut self.row);
            for (m, &v) in self.mean.iter_mut().zip(&self.row) {
                *m += v;
            }
        }
        let inv_m = 1.0 / context.len() as f64;
        self.mean.iter_mut().for_each(|m| *m *= inv_m);

        let outputs = 1 + negatives.len();
        self.out_rows.resize(outputs * dim, 0.0);
        self.coef.resize(outputs, 0.0);
        self.grad_mean.iter_mut().for_each(|g| *g = 0.0);

        let mut loss = 0.0;
        for j in 0..outputs {
            let (id, positive) = if j == 0 {
                (target, true)
            } else {
                (negatives[j - 1], false)
            };
            let u = &mut self.out_rows[j * dim..(j + 1) * dim];
            tgt.read_row(id as usize, u);
            let score: f64 = u.iter().zip(&self.mean).map(|(a, b)| a * b).sum();
            let s = opts.sigmoid.eval(score);
            // d loss / d score
            let g = if positive {
                loss -= log_sigmoid(score);
                s - 1.0
            } else {
                loss -= log_sigmoid(-score);
                s
            };
            self.coef[j] = g;
            for (gm, &uv) in self.grad_mean.iter_mut().zip(u.iter()) {
                *gm += g * uv;
            }
        }

        if lr == 0.0 {
            return loss;
        }

        if !opts.freeze_target {
            for j in 0..outputs {
                let id = if j == 0 { target } else { negatives[j - 1] };
                let scale = -lr * self.coef[j];
                for (d, &m) in self.delta.iter_mut().zip(&self.mean) {
                    *d = scale * m;
                }
                tgt.add_to_row(id as usize, &self.delta);
            }
        }
        if !opts.freeze_context {
            let scale = if opts.mean_context_gradient { -lr * inv_m } else { -lr };
            for (d, &g) in self.delta.iter_mut().zip(&self.grad_mean) {
                *d = scale * g;
            }
            for &c in context {
                ctx.add_to_row(c as usize, &self.delta);
            }
        }
        loss
    }
}

fn validate<C, T>(ids: impl Iterator<Item = u32>, ctx: &C, tgt: &T) -> Result<()>
where
    C: ParamRows + ?Sized,
    T: ParamRows + ?Sized,
{
    if ctx.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.dim(),
            found: tgt.dim(),
        });
    }
    let len = ctx.rows().min(tgt.rows());
    for id in ids {
        if id as usize >= len {
            return Err(Error::TokenOutOfRange { id, len });
        }
    }
    Ok(())
}

/// One CBOW update: the mean of the context rows predicts the target against
/// the negatives. Returns the pre-update loss.
pub fn step_cbow<C, T>(
    sample: &TrainingSample,
    negatives: &[u32],
    context: &mut C,
    target: &mut T,
    lr: f64,
    opts: &StepOptions,
) -> Result<f64>
where
    C: ParamRows + ?Sized,
    T: ParamRows + ?Sized,
{
    if sample.context.is_empty() {
        return Err(Error::Empty("context is empty"));
    }
    validate(
        sample
            .context
            .iter()
            .chain(negatives)
            .chain(std::iter::once(&sample.target))
            .copied(),
        context,
        target,
    )?;
    let mut kernel = Kernel::new(context.dim());
    Ok(kernel.step(
        sample.target,
        &sample.context,
        negatives,
        context,
        target,
        lr,
        opts,
    ))
}

/// One Skip-gram update for a single `(target, context word)` pair: the
/// context word's row alone predicts the target.
pub fn step_skipgram<C, T>(
    target_id: u32,
    context_id: u32,
    negatives: &[u32],
    context: &mut C,
    target: &mut T,
    lr: f64,
    opts: &StepOptions,
) -> Result<f64>
where
    C: ParamRows + ?Sized,
    T: ParamRows + ?Sized,
{
    validate(
        [target_id, context_id].into_iter().chain(negatives.iter().copied()),
        context,
        target,
    )?;
    let mut kernel = Kernel::new(context.dim());
    Ok(kernel.step(
        target_id,
        &[context_id],
        negatives,
        context,
        target,
        lr,
        opts,
    ))
}
