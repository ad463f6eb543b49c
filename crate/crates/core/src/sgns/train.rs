use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{Kernel, StepOptions};
use super::matrix::{EmbeddingMatrix, Frozen, ParamRows, SharedRows};
use super::{Architecture, LrSchedule, TrainConfig};
use crate::corpus::{context_at, DiachronicCorpus, NegativeTable, SliceSelector, Subsampler, Vocabulary};
use crate::error::{Error, Result};

/// A matrix handed to the trainer, either updated or held fixed.
pub enum Weights<'a> {
    Trainable(&'a mut EmbeddingMatrix),
    Frozen(&'a EmbeddingMatrix),
}

impl Weights<'_> {
    fn matrix(&self) -> &EmbeddingMatrix {
        match self {
            Weights::Trainable(m) => m,
            Weights::Frozen(m) => m,
        }
    }

    fn is_frozen(&self) -> bool {
        matches!(self, Weights::Frozen(_))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// Tokens read, before subsampling. Drives the learning-rate schedule.
    pub positions: u64,
    /// Samples with a nonempty context.
    pub samples: u64,
    /// SGD steps (one per sample for CBOW, one per context word for Skip-gram).
    pub updates: u64,
    pub mean_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub epochs: Vec<EpochStats>,
}

impl TrainSummary {
    pub fn total_samples(&self) -> u64 {
        self.epochs.iter().map(|e| e.samples).sum()
    }

    pub fn total_positions(&self) -> u64 {
        self.epochs.iter().map(|e| e.positions).sum()
    }

    pub fn mean_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }
}

/// Training driver holding the vocabulary-derived sampling tables.
#[derive(Clone, Debug)]
pub struct Trainer {
    config: TrainConfig,
    subsampler: Option<Subsampler>,
    negatives: NegativeTable,
}

impl Trainer {
    pub fn new(vocab: &Vocabulary, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if vocab.len() < 2 {
            return Err(Error::DegenerateNegatives);
        }
        let subsampler = (config.subsample_threshold > 0.0)
            .then(|| Subsampler::new(vocab, config.subsample_threshold));
        let negatives = NegativeTable::new(vocab, config.negative_exponent);
        Ok(Trainer {
            config,
            subsampler,
            negatives,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn negative_table(&self) -> &NegativeTable {
        &self.negatives
    }

    /// Runs `config.epochs` passes over the selected slices.
    ///
    /// The freeze flags of the config are honored in addition to any
    /// [`Weights::Frozen`] argument. A selection without a single sample is
    /// vacuous: nothing changes and the summary counts zero samples.
    pub fn train(
        &self,
        corpus: &DiachronicCorpus,
        selector: SliceSelector,
        context: Weights<'_>,
        target: Weights<'_>,
    ) -> Result<TrainSummary> {
        let cfg = &self.config;
        let (ctx_m, tgt_m) = (context.matrix(), target.matrix());
        for m in [ctx_m, tgt_m] {
            if m.dim() != cfg.dim {
                return Err(Error::DimensionMismatch {
                    expected: cfg.dim,
                    found: m.dim(),
                });
            }
            if m.rows() != corpus.vocab_size() {
                return Err(Error::DimensionMismatch {
                    expected: corpus.vocab_size(),
                    found: m.rows(),
                });
            }
        }
        if corpus.vocab_size() != self.negatives.len() {
            return Err(Error::DimensionMismatch {
                expected: self.negatives.len(),
                found: corpus.vocab_size(),
            });
        }

        let sentences: Vec<&[u32]> = corpus
            .select(selector)?
            .into_iter()
            .flat_map(|s| s.sentences.iter().map(Vec::as_slice))
            .collect();
        let positions: u64 = sentences.iter().map(|s| s.len() as u64).sum();
        let schedule = LrSchedule {
            initial: cfg.lr_initial,
            min: cfg.lr_min,
            total: positions * cfg.epochs as u64,
        };
        if !sentences.iter().any(|s| s.len() >= 2) {
            return Ok(TrainSummary {
                epochs: vec![
                    EpochStats {
                        positions,
                        ..EpochStats::default()
                    };
                    cfg.epochs
                ],
            });
        }

        let opts = StepOptions {
            freeze_context: cfg.freeze_context || context.is_frozen(),
            freeze_target: cfg.freeze_target || target.is_frozen(),
            ..cfg.step_options()
        };
        if opts.freeze_context && opts.freeze_target {
            return Err(Error::Config("cannot freeze both target and context".into()));
        }

        let progress = AtomicU64::new(0);
        let workers = cfg.workers.min(sentences.len());
        let per_worker = if workers <= 1 {
            let mut ctx = Rows::single(context);
            let mut tgt = Rows::single(target);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            vec![self.run_shard(&sentences, &mut ctx, &mut tgt, &mut rng, &schedule, &progress, &opts)]
        } else {
            let ctx = Rows::shared(context);
            let tgt = Rows::shared(target);
            let shards = shard(&sentences, workers);
            std::thread::scope(|scope| {
                let handles: Vec<_> = shards
                    .into_iter()
                    .enumerate()
                    .map(|(w, shard)| {
                        let (schedule, progress, opts) = (&schedule, &progress, &opts);
                        scope.spawn(move || {
                            let (mut ctx, mut tgt) = (Rows::from(ctx), Rows::from(tgt));
                            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                            rng.set_stream(w as u64);
                            self.run_shard(shard, &mut ctx, &mut tgt, &mut rng, schedule, progress, opts)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            })
        };

        Ok(merge(per_worker, cfg.epochs))
    }

    #[allow(clippy::too_many_arguments)]
    fn run_shard(
        &self,
        sentences: &[&[u32]],
        ctx: &mut Rows<'_>,
        tgt: &mut Rows<'_>,
        rng: &mut ChaCha8Rng,
        schedule: &LrSchedule,
        progress: &AtomicU64,
        opts: &StepOptions,
    ) -> Vec<(EpochStats, f64)> {
        let cfg = &self.config;
        let mut kernel = Kernel::new(cfg.dim);
        let mut kept = Vec::new();
        let mut context = Vec::with_capacity(2 * cfg.window);
        let mut negatives = Vec::with_capacity(cfg.negatives);
        let mut out = Vec::with_capacity(cfg.epochs);

        for _ in 0..cfg.epochs {
            let mut stats = EpochStats::default();
            let mut loss_sum = 0.0;
            for sentence in sentences {
                kept.clear();
                match &self.subsampler {
                    Some(sub) => sub.apply_into(sentence, rng, &mut kept),
                    None => kept.extend_from_slice(sentence),
                }
                let base = progress.load(Ordering::Relaxed);
                for pos in 0..kept.len() {
                    let span = if cfg.dynamic_window {
                        rng.random_range(1..=cfg.window)
                    } else {
                        cfg.window
                    };
                    context_at(&kept, pos, span, &mut context);
                    if context.is_empty() {
                        continue;
                    }
                    let lr = schedule.at(base + pos as u64);
                    let target = kept[pos];
                    stats.samples += 1;
                    match cfg.architecture {
                        Architecture::Cbow => {
                            self.draw_negatives(target, rng, &mut negatives);
                            loss_sum += kernel.step(target, &context, &negatives, ctx, tgt, lr, opts);
                            stats.updates += 1;
                        }
                        Architecture::Skipgram => {
                            for &word in &context {
                                self.draw_negatives(target, rng, &mut negatives);
                                loss_sum +=
                                    kernel.step(target, &[word], &negatives, ctx, tgt, lr, opts);
                                stats.updates += 1;
                            }
                        }
                    }
                }
                progress.fetch_add(sentence.len() as u64, Ordering::Relaxed);
                stats.positions += sentence.len() as u64;
            }
            out.push((stats, loss_sum));
        }
        out
    }

    fn draw_negatives(&self, target: u32, rng: &mut ChaCha8Rng, out: &mut Vec<u32>) {
        self.negatives
            .sample_into(self.config.negatives, target, rng, out)
            .expect("vocabulary has at least two words");
    }
}

/// Convenience wrapper: trains `context`/`target` honoring the config's
/// freeze flags.
pub fn train(
    vocab: &Vocabulary,
    corpus: &DiachronicCorpus,
    selector: SliceSelector,
    config: &TrainConfig,
    context: &mut EmbeddingMatrix,
    target: &mut EmbeddingMatrix,
) -> Result<TrainSummary> {
    let trainer = Trainer::new(vocab, config.clone())?;
    let context = if config.freeze_context {
        Weights::Frozen(context)
    } else {
        Weights::Trainable(context)
    };
    let target = if config.freeze_target {
        Weights::Frozen(target)
    } else {
        Weights::Trainable(target)
    };
    trainer.train(corpus, selector, context, target)
}

fn merge(per_worker: Vec<Vec<(EpochStats, f64)>>, epochs: usize) -> TrainSummary {
    let epochs = (0..epochs)
        .map(|e| {
            let mut total = EpochStats::default();
            let mut loss = 0.0;
            for worker in &per_worker {
                let (stats, l) = &worker[e];
                total.positions += stats.positions;
                total.samples += stats.samples;
                total.updates += stats.updates;
                loss += l;
            }
            if total.updates > 0 {
                total.mean_loss = loss / total.updates as f64;
            }
            total
        })
        .collect();
    TrainSummary { epochs }
}

/// Contiguous shards of roughly equal token count.
fn shard<'s, 'a>(sentences: &'s [&'a [u32]], workers: usize) -> Vec<&'s [&'a [u32]]> {
    let total: usize = sentences.iter().map(|s| s.len()).sum();
    let per = total.div_ceil(workers);
    let mut shards = Vec::with_capacity(workers);
    let (mut start, mut acc) = (0, 0);
    for (i, s) in sentences.iter().enumerate() {
        acc += s.len();
        if acc >= per && shards.len() + 1 < workers {
            shards.push(&sentences[start..=i]);
            start = i + 1;
            acc = 0;
        }
    }
    if start < sentences.len() {
        shards.push(&sentences[start..]);
    }
    shards
}

enum Rows<'a> {
    Owned(&'a mut EmbeddingMatrix),
    Frozen(Frozen<'a>),
    Shared(SharedRows<'a>),
}

impl<'a> Rows<'a> {
    fn single(w: Weights<'a>) -> Self {
        match w {
            Weights::Trainable(m) => Rows::Owned(m),
            Weights::Frozen(m) => Rows::Frozen(Frozen(m)),
        }
    }

    fn shared(w: Weights<'a>) -> SharedOrFrozen<'a> {
        match w {
            Weights::Trainable(m) => SharedOrFrozen::Shared(SharedRows::new(m)),
            Weights::Frozen(m) => SharedOrFrozen::Frozen(Frozen(m)),
        }
    }
}

#[derive(Clone, Copy)]
enum SharedOrFrozen<'a> {
    Shared(SharedRows<'a>),
    Frozen(Frozen<'a>),
}

impl<'a> From<SharedOrFrozen<'a>> for Rows<'a> {
    fn from(v: SharedOrFrozen<'a>) -> Self {
        match v {
            SharedOrFrozen::Shared(s) => Rows::Shared(s),
            SharedOrFrozen::Frozen(f) => Rows::Frozen(f),
        }
    }
}

impl ParamRows for Rows<'_> {
    fn rows(&self) -> usize {
        match self {
            Rows::Owned(m) => m.rows(),
            Rows::Frozen(f) => f.rows(),
            Rows::Shared(s) => s.rows(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Rows::Owned(m) => m.dim(),
            Rows::Frozen(f) => f.dim(),
            Rows::Shared(s) => s.dim(),
        }
    }

    fn read_row(&self, row: usize, out: &mut [f64]) {
        match self {
            Rows::Owned(m) => m.read_row(row, out),
            Rows::Frozen(f) => f.read_row(row, out),
            Rows::Shared(s) => s.read_row(row, out),
        }
    }

    fn add_to_row(&mut self, row: usize, delta: &[f64]) {
        match self {
            Rows::Owned(m) => m.add_to_row(row, delta),
            Rows::Frozen(f) => f.add_to_row(row, delta),
            Rows::Shared(s) => s.add_to_row(row, delta),
        }
    }
}
