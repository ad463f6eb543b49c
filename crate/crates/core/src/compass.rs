//! Two-phase compass training.
//!
//! Phase one trains atemporal context and target matrices on the pooled
//! corpus. Phase two trains, independently for each slice, a context matrix
//! whose outputs are scored against the frozen atemporal targets. The frozen
//! targets pin every slice to the same coordinate system, so the per-slice
//! context rows are comparable without any post-hoc alignment.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DiachronicCorpus, SliceLabel, SliceSelector, Vocabulary};
use crate::error::{Error, Result};
use crate::model::TemporalModel;
use crate::sgns::{EmbeddingMatrix, Role, TrainConfig, TrainSummary, Trainer, Weights};

/// How each slice's trainable matrix starts phase two.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Fresh seeded initialization.
    #[default]
    Random,
    /// Copy of the matching atemporal matrix.
    FromCompass,
}

/// Which atemporal matrix serves as the compass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Freeze the targets, learn per-slice contexts (the default).
    #[default]
    FreezeTarget,
    /// Freeze the contexts, learn per-slice targets.
    FreezeContext,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompassConfig {
    /// Shared hyperparameters; its `epochs` and freeze flags are overridden
    /// per phase.
    pub train: TrainConfig,
    pub static_epochs: usize,
    pub dynamic_epochs: usize,
    pub init_mode: InitMode,
    pub strategy: Strategy,
}

impl Default for CompassConfig {
    fn default() -> Self {
        CompassConfig {
            train: TrainConfig::default(),
            static_epochs: 5,
            dynamic_epochs: 5,
            init_mode: InitMode::Random,
            strategy: Strategy::FreezeTarget,
        }
    }
}

impl CompassConfig {
    pub fn phase1(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.static_epochs,
            freeze_context: false,
            freeze_target: false,
            ..self.train.clone()
        }
    }

    /// Every slice uses the same phase-two seed, so slices with identical
    /// text produce identical matrices.
    pub fn phase2(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.dynamic_epochs,
            freeze_context: self.strategy == Strategy::FreezeContext,
            freeze_target: self.strategy == Strategy::FreezeTarget,
            seed: self.train.seed.wrapping_add(1),
            ..self.train.clone()
        }
    }
}

/// Phase-one output.
#[derive(Clone, Debug, PartialEq)]
pub struct Atemporal {
    pub context: EmbeddingMatrix,
    pub target: EmbeddingMatrix,
    pub summary: TrainSummary,
}

/// Phase-two output for one slice.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceEmbedding {
    pub matrix: EmbeddingMatrix,
    /// Words with no occurrence in the slice; their rows keep the initial values.
    pub untrained: Vec<bool>,
    pub summary: TrainSummary,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub phase1_seed: u64,
    pub phase2_seed: u64,
    pub static_epochs: usize,
    pub dynamic_epochs: usize,
    pub phase1: TrainSummary,
    pub phase2: BTreeMap<SliceLabel, TrainSummary>,
}

impl Provenance {
    /// Samples per epoch of phase one, and the per-epoch sum over all
    /// phase-two slices.
    pub fn samples_per_epoch(&self) -> (Vec<u64>, Vec<u64>) {
        let p1 = self.phase1.epochs.iter().map(|e| e.samples).collect();
        let mut p2 = vec![0; self.dynamic_epochs];
        for summary in self.phase2.values() {
            for (acc, e) in p2.iter_mut().zip(&summary.epochs) {
                *acc += e.samples;
            }
        }
        (p1, p2)
    }
}

/// Atemporal matrices plus one temporal matrix per slice.
#[derive(Clone, Debug)]
pub struct CompassModel {
    pub vocab: Vocabulary,
    pub atemporal: Atemporal,
    pub slices: BTreeMap<SliceLabel, SliceEmbedding>,
    pub config: CompassConfig,
    pub provenance: Provenance,
}

impl CompassModel {
    /// The frozen compass matrix.
    pub fn compass(&self) -> &EmbeddingMatrix {
        match self.config.strategy {
            Strategy::FreezeTarget => &self.atemporal.target,
            Strategy::FreezeContext => &self.atemporal.context,
        }
    }
}

impl TemporalModel for CompassModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn labels(&self) -> Vec<SliceLabel> {
        self.slices.keys().copied().collect()
    }

    fn vectors(&self, label: SliceLabel) -> Option<&EmbeddingMatrix> {
        self.slices.get(&label).map(|s| &s.matrix)
    }

    fn scoring_pair(&self, label: SliceLabel) -> Option<(&EmbeddingMatrix, &EmbeddingMatrix)> {
        let slice = self.slices.get(&label)?;
        Some(match self.config.strategy {
            Strategy::FreezeTarget => (&slice.matrix, &self.atemporal.target),
            Strategy::FreezeContext => (&self.atemporal.context, &slice.matrix),
        })
    }

    fn untrained(&self, label: SliceLabel) -> Option<&[bool]> {
        self.slices.get(&label).map(|s| s.untrained.as_slice())
    }

    fn method(&self) -> &str {
        "compass"
    }
}

/// Phase one: plain training over the concatenation of every slice.
pub fn train_compass(
    vocab: &Vocabulary,
    corpus: &DiachronicCorpus,
    config: &TrainConfig,
) -> Result<Atemporal> {
    let trainer = Trainer::new(vocab, config.clone())?;
    let (mut context, mut target) =
        crate::sgns::init_matrices(corpus.vocab_size(), config.dim, config.seed);
    let summary = trainer.train(
        corpus,
        SliceSelector::All,
        Weights::Trainable(&mut context),
        Weights::Trainable(&mut target),
    )?;
    if summary.total_samples() == 0 {
        return Err(Error::EmptyStream);
    }
    Ok(Atemporal {
        context,
        target,
        summary,
    })
}

/// Phase two for one slice. The compass matrix is only read.
pub fn train_slice(
    vocab: &Vocabulary,
    atemporal: &Atemporal,
    label: SliceLabel,
    corpus: &DiachronicCorpus,
    config: &CompassConfig,
) -> Result<SliceEmbedding> {
    let trainer = Trainer::new(vocab, config.phase2())?;
    train_slice_with(&trainer, atemporal, label, corpus, config)
}

fn train_slice_with(
    trainer: &Trainer,
    atemporal: &Atemporal,
    label: SliceLabel,
    corpus: &DiachronicCorpus,
    config: &CompassConfig,
) -> Result<SliceEmbedding> {
    let slice = corpus.slice(label).ok_or(Error::UnknownSlice(label))?;
    if !slice.sentences.iter().any(|s| s.len() >= 2) {
        return Err(Error::EmptySlice(label));
    }
    let cfg = trainer.config();
    for m in [&atemporal.context, &atemporal.target] {
        if m.dim() != cfg.dim {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim,
                found: m.dim(),
            });
        }
    }
    let rows = corpus.vocab_size();
    let selector = SliceSelector::Label(label);

    let (matrix, summary) = match config.strategy {
        Strategy::FreezeTarget => {
            let mut context = match config.init_mode {
                InitMode::Random => EmbeddingMatrix::uniform(rows, cfg.dim, Role::Context, cfg.seed),
                InitMode::FromCompass => atemporal.context.clone(),
            };
            let summary = trainer.train(
                corpus,
                selector,
                Weights::Trainable(&mut context),
                Weights::Frozen(&atemporal.target),
            )?;
            (context, summary)
        }
        Strategy::FreezeContext => {
            let mut target = match config.init_mode {
                InitMode::Random => EmbeddingMatrix::zeros(rows, cfg.dim, Role::Target),
                InitMode::FromCompass => atemporal.target.clone(),
            };
            let summary = trainer.train(
                corpus,
                selector,
                Weights::Frozen(&atemporal.context),
                Weights::Trainable(&mut target),
            )?;
            (target, summary)
        }
    };

    let untrained = corpus
        .slice_counts(label)?
        .into_iter()
        .map(|c| c == 0)
        .collect();
    Ok(SliceEmbedding {
        matrix,
        untrained,
        summary,
    })
}

/// Both phases over every slice. Slices train independently and in parallel;
/// the result does not depend on their order.
pub fn train_all(
    vocab: &Vocabulary,
    corpus: &DiachronicCorpus,
    config: &CompassConfig,
) -> Result<CompassModel> {
    let atemporal = train_compass(vocab, corpus, &config.phase1())?;
    let trainer = Trainer::new(vocab, config.phase2())?;
    let labels = corpus.labels();
    let trained: Vec<SliceEmbedding> = labels
        .par_iter()
        .map(|&label| train_slice_with(&trainer, &atemporal, label, corpus, config))
        .collect::<Result<_>>()?;
    let slices: BTreeMap<SliceLabel, SliceEmbedding> = labels.into_iter().zip(trained).collect();

    let provenance = Provenance {
        phase1_seed: config.phase1().seed,
        phase2_seed: config.phase2().seed,
        static_epochs: config.static_epochs,
        dynamic_epochs: config.dynamic_epochs,
        phase1: atemporal.summary.clone(),
        phase2: slices
            .iter()
            .map(|(&l, s)| (l, s.summary.clone()))
            .collect(),
    };
    Ok(CompassModel {
        vocab: vocab.clone(),
        atemporal,
        slices,
        config: config.clone(),
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawCorpus;
    use crate::synthetic::{copy_slice, TopicSpec};

    fn small(labels: Vec<i64>, tokens: usize) -> (Vocabulary, DiachronicCorpus, RawCorpus) {
        let spec = TopicSpec {
            labels,
            tokens_per_slice: tokens,
            topics: 6,
            words_per_topic: 5,
            ..TopicSpec::default()
        };
        let raw = spec.corpus().unwrap();
        let vocab = Vocabulary::build(&raw, 1).unwrap();
        let corpus = DiachronicCorpus::encode(&raw, &vocab);
        (vocab, corpus, raw)
    }

    fn config() -> CompassConfig {
        CompassConfig {
            train: TrainConfig {
                dim: 8,
                ..TrainConfig::default()
            },
            static_epochs: 2,
            dynamic_epochs: 2,
            ..CompassConfig::default()
        }
    }

    #[test]
    fn compass_is_untouched_by_phase_two() {
        let (vocab, corpus, _) = small(vec![0, 1, 2], 2000);
        let cfg = config();
        let atemporal = train_compass(&vocab, &corpus, &cfg.phase1()).unwrap();
        let before = atemporal.target.content_hash();
        for label in corpus.labels() {
            train_slice(&vocab, &atemporal, label, &corpus, &cfg).unwrap();
        }
        assert_eq!(atemporal.target.content_hash(), before);
        let model = train_all(&vocab, &corpus, &cfg).unwrap();
        assert_eq!(model.compass().content_hash(), before);
    }

    #[test]
    fn identical_text_gives_identical_slices() {
        let (_, _, raw) = small(vec![0, 1, 2], 2000);
        let raw = copy_slice(&raw, SliceLabel(0), SliceLabel(2)).unwrap();
        let vocab = Vocabulary::build(&raw, 1).unwrap();
        let corpus = DiachronicCorpus::encode(&raw, &vocab);
        let model = train_all(&vocab, &corpus, &config()).unwrap();
        let a = &model.slices[&SliceLabel(0)].matrix;
        let b = &model.slices[&SliceLabel(2)].matrix;
        assert_eq!(a, b);
        assert_ne!(a, &model.slices[&SliceLabel(1)].matrix);
    }

    #[test]
    fn single_slice_model() {
        let (vocab, corpus, _) = small(vec![5], 1500);
        let model = train_all(&vocab, &corpus, &config()).unwrap();
        assert_eq!(model.labels(), vec![SliceLabel(5)]);
    }

    #[test]
    fn slices_do_not_depend_on_each_other() {
        let (vocab, corpus, _) = small(vec![0, 1, 2], 2000);
        let cfg = config();
        let model = train_all(&vocab, &corpus, &cfg).unwrap();
        for label in corpus.labels().into_iter().rev() {
            let alone = train_slice(&vocab, &model.atemporal, label, &corpus, &cfg).unwrap();
            assert_eq!(alone, model.slices[&label]);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (vocab, corpus, _) = small(vec![0, 1], 1500);
        let a = train_all(&vocab, &corpus, &config()).unwrap();
        let b = train_all(&vocab, &corpus, &config()).unwrap();
        assert_eq!(a.atemporal, b.atemporal);
        assert_eq!(a.slices, b.slices);
    }

    #[test]
    fn phase_two_covers_phase_one_epoch() {
        let (vocab, corpus, _) = small(vec![0, 1, 2], 3000);
        let cfg = CompassConfig {
            train: TrainConfig {
                subsample_threshold: 0.0,
                ..config().train
            },
            ..config()
        };
        let model = train_all(&vocab, &corpus, &cfg).unwrap();
        let (p1, p2) = model.provenance.samples_per_epoch();
        assert!(p1.iter().all(|&n| n == p1[0]));
        assert!(p2.iter().all(|&n| n == p1[0]));
    }

    #[test]
    fn init_from_compass_starts_at_atemporal_context() {
        let (vocab, corpus, _) = small(vec![0, 1], 1500);
        let cfg = CompassConfig {
            init_mode: InitMode::FromCompass,
            ..config()
        };
        let model = train_all(&vocab, &corpus, &cfg).unwrap();
        let slice = &model.slices[&SliceLabel(0)];
        // rows never seen in a slice keep their initial values
        for (w, &untrained) in slice.untrained.iter().enumerate() {
            if untrained {
                assert_eq!(slice.matrix.row(w), model.atemporal.context.row(w));
            }
        }
    }

    #[test]
    fn specular_strategy_freezes_context() {
        let (vocab, corpus, _) = small(vec![0, 1], 1500);
        let cfg = CompassConfig {
            strategy: Strategy::FreezeContext,
            ..config()
        };
        let atemporal = train_compass(&vocab, &corpus, &cfg.phase1()).unwrap();
        let before = atemporal.context.content_hash();
        let slice = train_slice(&vocab, &atemporal, SliceLabel(1), &corpus, &cfg).unwrap();
        assert_eq!(atemporal.context.content_hash(), before);
        assert_eq!(slice.matrix.role(), Role::Target);
        assert!(slice.matrix.as_slice().iter().any(|&x| x != 0.0));
    }

    #[test]
    fn unknown_and_empty_slices_are_errors() {
        let (vocab, corpus, _) = small(vec![0, 1], 1500);
        let cfg = config();
        let atemporal = train_compass(&vocab, &corpus, &cfg.phase1()).unwrap();
        assert!(matches!(
            train_slice(&vocab, &atemporal, SliceLabel(9), &corpus, &cfg),
            Err(Error::UnknownSlice(_))
        ));
        let mut slices = corpus.slices().to_vec();
        slices[1].sentences = vec![vec![0]];
        let sparse = DiachronicCorpus::new(corpus.vocab_size(), slices).unwrap();
        assert!(matches!(
            train_slice(&vocab, &atemporal, SliceLabel(1), &sparse, &cfg),
            Err(Error::EmptySlice(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (vocab, corpus, _) = small(vec![0, 1], 1500);
        let cfg = config();
        let atemporal = train_compass(&vocab, &corpus, &cfg.phase1()).unwrap();
        let wider = CompassConfig {
            train: TrainConfig { dim: 9, ..cfg.train.clone() },
            ..cfg
        };
        assert!(matches!(
            train_slice(&vocab, &atemporal, SliceLabel(0), &corpus, &wider),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
