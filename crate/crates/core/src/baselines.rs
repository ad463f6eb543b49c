//! Comparison systems: one static space over the pooled corpus, and
//! independently trained per-slice spaces aligned afterwards by a linear or
//! orthogonal map fitted on shared anchor words.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compass::train_compass;
use crate::corpus::{DiachronicCorpus, SliceLabel, SliceSelector, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{StaticModel, TemporalModel};
use crate::sgns::{init_matrices, EmbeddingMatrix, TrainConfig, TrainSummary, Trainer, Weights};

/// Pooled training; the same procedure as the first compass phase.
pub fn train_static(
    vocab: &Vocabulary,
    corpus: &DiachronicCorpus,
    config: &TrainConfig,
) -> Result<StaticModel> {
    let atemporal = train_compass(vocab, corpus, config)?;
    Ok(StaticModel {
        vocab: vocab.clone(),
        context: atemporal.context,
        target: atemporal.target,
        labels: corpus.labels(),
        use_target: false,
    })
}

/// One independently trained slice space.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSpace {
    pub label: SliceLabel,
    pub context: EmbeddingMatrix,
    pub target: EmbeddingMatrix,
    /// Occurrences of each word in the slice.
    pub counts: Vec<u64>,
    pub summary: TrainSummary,
}

impl SliceSpace {
    pub fn untrained(&self) -> Vec<bool> {
        self.counts.iter().map(|&c| c == 0).collect()
    }
}

/// Trains every slice on its own, with seed `config.seed + i` for the i-th
/// slice in label order.
pub fn train_per_slice(
    vocab: &Vocabulary,
    corpus: &DiachronicCorpus,
    config: &TrainConfig,
) -> Result<Vec<SliceSpace>> {
    let labels = corpus.labels();
    labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let cfg = TrainConfig {
                seed: config.seed.wrapping_add(i as u64),
                freeze_context: false,
                freeze_target: false,
                ..config.clone()
            };
            train_one_slice(vocab, corpus, label, cfg)
        })
        .collect()
}

fn train_one_slice(
    vocab: &Vocabulary,
    corpus: &DiachronicCorpus,
    label: SliceLabel,
    config: TrainConfig,
) -> Result<SliceSpace> {
    let slice = corpus.slice(label).ok_or(Error::UnknownSlice(label))?;
    if !slice.sentences.iter().any(|s| s.len() >= 2) {
        return Err(Error::EmptySlice(label));
    }
    let trainer = Trainer::new(vocab, config)?;
    let cfg = trainer.config();
    let (mut context, mut target) = init_matrices(corpus.vocab_size(), cfg.dim, cfg.seed);
    let summary = trainer.train(
        corpus,
        SliceSelector::Label(label),
        Weights::Trainable(&mut context),
        Weights::Trainable(&mut target),
    )?;
    Ok(SliceSpace {
        label,
        context,
        target,
        counts: corpus.slice_counts(label)?,
        summary,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentKind {
    #[default]
    None,
    Linear,
    Orthogonal,
}

/// A `d x d` map applied to row vectors as `x * W`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    pub matrix: DMatrix<f64>,
}

impl LinearMap {
    pub fn identity(dim: usize) -> Self {
        LinearMap {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &LinearMap) -> LinearMap {
        LinearMap {
            matrix: &self.matrix * &next.matrix,
        }
    }

    pub fn apply(&self, m: &EmbeddingMatrix) -> EmbeddingMatrix {
        apply_matrix(m, &self.matrix)
    }

    /// Map for the paired matrix that keeps every context-target dot product
    /// unchanged: the inverse transpose.
    pub fn dual(&self) -> Result<LinearMap> {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::RankDeficient("alignment map is singular".into()))?;
        Ok(LinearMap {
            matrix: inv.transpose(),
        })
    }

    /// Largest entry of `|W^T W - I|`.
    pub fn orthogonality_residual(&self) -> f64 {
        let d = self.dim();
        (self.matrix.transpose() * &self.matrix - DMatrix::<f64>::identity(d, d)).amax()
    }
}

fn apply_matrix(m: &EmbeddingMatrix, w: &DMatrix<f64>) -> EmbeddingMatrix {
    let d = m.dim();
    let mut data = Vec::with_capacity(m.rows() * d);
    for i in 0..m.rows() {
        let row = m.row(i);
        for j in 0..d {
            let mut acc = 0.0f64;
            for (k, &x) in row.iter().enumerate() {
                acc += f64::from(x) * w[(k, j)];
            }
            data.push(acc as f32);
        }
    }
    EmbeddingMatrix::from_vec(m.rows(), d, m.role(), data)
}

/// Rows `ids` of `m` as an `n x d` f64 matrix.
pub fn gather(m: &EmbeddingMatrix, ids: &[u32]) -> Result<DMatrix<f64>> {
    for &id in ids {
        if id as usize >= m.rows() {
            return Err(Error::TokenOutOfRange { id, len: m.rows() });
        }
    }
    Ok(DMatrix::from_fn(ids.len(), m.dim(), |r, c| {
        f64::from(m.row(ids[r] as usize)[c])
    }))
}

fn check_system(source: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<()> {
    if source.shape() != reference.shape() {
        return Err(Error::DimensionMismatch {
            expected: source.ncols(),
            found: reference.ncols(),
        });
    }
    let (n, d) = source.shape();
    if n < d {
        return Err(Error::RankDeficient(format!(
            "{n} anchors cannot determine a {d}-dimensional map"
        )));
    }
    for (name, m) in [("source", source), ("reference", reference)] {
        let rank = numerical_rank(m);
        if rank < d {
            return Err(Error::RankDeficient(format!(
                "{name} anchor matrix has rank {rank}, needs {d}"
            )));
        }
    }
    Ok(())
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    let tol = top * f64::EPSILON * m.nrows().max(m.ncols()) as f64 * 16.0;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthogonal `W` minimizing `|source * W - reference|_F`.
pub fn fit_orthogonal_dense(source: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<LinearMap> {
    check_system(source, reference)?;
    let cross = source.transpose() * reference;
    let svd = cross.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    Ok(LinearMap { matrix: u * vt })
}

/// Unconstrained least-squares `W` for `source * W ~ reference`.
pub fn fit_linear_dense(source: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<LinearMap> {
    check_system(source, reference)?;
    let qr = source.clone().qr();
    let rhs = qr.q().transpose() * reference;
    let matrix = qr
        .r()
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::RankDeficient("source anchor matrix is singular".into()))?;
    Ok(LinearMap { matrix })
}

pub fn fit_orthogonal(
    source: &EmbeddingMatrix,
    reference: &EmbeddingMatrix,
    anchors: &[u32],
) -> Result<LinearMap> {
    fit_orthogonal_dense(&gather(source, anchors)?, &gather(reference, anchors)?)
}

pub fn fit_linear(
    source: &EmbeddingMatrix,
    reference: &EmbeddingMatrix,
    anchors: &[u32],
) -> Result<LinearMap> {
    fit_linear_dense(&gather(source, anchors)?, &gather(reference, anchors)?)
}

/// `|source[anchors] * W - reference[anchors]|_F`.
pub fn residual(
    source: &EmbeddingMatrix,
    reference: &EmbeddingMatrix,
    anchors: &[u32],
    map: &LinearMap,
) -> Result<f64> {
    let x = gather(source, anchors)?;
    let y = gather(reference, anchors)?;
    Ok((x * &map.matrix - y).norm())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePolicy {
    /// Fit every slice directly onto the reference.
    #[default]
    Direct,
    /// Fit each slice onto its neighbor toward the reference and compose.
    Consecutive,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignOptions {
    pub kind: AlignmentKind,
    pub policy: ReferencePolicy,
    /// Reference slice; the last slice when unset.
    pub reference: Option<SliceLabel>,
    /// Anchors must occur at least this often in both slices.
    pub min_count: u64,
    /// Keep only the most frequent anchors.
    pub top: Option<usize>,
}

/// Words occurring at least `max(min_count, 1)` times in both slices, in
/// descending pooled frequency, truncated to `top`.
pub fn anchor_ids(a: &[u64], b: &[u64], min_count: u64, top: Option<usize>) -> Vec<u32> {
    let floor = min_count.max(1);
    // vocabulary ids are already in descending pooled frequency
    let ids = (0..a.len().min(b.len()))
        .filter(|&i| a[i] >= floor && b[i] >= floor)
        .map(|i| i as u32);
    match top {
        Some(n) => ids.take(n).collect(),
        None => ids.collect(),
    }
}

/// Per-slice spaces after alignment.
#[derive(Clone, Debug)]
pub struct AlignedTemporalModel {
    pub vocab: Vocabulary,
    pub options: AlignOptions,
    pub reference: SliceLabel,
    pub slices: BTreeMap<SliceLabel, AlignedSlice>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedSlice {
    /// Word vectors in the reference coordinates.
    pub vectors: EmbeddingMatrix,
    /// Targets mapped by the dual map, so scores match the unaligned space.
    pub target: EmbeddingMatrix,
    pub map: LinearMap,
    pub untrained: Vec<bool>,
    /// Anchor words used by the fit that produced `map`.
    pub anchors: usize,
}

impl TemporalModel for AlignedTemporalModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn labels(&self) -> Vec<SliceLabel> {
        self.slices.keys().copied().collect()
    }

    fn vectors(&self, label: SliceLabel) -> Option<&EmbeddingMatrix> {
        self.slices.get(&label).map(|s| &s.vectors)
    }

    fn scoring_pair(&self, label: SliceLabel) -> Option<(&EmbeddingMatrix, &EmbeddingMatrix)> {
        self.slices.get(&label).map(|s| (&s.vectors, &s.target))
    }

    fn untrained(&self, label: SliceLabel) -> Option<&[bool]> {
        self.slices.get(&label).map(|s| s.untrained.as_slice())
    }

    fn method(&self) -> &str {
        match self.options.kind {
            AlignmentKind::None => "per_slice",
            AlignmentKind::Linear => "linear",
            AlignmentKind::Orthogonal => "orthogonal",
        }
    }
}

/// Maps every slice space into the coordinates of the reference slice.
pub fn align_chain(
    vocab: &Vocabulary,
    spaces: Vec<SliceSpace>,
    options: &AlignOptions,
) -> Result<AlignedTemporalModel> {
    if spaces.is_empty() {
        return Err(Error::Empty("slice spaces"));
    }
    let mut spaces = spaces;
    spaces.sort_by_key(|s| s.label);
    let labels: Vec<SliceLabel> = spaces.iter().map(|s| s.label).collect();
    let reference = options.reference.unwrap_or(*labels.last().expect("nonempty"));
    let r = labels
        .iter()
        .position(|&l| l == reference)
        .ok_or(Error::UnknownSlice(reference))?;
    if options.kind != AlignmentKind::None && spaces.len() < 2 {
        return Err(Error::Config("alignment needs at least two slices".into()));
    }
    let dim = spaces[0].context.dim();

    let fit = |src: &SliceSpace, dst: &SliceSpace| -> Result<(LinearMap, usize)> {
        let anchors = anchor_ids(&src.counts, &dst.counts, options.min_count, options.top);
        let map = match options.kind {
            AlignmentKind::None => LinearMap::identity(dim),
            AlignmentKind::Linear => fit_linear(&src.context, &dst.context, &anchors)?,
            AlignmentKind::Orthogonal => fit_orthogonal(&src.context, &dst.context, &anchors)?,
        };
        Ok((map, anchors.len()))
    };

    let mut maps: Vec<(LinearMap, usize)> = vec![(LinearMap::identity(dim), 0); spaces.len()];
    match options.policy {
        ReferencePolicy::Direct => {
            for i in (0..spaces.len()).filter(|&i| i != r) {
                maps[i] = fit(&spaces[i], &spaces[r])?;
            }
        }
        ReferencePolicy::Consecutive => {
            for i in (0..r).rev() {
                let (step, n) = fit(&spaces[i], &spaces[i + 1])?;
                maps[i] = (step.then(&maps[i + 1].0), n);
            }
            for i in r + 1..spaces.len() {
                let (step, n) = fit(&spaces[i], &spaces[i - 1])?;
                maps[i] = (step.then(&maps[i - 1].0), n);
            }
        }
    }

    let mut slices = BTreeMap::new();
    for (space, (map, anchors)) in spaces.into_iter().zip(maps) {
        let aligned = if options.kind == AlignmentKind::None {
            AlignedSlice {
                untrained: space.untrained(),
                vectors: space.context,
                target: space.target,
                map,
                anchors,
            }
        } else {
            AlignedSlice {
                untrained: space.untrained(),
                vectors: map.apply(&space.context),
                target: map.dual()?.apply(&space.target),
                map,
                anchors,
            }
        };
        slices.insert(space.label, aligned);
    }
    Ok(AlignedTemporalModel {
        vocab: vocab.clone(),
        options: options.clone(),
        reference,
        slices,
    })
}
