//! The read-only view evaluation needs from any temporal model.

use crate::corpus::{SliceLabel, Vocabulary};
use crate::sgns::EmbeddingMatrix;

/// A set of per-slice word embeddings over one shared vocabulary.
pub trait TemporalModel: Sync {
    fn vocab(&self) -> &Vocabulary;

    /// Slice labels in ascending order.
    fn labels(&self) -> Vec<SliceLabel>;

    /// The temporal word embeddings of one slice.
    fn vectors(&self, label: SliceLabel) -> Option<&EmbeddingMatrix>;

    /// `(context, target)` matrices used to score text as slice `label`.
    fn scoring_pair(&self, label: SliceLabel) -> Option<(&EmbeddingMatrix, &EmbeddingMatrix)>;

    /// Rows of slice `label` that received no training.
    fn untrained(&self, _label: SliceLabel) -> Option<&[bool]> {
        None
    }

    /// Short name of the method that produced the model.
    fn method(&self) -> &str;
}

/// One embedding space reused for every slice.
#[derive(Clone, Debug)]
pub struct StaticModel {
    pub vocab: Vocabulary,
    pub context: EmbeddingMatrix,
    pub target: EmbeddingMatrix,
    pub labels: Vec<SliceLabel>,
    /// Report target rows instead of context rows as the word vectors.
    pub use_target: bool,
}

impl TemporalModel for StaticModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn labels(&self) -> Vec<SliceLabel> {
        self.labels.clone()
    }

    fn vectors(&self, label: SliceLabel) -> Option<&EmbeddingMatrix> {
        self.labels.contains(&label).then_some(if self.use_target {
            &self.target
        } else {
            &self.context
        })
    }

    fn scoring_pair(&self, label: SliceLabel) -> Option<(&EmbeddingMatrix, &EmbeddingMatrix)> {
        self.labels
            .contains(&label)
            .then_some((&self.context, &self.target))
    }

    fn method(&self) -> &str {
        "static"
    }
}
