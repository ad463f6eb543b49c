//! Evaluation of temporal models: temporal analogies, held-out likelihood
//! and posterior classification, and PCA trajectories for plotting.

pub mod analogy;
pub mod heldout;
pub mod pca;

use crate::error::Result;
use crate::model::TemporalModel;
use crate::sgns::cosine;

/// Cosine top-`k` of `word` from slice `from` among the vectors of slice
/// `to`, the word itself included. Ties go to the lower id.
pub fn nearest_neighbors(
    model: &dyn TemporalModel,
    word: &str,
    from: crate::corpus::SliceLabel,
    to: crate::corpus::SliceLabel,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    let vocab = model.vocab();
    let id = vocab
        .id(word)
        .ok_or_else(|| crate::Error::OutOfVocabulary(word.to_owned()))?;
    let src = model
        .vectors(from)
        .ok_or(crate::Error::UnknownSlice(from))?;
    let dst = model.vectors(to).ok_or(crate::Error::UnknownSlice(to))?;
    let query = src.row(id as usize);
    let mut scored: Vec<(f64, usize)> = (0..dst.rows())
        .map(|j| (cosine(query, dst.row(j)), j))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(s, j)| (vocab.token(j as u32).to_owned(), s))
        .collect())
}
