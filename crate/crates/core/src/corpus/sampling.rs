//! Training-stream machinery: frequent-word subsampling, the negative
//! sampling distribution and (target, context) sample extraction.

use rand::Rng;

use super::{DiachronicCorpus, Slice, SliceSelector, Vocabulary};
use crate::error::{Error, Result};

/// Per-word keep probabilities for frequent-word downsampling.
///
/// An occurrence of a word with relative frequency `f` survives with
/// probability `min(1, (sqrt(f / t) + 1) * t / f)`.
#[derive(Clone, Debug)]
pub struct Subsampler {
    keep: Vec<f64>,
}

impl Subsampler {
    /// `threshold == 0` disables subsampling.
    pub fn new(vocab: &Vocabulary, threshold: f64) -> Self {
        let total = vocab.total_count() as f64;
        let keep = vocab
            .counts()
            .iter()
            .map(|&c| keep_probability(c as f64 / total, threshold))
            .collect();
        Subsampler { keep }
    }

    pub fn keep_probability(&self, id: u32) -> f64 {
        self.keep[id as usize]
    }

    pub fn is_disabled(&self) -> bool {
        self.keep.iter().all(|&p| p >= 1.0)
    }

    /// Appends the surviving tokens of `sentence` to `out`.
    pub fn apply_into<R: Rng + ?Sized>(&self, sentence: &[u32], rng: &mut R, out: &mut Vec<u32>) {
        for &id in sentence {
            let p = self.keep[id as usize];
            if p >= 1.0 || rng.random::<f64>() < p {
                out.push(id);
            }
        }
    }
}

pub(crate) fn keep_probability(freq: f64, threshold: f64) -> f64 {
    if threshold <= 0.0 || freq <= 0.0 {
        return 1.0;
    }
    ((freq / threshold).sqrt() + 1.0) * threshold / freq
}

/// Downsamples one sentence. Returns it unchanged when `threshold` is 0.
pub fn subsample<R: Rng + ?Sized>(
    sentence: &[u32],
    vocab: &Vocabulary,
    threshold: f64,
    rng: &mut R,
) -> Vec<u32> {
    if threshold <= 0.0 {
        return sentence.to_vec();
    }
    let mut out = Vec::with_capacity(sentence.len());
    Subsampler::new(vocab, threshold).apply_into(sentence, rng, &mut out);
    out
}

/// Unigram distribution raised to `alpha`, sampled through its cumulative sum.
#[derive(Clone, Debug)]
pub struct NegativeTable {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    alpha: f64,
}

impl NegativeTable {
    pub fn new(vocab: &Vocabulary, alpha: f64) -> Self {
        Self::from_counts(vocab.counts(), alpha)
    }

    pub fn from_counts(counts: &[u64], alpha: f64) -> Self {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(alpha)).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        NegativeTable {
            probs,
            cumulative,
            alpha,
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn probability(&self, id: u32) -> f64 {
        self.probs[id as usize]
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.probs.len() - 1) as u32
    }

    /// Fills `out` with `k` draws, redrawing any hit on `exclude`.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        k: usize,
        exclude: u32,
        rng: &mut R,
        out: &mut Vec<u32>,
    ) -> Result<()> {
        if self.probs.len() < 2 {
            return Err(Error::DegenerateNegatives);
        }
        out.clear();
        while out.len() < k {
            let id = self.draw(rng);
            if id != exclude {
                out.push(id);
            }
        }
        Ok(())
    }
}

/// Draws `k` negatives for a true target `exclude`.
pub fn sample_negatives<R: Rng + ?Sized>(
    table: &NegativeTable,
    k: usize,
    exclude: u32,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(k);
    table.sample_into(k, exclude, rng, &mut out)?;
    Ok(out)
}

/// A target word and the words around it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingSample {
    pub target: u32,
    pub context: Vec<u32>,
}

/// Collects the words within `span` positions of `pos`, excluding `pos` itself.
pub fn context_at(sentence: &[u32], pos: usize, span: usize, out: &mut Vec<u32>) {
    out.clear();
    let start = pos.saturating_sub(span);
    let end = (pos + span + 1).min(sentence.len());
    out.extend_from_slice(&sentence[start..pos]);
    out.extend_from_slice(&sentence[pos + 1..end]);
}

/// Streams the samples of a corpus selection in order.
pub struct SampleIter<'a, R> {
    slices: Vec<&'a Slice>,
    slice: usize,
    sentence: usize,
    pos: usize,
    window: usize,
    dynamic: bool,
    rng: R,
}

impl<R: Rng> Iterator for SampleIter<'_, R> {
    type Item = TrainingSample;

    fn next(&mut self) -> Option<TrainingSample> {
        loop {
            let slice = self.slices.get(self.slice)?;
            let Some(sentence) = slice.sentences.get(self.sentence) else {
                self.slice += 1;
                self.sentence = 0;
                self.pos = 0;
                continue;
            };
            if self.pos >= sentence.len() {
                self.sentence += 1;
                self.pos = 0;
                continue;
            }
            let pos = self.pos;
            self.pos += 1;
            let span = if self.dynamic {
                self.rng.random_range(1..=self.window)
            } else {
                self.window
            };
            let mut context = Vec::with_capacity(2 * span);
            context_at(sentence, pos, span, &mut context);
            if !context.is_empty() {
                return Some(TrainingSample {
                    target: sentence[pos],
                    context,
                });
            }
        }
    }
}

/// Iterates `(target, context)` samples over the selected slices. With
/// `dynamic` set, each position draws its span uniformly from `1..=window`.
pub fn iterate_samples<R: Rng>(
    corpus: &DiachronicCorpus,
    selector: SliceSelector,
    window: usize,
    dynamic: bool,
    rng: R,
) -> Result<SampleIter<'_, R>> {
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    Ok(SampleIter {
        slices: corpus.select(selector)?,
        slice: 0,
        sentence: 0,
        pos: 0,
        window,
        dynamic,
        rng,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::corpus::{RawCorpus, SentenceMode, SliceLabel};

    fn corpus_of(sentences: Vec<Vec<u32>>, vocab_size: usize) -> DiachronicCorpus {
        DiachronicCorpus::new(
            vocab_size,
            vec![Slice {
                label: SliceLabel(0),
                sentences,
            }],
        )
        .unwrap()
    }

    fn vocab_with_counts(counts: &[u64]) -> Vocabulary {
        Vocabulary::from_entries(
            counts
                .iter()
                .enumerate()
                .map(|(i, &c)| (format!("w{i}"), c))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn window_one_enumeration() {
        let corpus = corpus_of(vec![vec![0, 1, 2]], 3);
        let rng = ChaCha8Rng::seed_from_u64(0);
        let samples: Vec<_> = iterate_samples(&corpus, SliceSelector::All, 1, false, rng)
            .unwrap()
            .map(|s| (s.target, s.context))
            .collect();
        assert_eq!(
            samples,
            vec![(0, vec![1]), (1, vec![0, 2]), (2, vec![1])]
        );
    }

    #[test]
    fn one_word_sentence_has_no_samples() {
        let corpus = corpus_of(vec![vec![0]], 1);
        let rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            iterate_samples(&corpus, SliceSelector::All, 5, false, rng)
                .unwrap()
                .count(),
            0
        );
    }

    #[test]
    fn total_context_size_matches_enumeration() {
        let window = 5;
        for len in 1..30usize {
            let sentence: Vec<u32> = (0..len as u32).collect();
            let corpus = corpus_of(vec![sentence], len);
            let rng = ChaCha8Rng::seed_from_u64(1);
            let total: usize = iterate_samples(&corpus, SliceSelector::All, window, false, rng)
                .unwrap()
                .map(|s| s.context.len())
                .sum();
            let mut brute = 0;
            for i in 0..len {
                for j in 0..len {
                    if i != j && i.abs_diff(j) <= window {
                        brute += 1;
                    }
                }
            }
            assert_eq!(total, brute, "len {len}");
        }
    }

    #[test]
    fn every_token_is_a_target_once_without_dynamic_window() {
        let sentences = vec![vec![0, 1, 2, 3], vec![4, 5], vec![6, 7, 8]];
        let corpus = corpus_of(sentences.clone(), 9);
        let rng = ChaCha8Rng::seed_from_u64(1);
        let targets: Vec<u32> = iterate_samples(&corpus, SliceSelector::All, 2, false, rng)
            .unwrap()
            .map(|s| s.target)
            .collect();
        assert_eq!(targets, sentences.concat());
    }

    #[test]
    fn dynamic_window_stays_within_bounds() {
        let corpus = corpus_of(vec![(0..40).collect()], 40);
        let rng = ChaCha8Rng::seed_from_u64(3);
        for s in iterate_samples(&corpus, SliceSelector::All, 4, true, rng).unwrap() {
            assert!(!s.context.is_empty() && s.context.len() <= 8);
            assert!(!s.context.contains(&s.target));
        }
    }

    #[test]
    fn unknown_slice_is_an_error() {
        let corpus = corpus_of(vec![vec![0, 1]], 2);
        let rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            iterate_samples(&corpus, SliceSelector::Label(SliceLabel(9)), 1, false, rng),
            Err(Error::UnknownSlice(SliceLabel(9)))
        ));
    }

    #[test]
    fn zero_threshold_disables_subsampling() {
        let vocab = vocab_with_counts(&[1000, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sentence = vec![0, 0, 1, 0];
        assert_eq!(subsample(&sentence, &vocab, 0.0, &mut rng), sentence);
        assert!(Subsampler::new(&vocab, 0.0).is_disabled());
    }

    #[test]
    fn keep_probability_saturates_at_threshold_frequency() {
        assert_eq!(keep_probability(1e-3, 1e-3).min(1.0), 1.0);
        assert!(keep_probability(1e-3, 1e-3) >= 1.0);
        assert!(keep_probability(0.5, 1e-3) < 1.0);
    }

    #[test]
    fn subsampling_keep_rate_matches_closed_form() {
        let raw = RawCorpus::from_lines(
            [(SliceLabel(0), vec!["the"; 1])],
            SentenceMode::Lines,
        )
        .unwrap();
        let vocab = Vocabulary::build(&raw, 1).unwrap();
        let threshold = 1e-3;
        // a corpus made only of "the" has f = 1
        // 10^7 draws put the 1% band near 6 standard deviations
        let expected = (1.0f64 / threshold).sqrt() * threshold + threshold;
        let sub = Subsampler::new(&vocab, threshold);
        assert!((sub.keep_probability(0) - expected).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sentence = vec![0u32; 10_000_000];
        let mut out = Vec::new();
        sub.apply_into(&sentence, &mut rng, &mut out);
        let rate = out.len() as f64 / sentence.len() as f64;
        assert!((rate - expected).abs() / expected < 0.01, "rate {rate} vs {expected}");
    }

    #[test]
    fn negatives_with_single_candidate() {
        let table = NegativeTable::from_counts(&[1, 1], 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_negatives(&table, 3, 0, &mut rng).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn negatives_need_two_words() {
        let table = NegativeTable::from_counts(&[5], 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_negatives(&table, 1, 0, &mut rng),
            Err(Error::DegenerateNegatives)
        ));
    }

    #[test]
    fn table_probabilities_are_normalized() {
        let table = NegativeTable::from_counts(&[7, 1, 300, 42, 9, 1], 0.75);
        let sum: f64 = (0..table.len() as u32).map(|i| table.probability(i)).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!((0..table.len() as u32).all(|i| table.probability(i) > 0.0));
    }

    #[test]
    fn uniform_counts_draw_uniformly() {
        let table = NegativeTable::from_counts(&[3; 8], 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let mut hist = [0usize; 8];
        for _ in 0..n {
            hist[table.draw(&mut rng) as usize] += 1;
        }
        for h in hist {
            let freq = h as f64 / n as f64;
            assert!((freq - 0.125).abs() / 0.125 < 0.01, "{freq}");
        }
    }

    #[test]
    fn smoothed_ratio_matches_closed_form() {
        let table = NegativeTable::from_counts(&[8, 1], 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1_000_000;
        let a = (0..n).filter(|_| table.draw(&mut rng) == 0).count() as f64;
        let ratio = a / (n as f64 - a);
        let expected = 8f64.powf(0.75);
        assert!((ratio - expected).abs() / expected < 0.02, "{ratio} vs {expected}");
    }

    #[test]
    fn draw_frequencies_pass_chi_square() {
        let counts = [1u64, 2, 5, 10, 40, 100, 7, 3, 60, 500];
        let table = NegativeTable::from_counts(&counts, 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 1_000_000;
        let mut hist = vec![0f64; counts.len()];
        for _ in 0..n {
            hist[table.draw(&mut rng) as usize] += 1.0;
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
        let z: f64 = weights.iter().sum();
        let chi2: f64 = hist
            .iter()
            .zip(&weights)
            .map(|(o, w)| {
                let e = n as f64 * w / z;
                (o - e).powi(2) / e
            })
            .sum();
        // 99.9th percentile of chi-square with 9 degrees of freedom
        assert!(chi2 < 27.877, "chi2 = {chi2}");
    }
}
