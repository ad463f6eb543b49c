//! Held-out evaluation of temporal models.
//!
//! Each held-out position is scored with a balanced negative-sampling log
//! likelihood: half from the true target and half from the sampled
//! negatives. Summed over a slice and divided by the number of positions it
//! gives the slice log likelihood. Summed over a sentence, it gives the
//! per-slice scores from which a posterior over slice labels follows under a
//! uniform prior.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{context_at, DiachronicCorpus, NegativeTable, SliceLabel, Vocabulary};
use crate::error::{Error, Result};
use crate::model::TemporalModel;
use crate::sgns::{log_sigmoid, EmbeddingMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeWeighting {
    /// Negatives averaged within their half.
    #[default]
    Mean,
    /// Negatives summed within their half.
    Sum,
}

/// `0.5 * ln s(u_t . c) + 0.5 * w * sum_n ln s(-u_n . c)` where `c` is the
/// mean of the context rows and `w` is `1/k` or 1.
pub fn position_log_prob(
    context: &EmbeddingMatrix,
    target: &EmbeddingMatrix,
    target_id: u32,
    context_ids: &[u32],
    negatives: &[u32],
    weighting: NegativeWeighting,
) -> Result<f64> {
    if context.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: context.dim(),
            found: target.dim(),
        });
    }
    if context_ids.is_empty() {
        return Err(Error::Empty("position has an empty context"));
    }
    let mut mean = vec![0.0f64; context.dim()];
    score_position(context, target, target_id, context_ids, negatives, weighting, &mut mean)
}

fn check(m: &EmbeddingMatrix, id: u32) -> Result<usize> {
    if (id as usize) < m.rows() {
        Ok(id as usize)
    } else {
        Err(Error::TokenOutOfRange { id, len: m.rows() })
    }
}

fn score_position(
    context: &EmbeddingMatrix,
    target: &EmbeddingMatrix,
    target_id: u32,
    context_ids: &[u32],
    negatives: &[u32],
    weighting: NegativeWeighting,
    mean: &mut [f64],
) -> Result<f64> {
    mean.fill(0.0);
    for &c in context_ids {
        for (m, &x) in mean.iter_mut().zip(context.row(check(context, c)?)) {
            *m += f64::from(x);
        }
    }
    let inv = 1.0 / context_ids.len() as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    let dot = |id: usize| -> f64 {
        mean.iter()
            .zip(target.row(id))
            .map(|(a, &b)| a * f64::from(b))
            .sum()
    };
    let positive = log_sigmoid(dot(check(target, target_id)?));
    let mut negative = 0.0;
    for &n in negatives {
        negative += log_sigmoid(-dot(check(target, n)?));
    }
    if weighting == NegativeWeighting::Mean && !negatives.is_empty() {
        negative /= negatives.len() as f64;
    }
    Ok(0.5 * positive + 0.5 * negative)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub target: u32,
    pub context: Vec<u32>,
    pub negatives: Vec<u32>,
}

/// Held-out text of one slice with every scored position laid out.
#[derive(Clone, Debug, PartialEq)]
pub struct HeldoutSlice {
    pub label: SliceLabel,
    /// Sentences with at least one scored position.
    pub sentences: Vec<Vec<Position>>,
}

impl HeldoutSlice {
    /// Number of scored positions.
    pub fn positions(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeldoutSettings {
    pub window: usize,
    pub negatives: usize,
    pub seed: u64,
    pub weighting: NegativeWeighting,
    pub negative_exponent: f64,
}

impl Default for HeldoutSettings {
    fn default() -> Self {
        HeldoutSettings {
            window: 5,
            negatives: 5,
            seed: 1,
            weighting: NegativeWeighting::Mean,
            negative_exponent: 0.75,
        }
    }
}

/// Positions and negatives fixed once, so every model under comparison is
/// scored on the same draws.
#[derive(Clone, Debug, PartialEq)]
pub struct HeldoutPlan {
    pub settings: HeldoutSettings,
    pub slices: Vec<HeldoutSlice>,
}

impl HeldoutPlan {
    /// Slice `i` draws its negatives from stream `i` of the run seed. Each
    /// position uses the full window; negatives never equal the target.
    pub fn build(
        corpus: &DiachronicCorpus,
        vocab: &Vocabulary,
        settings: HeldoutSettings,
    ) -> Result<Self> {
        if settings.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        let table = NegativeTable::new(vocab, settings.negative_exponent);
        let mut slices = Vec::with_capacity(corpus.len());
        for (i, slice) in corpus.slices().iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(i as u64);
            let mut sentences = Vec::new();
            let mut ctx = Vec::new();
            for sentence in &slice.sentences {
                let mut positions = Vec::new();
                for pos in 0..sentence.len() {
                    context_at(sentence, pos, settings.window, &mut ctx);
                    if ctx.is_empty() {
                        continue;
                    }
                    let mut negatives = Vec::with_capacity(settings.negatives);
                    table.sample_into(settings.negatives, sentence[pos], &mut rng, &mut negatives)?;
                    positions.push(Position {
                        target: sentence[pos],
                        context: ctx.clone(),
                        negatives,
                    });
                }
                if !positions.is_empty() {
                    sentences.push(positions);
                }
            }
            slices.push(HeldoutSlice {
                label: slice.label,
                sentences,
            });
        }
        Ok(HeldoutPlan { settings, slices })
    }
}

/// Log likelihood of each sentence of `heldout` under the vectors of slice `k`.
pub fn sentence_log_likelihoods(
    model: &dyn TemporalModel,
    heldout: &HeldoutSlice,
    k: SliceLabel,
    weighting: NegativeWeighting,
) -> Result<Vec<f64>> {
    let (context, target) = model.scoring_pair(k).ok_or(Error::UnknownSlice(k))?;
    if context.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: context.dim(),
            found: target.dim(),
        });
    }
    heldout
        .sentences
        .par_iter()
        .map_init(
            || vec![0.0f64; context.dim()],
            |mean, sentence| {
                let mut total = 0.0;
                for p in sentence {
                    total += score_position(
                        context, target, p.target, &p.context, &p.negatives, weighting, mean,
                    )?;
                }
                Ok(total)
            },
        )
        .collect()
}

/// `(total, total / N)` for slice `heldout` scored with the vectors of slice `k`.
pub fn slice_log_likelihood(
    model: &dyn TemporalModel,
    heldout: &HeldoutSlice,
    k: SliceLabel,
    weighting: NegativeWeighting,
) -> Result<(f64, f64)> {
    let n = heldout.positions();
    if n == 0 {
        return Err(Error::EmptySlice(heldout.label));
    }
    // sentence totals are summed in order, so the result does not depend on
    // how the parallel work was split
    let total: f64 = sentence_log_likelihoods(model, heldout, k, weighting)?
        .into_iter()
        .sum();
    Ok((total, total / n as f64))
}

/// Normalized exponentials of `log_scores`, shifted by their maximum first.
pub fn normalize_log_scores(log_scores: &[f64]) -> Vec<f64> {
    let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = log_scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / z).collect()
}

/// Posterior over the model's labels for every sentence of `heldout`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub labels: Vec<SliceLabel>,
    /// One distribution per sentence, aligned with `labels`.
    pub per_sentence: Vec<Vec<f64>>,
    /// Mean posterior mass on the true label.
    pub mean_true: f64,
    /// Mean of the per-sentence distributions.
    pub mean: Vec<f64>,
}

/// Per-sentence posteriors under a uniform prior over the model's labels.
pub fn posterior(model: &dyn TemporalModel, heldout: &HeldoutSlice, weighting: NegativeWeighting) -> Result<Posterior> {
    let labels = model.labels();
    let truth = labels
        .iter()
        .position(|&l| l == heldout.label)
        .ok_or(Error::UnknownSlice(heldout.label))?;
    let scores: Vec<Vec<f64>> = labels
        .iter()
        .map(|&k| sentence_log_likelihoods(model, heldout, k, weighting))
        .collect::<Result<_>>()?;
    posterior_from_scores(&labels, &scores, truth)
}

/// `scores[k][s]` is the log likelihood of sentence `s` under label `k`.
pub fn posterior_from_scores(labels: &[SliceLabel], scores: &[Vec<f64>], truth: usize) -> Result<Posterior> {
    let sentences = scores.first().map_or(0, Vec::len);
    if sentences == 0 {
        return Err(Error::Empty("no held-out sentences to classify"));
    }
    let per_sentence: Vec<Vec<f64>> = (0..sentences)
        .map(|s| normalize_log_scores(&scores.iter().map(|k| k[s]).collect::<Vec<_>>()))
        .collect();
    let inv = 1.0 / sentences as f64;
    let mean: Vec<f64> = (0..labels.len())
        .map(|k| per_sentence.iter().map(|p| p[k]).sum::<f64>() * inv)
        .collect();
    Ok(Posterior {
        labels: labels.to_vec(),
        mean_true: mean[truth],
        mean,
        per_sentence,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Likelihood,
    Posterior,
    #[default]
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceResult {
    pub label: SliceLabel,
    pub positions: usize,
    pub sentences: usize,
    /// Normalized log likelihood under the matching slice.
    pub likelihood: Option<f64>,
    /// Normalized log likelihood under every slice of the model.
    pub cross_likelihood: BTreeMap<SliceLabel, f64>,
    /// Natural log of the mean posterior mass on the true label.
    pub log_posterior: Option<f64>,
    /// Mean posterior over all labels.
    pub mean_posterior: BTreeMap<SliceLabel, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeldoutReport {
    pub method: String,
    pub settings: HeldoutSettings,
    pub metric: Metric,
    pub slices: Vec<SliceResult>,
    pub mean_likelihood: Option<f64>,
    pub mean_log_posterior: Option<f64>,
    /// Held-out labels absent from the model.
    pub skipped: Vec<SliceLabel>,
    /// A single-slice model makes the posterior trivially 1.
    pub degenerate: bool,
}

pub fn evaluate(model: &dyn TemporalModel, plan: &HeldoutPlan, metric: Metric) -> Result<HeldoutReport> {
    let labels = model.labels();
    let weighting = plan.settings.weighting;
    let mut slices = Vec::new();
    let mut skipped = Vec::new();
    for heldout in &plan.slices {
        let Some(truth) = labels.iter().position(|&l| l == heldout.label) else {
            skipped.push(heldout.label);
            continue;
        };
        let n = heldout.positions();
        if n == 0 {
            return Err(Error::EmptySlice(heldout.label));
        }
        let want_posterior = metric != Metric::Likelihood;
        let scored: Vec<SliceLabel> = if want_posterior {
            labels.clone()
        } else {
            vec![heldout.label]
        };
        let scores: Vec<Vec<f64>> = scored
            .iter()
            .map(|&k| sentence_log_likelihoods(model, heldout, k, weighting))
            .collect::<Result<_>>()?;
        let cross: BTreeMap<SliceLabel, f64> = scored
            .iter()
            .zip(&scores)
            .map(|(&k, s)| (k, s.iter().sum::<f64>() / n as f64))
            .collect();
        let (log_posterior, mean_posterior) = if want_posterior {
            let post = posterior_from_scores(&labels, &scores, truth)?;
            (
                Some(post.mean_true.ln()),
                labels.iter().copied().zip(post.mean).collect(),
            )
        } else {
            (None, BTreeMap::new())
        };
        slices.push(SliceResult {
            label: heldout.label,
            positions: n,
            sentences: heldout.sentences.len(),
            likelihood: (metric != Metric::Posterior).then(|| cross[&heldout.label]),
            cross_likelihood: if want_posterior { cross } else { BTreeMap::new() },
            log_posterior,
            mean_posterior,
        });
    }
    if slices.is_empty() {
        return Err(Error::ModelMismatch(
            "no held-out slice label matches a model slice".into(),
        ));
    }
    let mean = |f: &dyn Fn(&SliceResult) -> Option<f64>| -> Option<f64> {
        let vals: Option<Vec<f64>> = slices.iter().map(f).collect();
        vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    };
    Ok(HeldoutReport {
        method: model.method().to_owned(),
        settings: plan.settings.clone(),
        metric,
        mean_likelihood: mean(&|s| s.likelihood),
        mean_log_posterior: mean(&|s| s.log_posterior),
        slices,
        skipped,
        degenerate: labels.len() == 1,
    })
}

pub fn write_heldout_csv<W: Write>(report: &HeldoutReport, out: W) -> Result<()> {
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.8}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slice", "positions", "sentences", "log_likelihood", "log_posterior"])?;
    for s in &report.slices {
        w.write_record([
            s.label.to_string(),
            s.positions.to_string(),
            s.sentences.to_string(),
            opt(s.likelihood),
            opt(s.log_posterior),
        ])?;
    }
    w.write_record([
        "mean".to_owned(),
        String::new(),
        String::new(),
        opt(report.mean_likelihood),
        opt(report.mean_log_posterior),
    ])?;
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::model::StaticModel;
    use crate::sgns::Role;

    fn matrix(rows: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        EmbeddingMatrix::from_vec(rows, dim, Role::Context, data)
    }

    #[test]
    fn zero_vectors_give_log_half() {
        let z = EmbeddingMatrix::zeros(4, 3, Role::Context);
        let lp = position_log_prob(&z, &z, 0, &[1, 2], &[3, 3], NegativeWeighting::Mean).unwrap();
        assert!((lp - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn saturated_positive_half_approaches_zero() {
        let c = EmbeddingMatrix::from_vec(2, 1, Role::Context, vec![100.0, 100.0]);
        let u = EmbeddingMatrix::from_vec(2, 1, Role::Target, vec![100.0, -100.0]);
        let lp = position_log_prob(&c, &u, 0, &[1], &[1], NegativeWeighting::Mean).unwrap();
        assert!(lp <= 0.0 && lp > -1e-12);
    }

    #[test]
    fn matches_straight_line_recomputation() {
        let c = matrix(6, 5, 1);
        let u = matrix(6, 5, 2);
        let (t, ctx, neg) = (2u32, [0u32, 4, 5], [1u32, 3, 3]);
        for weighting in [NegativeWeighting::Mean, NegativeWeighting::Sum] {
            let got = position_log_prob(&c, &u, t, &ctx, &neg, weighting).unwrap();
            let mut mean = [0.0f64; 5];
            for &i in &ctx {
                for (m, &v) in mean.iter_mut().zip(c.row(i as usize)) {
                    *m += v as f64 / 3.0;
                }
            }
            let dot = |j: u32| (0..5).map(|d| mean[d] * u.row(j as usize)[d] as f64).sum::<f64>();
            let ls = |x: f64| -(1.0 + (-x).exp()).ln();
            let neg_sum: f64 = neg.iter().map(|&n| ls(-dot(n))).sum();
            let w = if weighting == NegativeWeighting::Mean { 1.0 / 3.0 } else { 1.0 };
            let expected = 0.5 * ls(dot(t)) + 0.5 * w * neg_sum;
            assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
        }
    }

    #[test]
    fn empty_context_and_mismatch_are_errors() {
        let c = matrix(3, 2, 1);
        assert!(position_log_prob(&c, &c, 0, &[], &[1], NegativeWeighting::Mean).is_err());
        let u = matrix(3, 4, 2);
        assert!(matches!(
            position_log_prob(&c, &u, 0, &[1], &[2], NegativeWeighting::Mean),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn two_equal_scores_split_evenly() {
        assert_eq!(normalize_log_scores(&[-1.0, -1.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn three_label_posterior_by_hand() {
        // exp(-1), exp(-2), exp(-4) normalized, computed directly without the shift
        let scores = [-1.0f64, -2.0, -4.0];
        let z: f64 = scores.iter().map(|s| s.exp()).sum();
        let got = normalize_log_scores(&scores);
        for (g, s) in got.iter().zip(scores) {
            assert!((g - s.exp() / z).abs() < 1e-15);
        }
        // and far outside the range where direct exponentials stay finite
        let shifted = normalize_log_scores(&[-1001.0, -1002.0, -1004.0]);
        for (a, b) in shifted.iter().zip(&got) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn static_model(vocab_size: usize, labels: &[i64]) -> (StaticModel, Vocabulary) {
        let vocab = Vocabulary::from_entries(
            (0..vocab_size).map(|i| (format!("t{i}"), 10 + i as u64)).collect(),
        )
        .unwrap();
        let model = StaticModel {
            vocab: vocab.clone(),
            context: matrix(vocab_size, 4, 7),
            target: matrix(vocab_size, 4, 8).with_role(Role::Target),
            labels: labels.iter().map(|&l| SliceLabel(l)).collect(),
            use_target: false,
        };
        (model, vocab)
    }

    fn plan_for(vocab: &Vocabulary, labels: &[i64], sentences: Vec<Vec<u32>>) -> HeldoutPlan {
        let slices = labels
            .iter()
            .map(|&l| crate::corpus::Slice {
                label: SliceLabel(l),
                sentences: sentences.clone(),
            })
            .collect();
        let corpus = DiachronicCorpus::new(vocab.len(), slices).unwrap();
        HeldoutPlan::build(&corpus, vocab, HeldoutSettings::default()).unwrap()
    }

    #[test]
    fn identical_slice_models_give_uniform_posterior() {
        let (model, vocab) = static_model(12, &[1, 2, 3]);
        let plan = plan_for(&vocab, &[2], vec![vec![0, 1, 2, 3], vec![4, 5, 6]]);
        let post = posterior(&model, &plan.slices[0], NegativeWeighting::Mean).unwrap();
        for p in post.per_sentence.iter().flatten() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_position_slice_equals_that_position() {
        let (model, vocab) = static_model(6, &[0]);
        let plan = plan_for(&vocab, &[0], vec![vec![3, 4]]);
        // two words give two positions; keep only the first
        let mut slice = plan.slices[0].clone();
        slice.sentences[0].truncate(1);
        let p = &slice.sentences[0][0];
        let direct = position_log_prob(&model.context, &model.target, p.target, &p.context, &p.negatives, NegativeWeighting::Mean).unwrap();
        let (total, norm) = slice_log_likelihood(&model, &slice, SliceLabel(0), NegativeWeighting::Mean).unwrap();
        assert_eq!(total, direct);
        assert_eq!(norm, direct);
    }

    #[test]
    fn doubling_a_slice_keeps_the_normalized_value() {
        let (model, vocab) = static_model(10, &[0]);
        let plan = plan_for(&vocab, &[0], vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7]]);
        let slice = plan.slices[0].clone();
        let mut doubled = slice.clone();
        doubled.sentences.extend(slice.sentences.clone());
        let (_, a) = slice_log_likelihood(&model, &slice, SliceLabel(0), NegativeWeighting::Mean).unwrap();
        let (_, b) = slice_log_likelihood(&model, &doubled, SliceLabel(0), NegativeWeighting::Mean).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn total_matches_brute_force_sum() {
        let (model, vocab) = static_model(10, &[0]);
        let plan = plan_for(&vocab, &[0], vec![vec![0, 1, 2, 3, 4, 9], vec![5, 6, 7]]);
        let slice = &plan.slices[0];
        let mut expected = 0.0;
        for p in slice.sentences.iter().flatten() {
            expected += position_log_prob(&model.context, &model.target, p.target, &p.context, &p.negatives, NegativeWeighting::Mean).unwrap();
        }
        let (total, norm) = slice_log_likelihood(&model, slice, SliceLabel(0), NegativeWeighting::Mean).unwrap();
        assert!((total - expected).abs() < 1e-12);
        assert!((norm - expected / 9.0).abs() < 1e-12);
    }

    #[test]
    fn plans_are_reproducible_and_skip_lone_words() {
        let (_, vocab) = static_model(10, &[0]);
        let a = plan_for(&vocab, &[0, 1], vec![vec![0, 1, 2], vec![7]]);
        let b = plan_for(&vocab, &[0, 1], vec![vec![0, 1, 2], vec![7]]);
        assert_eq!(a, b);
        assert_eq!(a.slices[0].sentences.len(), 1);
        assert_eq!(a.slices[0].positions(), 3);
        for p in a.slices[0].sentences.iter().flatten() {
            assert!(!p.negatives.contains(&p.target));
        }
    }

    #[test]
    fn single_slice_report_is_degenerate() {
        let (model, vocab) = static_model(8, &[4]);
        let plan = plan_for(&vocab, &[4, 5], vec![vec![0, 1, 2, 3]]);
        let report = evaluate(&model, &plan, Metric::Both).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.slices[0].log_posterior, Some(0.0));
        assert_eq!(report.skipped, vec![SliceLabel(5)]);
    }

    #[test]
    fn report_means_are_column_means() {
        let (model, vocab) = static_model(12, &[1, 2, 3]);
        let plan = plan_for(&vocab, &[1, 2, 3], vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8]]);
        let report = evaluate(&model, &plan, Metric::Both).unwrap();
        let l: f64 = report.slices.iter().map(|s| s.likelihood.unwrap()).sum::<f64>() / 3.0;
        let p: f64 = report.slices.iter().map(|s| s.log_posterior.unwrap()).sum::<f64>() / 3.0;
        assert_eq!(report.mean_likelihood, Some(l));
        assert_eq!(report.mean_log_posterior, Some(p));
        let mut buf = Vec::new();
        write_heldout_csv(&report, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }

    #[test]
    fn no_overlap_is_an_error() {
        let (model, vocab) = static_model(8, &[1]);
        let plan = plan_for(&vocab, &[2], vec![vec![0, 1, 2]]);
        assert!(matches!(evaluate(&model, &plan, Metric::Both), Err(Error::ModelMismatch(_))));
    }

    proptest! {
        #[test]
        fn posterior_is_normalized_and_shift_invariant(
            scores in proptest::collection::vec(-800.0f64..0.0, 2..8),
            shift in -500.0f64..500.0,
        ) {
            let p = normalize_log_scores(&scores);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
            let q = normalize_log_scores(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
