//! Seeded generators for corpora with planted structure.
//!
//! Every generator is a pure function of its spec, so tests, benches and the
//! command line all see the same text for the same seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{RawCorpus, RawSlice, SliceLabel};
use crate::error::Result;

/// Sentences drawn from topics; each sentence uses words of a single topic.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicSpec {
    pub labels: Vec<i64>,
    pub tokens_per_slice: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    pub sentence_len: usize,
    /// Regroup the words into fresh topics in every slice.
    pub drifting: bool,
    pub seed: u64,
}

impl Default for TopicSpec {
    fn default() -> Self {
        TopicSpec {
            labels: vec![0, 1, 2, 3],
            tokens_per_slice: 250_000,
            topics: 50,
            words_per_topic: 20,
            sentence_len: 10,
            drifting: false,
            seed: 0,
        }
    }
}

impl TopicSpec {
    pub fn vocab_size(&self) -> usize {
        self.topics * self.words_per_topic
    }

    /// Word ids grouped by topic as used in slice `index`.
    pub fn grouping(&self, index: usize) -> Vec<Vec<usize>> {
        let mut ids: Vec<usize> = (0..self.vocab_size()).collect();
        if self.drifting {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9);
            rng.set_stream(index as u64 + 1);
            ids.shuffle(&mut rng);
        }
        ids.chunks(self.words_per_topic).map(<[usize]>::to_vec).collect()
    }

    /// Sentences of slice `index`, drawn from an independent stream per
    /// `(seed, stream)` pair.
    pub fn sentences(&self, index: usize, tokens: usize, stream: u64) -> Vec<Vec<String>> {
        let groups = self.grouping(index);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let mut out = Vec::with_capacity(tokens / self.sentence_len + 1);
        let mut produced = 0;
        while produced < tokens {
            let group = &groups[rng.random_range(0..groups.len())];
            let len = self.sentence_len.min(tokens - produced).max(1);
            out.push(
                (0..len)
                    .map(|_| topic_word(group[rng.random_range(0..group.len())]))
                    .collect(),
            );
            produced += len;
        }
        out
    }

    pub fn corpus(&self) -> Result<RawCorpus> {
        let slices = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, &label)| RawSlice {
                label: SliceLabel(label),
                sentences: self.sentences(i, self.tokens_per_slice, i as u64),
            })
            .collect();
        RawCorpus::new(slices)
    }

    /// Fresh text from the same per-slice distributions, for held-out scoring.
    pub fn heldout(&self, tokens_per_slice: usize) -> Result<RawCorpus> {
        let offset = self.labels.len() as u64;
        let slices = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, &label)| RawSlice {
                label: SliceLabel(label),
                sentences: self.sentences(i, tokens_per_slice, offset + i as u64),
            })
            .collect();
        RawCorpus::new(slices)
    }
}

pub fn topic_word(id: usize) -> String {
    format!("w{id:04}")
}

/// Replaces the text of slice `dst` with a copy of slice `src`.
pub fn copy_slice(raw: &RawCorpus, src: SliceLabel, dst: SliceLabel) -> Result<RawCorpus> {
    let text = raw
        .slices()
        .iter()
        .find(|s| s.label == src)
        .ok_or(crate::Error::UnknownSlice(src))?
        .sentences
        .clone();
    let mut found = false;
    let slices = raw
        .slices()
        .iter()
        .map(|s| {
            if s.label == dst {
                found = true;
                RawSlice {
                    label: dst,
                    sentences: text.clone(),
                }
            } else {
                s.clone()
            }
        })
        .collect();
    if !found {
        return Err(crate::Error::UnknownSlice(dst));
    }
    RawCorpus::new(slices)
}

/// One word that moves from cluster A to cluster B between two slices, over
/// a shared topic background.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSpec {
    pub background: TopicSpec,
    pub cluster_size: usize,
    /// Cluster sentences per slice for each cluster.
    pub cluster_sentences: usize,
    /// Sentences per slice in which the shifting word appears.
    pub shift_sentences: usize,
}

impl Default for ShiftSpec {
    fn default() -> Self {
        ShiftSpec {
            background: TopicSpec {
                labels: vec![1, 2],
                tokens_per_slice: 150_000,
                topics: 20,
                ..TopicSpec::default()
            },
            cluster_size: 20,
            cluster_sentences: 3000,
            shift_sentences: 2000,
        }
    }
}

/// Token names used by [`ShiftSpec::corpus`].
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftWords {
    pub shifting: String,
    pub cluster_a: Vec<String>,
    pub cluster_b: Vec<String>,
}

impl ShiftSpec {
    pub fn words(&self) -> ShiftWords {
        ShiftWords {
            shifting: "shifter".to_owned(),
            cluster_a: (0..self.cluster_size).map(|i| format!("alpha{i:02}")).collect(),
            cluster_b: (0..self.cluster_size).map(|i| format!("beta{i:02}")).collect(),
        }
    }

    /// Two slices. Both clusters appear in both slices; the shifting word
    /// joins cluster A sentences in the first slice and cluster B sentences
    /// in the second.
    pub fn corpus(&self) -> Result<RawCorpus> {
        assert_eq!(self.background.labels.len(), 2, "shift corpus needs two slices");
        let words = self.words();
        let len = self.background.sentence_len;
        let mut slices = Vec::new();
        for (i, &label) in self.background.labels.iter().enumerate() {
            let mut sentences = self
                .background
                .sentences(i, self.background.tokens_per_slice, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(self.background.seed);
            rng.set_stream(1000 + i as u64);
            for cluster in [&words.cluster_a, &words.cluster_b] {
                for _ in 0..self.cluster_sentences {
                    sentences.push(draw(cluster, len, &mut rng));
                }
            }
            let home = if i == 0 { &words.cluster_a } else { &words.cluster_b };
            for _ in 0..self.shift_sentences {
                let mut s = draw(home, len - 1, &mut rng);
                let at = rng.random_range(0..=s.len());
                s.insert(at, words.shifting.clone());
                sentences.push(s);
            }
            sentences.shuffle(&mut rng);
            slices.push(RawSlice {
                label: SliceLabel(label),
                sentences,
            });
        }
        RawCorpus::new(slices)
    }
}

fn draw<R: Rng>(words: &[String], len: usize, rng: &mut R) -> Vec<String> {
    (0..len)
        .map(|_| words[rng.random_range(0..words.len())].clone())
        .collect()
}

/// Word pairs whose contextual roles swap between two slices.
///
/// Each pair `(p, q)` owns two role contexts. In the first slice `p` sits
/// between the two words of role one and `q` between those of role two; in
/// the second slice the roles are exchanged. Every role word also has a
/// private partner in both slices, which keeps the roles distinguishable in
/// the pooled corpus. Intended for window 1.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalogySpec {
    pub labels: (i64, i64),
    pub pairs: usize,
    /// Repetitions per slice of each role sentence.
    pub repeats: usize,
    /// Optional topic background mixed into both slices.
    pub background: Option<TopicSpec>,
    pub seed: u64,
}

impl Default for AnalogySpec {
    fn default() -> Self {
        AnalogySpec {
            labels: (1, 2),
            pairs: 25,
            repeats: 200,
            background: None,
            seed: 0,
        }
    }
}

/// One planted analogy: `source` in slice `from` plays the role of `answer`
/// in slice `to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedAnalogy {
    pub source: String,
    pub from: SliceLabel,
    pub answer: String,
    pub to: SliceLabel,
}

impl AnalogySpec {
    fn pair_words(i: usize) -> [String; 10] {
        ["p", "q", "a", "b", "c", "d", "e", "f", "g", "h"].map(|w| format!("{w}{i:02}"))
    }

    pub fn corpus(&self) -> Result<RawCorpus> {
        let mut slices = Vec::new();
        for (s, label) in [self.labels.0, self.labels.1].into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(s as u64);
            let mut sentences = match &self.background {
                Some(bg) => bg.sentences(s, bg.tokens_per_slice, s as u64),
                None => Vec::new(),
            };
            for i in 0..self.pairs {
                let [p, q, a, b, c, d, e, f, g, h] = Self::pair_words(i);
                let (first, second) = if s == 0 { (&p, &q) } else { (&q, &p) };
                for _ in 0..self.repeats {
                    sentences.push(vec![a.clone(), first.clone(), b.clone()]);
                    sentences.push(vec![c.clone(), second.clone(), d.clone()]);
                    sentences.push(vec![e.clone(), a.clone()]);
                    sentences.push(vec![f.clone(), b.clone()]);
                    sentences.push(vec![g.clone(), c.clone()]);
                    sentences.push(vec![h.clone(), d.clone()]);
                }
            }
            sentences.shuffle(&mut rng);
            slices.push(RawSlice {
                label: SliceLabel(label),
                sentences,
            });
        }
        RawCorpus::new(slices)
    }

    /// Two dynamic analogies per pair, one in each direction of time.
    pub fn analogies(&self) -> Vec<PlantedAnalogy> {
        let (t1, t2) = (SliceLabel(self.labels.0), SliceLabel(self.labels.1));
        let mut out = Vec::with_capacity(2 * self.pairs);
        for i in 0..self.pairs {
            let [p, q, ..] = Self::pair_words(i);
            out.push(PlantedAnalogy {
                source: p.clone(),
                from: t1,
                answer: q.clone(),
                to: t2,
            });
            out.push(PlantedAnalogy {
                source: q,
                from: t1,
                answer: p,
                to: t2,
            });
        }
        out
    }
}
