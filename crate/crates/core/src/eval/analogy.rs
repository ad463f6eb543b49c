//! Temporal word analogies: `w1` in slice `t1` is to `w2` in slice `t2`.
//!
//! The vector of `w1` at `t1` ranks every vocabulary word by its similarity
//! at `t2`. The input word stays a candidate, since static analogies expect
//! it as the answer.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::SliceLabel;
use crate::error::{Error, Result};
use crate::model::TemporalModel;
use crate::sgns::{dot, EmbeddingMatrix};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyQuery {
    pub category: String,
    pub w1: String,
    pub t1: SliceLabel,
    pub w2: String,
    pub t2: SliceLabel,
}

impl AnalogyQuery {
    pub fn is_static(&self) -> bool {
        self.w1 == self.w2
    }

    /// Time depth `|t1 - t2|`.
    pub fn depth(&self) -> u64 {
        self.t1.distance(self.t2)
    }
}

/// Parsed test set plus the lines that could not be parsed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestSet {
    pub queries: Vec<AnalogyQuery>,
    /// `(line number, reason)` for each rejected line.
    pub malformed: Vec<(usize, String)>,
}

/// Parses `category<TAB>w1<TAB>t1<TAB>w2<TAB>t2` rows; `#` lines and blank
/// lines are ignored. Words are lowercased like corpus tokens.
pub fn parse_testset(text: &str) -> TestSet {
    let mut set = TestSet::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
        if fields.len() != 5 {
            set.malformed
                .push((line_no, format!("expected 5 tab-separated fields, found {}", fields.len())));
            continue;
        }
        let (t1, t2) = match (fields[2].parse(), fields[4].parse()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                set.malformed
                    .push((line_no, "slice labels must be integers".to_owned()));
                continue;
            }
        };
        if fields[1].is_empty() || fields[3].is_empty() {
            set.malformed.push((line_no, "empty word".to_owned()));
            continue;
        }
        set.queries.push(AnalogyQuery {
            category: fields[0].to_owned(),
            w1: fields[1].to_lowercase(),
            t1,
            w2: fields[3].to_lowercase(),
            t2,
        });
    }
    set
}

pub fn load_testset(path: impl AsRef<Path>) -> Result<TestSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let set = parse_testset(&text);
    if set.queries.is_empty() {
        let message = match set.malformed.first() {
            Some((line, why)) => format!("no valid analogy rows (first problem at line {line}: {why})"),
            None => "no analogy rows".to_owned(),
        };
        return Err(Error::Format {
            path: path.to_owned(),
            line: set.malformed.first().map_or(0, |m| m.0),
            message,
        });
    }
    Ok(set)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    #[default]
    Cosine,
    Dot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub ks: Vec<usize>,
    /// Ranks beyond the cutoff contribute 0 to the reciprocal rank.
    pub cutoff: Option<u64>,
    /// Score out-of-vocabulary queries as never found instead of skipping them.
    pub strict: bool,
    /// Drop candidates that received no training in the answer slice.
    pub exclude_untrained: bool,
    pub similarity: Similarity,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            ks: vec![1, 3, 5, 10],
            cutoff: None,
            strict: false,
            exclude_untrained: false,
            similarity: Similarity::Cosine,
        }
    }
}

/// Candidate scores against one query vector.
struct Ranker<'a> {
    space: &'a EmbeddingMatrix,
    norms: &'a [f64],
    excluded: Option<&'a [bool]>,
    similarity: Similarity,
}

impl Ranker<'_> {
    fn score(&self, query: &[f32], query_norm: f64, j: usize) -> f64 {
        let d = dot(query, self.space.row(j));
        match self.similarity {
            Similarity::Dot => d,
            Similarity::Cosine => {
                let denom = query_norm * self.norms[j];
                if denom == 0.0 {
                    0.0
                } else {
                    d / denom
                }
            }
        }
    }

    fn allowed(&self, j: usize) -> bool {
        self.excluded.is_none_or(|ex| !ex[j])
    }

    /// 1-based rank of `answer`; `None` when it is not a candidate.
    fn rank(&self, query: &[f32], answer: usize) -> Option<u64> {
        if !self.allowed(answer) {
            return None;
        }
        let qn = norm(query);
        let target = self.score(query, qn, answer);
        let ahead = (0..self.space.rows())
            .filter(|&j| j != answer && self.allowed(j))
            .filter(|&j| {
                let s = self.score(query, qn, j);
                s > target || (s == target && j < answer)
            })
            .count();
        Some(ahead as u64 + 1)
    }

    fn ranking(&self, query: &[f32]) -> Vec<u32> {
        let qn = norm(query);
        let mut scored: Vec<(f64, usize)> = (0..self.space.rows())
            .filter(|&j| self.allowed(j))
            .map(|j| (self.score(query, qn, j), j))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().map(|(_, j)| j as u32).collect()
    }
}

fn norm(v: &[f32]) -> f64 {
    dot(v, v).sqrt()
}

fn row_norms(m: &EmbeddingMatrix) -> Vec<f64> {
    (0..m.rows()).map(|i| norm(m.row(i))).collect()
}

/// Every candidate id for `query`, best first.
pub fn solve(
    query: &AnalogyQuery,
    model: &dyn TemporalModel,
    options: &ScoreOptions,
) -> Result<Vec<u32>> {
    let id = model
        .vocab()
        .id(&query.w1)
        .ok_or_else(|| Error::OutOfVocabulary(query.w1.clone()))?;
    let from = model.vectors(query.t1).ok_or(Error::UnknownSlice(query.t1))?;
    let to = model.vectors(query.t2).ok_or(Error::UnknownSlice(query.t2))?;
    let norms = row_norms(to);
    let ranker = Ranker {
        space: to,
        norms: &norms,
        excluded: options
            .exclude_untrained
            .then(|| model.untrained(query.t2))
            .flatten(),
        similarity: options.similarity,
    };
    Ok(ranker.ranking(from.row(id as usize)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query: AnalogyQuery,
    /// `None` for a query that was skipped or whose answer is not a candidate.
    pub rank: Option<u64>,
    pub skipped: Option<String>,
}

/// Aggregates over a subset of scored queries; all zero when the subset is empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub count: usize,
    pub mrr: f64,
    /// Precision at each K, keyed by K.
    pub mp: BTreeMap<usize, f64>,
}

impl Metrics {
    pub fn from_ranks(ranks: &[Option<u64>], ks: &[usize], cutoff: Option<u64>) -> Metrics {
        let count = ranks.len();
        let mut mp: BTreeMap<usize, f64> = ks.iter().map(|&k| (k, 0.0)).collect();
        if count == 0 {
            return Metrics {
                count,
                mrr: 0.0,
                mp,
            };
        }
        let mut rr_sum = 0.0;
        let mut hits: BTreeMap<usize, usize> = ks.iter().map(|&k| (k, 0)).collect();
        for rank in ranks.iter().flatten() {
            if cutoff.is_none_or(|c| *rank <= c) {
                rr_sum += 1.0 / *rank as f64;
            }
            for (&k, h) in hits.iter_mut() {
                if *rank <= k as u64 {
                    *h += 1;
                }
            }
        }
        for (k, h) in hits {
            mp.insert(k, h as f64 / count as f64);
        }
        Metrics {
            count,
            mrr: rr_sum / count as f64,
            mp,
        }
    }

    pub fn mp_at(&self, k: usize) -> Option<f64> {
        self.mp.get(&k).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalogyReport {
    pub method: String,
    pub options: ScoreOptions,
    pub total: usize,
    pub skipped: usize,
    pub all: Metrics,
    #[serde(rename = "static")]
    pub static_: Metrics,
    pub dynamic: Metrics,
    pub by_category: BTreeMap<String, Metrics>,
    pub by_depth: BTreeMap<u64, Metrics>,
    pub outcomes: Vec<QueryOutcome>,
}

/// Ranks every query and aggregates the metrics. Queries are scored in
/// parallel; outcomes keep the input order.
pub fn score(
    queries: &[AnalogyQuery],
    model: &dyn TemporalModel,
    options: &ScoreOptions,
) -> Result<AnalogyReport> {
    if queries.is_empty() {
        return Err(Error::Empty("no analogy queries"));
    }
    let vocab = model.vocab();
    let mut spaces: BTreeMap<SliceLabel, Vec<f64>> = BTreeMap::new();
    for q in queries {
        if let Some(m) = model.vectors(q.t2) {
            spaces.entry(q.t2).or_insert_with(|| row_norms(m));
        }
    }

    let outcomes: Vec<QueryOutcome> = queries
        .par_iter()
        .map(|q| {
            let skip = |reason: String| QueryOutcome {
                query: q.clone(),
                rank: None,
                skipped: Some(reason),
            };
            let (Some(from), Some(to)) = (model.vectors(q.t1), model.vectors(q.t2)) else {
                let missing = if model.vectors(q.t1).is_none() { q.t1 } else { q.t2 };
                return skip(format!("slice {missing} not in model"));
            };
            let (Some(w1), Some(w2)) = (vocab.id(&q.w1), vocab.id(&q.w2)) else {
                let oov = if vocab.id(&q.w1).is_none() { &q.w1 } else { &q.w2 };
                return skip(format!("`{oov}` out of vocabulary"));
            };
            let ranker = Ranker {
                space: to,
                norms: &spaces[&q.t2],
                excluded: options
                    .exclude_untrained
                    .then(|| model.untrained(q.t2))
                    .flatten(),
                similarity: options.similarity,
            };
            QueryOutcome {
                query: q.clone(),
                rank: ranker.rank(from.row(w1 as usize), w2 as usize),
                skipped: None,
            }
        })
        .collect();

    let scored: Vec<&QueryOutcome> = outcomes
        .iter()
        .filter(|o| o.skipped.is_none() || options.strict)
        .collect();
    if scored.is_empty() {
        return Err(Error::Empty("every analogy query was skipped"));
    }
    let metrics = |pred: &dyn Fn(&AnalogyQuery) -> bool| {
        let ranks: Vec<Option<u64>> = scored
            .iter()
            .filter(|o| pred(&o.query))
            .map(|o| o.rank)
            .collect();
        Metrics::from_ranks(&ranks, &options.ks, options.cutoff)
    };

    let mut categories: Vec<&str> = scored.iter().map(|o| o.query.category.as_str()).collect();
    categories.sort_unstable();
    categories.dedup();
    let mut depths: Vec<u64> = scored.iter().map(|o| o.query.depth()).collect();
    depths.sort_unstable();
    depths.dedup();

    Ok(AnalogyReport {
        method: model.method().to_owned(),
        options: options.clone(),
        total: queries.len(),
        skipped: outcomes.iter().filter(|o| o.skipped.is_some()).count(),
        all: metrics(&|_| true),
        static_: metrics(&|q| q.is_static()),
        dynamic: metrics(&|q| !q.is_static()),
        by_category: categories
            .into_iter()
            .map(|c| (c.to_owned(), metrics(&|q| q.category == c)))
            .collect(),
        by_depth: depths
            .into_iter()
            .map(|d| (d, metrics(&|q| q.depth() == d)))
            .collect(),
        outcomes,
    })
}

/// One point of the accuracy-by-time-depth curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub depth: u64,
    pub mp1: f64,
    pub count: usize,
}

pub fn export_timedepth_curve(report: &AnalogyReport) -> Vec<DepthRow> {
    report
        .by_depth
        .iter()
        .map(|(&depth, m)| DepthRow {
            depth,
            mp1: m.mp_at(1).unwrap_or_else(|| {
                let ranks: Vec<Option<u64>> = report
                    .outcomes
                    .iter()
                    .filter(|o| (o.skipped.is_none() || report.options.strict) && o.query.depth() == depth)
                    .map(|o| o.rank)
                    .collect();
                Metrics::from_ranks(&ranks, &[1], None).mp[&1]
            }),
            count: m.count,
        })
        .collect()
}

pub fn write_timedepth_csv<W: Write>(report: &AnalogyReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta_t", "mp1", "count"])?;
    for row in export_timedepth_curve(report) {
        w.write_record([row.depth.to_string(), fmt(row.mp1), row.count.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Rows: each category, then the `all`, `static` and `dynamic` splits.
pub fn write_metrics_csv<W: Write>(report: &AnalogyReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["subset".to_owned(), "count".to_owned(), "mrr".to_owned()];
    header.extend(report.options.ks.iter().map(|k| format!("mp{k}")));
    w.write_record(&header)?;
    let splits = [
        ("all", &report.all),
        ("static", &report.static_),
        ("dynamic", &report.dynamic),
    ];
    let rows = report
        .by_category
        .iter()
        .map(|(c, m)| (format!("category:{c}"), m))
        .chain(splits.into_iter().map(|(n, m)| (n.to_owned(), m)));
    for (name, m) in rows {
        let mut record = vec![name, m.count.to_string(), fmt(m.mrr)];
        record.extend(report.options.ks.iter().map(|k| fmt(m.mp[k])));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Per-category rows only; a report without categories gives just the header.
pub fn write_category_csv<W: Write>(report: &AnalogyReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["category".to_owned(), "count".to_owned(), "mrr".to_owned()];
    header.extend(report.options.ks.iter().map(|k| format!("mp{k}")));
    w.write_record(&header)?;
    for (name, m) in &report.by_category {
        let mut record = vec![name.clone(), m.count.to_string(), fmt(m.mrr)];
        record.extend(report.options.ks.iter().map(|k| fmt(m.mp[k])));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::Vocabulary;
    use crate::model::StaticModel;
    use crate::sgns::Role;

    /// Two slices with hand-set vectors over a five-word vocabulary.
    struct Toy {
        vocab: Vocabulary,
        slices: BTreeMap<SliceLabel, EmbeddingMatrix>,
        untrained: Option<Vec<bool>>,
    }

    impl TemporalModel for Toy {
        fn vocab(&self) -> &Vocabulary {
            &self.vocab
        }
        fn labels(&self) -> Vec<SliceLabel> {
            self.slices.keys().copied().collect()
        }
        fn vectors(&self, label: SliceLabel) -> Option<&EmbeddingMatrix> {
            self.slices.get(&label)
        }
        fn scoring_pair(&self, label: SliceLabel) -> Option<(&EmbeddingMatrix, &EmbeddingMatrix)> {
            self.slices.get(&label).map(|m| (m, m))
        }
        fn untrained(&self, _label: SliceLabel) -> Option<&[bool]> {
            self.untrained.as_deref()
        }
        fn method(&self) -> &str {
            "toy"
        }
    }

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::from_entries(
            words
                .iter()
                .enumerate()
                .map(|(i, w)| (w.to_string(), (100 - i) as u64))
                .collect(),
        )
        .unwrap()
    }

    fn toy() -> Toy {
        let v = vocab(&["a", "b", "c", "d", "e"]);
        let s1 = EmbeddingMatrix::from_vec(
            5,
            2,
            Role::Context,
            vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0, 0.2, 0.5, -0.5],
        );
        let s2 = EmbeddingMatrix::from_vec(
            5,
            2,
            Role::Context,
            vec![0.0, 1.0, 1.0, 0.1, -1.0, 0.0, 2.0, 2.1, 0.3, 0.0],
        );
        Toy {
            vocab: v,
            slices: [(SliceLabel(1), s1), (SliceLabel(2), s2)].into_iter().collect(),
            untrained: None,
        }
    }

    fn q(w1: &str, t1: i64, w2: &str, t2: i64) -> AnalogyQuery {
        AnalogyQuery {
            category: "x".into(),
            w1: w1.into(),
            t1: SliceLabel(t1),
            w2: w2.into(),
            t2: SliceLabel(t2),
        }
    }

    #[test]
    fn parses_static_and_dynamic_rows() {
        let set = parse_testset(
            "# comment\npresidents\tobama\t2009\tobama\t2010\npresidents\tclinton\t1997\treagan\t1987\n",
        );
        assert!(set.malformed.is_empty());
        assert!(set.queries[0].is_static());
        assert!(!set.queries[1].is_static());
        assert_eq!(set.queries[1].depth(), 10);
    }

    #[test]
    fn malformed_lines_carry_numbers() {
        let set = parse_testset("c\ta\t1\tb\t2\nc\ta\t1\tb\nc\ta\tx\tb\t2\n");
        assert_eq!(set.queries.len(), 1);
        assert_eq!(
            set.malformed.iter().map(|m| m.0).collect::<Vec<_>>(),
            vec![2, 3]
        );
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        std::fs::write(&path, "# nothing\n").unwrap();
        assert!(load_testset(&path).is_err());
    }

    #[test]
    fn ranking_matches_brute_force_cosine_sort() {
        let model = toy();
        let (from, to) = (&model.slices[&SliceLabel(1)], &model.slices[&SliceLabel(2)]);
        for w in 0..5 {
            let query = q(model.vocab.token(w), 1, "a", 2);
            let got = solve(&query, &model, &ScoreOptions::default()).unwrap();
            // straight-line oracle: explicit cosine, stable sort on descending score
            let qv: Vec<f64> = from.row(w as usize).iter().map(|&x| x as f64).collect();
            let mut expect: Vec<(f64, u32)> = (0..5u32)
                .map(|j| {
                    let v: Vec<f64> = to.row(j as usize).iter().map(|&x| x as f64).collect();
                    let d = qv[0] * v[0] + qv[1] * v[1];
                    let n = (qv[0].powi(2) + qv[1].powi(2)).sqrt() * (v[0].powi(2) + v[1].powi(2)).sqrt();
                    (d / n, j)
                })
                .collect();
            expect.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            assert_eq!(got, expect.iter().map(|e| e.1).collect::<Vec<_>>());
        }
    }

    #[test]
    fn static_model_answers_with_the_input_word() {
        let t = toy();
        let model = StaticModel {
            vocab: t.vocab.clone(),
            context: t.slices[&SliceLabel(1)].clone(),
            target: t.slices[&SliceLabel(1)].clone(),
            labels: vec![SliceLabel(1), SliceLabel(2)],
            use_target: false,
        };
        let queries: Vec<_> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|w| q(w, 1, w, 2))
            .collect();
        let report = score(&queries, &model, &ScoreOptions::default()).unwrap();
        assert_eq!(report.all.mrr, 1.0);
        assert!(report.all.mp.values().all(|&p| p == 1.0));
        for row in export_timedepth_curve(&report) {
            assert_eq!(row.mp1, 1.0);
        }
    }

    #[test]
    fn same_slice_self_query_ranks_first() {
        let model = toy();
        for w in ["a", "b", "c", "d", "e"] {
            assert_eq!(solve(&q(w, 2, w, 2), &model, &ScoreOptions::default()).unwrap()[0], model.vocab.id(w).unwrap());
        }
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let v = vocab(&["a", "b", "c"]);
        let m = EmbeddingMatrix::from_vec(3, 1, Role::Context, vec![1.0, 2.0, 3.0]);
        let model = Toy {
            vocab: v,
            slices: [(SliceLabel(0), m)].into_iter().collect(),
            untrained: None,
        };
        assert_eq!(solve(&q("c", 0, "a", 0), &model, &ScoreOptions::default()).unwrap(), vec![0, 1, 2]);
        let report = score(&[q("a", 0, "b", 0)], &model, &ScoreOptions::default()).unwrap();
        assert_eq!(report.outcomes[0].rank, Some(2));
    }

    #[test]
    fn three_rank_metrics() {
        let m = Metrics::from_ranks(&[Some(1), Some(2), Some(4)], &[1, 3, 5, 10], None);
        assert!((m.mrr - 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(m.mp[&1], 1.0 / 3.0);
        assert_eq!(m.mp[&3], 2.0 / 3.0);
        assert_eq!(m.mp[&5], 1.0);
        let cut = Metrics::from_ranks(&[Some(1), Some(2), Some(4)], &[1], Some(3));
        assert!((cut.mrr - 0.5).abs() < 1e-15);
    }

    #[test]
    fn oov_queries_are_skipped_or_strict() {
        let model = toy();
        let queries = vec![q("a", 1, "b", 2), q("zzz", 1, "a", 2)];
        let report = score(&queries, &model, &ScoreOptions::default()).unwrap();
        assert_eq!((report.total, report.skipped, report.all.count), (2, 1, 1));
        let strict = ScoreOptions {
            strict: true,
            ..ScoreOptions::default()
        };
        let report = score(&queries, &model, &strict).unwrap();
        assert_eq!(report.all.count, 2);
        assert!(score(&[q("zzz", 1, "a", 2)], &model, &ScoreOptions::default()).is_err());
    }

    #[test]
    fn untrained_rows_can_be_excluded() {
        let mut model = toy();
        let before = solve(&q("a", 1, "a", 2), &model, &ScoreOptions::default()).unwrap();
        model.untrained = Some(vec![false, true, false, false, false]);
        let opts = ScoreOptions {
            exclude_untrained: true,
            ..ScoreOptions::default()
        };
        let after = solve(&q("a", 1, "a", 2), &model, &opts).unwrap();
        let expected: Vec<u32> = before.into_iter().filter(|&j| j != 1).collect();
        assert_eq!(after, expected);
        let report = score(&[q("a", 1, "b", 2)], &model, &opts).unwrap();
        assert_eq!(report.outcomes[0].rank, None);
    }

    #[test]
    fn split_counts_add_up_and_csv_has_header() {
        let model = toy();
        let queries = vec![q("a", 1, "a", 2), q("b", 1, "c", 2), q("c", 1, "c", 1)];
        let report = score(&queries, &model, &ScoreOptions::default()).unwrap();
        assert_eq!(report.all.count, report.static_.count + report.dynamic.count);
        let mut buf = Vec::new();
        write_timedepth_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("delta_t,mp1,count"));
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn metric_bounds(ranks in proptest::collection::vec(proptest::option::weighted(0.9, 1u64..50), 1..40)) {
            let m = Metrics::from_ranks(&ranks, &[1, 3, 5, 10], None);
            prop_assert!(m.mp[&1] <= m.mp[&3] && m.mp[&3] <= m.mp[&5] && m.mp[&5] <= m.mp[&10]);
            prop_assert!(m.mp[&1] <= m.mrr + 1e-12 && m.mrr <= 1.0);
        }

        #[test]
        fn exact_scaling_keeps_ranks_and_ties(exp in -6i32..7, w in 0usize..5) {
            // powers of two scale without rounding, so even exact ties survive
            let scale = 2f32.powi(exp);
            let model = toy();
            let mut scaled = toy();
            for x in scaled.slices.get_mut(&SliceLabel(2)).unwrap().as_mut_slice() {
                *x *= scale;
            }
            let query = q(["a", "b", "c", "d", "e"][w], 1, "a", 2);
            prop_assert_eq!(
                solve(&query, &model, &ScoreOptions::default()).unwrap(),
                solve(&query, &scaled, &ScoreOptions::default()).unwrap()
            );
        }

        #[test]
        fn positive_scaling_keeps_ranks(scale in 0.01f32..100.0, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f32> = (0..40).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            let space = EmbeddingMatrix::from_vec(10, 4, Role::Context, data.clone());
            let query = space.row(0).to_vec();
            let mut sims: Vec<f64> = (0..10).map(|j| crate::sgns::cosine(&query, space.row(j))).collect();
            sims.sort_by(f64::total_cmp);
            prop_assume!(sims.windows(2).all(|p| p[1] - p[0] > 1e-5));
            let scaled = EmbeddingMatrix::from_vec(10, 4, Role::Context, data.iter().map(|x| x * scale).collect());
            let build = |m: EmbeddingMatrix| Toy {
                vocab: vocab(&["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]),
                slices: [(SliceLabel(1), space.clone()), (SliceLabel(2), m)].into_iter().collect(),
                untrained: None,
            };
            let query = q("a", 1, "a", 2);
            prop_assert_eq!(
                solve(&query, &build(space.clone()), &ScoreOptions::default()).unwrap(),
                solve(&query, &build(scaled), &ScoreOptions::default()).unwrap()
            );
        }
    }
}
