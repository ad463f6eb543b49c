//! Diachronic corpus ingestion.
//!
//! A corpus is a directory holding one UTF-8 file per time slice, named
//! `<label>.txt` where the label is an integer (`1990.txt`, `1991.txt`, ...).
//! Each line is one sentence; tokens are whitespace separated and lowercased.
//! A single [`Vocabulary`] is built over all slices and shared by every model.

mod sampling;
pub(crate) mod vocab;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use sampling::{
    context_at, iterate_samples, sample_negatives, subsample, NegativeTable, SampleIter,
    Subsampler, TrainingSample,
};
pub use vocab::Vocabulary;

/// Integer key identifying one time slice; slices are ordered by it.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SliceLabel(pub i64);

impl SliceLabel {
    /// Time depth between two slices.
    pub fn distance(self, other: SliceLabel) -> u64 {
        self.0.abs_diff(other.0)
    }
}

impl fmt::Display for SliceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::str::FromStr for SliceLabel {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.trim().parse().map(SliceLabel)
    }
}

/// How lines of a slice file become sentences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceMode {
    /// One sentence per line.
    #[default]
    Lines,
    /// Ignore line breaks and cut the token stream into fixed-size chunks.
    Chunks(usize),
}

/// Lowercased whitespace tokenization.
pub fn tokenize(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_lowercase).collect()
}

/// One slice of tokenized text, before vocabulary filtering.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSlice {
    pub label: SliceLabel,
    pub sentences: Vec<Vec<String>>,
}

/// Tokenized slices in label order.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCorpus {
    slices: Vec<RawSlice>,
}

impl RawCorpus {
    pub fn new(mut slices: Vec<RawSlice>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::Empty("corpus has no slices"));
        }
        slices.sort_by_key(|s| s.label);
        for pair in slices.windows(2) {
            if pair[0].label == pair[1].label {
                return Err(Error::DuplicateSlice(pair[0].label));
            }
        }
        Ok(RawCorpus { slices })
    }

    /// Builds a corpus from `(label, lines)` pairs, tokenizing each line.
    pub fn from_lines<I, L, S>(slices: I, mode: SentenceMode) -> Result<Self>
    where
        I: IntoIterator<Item = (SliceLabel, L)>,
        L: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let slices = slices
            .into_iter()
            .map(|(label, lines)| RawSlice {
                label,
                sentences: split_sentences(lines.into_iter().map(|l| tokenize(l.as_ref())), mode),
            })
            .collect();
        RawCorpus::new(slices)
    }

    /// Reads every `<label>.txt` file in `dir`. Other files are ignored.
    pub fn read_dir(dir: impl AsRef<Path>, mode: SentenceMode) -> Result<Self> {
        let dir = dir.as_ref();
        let mut slices = Vec::new();
        for (label, path) in slice_files(dir)? {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            slices.push(RawSlice {
                label,
                sentences: split_sentences(text.lines().map(tokenize), mode),
            });
        }
        if slices.is_empty() {
            return Err(Error::EmptyCorpus(dir.to_path_buf()));
        }
        RawCorpus::new(slices)
    }

    pub fn slices(&self) -> &[RawSlice] {
        &self.slices
    }

    pub fn labels(&self) -> Vec<SliceLabel> {
        self.slices.iter().map(|s| s.label).collect()
    }

    /// Writes the corpus back out in the directory layout it is read from.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for slice in &self.slices {
            let path = dir.join(format!("{}.txt", slice.label));
            let mut text = String::new();
            for sentence in &slice.sentences {
                text.push_str(&sentence.join(" "));
                text.push('\n');
            }
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn split_sentences<I>(lines: I, mode: SentenceMode) -> Vec<Vec<String>>
where
    I: Iterator<Item = Vec<String>>,
{
    match mode {
        SentenceMode::Lines => lines.filter(|s| !s.is_empty()).collect(),
        SentenceMode::Chunks(size) => {
            let size = size.max(1);
            let tokens: Vec<String> = lines.flatten().collect();
            tokens.chunks(size).map(<[String]>::to_vec).collect()
        }
    }
}

/// Lists `(label, path)` for the slice files of a corpus directory, sorted by label.
pub fn slice_files(dir: &Path) -> Result<Vec<(SliceLabel, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let label = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<SliceLabel>().ok())
            .ok_or_else(|| Error::BadSliceName(path.clone()))?;
        files.push((label, path));
    }
    files.sort();
    for pair in files.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::DuplicateSlice(pair[0].0));
        }
    }
    Ok(files)
}

/// Builds the shared vocabulary over every slice file of `corpus_dir`.
pub fn build_vocabulary(corpus_dir: impl AsRef<Path>, min_count: u64) -> Result<Vocabulary> {
    let raw = RawCorpus::read_dir(corpus_dir, SentenceMode::Lines)?;
    Vocabulary::build(&raw, min_count)
}

/// Loads and encodes every slice of `corpus_dir` against `vocab`.
pub fn load_slices(corpus_dir: impl AsRef<Path>, vocab: &Vocabulary) -> Result<DiachronicCorpus> {
    let raw = RawCorpus::read_dir(corpus_dir, SentenceMode::Lines)?;
    Ok(DiachronicCorpus::encode(&raw, vocab))
}

/// One encoded time slice.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice {
    pub label: SliceLabel,
    pub sentences: Vec<Vec<u32>>,
}

impl Slice {
    pub fn token_count(&self) -> u64 {
        self.sentences.iter().map(|s| s.len() as u64).sum()
    }
}

/// Which slices a training or sampling pass reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SliceSelector {
    All,
    Label(SliceLabel),
}

/// Ordered, vocabulary-encoded slices.
#[derive(Clone, Debug, PartialEq)]
pub struct DiachronicCorpus {
    vocab_size: usize,
    slices: Vec<Slice>,
}

impl DiachronicCorpus {
    /// Validates and orders already-encoded slices.
    pub fn new(vocab_size: usize, mut slices: Vec<Slice>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::Empty("corpus has no slices"));
        }
        slices.sort_by_key(|s| s.label);
        for pair in slices.windows(2) {
            if pair[0].label == pair[1].label {
                return Err(Error::DuplicateSlice(pair[0].label));
            }
        }
        for &id in slices.iter().flat_map(|s| s.sentences.iter().flatten()) {
            if id as usize >= vocab_size {
                return Err(Error::TokenOutOfRange { id, len: vocab_size });
            }
        }
        Ok(DiachronicCorpus { vocab_size, slices })
    }

    /// Maps tokens to ids, dropping out-of-vocabulary tokens and sentences
    /// that end up empty.
    pub fn encode(raw: &RawCorpus, vocab: &Vocabulary) -> Self {
        let slices = raw
            .slices()
            .iter()
            .map(|slice| Slice {
                label: slice.label,
                sentences: slice
                    .sentences
                    .iter()
                    .map(|s| s.iter().filter_map(|t| vocab.id(t)).collect::<Vec<_>>())
                    .filter(|s| !s.is_empty())
                    .collect(),
            })
            .collect();
        DiachronicCorpus {
            vocab_size: vocab.len(),
            slices,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn labels(&self) -> Vec<SliceLabel> {
        self.slices.iter().map(|s| s.label).collect()
    }

    pub fn slice(&self, label: SliceLabel) -> Option<&Slice> {
        self.slices.iter().find(|s| s.label == label)
    }

    pub fn select(&self, selector: SliceSelector) -> Result<Vec<&Slice>> {
        match selector {
            SliceSelector::All => Ok(self.slices.iter().collect()),
            SliceSelector::Label(label) => self
                .slice(label)
                .map(|s| vec![s])
                .ok_or(Error::UnknownSlice(label)),
        }
    }

    pub fn total_tokens(&self) -> u64 {
        self.slices.iter().map(Slice::token_count).sum()
    }

    /// Per-word occurrence counts within one slice.
    pub fn slice_counts(&self, label: SliceLabel) -> Result<Vec<u64>> {
        let slice = self.slice(label).ok_or(Error::UnknownSlice(label))?;
        let mut counts = vec![0u64; self.vocab_size];
        for &id in slice.sentences.iter().flatten() {
            counts[id as usize] += 1;
        }
        Ok(counts)
    }
}
