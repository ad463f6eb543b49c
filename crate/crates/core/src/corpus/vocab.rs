use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::RawCorpus;
use crate::error::{Error, Result};

/// Token/id mapping with corpus-wide counts.
///
/// Ids are dense, assigned by descending count with ties broken by first
/// occurrence in label order.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    min_count: u64,
}

impl Vocabulary {
    /// Counts tokens pooled over every slice and keeps those with at least
    /// `min_count` occurrences.
    pub fn build(corpus: &RawCorpus, min_count: u64) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        // (count, first occurrence) per token
        let mut seen: HashMap<&str, (u64, usize)> = HashMap::new();
        for token in corpus
            .slices()
            .iter()
            .flat_map(|s| s.sentences.iter().flatten())
        {
            let next = seen.len();
            seen.entry(token.as_str()).or_insert((0, next)).0 += 1;
        }

        let mut kept: Vec<(&str, u64, usize)> = seen
            .into_iter()
            .filter(|&(_, (count, _))| count >= min_count)
            .map(|(token, (count, first))| (token, count, first))
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary(min_count));
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));

        let (tokens, counts) = kept
            .into_iter()
            .map(|(token, count, _)| (token.to_owned(), count))
            .unzip();
        Ok(Self::assemble(tokens, counts, min_count))
    }

    /// Rebuilds a vocabulary from `(token, count)` pairs in id order.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("vocabulary has no entries"));
        }
        let min_count = entries.iter().map(|e| e.1).min().unwrap_or(1).max(1);
        let (tokens, counts): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        let vocab = Self::assemble(tokens, counts, min_count);
        if vocab.index.len() != vocab.tokens.len() {
            return Err(Error::Config("vocabulary contains duplicate tokens".into()));
        }
        if vocab.counts.contains(&0) {
            return Err(Error::Config("vocabulary counts must be positive".into()));
        }
        Ok(vocab)
    }

    fn assemble(tokens: Vec<String>, counts: Vec<u64>, min_count: u64) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            counts,
            index,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// The `token<TAB>count` serialization, one line per id.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (token, count) in self.tokens.iter().zip(&self.counts) {
            let _ = writeln!(out, "{token}\t{count}");
        }
        out
    }

    /// Hex SHA-256 of the TSV serialization; identifies a vocabulary across runs.
    pub fn hash(&self) -> String {
        hex_digest(self.to_tsv().as_bytes())
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let bad = |message: &str| Error::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: message.to_owned(),
            };
            let (token, count) = line.split_once('\t').ok_or_else(|| bad("missing TAB"))?;
            let count = count.trim().parse().map_err(|_| bad("count is not an integer"))?;
            entries.push((token.to_owned(), count));
        }
        Self::from_entries(entries)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
