//! Vector files and model directories.
//!
//! Vector files follow the word2vec layouts: a `<count> <dim>` header line,
//! then one row per word, either as text (`token v1 ... vd`) or as the token,
//! a space and `dim` little-endian f32 values. Rows appear in vocabulary id
//! order.
//!
//! A model directory holds `vocab.tsv`, `meta.json` and the matrices:
//! `compass.vec` (atemporal targets), `context.vec` (atemporal contexts),
//! `slices/<label>.vec` (temporal vectors) and, for aligned baselines,
//! `targets/<label>.vec`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::baselines::{AlignOptions, AlignedSlice, AlignedTemporalModel, LinearMap};
use crate::compass::{Atemporal, CompassConfig, CompassModel, Provenance, SliceEmbedding, Strategy};
use crate::corpus::{SliceLabel, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{StaticModel, TemporalModel};
use crate::sgns::{EmbeddingMatrix, Role, TrainConfig};

pub const TOOL_VERSION: &str = concat!("chronovec ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorFormat {
    #[default]
    Text,
    Binary,
}

pub fn write_vectors(
    path: &Path,
    vocab: &Vocabulary,
    m: &EmbeddingMatrix,
    format: VectorFormat,
) -> Result<()> {
    if m.rows() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            found: m.rows(),
        });
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {}", m.rows(), m.dim()).map_err(io)?;
    for (i, token) in vocab.tokens().iter().enumerate() {
        w.write_all(token.as_bytes()).map_err(io)?;
        match format {
            VectorFormat::Text => {
                for x in m.row(i) {
                    // `{}` on f32 prints the shortest text that reads back exactly
                    write!(w, " {x}").map_err(io)?;
                }
            }
            VectorFormat::Binary => {
                w.write_all(b" ").map_err(io)?;
                for x in m.row(i) {
                    w.write_all(&x.to_le_bytes()).map_err(io)?;
                }
            }
        }
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a vector file into `(tokens, matrix)`.
pub fn read_vectors(path: &Path, format: VectorFormat, role: Role) -> Result<(Vec<String>, EmbeddingMatrix)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |line: usize, message: String| Error::Format {
        path: path.to_owned(),
        line,
        message,
    };
    let mut header = String::new();
    r.read_line(&mut header).map_err(|e| Error::io(path, e))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad(1, "header must be `<count> <dim>`".into()))?;
    let [rows, dim] = dims[..] else {
        return Err(bad(1, "header must be `<count> <dim>`".into()));
    };
    let mut tokens = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    match format {
        VectorFormat::Text => {
            for (i, line) in r.lines().enumerate() {
                let line_no = i + 2;
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let mut parts = line.split_whitespace();
                let token = parts.next().expect("nonblank line");
                let before = data.len();
                for p in parts {
                    data.push(p.parse::<f32>().map_err(|_| bad(line_no, format!("bad number `{p}`")))?);
                }
                if data.len() - before != dim {
                    return Err(bad(line_no, format!("expected {dim} values, found {}", data.len() - before)));
                }
                tokens.push(token.to_owned());
            }
        }
        VectorFormat::Binary => {
            let mut buf = vec![0u8; dim * 4];
            for i in 0..rows {
                let mut token = Vec::new();
                r.read_until(b' ', &mut token).map_err(|e| Error::io(path, e))?;
                if token.pop() != Some(b' ') {
                    return Err(bad(i + 2, "truncated binary vector file".into()));
                }
                let start = token.iter().position(|b| *b != b'\n').unwrap_or(token.len());
                let token = String::from_utf8(token[start..].to_vec())
                    .map_err(|_| bad(i + 2, "token is not UTF-8".into()))?;
                r.read_exact(&mut buf)
                    .map_err(|_| bad(i + 2, "truncated binary vector file".into()))?;
                data.extend(buf.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])));
                tokens.push(token);
            }
        }
    }
    if tokens.len() != rows {
        return Err(bad(1, format!("header declares {rows} rows, found {}", tokens.len())));
    }
    Ok((tokens, EmbeddingMatrix::from_vec(rows, dim, role, data)))
}

/// Reads a vector file whose rows must match `vocab` token by token.
pub fn read_vectors_for(path: &Path, vocab: &Vocabulary, format: VectorFormat, role: Role) -> Result<EmbeddingMatrix> {
    let (tokens, m) = read_vectors(path, format, role)?;
    if tokens.len() != vocab.len() || tokens.iter().zip(vocab.tokens()).any(|(a, b)| a != b) {
        return Err(Error::ModelMismatch(format!(
            "{} does not follow the model vocabulary",
            path.display()
        )));
    }
    Ok(m)
}

/// How an artifact was produced.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// SHA-256 of each input, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub workers: usize,
    /// False when more than one worker trained concurrently.
    pub deterministic: bool,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        RunManifest {
            tool_version: TOOL_VERSION.to_owned(),
            command: command.into(),
            workers: 1,
            deterministic: true,
            ..RunManifest::default()
        }
    }
}

/// SHA-256 over a file, or over every file of a directory in name order.
pub fn hash_path(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    let mut files = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
            .collect::<Result<_>>()?;
        entries.retain(|p| p.is_file());
        entries.sort();
        files.extend(entries);
    } else {
        files.push(path.to_owned());
    }
    for f in files {
        let bytes = fs::read(&f).map_err(|e| Error::io(&f, e))?;
        if let Some(name) = f.file_name() {
            hasher.update(name.to_string_lossy().as_bytes());
            hasher.update([0]);
        }
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(crate::corpus::vocab::hex_digest(&hasher.finalize()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Compass,
    Static,
    Aligned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedSliceMeta {
    pub anchors: usize,
    /// Row-major map.
    pub map: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub tool_version: String,
    pub kind: ModelKind,
    pub method: String,
    pub format: VectorFormat,
    pub vocab_size: usize,
    pub vocab_hash: String,
    pub dim: usize,
    pub labels: Vec<SliceLabel>,
    /// Ids of words with no occurrence in each slice.
    pub untrained: BTreeMap<SliceLabel, Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compass: Option<CompassConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<AlignOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<SliceLabel>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub maps: BTreeMap<SliceLabel, AlignedSliceMeta>,
    #[serde(default)]
    pub use_target: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

/// Any model that can live in a model directory.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum SavedModel {
    Compass(CompassModel),
    Static(StaticModel),
    Aligned(AlignedTemporalModel),
}

impl SavedModel {
    pub fn as_temporal(&self) -> &dyn TemporalModel {
        match self {
            SavedModel::Compass(m) => m,
            SavedModel::Static(m) => m,
            SavedModel::Aligned(m) => m,
        }
    }
}

fn untrained_ids(flags: &[bool]) -> Vec<u32> {
    flags
        .iter()
        .enumerate()
        .filter(|(_, &u)| u)
        .map(|(i, _)| i as u32)
        .collect()
}

fn flags_from_ids(ids: &[u32], len: usize) -> Result<Vec<bool>> {
    let mut flags = vec![false; len];
    for &id in ids {
        *flags
            .get_mut(id as usize)
            .ok_or(Error::TokenOutOfRange { id, len })? = true;
    }
    Ok(flags)
}

fn slice_path(dir: &Path, sub: &str, label: SliceLabel) -> PathBuf {
    dir.join(sub).join(format!("{label}.vec"))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes `model` into `dir`, creating it as needed.
pub fn save_model(
    dir: &Path,
    model: &SavedModel,
    format: VectorFormat,
    manifest: Option<RunManifest>,
) -> Result<ModelMeta> {
    create_dir(dir)?;
    let temporal = model.as_temporal();
    let vocab = temporal.vocab();
    let labels = temporal.labels();
    let untrained: BTreeMap<SliceLabel, Vec<u32>> = labels
        .iter()
        .filter_map(|&l| temporal.untrained(l).map(|u| (l, untrained_ids(u))))
        .collect();
    let mut meta = ModelMeta {
        tool_version: TOOL_VERSION.to_owned(),
        kind: ModelKind::Static,
        method: temporal.method().to_owned(),
        format,
        vocab_size: vocab.len(),
        vocab_hash: vocab.hash(),
        dim: 0,
        labels: labels.clone(),
        untrained,
        compass: None,
        provenance: None,
        train: None,
        alignment: None,
        reference: None,
        maps: BTreeMap::new(),
        use_target: false,
        manifest,
    };
    vocab.write_tsv(dir.join("vocab.tsv"))?;
    match model {
        SavedModel::Compass(m) => {
            meta.kind = ModelKind::Compass;
            meta.dim = m.atemporal.target.dim();
            meta.compass = Some(m.config.clone());
            meta.provenance = Some(m.provenance.clone());
            write_vectors(&dir.join("compass.vec"), vocab, &m.atemporal.target, format)?;
            write_vectors(&dir.join("context.vec"), vocab, &m.atemporal.context, format)?;
            create_dir(&dir.join("slices"))?;
            for (&label, s) in &m.slices {
                write_vectors(&slice_path(dir, "slices", label), vocab, &s.matrix, format)?;
            }
        }
        SavedModel::Static(m) => {
            meta.kind = ModelKind::Static;
            meta.dim = m.target.dim();
            meta.use_target = m.use_target;
            write_vectors(&dir.join("compass.vec"), vocab, &m.target, format)?;
            write_vectors(&dir.join("context.vec"), vocab, &m.context, format)?;
        }
        SavedModel::Aligned(m) => {
            meta.kind = ModelKind::Aligned;
            meta.alignment = Some(m.options.clone());
            meta.reference = Some(m.reference);
            create_dir(&dir.join("slices"))?;
            create_dir(&dir.join("targets"))?;
            for (&label, s) in &m.slices {
                meta.dim = s.vectors.dim();
                write_vectors(&slice_path(dir, "slices", label), vocab, &s.vectors, format)?;
                write_vectors(&slice_path(dir, "targets", label), vocab, &s.target, format)?;
                let map = s.map.matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
                meta.maps.insert(label, AlignedSliceMeta { anchors: s.anchors, map });
            }
        }
    }
    write_meta(dir, &meta)?;
    Ok(meta)
}

/// Attaches the training configuration for baselines, which do not carry it.
pub fn set_train_config(dir: &Path, config: &TrainConfig) -> Result<()> {
    let mut meta = read_meta(dir)?;
    meta.train = Some(config.clone());
    write_meta(dir, &meta)
}

pub fn write_meta(dir: &Path, meta: &ModelMeta) -> Result<()> {
    let path = dir.join("meta.json");
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_meta(dir: &Path) -> Result<ModelMeta> {
    let path = dir.join("meta.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_model(dir: &Path) -> Result<(SavedModel, ModelMeta)> {
    let meta = read_meta(dir)?;
    let vocab = Vocabulary::read_tsv(dir.join("vocab.tsv"))?;
    if vocab.hash() != meta.vocab_hash {
        return Err(Error::ModelMismatch(format!(
            "vocab.tsv in {} does not match the hash recorded in meta.json",
            dir.display()
        )));
    }
    let fmt = meta.format;
    let flags = |label: SliceLabel| -> Result<Vec<bool>> {
        flags_from_ids(meta.untrained.get(&label).map_or(&[][..], Vec::as_slice), vocab.len())
    };
    let model = match meta.kind {
        ModelKind::Compass => {
            let config = meta
                .compass
                .clone()
                .ok_or_else(|| Error::ModelMismatch("compass model without compass config".into()))?;
            let provenance = meta.provenance.clone().unwrap_or_default();
            let target = read_vectors_for(&dir.join("compass.vec"), &vocab, fmt, Role::Target)?;
            let context = read_vectors_for(&dir.join("context.vec"), &vocab, fmt, Role::Context)?;
            let slice_role = match config.strategy {
                Strategy::FreezeTarget => Role::Context,
                Strategy::FreezeContext => Role::Target,
            };
            let mut slices = BTreeMap::new();
            for &label in &meta.labels {
                let matrix = read_vectors_for(&slice_path(dir, "slices", label), &vocab, fmt, slice_role)?;
                slices.insert(
                    label,
                    SliceEmbedding {
                        matrix,
                        untrained: flags(label)?,
                        summary: provenance.phase2.get(&label).cloned().unwrap_or_default(),
                    },
                );
            }
            SavedModel::Compass(CompassModel {
                atemporal: Atemporal {
                    context,
                    target,
                    summary: provenance.phase1.clone(),
                },
                vocab,
                slices,
                config,
                provenance,
            })
        }
        ModelKind::Static => SavedModel::Static(StaticModel {
            target: read_vectors_for(&dir.join("compass.vec"), &vocab, fmt, Role::Target)?,
            context: read_vectors_for(&dir.join("context.vec"), &vocab, fmt, Role::Context)?,
            labels: meta.labels.clone(),
            use_target: meta.use_target,
            vocab,
        }),
        ModelKind::Aligned => {
            let mut slices = BTreeMap::new();
            for &label in &meta.labels {
                let m = meta
                    .maps
                    .get(&label)
                    .ok_or_else(|| Error::ModelMismatch(format!("no alignment map for slice {label}")))?;
                let d = m.map.len();
                if m.map.iter().any(|r| r.len() != d) {
                    return Err(Error::ModelMismatch(format!("alignment map of slice {label} is not square")));
                }
                let matrix = DMatrix::from_fn(d, d, |r, c| m.map[r][c]);
                slices.insert(
                    label,
                    AlignedSlice {
                        vectors: read_vectors_for(&slice_path(dir, "slices", label), &vocab, fmt, Role::Context)?,
                        target: read_vectors_for(&slice_path(dir, "targets", label), &vocab, fmt, Role::Target)?,
                        map: LinearMap { matrix },
                        untrained: flags(label)?,
                        anchors: m.anchors,
                    },
                );
            }
            SavedModel::Aligned(AlignedTemporalModel {
                vocab,
                options: meta.alignment.clone().unwrap_or_default(),
                reference: meta
                    .reference
                    .or_else(|| meta.labels.last().copied())
                    .ok_or(Error::Empty("aligned model has no slices"))?,
                slices,
            })
        }
    };
    Ok((model, meta))
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}
