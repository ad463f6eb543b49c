use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "chronovec", version, about = "Train and evaluate temporal word embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the shared vocabulary of a sliced corpus.
    Vocab(VocabArgs),
    /// Train a temporal model and write it to a model directory.
    Train(TrainArgs),
    /// Evaluate a model on temporal analogies or held-out text.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Nearest neighbors of a word in one slice, or across two slices.
    Nn(NnArgs),
    /// Write plot data from a model or an analogy report.
    #[command(subcommand)]
    Export(ExportCommand),
    /// Generate synthetic corpora with planted structure.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    /// Directory of `<label>.txt` slice files.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Minimum pooled count for a word to enter the vocabulary.
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    /// Ignore line breaks and cut each slice into sentences of this many tokens.
    #[arg(long)]
    pub chunk: Option<usize>,
}

#[derive(Args, Debug)]
pub struct VocabArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Output `token<TAB>count` file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Compass,
    Static,
    Linear,
    Ortho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Arch {
    Cbow,
    Sg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Binary,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Model directory to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Reuse a vocabulary file instead of building one; `--min-count` is then ignored.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Compass)]
    pub method: Method,
    /// Embedding dimension.
    #[arg(long, default_value_t = 50)]
    pub size: usize,
    /// Context words on each side of the target.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Negative samples per prediction.
    #[arg(long, default_value_t = 5)]
    pub negative: usize,
    /// Epochs over the pooled corpus (compass phase one, static model).
    #[arg(long, default_value_t = 5)]
    pub static_iter: usize,
    /// Epochs over each slice (compass phase two, per-slice baselines).
    #[arg(long, default_value_t = 5)]
    pub dyn_iter: usize,
    /// Start each slice from the atemporal context matrix instead of a fresh draw.
    #[arg(long)]
    pub init_context_from_compass: bool,
    /// Freeze the atemporal contexts and learn per-slice targets instead.
    #[arg(long)]
    pub freeze_context: bool,
    #[arg(long, value_enum, default_value_t = Arch::Cbow)]
    pub arch: Arch,
    /// Initial learning rate; it decays linearly to 1e-4 of this value.
    #[arg(long, default_value_t = 0.025)]
    pub alpha: f64,
    /// Frequent-word downsampling threshold; 0 disables it.
    #[arg(long, default_value_t = 1e-3)]
    pub sample: f64,
    /// Use the full window at every position.
    #[arg(long)]
    pub fixed_window: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Concurrent workers; 1 gives bit-reproducible output.
    #[arg(long, env = "CHRONOVEC_WORKERS", default_value_t = 1)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Alignment reference slice (linear/ortho); the last slice by default.
    #[arg(long)]
    pub reference: Option<i64>,
    /// Align each slice to its neighbor and compose, instead of fitting directly.
    #[arg(long)]
    pub consecutive: bool,
    /// Anchor words must occur this often in both slices (linear/ortho).
    #[arg(long, default_value_t = 1)]
    pub anchor_min_count: u64,
    /// Keep only this many of the most frequent anchors (linear/ortho).
    #[arg(long)]
    pub anchor_top: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ModelCheck {
    #[arg(long)]
    pub model: PathBuf,
    /// Expected vocabulary: a hex hash or a `vocab.tsv` file.
    #[arg(long)]
    pub expect_vocab: Option<String>,
    /// Evaluate even if the model vocabulary differs from `--expect-vocab`.
    #[arg(long)]
    pub force: bool,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    Analogy(AnalogyArgs),
    Heldout(HeldoutArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SimilarityArg {
    Cosine,
    Dot,
}

#[derive(Args, Debug)]
pub struct AnalogyArgs {
    #[command(flatten)]
    pub check: ModelCheck,
    /// `category<TAB>w1<TAB>t1<TAB>w2<TAB>t2` file.
    #[arg(long)]
    pub testset: PathBuf,
    /// Output directory for `analogy.json`, `analogy.csv` and `timedepth.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Ranks beyond this contribute nothing to MRR.
    #[arg(long)]
    pub cutoff: Option<u64>,
    /// Score out-of-vocabulary queries as misses instead of skipping them.
    #[arg(long)]
    pub strict: bool,
    /// Ignore candidates with no occurrence in the answer slice.
    #[arg(long)]
    pub exclude_untrained: bool,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
    pub ks: Vec<usize>,
    #[arg(long, value_enum, default_value_t = SimilarityArg::Cosine)]
    pub similarity: SimilarityArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Likelihood,
    Posterior,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Mean,
    Sum,
}

#[derive(Args, Debug)]
pub struct HeldoutArgs {
    #[command(flatten)]
    pub check: ModelCheck,
    /// Held-out corpus directory, same layout as training corpora.
    #[arg(long)]
    pub heldout: PathBuf,
    /// Output directory for `heldout.json` and `heldout.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Both)]
    pub metric: MetricArg,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub negative: usize,
    #[arg(long, value_enum, default_value_t = WeightingArg::Mean)]
    pub weighting: WeightingArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub chunk: Option<usize>,
}

#[derive(Args, Debug)]
pub struct NnArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub word: String,
    /// Slice of the query vector.
    #[arg(long)]
    pub slice: i64,
    /// Rank the query against this slice's vectors instead.
    #[arg(long)]
    pub cross: Option<i64>,
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
}

#[derive(Subcommand, Debug)]
pub enum ExportCommand {
    /// MP@1 by time depth from an analogy report.
    Timedepth(ReportExport),
    /// Per-category metrics from an analogy report.
    Categories(ReportExport),
    /// Two-dimensional PCA of words across slices.
    Pca(PcaArgs),
}

#[derive(Args, Debug)]
pub struct ReportExport {
    /// `analogy.json` written by `eval analogy`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PcaArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub words: Vec<String>,
    /// Restrict to these slices.
    #[arg(long, value_delimiter = ',')]
    pub slices: Vec<i64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum SynthCommand {
    /// Topic-mixture slices, optionally with topics regrouped per slice.
    Topics(TopicArgs),
    /// A word whose neighborhood moves between two clusters.
    Shift(ShiftArgs),
    /// Word pairs whose roles swap between two slices, with a test set.
    Analogy(AnalogySynthArgs),
}

#[derive(Args, Debug)]
pub struct TopicArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Also write held-out text with this many tokens per slice.
    #[arg(long)]
    pub heldout: Option<PathBuf>,
    #[arg(long, default_value_t = 5_000)]
    pub heldout_tokens: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
    pub labels: Vec<i64>,
    #[arg(long, default_value_t = 250_000)]
    pub tokens: usize,
    #[arg(long, default_value_t = 50)]
    pub topics: usize,
    #[arg(long, default_value_t = 20)]
    pub words_per_topic: usize,
    #[arg(long)]
    pub drifting: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ShiftArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct AnalogySynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the planted analogies as a test set.
    #[arg(long)]
    pub testset: PathBuf,
    #[arg(long, default_value_t = 25)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
