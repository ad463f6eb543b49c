use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use chronovec::baselines::{align_chain, train_per_slice, train_static, AlignOptions, AlignmentKind, ReferencePolicy};
use chronovec::compass::{train_all, CompassConfig, InitMode, Strategy};
use chronovec::corpus::{DiachronicCorpus, RawCorpus, SentenceMode, SliceLabel, Vocabulary};
use chronovec::eval::analogy::{
    load_testset, score, write_category_csv, write_metrics_csv, write_timedepth_csv, AnalogyReport, ScoreOptions,
    Similarity,
};
use chronovec::eval::heldout::{evaluate, write_heldout_csv, HeldoutPlan, HeldoutReport, HeldoutSettings, Metric, NegativeWeighting};
use chronovec::eval::nearest_neighbors;
use chronovec::eval::pca::{export_pca_trajectories, write_pca_csv};
use chronovec::io::{hash_path, load_model, save_model, write_file, write_json, ModelKind, ModelMeta, RunManifest, SavedModel, VectorFormat, TOOL_VERSION};
use chronovec::sgns::{Architecture, TrainConfig};
use chronovec::synthetic::{AnalogySpec, ShiftSpec, TopicSpec};

use crate::args::*;
use crate::UsageError;

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn sentence_mode(chunk: Option<usize>) -> Result<SentenceMode> {
    match chunk {
        Some(0) => Err(usage("--chunk must be at least 1")),
        Some(n) => Ok(SentenceMode::Chunks(n)),
        None => Ok(SentenceMode::Lines),
    }
}

fn read_corpus(dir: &Path, chunk: Option<usize>) -> Result<RawCorpus> {
    RawCorpus::read_dir(dir, sentence_mode(chunk)?).with_context(|| format!("reading corpus {}", dir.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn vocab(a: VocabArgs) -> Result<()> {
    let raw = read_corpus(&a.corpus.corpus, a.corpus.chunk)?;
    let vocab = Vocabulary::build(&raw, a.corpus.min_count)?;
    vocab.write_tsv(&a.out)?;
    println!("{} words, {} tokens, hash {}", vocab.len(), vocab.total_count(), vocab.hash());
    Ok(())
}

fn train_config(a: &TrainArgs) -> TrainConfig {
    TrainConfig {
        dim: a.size,
        window: a.window,
        negatives: a.negative,
        architecture: match a.arch {
            Arch::Cbow => Architecture::Cbow,
            Arch::Sg => Architecture::Skipgram,
        },
        seed: a.seed,
        subsample_threshold: a.sample,
        dynamic_window: !a.fixed_window,
        workers: a.workers,
        ..TrainConfig::default()
    }
    .with_learning_rate(a.alpha)
}

fn check_train_flags(a: &TrainArgs) -> Result<()> {
    let compass_only = [
        (a.init_context_from_compass, "--init-context-from-compass"),
        (a.freeze_context, "--freeze-context"),
    ];
    let aligned_only = [
        (a.reference.is_some(), "--reference"),
        (a.consecutive, "--consecutive"),
        (a.anchor_top.is_some(), "--anchor-top"),
    ];
    for (set, flag) in compass_only {
        if set && a.method != Method::Compass {
            return Err(usage(format!("{flag} only applies to --method compass")));
        }
    }
    for (set, flag) in aligned_only {
        if set && !matches!(a.method, Method::Linear | Method::Ortho) {
            return Err(usage(format!("{flag} only applies to --method linear or ortho")));
        }
    }
    if a.workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainRecord<'a> {
    method: &'a str,
    min_count: u64,
    chunk: Option<usize>,
    format: VectorFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    compass: Option<&'a CompassConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train: Option<&'a TrainConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alignment: Option<&'a AlignOptions>,
}

pub fn train(a: TrainArgs) -> Result<()> {
    check_train_flags(&a)?;
    // Per-slice work fans out on this pool; one worker keeps everything serial.
    rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers)
        .build_global()
        .context("starting the worker pool")?;

    let start = Instant::now();
    let raw = read_corpus(&a.corpus.corpus, a.corpus.chunk)?;
    let mut manifest = RunManifest::new("train");
    manifest.inputs.insert("corpus".into(), hash_path(&a.corpus.corpus)?);
    let vocab = match &a.vocab {
        Some(path) => {
            manifest.inputs.insert("vocab".into(), hash_path(path)?);
            Vocabulary::read_tsv(path)?
        }
        None => Vocabulary::build(&raw, a.corpus.min_count)?,
    };
    let corpus = DiachronicCorpus::encode(&raw, &vocab);
    let loaded = start.elapsed().as_secs_f64();

    let base = train_config(&a);
    let compass = CompassConfig {
        train: base.clone(),
        static_epochs: a.static_iter,
        dynamic_epochs: a.dyn_iter,
        init_mode: if a.init_context_from_compass {
            InitMode::FromCompass
        } else {
            InitMode::Random
        },
        strategy: if a.freeze_context {
            Strategy::FreezeContext
        } else {
            Strategy::FreezeTarget
        },
    };
    let format = match a.format {
        Format::Text => VectorFormat::Text,
        Format::Binary => VectorFormat::Binary,
    };
    let alignment = AlignOptions {
        kind: if a.method == Method::Linear {
            AlignmentKind::Linear
        } else {
            AlignmentKind::Orthogonal
        },
        policy: if a.consecutive {
            ReferencePolicy::Consecutive
        } else {
            ReferencePolicy::Direct
        },
        reference: a.reference.map(SliceLabel),
        min_count: a.anchor_min_count,
        top: a.anchor_top,
    };
    let per_slice = TrainConfig {
        epochs: a.dyn_iter,
        ..base.clone()
    };
    let pooled = compass.phase1();

    let train_start = Instant::now();
    let (model, record_train, record_alignment) = match a.method {
        Method::Compass => {
            manifest.seeds = vec![compass.phase1().seed, compass.phase2().seed];
            (SavedModel::Compass(train_all(&vocab, &corpus, &compass)?), None, None)
        }
        Method::Static => {
            manifest.seeds = vec![pooled.seed];
            (SavedModel::Static(train_static(&vocab, &corpus, &pooled)?), Some(&pooled), None)
        }
        Method::Linear | Method::Ortho => {
            manifest.seeds = (0..corpus.len() as u64).map(|i| per_slice.seed.wrapping_add(i)).collect();
            let spaces = train_per_slice(&vocab, &corpus, &per_slice)?;
            let aligned = align_chain(&vocab, spaces, &alignment)?;
            (SavedModel::Aligned(aligned), Some(&per_slice), Some(&alignment))
        }
    };
    let trained = train_start.elapsed().as_secs_f64();

    let method = model.as_temporal().method().to_owned();
    manifest.config = serde_json::to_value(TrainRecord {
        method: &method,
        min_count: a.corpus.min_count,
        chunk: a.corpus.chunk,
        format,
        compass: (a.method == Method::Compass).then_some(&compass),
        train: record_train,
        alignment: record_alignment,
    })?;
    manifest.workers = a.workers;
    manifest.deterministic = a.workers == 1;

    let save_start = Instant::now();
    save_model(&a.out, &model, format, Some(manifest))?;
    if let Some(config) = record_train {
        chronovec::io::set_train_config(&a.out, config)?;
    }
    let timings = BTreeMap::from([
        ("load_seconds", loaded),
        ("train_seconds", trained),
        ("save_seconds", save_start.elapsed().as_secs_f64()),
        ("total_seconds", start.elapsed().as_secs_f64()),
    ]);
    write_json(&a.out.join("timings.json"), &timings)?;
    println!(
        "{method} model: {} words, {} slices, {} tokens -> {} ({trained:.1}s training)",
        vocab.len(),
        corpus.len(),
        corpus.total_tokens(),
        a.out.display()
    );
    Ok(())
}

/// What a report records about the model it was computed from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelStamp {
    pub kind: ModelKind,
    pub method: String,
    pub vocab_hash: String,
    pub dim: usize,
    pub labels: Vec<SliceLabel>,
    pub manifest: Option<RunManifest>,
}

impl From<&ModelMeta> for ModelStamp {
    fn from(m: &ModelMeta) -> Self {
        ModelStamp {
            kind: m.kind,
            method: m.method.clone(),
            vocab_hash: m.vocab_hash.clone(),
            dim: m.dim,
            labels: m.labels.clone(),
            manifest: m.manifest.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportFile<R> {
    pub tool_version: String,
    pub model: ModelStamp,
    /// SHA-256 of the evaluation inputs, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub report: R,
}

fn open_model(check: &ModelCheck) -> Result<(SavedModel, ModelMeta)> {
    let (model, meta) = load_model(&check.model).with_context(|| format!("loading model {}", check.model.display()))?;
    if let Some(expect) = &check.expect_vocab {
        let path = Path::new(expect);
        let expected = if path.is_file() {
            Vocabulary::read_tsv(path)?.hash()
        } else {
            expect.to_lowercase()
        };
        if expected != meta.vocab_hash {
            let message = format!(
                "model vocabulary {} differs from the expected {expected}",
                meta.vocab_hash
            );
            if !check.force {
                return Err(chronovec::Error::ModelMismatch(format!("{message} (use --force to evaluate anyway)")).into());
            }
            eprintln!("warning: {message}; continuing because of --force");
        }
    }
    Ok((model, meta))
}

/// CSV with a two-line `#` preamble naming the tool and the model.
fn write_stamped_csv<F>(path: &Path, stamp: &ModelStamp, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> chronovec::Result<()>,
{
    write_file(path, |w| {
        let io = |e| chronovec::Error::Io {
            path: path.to_owned(),
            source: e,
        };
        writeln!(w, "# {TOOL_VERSION}").map_err(io)?;
        writeln!(w, "# model {} ({}), vocabulary {}", stamp.method, stamp.dim, stamp.vocab_hash).map_err(io)?;
        body(w)
    })?;
    Ok(())
}

pub fn eval(command: EvalCommand) -> Result<()> {
    match command {
        EvalCommand::Analogy(a) => eval_analogy(a),
        EvalCommand::Heldout(a) => eval_heldout(a),
    }
}

fn eval_analogy(a: AnalogyArgs) -> Result<()> {
    let (model, meta) = open_model(&a.check)?;
    let set = load_testset(&a.testset)?;
    for (line, why) in &set.malformed {
        eprintln!("warning: {}:{line}: {why}", a.testset.display());
    }
    if a.ks.contains(&0) {
        return Err(usage("--ks values must be at least 1"));
    }
    let options = ScoreOptions {
        ks: a.ks.clone(),
        cutoff: a.cutoff,
        strict: a.strict,
        exclude_untrained: a.exclude_untrained,
        similarity: match a.similarity {
            SimilarityArg::Cosine => Similarity::Cosine,
            SimilarityArg::Dot => Similarity::Dot,
        },
    };
    let report = score(&set.queries, model.as_temporal(), &options)?;
    let stamp = ModelStamp::from(&meta);
    create_dir(&a.out)?;
    let file = ReportFile {
        tool_version: TOOL_VERSION.to_owned(),
        model: stamp.clone(),
        inputs: BTreeMap::from([("testset".to_owned(), hash_path(&a.testset)?)]),
        report,
    };
    write_json(&a.out.join("analogy.json"), &file)?;
    write_stamped_csv(&a.out.join("analogy.csv"), &stamp, |w| write_metrics_csv(&file.report, w))?;
    write_stamped_csv(&a.out.join("timedepth.csv"), &stamp, |w| write_timedepth_csv(&file.report, w))?;

    let r = &file.report;
    println!("{} queries, {} skipped", r.total, r.skipped);
    for (name, m) in [("all", &r.all), ("static", &r.static_), ("dynamic", &r.dynamic)] {
        let mp: Vec<String> = m.mp.iter().map(|(k, v)| format!("MP@{k} {v:.3}")).collect();
        println!("{name:<8} n={:<6} MRR {:.3}  {}", m.count, m.mrr, mp.join("  "));
    }
    Ok(())
}

fn eval_heldout(a: HeldoutArgs) -> Result<()> {
    let (model, meta) = open_model(&a.check)?;
    let temporal = model.as_temporal();
    let raw = read_corpus(&a.heldout, a.chunk)?;
    let corpus = DiachronicCorpus::encode(&raw, temporal.vocab());
    let settings = HeldoutSettings {
        window: a.window,
        negatives: a.negative,
        seed: a.seed,
        weighting: match a.weighting {
            WeightingArg::Mean => NegativeWeighting::Mean,
            WeightingArg::Sum => NegativeWeighting::Sum,
        },
        ..HeldoutSettings::default()
    };
    let metric = match a.metric {
        MetricArg::Likelihood => Metric::Likelihood,
        MetricArg::Posterior => Metric::Posterior,
        MetricArg::Both => Metric::Both,
    };
    let plan = HeldoutPlan::build(&corpus, temporal.vocab(), settings)?;
    let report: HeldoutReport = evaluate(temporal, &plan, metric)?;
    let stamp = ModelStamp::from(&meta);
    create_dir(&a.out)?;
    let file = ReportFile {
        tool_version: TOOL_VERSION.to_owned(),
        model: stamp.clone(),
        inputs: BTreeMap::from([("heldout".to_owned(), hash_path(&a.heldout)?)]),
        report,
    };
    write_json(&a.out.join("heldout.json"), &file)?;
    write_stamped_csv(&a.out.join("heldout.csv"), &stamp, |w| write_heldout_csv(&file.report, w))?;

    let r = &file.report;
    if r.degenerate {
        println!("single-slice model: the posterior is trivially 1");
    }
    for label in &r.skipped {
        eprintln!("warning: held-out slice {label} is not in the model");
    }
    let show = |x: Option<f64>| x.map_or_else(|| "-".to_owned(), |v| format!("{v:.4}"));
    for s in &r.slices {
        println!(
            "slice {:<6} positions {:<8} L {:<10} ln P {}",
            s.label,
            s.positions,
            show(s.likelihood),
            show(s.log_posterior)
        );
    }
    println!("mean     L {}  ln P {}", show(r.mean_likelihood), show(r.mean_log_posterior));
    Ok(())
}

pub fn nn(a: NnArgs) -> Result<()> {
    let (model, _) = load_model(&a.model)?;
    let from = SliceLabel(a.slice);
    let to = SliceLabel(a.cross.unwrap_or(a.slice));
    let word = a.word.to_lowercase();
    for (rank, (token, sim)) in nearest_neighbors(model.as_temporal(), &word, from, to, a.k)?
        .into_iter()
        .enumerate()
    {
        println!("{}\t{token}\t{sim:.6}", rank + 1);
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<AnalogyReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ReportFile<AnalogyReport> =
        serde_json::from_str(&text).map_err(chronovec::Error::from).with_context(|| format!("parsing {}", path.display()))?;
    Ok(file.report)
}

pub fn export(command: ExportCommand) -> Result<()> {
    match command {
        ExportCommand::Timedepth(a) => {
            let report = read_report(&a.report)?;
            write_file(&a.out, |w| write_timedepth_csv(&report, w))?;
        }
        ExportCommand::Categories(a) => {
            let report = read_report(&a.report)?;
            write_file(&a.out, |w| write_category_csv(&report, w))?;
        }
        ExportCommand::Pca(a) => {
            let (model, _) = load_model(&a.model)?;
            let words: Vec<String> = a.words.iter().map(|w| w.to_lowercase()).collect();
            let slices: Vec<SliceLabel> = a.slices.iter().copied().map(SliceLabel).collect();
            let points = export_pca_trajectories(
                model.as_temporal(),
                &words,
                (!slices.is_empty()).then_some(slices.as_slice()),
            )?;
            write_file(&a.out, |w| write_pca_csv(&points, w))?;
        }
    }
    Ok(())
}

pub fn synth(command: SynthCommand) -> Result<()> {
    match command {
        SynthCommand::Topics(a) => {
            let spec = TopicSpec {
                labels: a.labels.clone(),
                tokens_per_slice: a.tokens,
                topics: a.topics,
                words_per_topic: a.words_per_topic,
                drifting: a.drifting,
                seed: a.seed,
                ..TopicSpec::default()
            };
            spec.corpus()?.write_dir(&a.out)?;
            if let Some(dir) = &a.heldout {
                spec.heldout(a.heldout_tokens)?.write_dir(dir)?;
            }
        }
        SynthCommand::Shift(a) => {
            let mut spec = ShiftSpec::default();
            spec.background.seed = a.seed;
            spec.corpus()?.write_dir(&a.out)?;
            let w = spec.words();
            println!("shifting word: {}", w.shifting);
            println!("cluster a: {}", w.cluster_a.join(" "));
            println!("cluster b: {}", w.cluster_b.join(" "));
        }
        SynthCommand::Analogy(a) => {
            let spec = AnalogySpec {
                pairs: a.pairs,
                seed: a.seed,
                ..AnalogySpec::default()
            };
            spec.corpus()?.write_dir(&a.out)?;
            let mut text = String::from("# category\tw1\tt1\tw2\tt2\n");
            for q in spec.analogies() {
                text.push_str(&format!("planted\t{}\t{}\t{}\t{}\n", q.source, q.from, q.answer, q.to));
            }
            fs::write(&a.testset, text).with_context(|| format!("writing {}", a.testset.display()))?;
        }
    }
    Ok(())
}
