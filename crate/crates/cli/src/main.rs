//! `event2vec` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error,
//! 3 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use event2vec::baseline::{self, SgnsConfig};
use event2vec::corpus::{self, TaggedCorpus};
use event2vec::eval::{self, Metric};
use event2vec::lifepath::{self, TransitionGraph};
use event2vec::trainer::{self, EpochRecord, TrainOptions, TrainerState};
use event2vec::{Checkpoint, Error, EventDataset, Geometry, ModelParams, Result, TrainConfig};

#[derive(Parser)]
#[command(name = "event2vec", version, about = "Compositional event embeddings: data generation, training and evaluation")]
struct Cli {
    /// Log level for stderr (error, warn, info, debug).
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic life-path sequences (JSON lines).
    GenLife(GenLife),
    /// Train an Event2Vec model.
    Train(Train),
    /// Train the skip-gram negative-sampling baseline.
    TrainSgns(TrainSgns),
    /// Cosine between clipped final states and ideal sums, by sequence length.
    EvalAdditivity(EvalAdditivity),
    /// Rank events by similarity to A − B + C.
    EvalAnalogy(EvalAnalogy),
    /// Silhouette of composed vectors for POS patterns.
    EvalSilhouette(EvalSilhouette),
    /// Nearest events to one event.
    Neighbors(Neighbors),
    /// Project embeddings to 2-D or 3-D with PCA and write CSV.
    ExportPca(ExportPca),
    /// Convert a tagged corpus into training sequences and pattern occurrences.
    CorpusPrepare(CorpusPrepare),
}

#[derive(Args)]
struct SeedArg {
    /// Random seed [default: 0]. Falls back to EVENT2VEC_SEED.
    #[arg(long, env = "EVENT2VEC_SEED")]
    seed: Option<u64>,
}

impl SeedArg {
    fn get(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Args)]
struct GenLife {
    /// Transition graph: `default` or a JSON file.
    #[arg(long, default_value = "default")]
    graph: String,
    /// Number of sequences.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the selected graph as JSON instead of generating.
    #[arg(long)]
    dump_graph: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryKind {
    Euclidean,
    Hyperbolic,
}

#[derive(Args)]
struct Train {
    /// Training sequences (JSON lines of event-name arrays).
    #[arg(long)]
    data: PathBuf,
    /// JSON file with TrainConfig fields; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Geometry [default: euclidean].
    #[arg(long, value_enum)]
    geometry: Option<GeometryKind>,
    /// Ball curvature for hyperbolic geometry [default: 1.0].
    #[arg(long)]
    c: Option<f64>,
    /// Hidden-state norm cap for Euclidean geometry [default: 10].
    #[arg(long)]
    max_norm: Option<f64>,
    /// Embedding dimension [default: 32].
    #[arg(long)]
    dim: Option<usize>,
    /// Epochs [default: 30].
    #[arg(long)]
    epochs: Option<usize>,
    /// Sequences per batch [default: 32].
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam learning rate [default: 0.01].
    #[arg(long)]
    lr: Option<f64>,
    /// Reconstruction loss weight [default: 1.0].
    #[arg(long)]
    lambda_recon: Option<f64>,
    /// Consistency loss weight [default: 1.0].
    #[arg(long)]
    lambda_consist: Option<f64>,
    /// Dropout rate on event embeddings [default: 0.1].
    #[arg(long)]
    dropout: Option<f64>,
    /// Adam beta1 [default: 0.9].
    #[arg(long)]
    adam_beta1: Option<f64>,
    /// Adam beta2 [default: 0.999].
    #[arg(long)]
    adam_beta2: Option<f64>,
    /// Adam epsilon [default: 1e-8].
    #[arg(long)]
    adam_eps: Option<f64>,
    /// Rewrite the checkpoint every N epochs; 0 only at the end [default: 0].
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
    /// Continue from a checkpoint written by `train`.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Checkpoint output.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch training log (JSON lines).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Worker threads for per-sequence gradients.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct TrainSgns {
    /// Training sequences (JSON lines of event-name arrays).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Context positions on each side.
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Negative samples per positive pair.
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    lr: f64,
    /// Exponent applied to unigram counts for negative sampling.
    #[arg(long, default_value_t = 0.75)]
    unigram_power: f64,
    #[command(flatten)]
    seed: SeedArg,
    /// Checkpoint output (decoder fields null).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ModelArg {
    /// Checkpoint file.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct OutArg {
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalAdditivity {
    #[command(flatten)]
    model: ModelArg,
    /// Comma-separated sequence lengths.
    #[arg(long, default_value = "1,5,10,25,50,75,100")]
    lengths: String,
    /// Random sequences per length.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct EvalAnalogy {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long)]
    c: String,
    /// Number of results.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Allow A, B and C in the results.
    #[arg(long)]
    include_queries: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    Cosine,
    Euclidean,
    Poincare,
}

#[derive(Args)]
struct CorpusArgs {
    /// Tagged corpus file, or `sample` for the bundled 500 sentences.
    #[arg(long, default_value = "sample")]
    corpus: String,
    /// Comma-separated tag patterns.
    #[arg(long, default_value = corpus::DEFAULT_PATTERNS)]
    patterns: String,
    /// Occurrences kept per pattern (seeded subsample).
    #[arg(long, default_value_t = corpus::DEFAULT_MAX_PER_PATTERN)]
    max_per_pattern: usize,
}

#[derive(Args)]
struct EvalSilhouette {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Distance between composed vectors.
    #[arg(long, value_enum, default_value = "cosine")]
    metric: MetricKind,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct Neighbors {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    event: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ExportPca {
    #[command(flatten)]
    model: ModelArg,
    /// Output dimensions (2 or 3).
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// CSV output (x,y[,z],label).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorpusPrepare {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Words seen fewer times become <unk>.
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Training sequences output (JSON lines).
    #[arg(long)]
    out: PathBuf,
    /// Pattern occurrences output (JSON).
    #[arg(long)]
    occurrences_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Domain(_) | Error::Unsupported(_) => 1,
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenLife(a) => gen_life(a),
        Command::Train(a) => train(a),
        Command::TrainSgns(a) => train_sgns(a),
        Command::EvalAdditivity(a) => eval_additivity(a),
        Command::EvalAnalogy(a) => eval_analogy(a),
        Command::EvalSilhouette(a) => eval_silhouette(a),
        Command::Neighbors(a) => neighbors(a),
        Command::ExportPca(a) => export_pca(a),
        Command::CorpusPrepare(a) => corpus_prepare(a),
    }
}

fn write_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })
}

/// Pretty JSON to stdout, and to `out` when given.
fn report<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if let Some(path) = out {
        event2vec::io::write_atomic(path, text.as_bytes())?;
    }
    write_stdout(&text)
}

fn load_model(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path)
}

fn load_corpus(arg: &str) -> Result<TaggedCorpus> {
    if arg == "sample" {
        Ok(TaggedCorpus::sample())
    } else {
        corpus::load_tagged_corpus(Path::new(arg))
    }
}

fn gen_life(a: GenLife) -> Result<()> {
    let graph = if a.graph == "default" {
        TransitionGraph::default_graph()
    } else {
        TransitionGraph::load(Path::new(&a.graph))?
    };
    let text = if a.dump_graph {
        graph.to_json_pretty() + "\n"
    } else {
        let ds = lifepath::generate_dataset(&graph, a.n, a.seed.get())?;
        log::info!("generated {} sequences over {} events", ds.len(), ds.vocab.len());
        ds.to_jsonl()
    };
    match a.out {
        Some(path) => event2vec::io::write_atomic(&path, text.as_bytes()),
        None => write_stdout(&text),
    }
}

/// Without `--config`, a resumed run takes dim and geometry from its checkpoint.
fn train_config(a: &Train, resume_from: Option<&Checkpoint>) -> Result<TrainConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = event2vec::io::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?
        }
        None => match resume_from {
            Some(ckpt) => TrainConfig {
                dim: ckpt.dim,
                geometry: ckpt.geometry,
                ..TrainConfig::default()
            },
            None => TrainConfig::default(),
        },
    };
    let hyperbolic = match a.geometry {
        Some(kind) => matches!(kind, GeometryKind::Hyperbolic),
        None => cfg.geometry.is_hyperbolic(),
    };
    cfg.geometry = match (hyperbolic, cfg.geometry) {
        (true, Geometry::Hyperbolic { c }) => Geometry::hyperbolic(a.c.unwrap_or(c))?,
        (true, _) => Geometry::hyperbolic(a.c.unwrap_or(1.0))?,
        (false, Geometry::Euclidean { max_norm }) => Geometry::euclidean(a.max_norm.unwrap_or(max_norm))?,
        (false, _) => Geometry::euclidean(a.max_norm.unwrap_or(event2vec::geometry::DEFAULT_MAX_NORM))?,
    };
    if a.c.is_some() && !cfg.geometry.is_hyperbolic() {
        return Err(Error::usage("--c only applies to --geometry hyperbolic"));
    }
    if a.max_norm.is_some() && cfg.geometry.is_hyperbolic() {
        return Err(Error::usage("--max-norm only applies to --geometry euclidean"));
    }
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => { $(if let Some(v) = a.$flag { cfg.$field = v; })* };
    }
    set!(dim => dim, epochs => epochs, batch_size => batch_size, lr => learning_rate,
         lambda_recon => lambda_recon, lambda_consist => lambda_consist, dropout => dropout_rate,
         adam_beta1 => adam_beta1, adam_beta2 => adam_beta2, adam_eps => adam_eps,
         checkpoint_every => checkpoint_every);
    if let Some(seed) = a.seed.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train(a: Train) -> Result<()> {
    let checkpoint = a.resume.as_deref().map(load_model).transpose()?;
    let cfg = train_config(&a, checkpoint.as_ref())?;
    let dataset = EventDataset::load_jsonl(&a.data)?;
    let resume = match (&a.resume, checkpoint) {
        (Some(path), Some(ckpt)) => {
            if ckpt.vocab != dataset.vocab.names() {
                return Err(Error::Data(format!(
                    "{}: checkpoint vocabulary differs from {}",
                    path.display(),
                    a.data.display()
                )));
            }
            let state = ckpt.trainer_state.clone().ok_or_else(|| {
                Error::Data(format!("{}: checkpoint has no trainer_state to resume from", path.display()))
            })?;
            Some((ckpt.params(), state))
        }
        _ => None,
    };
    log::info!(
        "training {} geometry, d={}, {} sequences, {} events",
        cfg.geometry.name(),
        cfg.dim,
        dataset.len(),
        dataset.vocab.len()
    );
    let save = |params: &ModelParams, state: &TrainerState| {
        Checkpoint::from_params(params, &dataset.vocab)
            .with_trainer_state(state.clone())
            .save(&a.out)
    };
    let every = cfg.checkpoint_every;
    let mut hook = |record: &EpochRecord, params: &ModelParams, state: &TrainerState| {
        if every > 0 && record.epoch.is_multiple_of(every) {
            save(params, state)?;
        }
        Ok(())
    };
    let outcome = trainer::train_with(
        &dataset,
        &cfg,
        TrainOptions {
            threads: a.threads,
            resume,
            on_epoch: Some(&mut hook),
        },
    )?;
    save(&outcome.params, &outcome.state)?;
    if let Some(path) = &a.log {
        event2vec::io::write_atomic(path, outcome.log.to_jsonl().as_bytes())?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        checkpoint: &'a Path,
        epochs_completed: usize,
        last: Option<&'a EpochRecord>,
    }
    report(
        &Summary {
            checkpoint: &a.out,
            epochs_completed: outcome.state.epochs_completed,
            last: outcome.log.records.last(),
        },
        None,
    )
}

fn train_sgns(a: TrainSgns) -> Result<()> {
    let dataset = EventDataset::load_jsonl(&a.data)?;
    let cfg = SgnsConfig {
        dim: a.dim,
        window: a.window,
        negatives: a.negatives,
        epochs: a.epochs,
        learning_rate: a.lr,
        seed: a.seed.get(),
        unigram_power: a.unigram_power,
    };
    let model = baseline::train_sgns(&dataset, &cfg)?;
    Checkpoint::from_embeddings(&model.input, &dataset.vocab).save(&a.out)?;
    log::info!("wrote {}", a.out.display());
    Ok(())
}

fn parse_lengths(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Usage(format!("--lengths: {s:?} is not a positive integer")))
        })
        .collect()
}

fn eval_additivity(a: EvalAdditivity) -> Result<()> {
    let ckpt = load_model(&a.model.model)?;
    let curve = eval::additivity_curve(&ckpt.params(), &parse_lengths(&a.lengths)?, a.trials, a.seed.get())?;
    report(&curve, a.out.out.as_deref())
}

fn eval_analogy(a: EvalAnalogy) -> Result<()> {
    let ckpt = load_model(&a.model.model)?;
    let result = eval::analogy(&ckpt.params(), &ckpt.vocabulary(), &a.a, &a.b, &a.c, a.k, !a.include_queries)?;
    report(&result, a.out.out.as_deref())
}

fn eval_silhouette(a: EvalSilhouette) -> Result<()> {
    let ckpt = load_model(&a.model.model)?;
    let params = ckpt.params();
    let tagged = load_corpus(&a.corpus.corpus)?;
    let patterns = corpus::parse_patterns(&a.corpus.patterns)?;
    let matches = corpus::find_pattern_occurrences(&tagged, &patterns, a.corpus.max_per_pattern, a.seed.get())?;
    let (points, labels): (Vec<_>, Vec<_>) = corpus::compose_vectors(&params, &ckpt.vocabulary(), &matches.occurrences)?
        .into_iter()
        .unzip();
    let metric = match (a.metric, params.geometry) {
        (MetricKind::Cosine, _) => Metric::Cosine,
        (MetricKind::Euclidean, _) => Metric::Euclidean,
        (MetricKind::Poincare, Geometry::Hyperbolic { c }) => Metric::Poincare { c },
        (MetricKind::Poincare, _) => return Err(Error::usage("--metric poincare needs a hyperbolic model")),
    };
    let result = eval::silhouette(&points, &labels, metric)?;
    #[derive(Serialize)]
    struct Report {
        #[serde(flatten)]
        silhouette: eval::SilhouetteReport,
        missing_patterns: Vec<String>,
    }
    report(
        &Report {
            silhouette: result,
            missing_patterns: matches.missing,
        },
        a.out.out.as_deref(),
    )
}

fn neighbors(a: Neighbors) -> Result<()> {
    let ckpt = load_model(&a.model.model)?;
    let ranked = eval::nearest_neighbors(&ckpt.params(), &ckpt.vocabulary(), &a.event, a.k)?;
    #[derive(Serialize)]
    struct Report {
        event: String,
        ranked: Vec<eval::Ranked>,
    }
    report(&Report { event: a.event, ranked }, a.out.out.as_deref())
}

fn export_pca(a: ExportPca) -> Result<()> {
    let ckpt = load_model(&a.model.model)?;
    let projection = eval::pca_project(&ckpt.embeddings.to_rows(), a.dims)?;
    event2vec::io::write_atomic(&a.out, eval::projection_csv(&projection, &ckpt.vocab).as_bytes())?;
    #[derive(Serialize)]
    struct Report<'a> {
        csv: &'a Path,
        n_points: usize,
        explained_variance_ratio: &'a [f64],
    }
    report(
        &Report {
            csv: &a.out,
            n_points: projection.points.len(),
            explained_variance_ratio: &projection.explained_variance_ratio,
        },
        None,
    )
}

fn corpus_prepare(a: CorpusPrepare) -> Result<()> {
    let tagged = load_corpus(&a.corpus.corpus)?;
    let vocab = corpus::build_vocab(&tagged, a.min_count)?;
    let dataset = corpus::to_sequences(&tagged, &vocab)?;
    event2vec::io::write_atomic(&a.out, dataset.to_jsonl().as_bytes())?;
    let patterns = corpus::parse_patterns(&a.corpus.patterns)?;
    let matches = corpus::find_pattern_occurrences(&tagged, &patterns, a.corpus.max_per_pattern, a.seed.get())?;
    if let Some(path) = &a.occurrences_out {
        let text = serde_json::to_string_pretty(&matches)? + "\n";
        event2vec::io::write_atomic(path, text.as_bytes())?;
    }
    let mut counts = std::collections::BTreeMap::new();
    for occ in &matches.occurrences {
        *counts.entry(occ.label()).or_insert(0usize) += 1;
    }
    #[derive(Serialize)]
    struct Report {
        sentences: usize,
        tokens: usize,
        vocab_size: usize,
        occurrences: std::collections::BTreeMap<String, usize>,
        missing_patterns: Vec<String>,
    }
    report(
        &Report {
            sentences: tagged.sentences.len(),
            tokens: tagged.num_tokens(),
            vocab_size: vocab.len(),
            occurrences: counts,
            missing_patterns: matches.missing,
        },
        None,
    )
}
