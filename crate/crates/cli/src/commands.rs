use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use sha2::{Digest, Sha256};
use stm_core::analytics::{self, Manifest, Reports, REPORT_FILES};
use stm_core::corpus::io::{extract_all, parse_jsonl, read_jsonl, write_jsonl, ParsedDocument};
use stm_core::corpus::{filter_documents, Corpus, Document, SpeakingVerbs, StopwordPolicy, Stopwords};
use stm_core::eval::{self, Metrics};
use stm_core::model::{
    continue_training, load_state, save_state, train_chains, Hyperparameters, SamplerVariant, Schedule,
    SnapshotContext, DEFAULT_DOC_TYPES, DEFAULT_DOC_TYPE_PRIOR, DEFAULT_SOURCE_TYPE_PRIOR, DEFAULT_TOPICS,
    DEFAULT_TOPIC_PRIOR, DEFAULT_WORD_PRIOR,
};
use stm_core::ontology::LabelSpace;
use stm_core::par::Execution;
use stm_core::synth::{self, align_truth, clamp_fraction, generate_corpus, sample_parameters};

use crate::config::{expand_prior, LoadedConfig};
use crate::{CliError, Common, ModelFlags};

type CmdResult = Result<(), CliError>;

const DEFAULT_ALIGN_FRACTION: f64 = 0.1;

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CmdResult {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// `dir/stem.suffix` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn seed(common: &Common, loaded: &LoadedConfig) -> u64 {
    common.seed.or(loaded.config.seed).unwrap_or(0)
}

fn label_space(common: &Common, loaded: &LoadedConfig) -> Result<LabelSpace, CliError> {
    let file = common.labels_file.as_ref().or(loaded.config.labels_file.as_ref());
    let labels = match file {
        Some(path) => LabelSpace::from_file(path)?,
        None => stm_core::ontology::make_default_label_space(),
    };
    Ok(match loaded.config.model.source_types {
        Some(n) => labels.truncated(n)?,
        None => labels,
    })
}

fn hyperparameters(
    flags: &ModelFlags,
    loaded: &LoadedConfig,
    num_source_types: usize,
    doc_types_hint: Option<usize>,
) -> Result<Hyperparameters, CliError> {
    let model = &loaded.config.model;
    let doc_types = flags.doc_types.or(model.doc_types).or(doc_types_hint);
    let topics = flags.topics.or(model.topics);
    let doc_type = expand_prior(
        "doc_type_prior",
        model.doc_type_prior.as_ref(),
        doc_types.or(Some(DEFAULT_DOC_TYPES)).filter(|_| doc_types.is_some() || !is_vector(&model.doc_type_prior)),
        DEFAULT_DOC_TYPE_PRIOR,
    )?;
    let source_type = expand_prior(
        "source_type_prior",
        model.source_type_prior.as_ref(),
        Some(num_source_types),
        DEFAULT_SOURCE_TYPE_PRIOR,
    )?;
    let topic = expand_prior(
        "topic_prior",
        model.topic_prior.as_ref(),
        topics.or(Some(DEFAULT_TOPICS)).filter(|_| topics.is_some() || !is_vector(&model.topic_prior)),
        DEFAULT_TOPIC_PRIOR,
    )?;
    Ok(Hyperparameters::new(
        doc_type,
        source_type,
        topic,
        model.word_prior.unwrap_or(DEFAULT_WORD_PRIOR),
    )?)
}

fn is_vector(prior: &Option<crate::config::Prior>) -> bool {
    matches!(prior, Some(crate::config::Prior::Vector(_)))
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    common: Common,

    #[command(flatten)]
    model: ModelFlags,

    /// Output corpus (JSONL, one extracted document per line).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Ground-truth output (JSONL); defaults to `<out stem>.truth.jsonl`.
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,

    /// Also write the drawn generating distributions as JSON.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,

    /// Number of documents (overrides `generate.documents`).
    #[arg(long)]
    documents: Option<usize>,
}

pub fn generate(args: GenerateArgs) -> CmdResult {
    let loaded = LoadedConfig::load(args.common.config.as_deref())?;
    let cfg = &loaded.config.generate;
    let seed = seed(&args.common, &loaded);
    let labels = label_space(&args.common, &loaded)?;
    let fixed_pt = cfg.doc_type_distribution.as_ref().map(|d| d.get_ref().clone());
    let hyper = hyperparameters(&args.model, &loaded, labels.len(), fixed_pt.as_ref().map(Vec::len))?;
    let mut params = sample_parameters(&hyper, &cfg.shape, seed, cfg.separation)?;
    if let Some(p_t) = fixed_pt {
        if p_t.len() != hyper.num_doc_types() {
            let span = cfg.doc_type_distribution.as_ref().map(|d| d.span().start).unwrap_or(0);
            return Err(loaded.error_at(
                span,
                format!(
                    "generate.doc_type_distribution has {} entries for {} document-types",
                    p_t.len(),
                    hyper.num_doc_types()
                ),
            ));
        }
        params.p_t = p_t;
    }
    let documents = args.documents.unwrap_or(cfg.documents);
    let synthetic = generate_corpus(&params, &labels, documents, seed, Execution::default())?;
    let corpus = clamp_fraction(&synthetic.corpus, &synthetic.truth, cfg.clamp_fraction, seed)?;
    write_jsonl(&args.out, &corpus.documents)?;
    let truth_path = args.truth.unwrap_or_else(|| sibling(&args.out, "truth.jsonl"));
    synth::write_truth(&truth_path, &synthetic.truth)?;
    if let Some(path) = &args.params {
        let mut text = serde_json::to_string_pretty(&params).map_err(|e| CliError::validation(e.to_string()))?;
        text.push('\n');
        write_bytes(path, text.as_bytes())?;
    }
    let clamped = corpus.documents.iter().flat_map(|d| &d.sources).filter(|s| s.clamped).count();
    eprintln!(
        "generated {} documents, {} sources ({} clamped), {} distinct words",
        corpus.documents.len(),
        corpus.num_sources(),
        clamped,
        corpus.vocabulary.len()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[command(flatten)]
    common: Common,

    /// Parsed documents (JSONL).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,

    /// Extracted documents (JSONL).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Speaking-verb lemmas, one per line (default: built-in list).
    #[arg(long, value_name = "FILE")]
    speaking_verbs: Option<PathBuf>,
}

pub fn extract(args: ExtractArgs) -> CmdResult {
    let loaded = LoadedConfig::load(args.common.config.as_deref())?;
    let labels = label_space(&args.common, &loaded)?;
    let verbs = match args.speaking_verbs.as_ref().or(loaded.config.extract.speaking_verbs.as_ref()) {
        Some(path) => SpeakingVerbs::from_file(path)?,
        None => SpeakingVerbs::default(),
    };
    let stopwords = Stopwords::default();
    let text = read_text(&args.input)?;
    let parsed: Vec<ParsedDocument> = parse_jsonl(&text, &args.input.display().to_string())?;
    let mut documents = extract_all(&parsed, &verbs, &stopwords, Execution::default())?;
    for source in documents.iter_mut().flat_map(|d| &mut d.sources) {
        if let Some(label) = &source.gold_label {
            source.gold_label = Some(labels.parse(label)?.label());
        }
    }
    let (kept, dropped) = filter_documents(documents);
    write_jsonl(&args.out, &kept)?;
    let sources: usize = kept.iter().map(|d| d.sources.len()).sum();
    eprintln!(
        "extracted {sources} sources from {} documents; dropped {dropped} documents without sources",
        kept.len()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    common: Common,

    #[command(flatten)]
    model: ModelFlags,

    /// Extracted corpus (JSONL).
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,

    /// Output snapshot.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Log-joint trace CSV; defaults to `<out stem>.trace.csv`.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,

    /// Continue from this snapshot up to the requested total sweep count.
    #[arg(long, value_name = "FILE")]
    resume: Option<PathBuf>,

    /// Independent chains; the one with the highest final log joint is kept.
    #[arg(long)]
    chains: Option<u64>,

    /// Total sweeps (default 2000).
    #[arg(long)]
    sweeps: Option<u64>,

    /// Sweeps discarded before accumulating posterior samples (default 500).
    #[arg(long)]
    burn_in: Option<u64>,

    /// Sweeps between accumulated samples (default 10).
    #[arg(long)]
    lag: Option<u64>,

    /// Use the exact blocked conditionals for document- and source-types.
    #[arg(long)]
    exact_block: bool,
}

fn training_corpus(path: &Path, labels: LabelSpace, loaded: &LoadedConfig) -> Result<(Corpus, usize), CliError> {
    let documents: Vec<Document> = read_jsonl(path)?;
    let before = documents.len();
    let train = &loaded.config.train;
    let policy = if train.keep_stopwords.unwrap_or(false) {
        StopwordPolicy::Keep
    } else {
        StopwordPolicy::Exclude
    };
    let corpus = Corpus::build(documents, labels, train.min_count.unwrap_or(1), policy)?;
    let dropped = before - corpus.documents.len();
    Ok((corpus, dropped))
}

pub fn train(args: TrainArgs) -> CmdResult {
    let loaded = LoadedConfig::load(args.common.config.as_deref())?;
    let train_cfg = &loaded.config.train;
    let seed = seed(&args.common, &loaded);
    let labels = label_space(&args.common, &loaded)?;
    let (corpus, dropped) = training_corpus(&args.corpus, labels, &loaded)?;
    let encoded = corpus.encode()?;
    let schedule = Schedule::new(
        args.sweeps.or(train_cfg.sweeps).unwrap_or(stm_core::model::DEFAULT_SWEEPS),
        args.burn_in.or(train_cfg.burn_in).unwrap_or(stm_core::model::DEFAULT_BURN_IN),
        args.lag.or(train_cfg.lag).unwrap_or(stm_core::model::DEFAULT_LAG),
    )?;
    let context = SnapshotContext::new(&corpus, &encoded);
    let state = match &args.resume {
        Some(path) => {
            let snapshot = load_state(path)?;
            snapshot.context.check_corpus(&corpus, &encoded)?;
            let mut state = snapshot.state;
            if state.sweep > schedule.num_sweeps {
                return Err(CliError::validation(format!(
                    "snapshot already has {} sweeps, more than the requested {}",
                    state.sweep, schedule.num_sweeps
                )));
            }
            continue_training(&mut state, &encoded, schedule)?;
            state
        }
        None => {
            let hyper = hyperparameters(&args.model, &loaded, corpus.label_space.len(), None)?;
            let exact = args.exact_block || loaded.config.model.exact_block.unwrap_or(false);
            let variant = if exact { SamplerVariant::ExactBlock } else { SamplerVariant::AsPrinted };
            let chains = args.chains.or(train_cfg.chains).unwrap_or(1);
            let (state, finals) = train_chains(&encoded, &hyper, seed, chains, schedule, variant, Execution::default())?;
            if chains > 1 {
                eprintln!("chain final log joints: {finals:?}; kept chain {}", state.chain);
            }
            state
        }
    };
    state.check_counts(&encoded)?;
    save_state(&args.out, &state, &context)?;
    let trace_path = args.trace.unwrap_or_else(|| sibling(&args.out, "trace.csv"));
    let mut trace = String::from("sweep,log_joint\n");
    for (i, lj) in state.trace.iter().enumerate() {
        trace.push_str(&format!("{},{lj}\n", i + 1));
    }
    write_bytes(&trace_path, trace.as_bytes())?;
    eprintln!(
        "trained {} documents ({} dropped without sources), {} sources, {} tokens; {} sweeps, {} samples, final log joint {}",
        encoded.num_docs(),
        dropped,
        encoded.num_sources(),
        encoded.num_tokens(),
        state.sweep,
        state.posterior.samples,
        state.trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("reference").required(true).args(["truth", "gold"])))]
pub struct EvaluateArgs {
    #[command(flatten)]
    common: Common,

    /// Trained snapshot.
    #[arg(long, value_name = "FILE")]
    state: PathBuf,

    /// Synthetic ground truth (JSONL from `generate`).
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,

    /// Extracted corpus whose unclamped gold-labeled sources form the validation set.
    #[arg(long, value_name = "FILE")]
    gold: Option<PathBuf>,

    /// Metrics JSON output.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Confusion matrix CSV; defaults to `<out stem>.confusion.csv`.
    #[arg(long, value_name = "FILE")]
    confusion: Option<PathBuf>,

    /// Map source clusters to labels by PMI even when the state has clamps.
    #[arg(long)]
    align: bool,

    /// Share of scored sources used to fit the PMI alignment (default 0.1).
    #[arg(long)]
    align_fraction: Option<f64>,
}

struct Reference {
    doc_types: Option<Vec<usize>>,
    sources: Vec<Option<usize>>,
}

fn gold_reference(path: &Path, context: &SnapshotContext, labels: &LabelSpace) -> Result<Reference, CliError> {
    let documents: Vec<Document> = read_jsonl(path)?;
    let by_id: HashMap<&str, &Document> = documents.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    if let Some(doc) = documents
        .iter()
        .find(|d| !d.sources.is_empty() && !context.doc_ids.contains(&d.doc_id))
    {
        return Err(CliError::validation(format!("gold references unknown document `{}`", doc.doc_id)));
    }
    let mut sources = Vec::new();
    let mut doc_types = Some(Vec::new());
    for (id, &n) in context.doc_ids.iter().zip(&context.sources_per_doc) {
        let doc = by_id
            .get(id.as_str())
            .ok_or_else(|| CliError::validation(format!("no gold document `{id}`")))?;
        if doc.sources.len() != n as usize {
            return Err(CliError::validation(format!(
                "gold document `{id}` has {} sources, the snapshot has {n}",
                doc.sources.len()
            )));
        }
        for s in &doc.sources {
            sources.push(match &s.gold_label {
                Some(l) if !s.clamped => Some(labels.parse(l)?.index),
                _ => None,
            });
        }
        doc_types = doc_types.and_then(|mut v: Vec<usize>| {
            v.push(doc.gold_doc_type?);
            Some(v)
        });
    }
    Ok(Reference { doc_types, sources })
}

pub fn evaluate(args: EvaluateArgs) -> CmdResult {
    let loaded = LoadedConfig::load(args.common.config.as_deref())?;
    let seed = seed(&args.common, &loaded);
    let snapshot = load_state(&args.state)?;
    let (state, context) = (&snapshot.state, &snapshot.context);
    let labels = LabelSpace::from_labels(context.labels.iter().map(String::as_str))?;
    let sources_per_doc: Vec<usize> = context.sources_per_doc.iter().map(|&n| n as usize).collect();
    let reference = match (&args.truth, &args.gold) {
        (Some(path), _) => {
            let truth = synth::read_truth(path)?;
            let (doc_types, sources) = align_truth(&context.doc_ids, &sources_per_doc, &truth, &labels)?;
            Reference {
                doc_types: Some(doc_types),
                sources: sources.into_iter().map(Some).collect(),
            }
        }
        (None, Some(path)) => gold_reference(path, context, &labels)?,
        (None, None) => unreachable!("clap requires a reference"),
    };
    let clamped = &state.latent.clamped;
    let modes = state.source_type_modes();
    let scored: Vec<usize> = (0..modes.len())
        .filter(|&i| !clamped[i] && reference.sources[i].is_some())
        .collect();
    let gold: Vec<usize> = reference.sources.iter().map(|g| g.unwrap_or(0)).collect();
    let clamped_count = clamped.iter().filter(|&&c| c).count();
    let aligned = args.align || clamped_count == 0;
    let (predicted, subset) = if aligned {
        let fraction = args
            .align_fraction
            .or(loaded.config.evaluate.align_fraction)
            .unwrap_or(DEFAULT_ALIGN_FRACTION);
        let scored_gold: Vec<usize> = scored.iter().map(|&i| gold[i]).collect();
        let (fit, score) = eval::train_validation_split(&scored, &scored_gold, fraction, seed)?;
        let mut fit_gold = vec![None; modes.len()];
        for &i in &fit {
            fit_gold[i] = Some(gold[i]);
        }
        let map = eval::pmi_align(&modes, &fit_gold, state.num_source_types(), labels.len())?;
        (modes.iter().map(|&c| map[c]).collect::<Vec<_>>(), score)
    } else {
        (modes, scored)
    };
    let source_type = eval::accuracy(&predicted, &gold, &subset, &labels)?;
    let doc_type = match &reference.doc_types {
        Some(truth) if !truth.is_empty() => {
            let doc_modes = state.doc_type_modes();
            let num_true = truth.iter().max().map_or(0, |m| m + 1);
            let all: Vec<Option<usize>> = truth.iter().map(|&t| Some(t)).collect();
            let map = eval::pmi_align(&doc_modes, &all, state.num_doc_types(), num_true)?;
            let mapped: Vec<usize> = doc_modes.iter().map(|&c| map[c]).collect();
            Some(eval::match_rate(&mapped, truth)?)
        }
        _ => None,
    };
    let metrics = Metrics {
        aligned,
        clamped_sources: clamped_count,
        source_type,
        doc_type,
    };
    eval::write_metrics(&args.out, &metrics)?;
    let matrix = eval::confusion_matrix(&predicted, &gold, &subset, labels.len())?;
    let confusion = args.confusion.unwrap_or_else(|| sibling(&args.out, "confusion.csv"));
    eval::write_confusion_csv(&confusion, &matrix, &labels)?;
    eprintln!(
        "source-type accuracy {:.4} on {} sources (affiliation {:.4}, role {:.4}){}",
        metrics.source_type.overall,
        metrics.source_type.n,
        metrics.source_type.affiliation,
        metrics.source_type.role,
        metrics.doc_type.map(|d| format!("; document-type accuracy {d:.4}")).unwrap_or_default()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,

    /// Trained snapshot.
    #[arg(long, value_name = "FILE")]
    state: PathBuf,

    /// The corpus the snapshot was trained on (for timestamps).
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,

    /// Output directory for the CSV reports and manifest.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Calendar months per time bucket (default 18).
    #[arg(long)]
    bucket_months: Option<u32>,

    /// Ranked entries per source-type and document-type (default 3).
    #[arg(long)]
    top: Option<usize>,

    /// Comma-separated labels for the time series (default: all).
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
}

pub fn analyze(args: AnalyzeArgs) -> CmdResult {
    let loaded = LoadedConfig::load(args.common.config.as_deref())?;
    let cfg = &loaded.config.analyze;
    let state_bytes = std::fs::read(&args.state).map_err(|e| CliError::io(&args.state, e))?;
    let snapshot = stm_core::model::snapshot::from_bytes(&state_bytes)?;
    let (state, context) = (&snapshot.state, &snapshot.context);
    let labels = LabelSpace::from_labels(context.labels.iter().map(String::as_str))?;
    let (documents, _) = filter_documents(read_jsonl::<Document>(&args.corpus)?);
    let ids: Vec<&String> = documents.iter().map(|d| &d.doc_id).collect();
    let shapes: Vec<u32> = documents.iter().map(|d| d.sources.len() as u32).collect();
    if ids.len() != context.doc_ids.len() || ids.iter().zip(&context.doc_ids).any(|(a, b)| *a != b) || shapes != context.sources_per_doc {
        return Err(stm_core::Error::SnapshotMismatch("corpus documents differ from the trained ones".into()).into());
    }
    let bucket_months = args.bucket_months.or(cfg.bucket_months).unwrap_or(analytics::DEFAULT_BUCKET_MONTHS);
    let top = args.top.or(cfg.top).unwrap_or(analytics::DEFAULT_TOP_M);
    let selected_names = if args.labels.is_empty() { cfg.labels.clone() } else { args.labels.clone() };
    let selected = selected_names
        .iter()
        .map(|l| labels.parse(l).map(|s| s.index))
        .collect::<Result<Vec<_>, _>>()?;
    let names = &context.labels;
    let series = analytics::counts_over_time(state, &documents, names, bucket_months, &selected)?;
    if series.excluded_documents > 0 {
        eprintln!(
            "counts_over_time: excluded {} documents without timestamps",
            series.excluded_documents
        );
    }
    let manifest = Manifest {
        state_sha256: hex::encode(Sha256::digest(&state_bytes)),
        vocabulary_sha256: context.vocabulary_hash(),
        documents: context.doc_ids.len(),
        sources: state.latent.source_type.len(),
        sweeps: state.sweep,
        posterior_samples: state.posterior.samples,
        bucket_months,
        top_m: top,
        selected_labels: if selected.is_empty() { names.clone() } else { selected.iter().map(|&s| names[s].clone()).collect() },
        excluded_documents: series.excluded_documents,
        empty_buckets: series.empty_buckets.clone(),
        files: REPORT_FILES.iter().map(|f| f.to_string()).collect(),
    };
    let reports = Reports {
        source_type_counts: analytics::source_type_counts(state, names),
        counts_over_time: series,
        topics_by_source_type: analytics::top_topics_per_source_type(state, &context.vocabulary, names, top),
        doc_to_source: analytics::doc_type_source_type_table(state, names, top),
    };
    analytics::write_reports(&args.out, &reports, &manifest)?;
    let mut err = std::io::stderr();
    let _ = writeln!(err, "wrote {} reports to {}", REPORT_FILES.len(), args.out.display());
    Ok(())
}
