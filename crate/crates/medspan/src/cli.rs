//! Command-line pipeline: `train`, `predict`, `evaluate`, and `synth`
//! subcommands over directories of `.txt` notes and `.con` annotations.
//!
//! Every subcommand accepts the same flag vocabulary plus an optional
//! flat `key = value` config file; flags override file values. Exit
//! codes are scriptable: 0 success, 1 usage error, 2 data error, 3
//! numerical failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::corpus::{
    generate_synthetic_corpus, parse_concept_file, spans_to_iob, write_concept_file,
    ConceptSpan, CorpusError, Document, SyntheticGrammar, TagSequence,
};
use crate::crf::{train_crf, CrfError, CrfModel, CrfTrainConfig};
use crate::eval::{format_report, format_report_kv, EvalAccumulator};
use crate::features::{extract_features, FallbackPosTagger, Lexicon, PosTagger, SidecarPosTagger};
use crate::model_io::{load_model, save_model, ModelFile, ModelPayload};
use crate::neural::{
    load_word_embeddings, train_neural, LstmCrfModel, NeuralError, NeuralTrainConfig,
};

/// Failures of a subcommand, bucketed by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation: missing flags, malformed config keys. Exit 1.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed, or inconsistent inputs. Exit 2.
    #[error("{0}")]
    Data(String),
    /// Training produced non-finite numbers. Exit 3.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(err: CorpusError) -> CliError {
        CliError::Data(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> CliError {
        CliError::Data(err.to_string())
    }
}

impl From<crate::model_io::ModelIoError> for CliError {
    fn from(err: crate::model_io::ModelIoError) -> CliError {
        CliError::Data(err.to_string())
    }
}

impl From<crate::features::LexiconError> for CliError {
    fn from(err: crate::features::LexiconError) -> CliError {
        CliError::Data(err.to_string())
    }
}

impl From<CrfError> for CliError {
    fn from(err: CrfError) -> CliError {
        match err {
            CrfError::NonFiniteLoss { .. } => CliError::Numerical(err.to_string()),
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<NeuralError> for CliError {
    fn from(err: NeuralError) -> CliError {
        match err {
            NeuralError::Diverged { .. }
            | NeuralError::Chain(CrfError::NonFiniteLoss { .. }) => {
                CliError::Numerical(err.to_string())
            }
            _ => CliError::Data(err.to_string()),
        }
    }
}

/// The two model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelType {
    Crf,
    Lstm,
}

/// Fully resolved invocation: defaults, then config-file values, then
/// command-line flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model_type: Option<ModelType>,
    pub txt: Option<PathBuf>,
    pub con: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub pos: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_docs: usize,
    pub crf: CrfTrainConfig,
    pub neural: NeuralTrainConfig,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            model_type: None,
            txt: None,
            con: None,
            model: None,
            out: None,
            lexicon: None,
            embeddings: None,
            pos: None,
            seed: None,
            n_docs: 10,
            crf: CrfTrainConfig::default(),
            neural: NeuralTrainConfig::default(),
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` setting from a config file. Unknown keys
    /// and unparseable values are usage errors.
    fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
            value.parse().map_err(|_| {
                CliError::Usage(format!("config key `{key}`: cannot parse value `{value}`"))
            })
        }
        match key {
            "model_type" => {
                self.model_type = Some(match value {
                    "crf" => ModelType::Crf,
                    "lstm" => ModelType::Lstm,
                    other => {
                        return Err(CliError::Usage(format!(
                            "config key `model_type`: expected `crf` or `lstm`, got `{other}`"
                        )))
                    }
                })
            }
            "txt" => self.txt = Some(PathBuf::from(value)),
            "con" => self.con = Some(PathBuf::from(value)),
            "model" => self.model = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "lexicon" => self.lexicon = Some(PathBuf::from(value)),
            "embeddings" => self.embeddings = Some(PathBuf::from(value)),
            "pos" => self.pos = Some(PathBuf::from(value)),
            "seed" => self.seed = Some(num(key, value)?),
            "n_docs" => self.n_docs = num(key, value)?,
            "crf.epochs" => self.crf.epochs = num(key, value)?,
            "crf.learning_rate" => self.crf.learning_rate = num(key, value)?,
            "crf.lr_decay" => self.crf.lr_decay = num(key, value)?,
            "crf.l2_lambda" => self.crf.l2_lambda = num(key, value)?,
            "crf.batch_size" => self.crf.batch_size = num(key, value)?,
            "crf.grad_tolerance" => self.crf.grad_tolerance = num(key, value)?,
            "neural.char_dim" => self.neural.dims.char_dim = num(key, value)?,
            "neural.char_hidden" => self.neural.dims.char_hidden = num(key, value)?,
            "neural.word_dim" => self.neural.dims.word_dim = num(key, value)?,
            "neural.word_hidden" => self.neural.dims.word_hidden = num(key, value)?,
            "neural.epochs" => self.neural.epochs = num(key, value)?,
            "neural.learning_rate" => self.neural.learning_rate = num(key, value)?,
            "neural.lr_decay" => self.neural.lr_decay = num(key, value)?,
            "neural.clip_norm" => self.neural.clip_norm = num(key, value)?,
            "neural.dropout" => self.neural.dropout = num(key, value)?,
            "neural.freeze_embeddings" => self.neural.freeze_embeddings = num(key, value)?,
            "neural.dev_fraction" => self.neural.dev_fraction = num(key, value)?,
            other => {
                return Err(CliError::Usage(format!("unknown config key `{other}`")))
            }
        }
        Ok(())
    }
}

/// Parses the flat config format: one `key = value` per line, `#`
/// comments, blank lines ignored.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`", i + 1))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Flag set shared by all subcommands.
#[derive(Debug, Args, Default, Clone)]
pub struct CommonArgs {
    /// Model family to train.
    #[arg(long = "model-type", value_enum)]
    pub model_type: Option<ModelType>,
    /// Directory of .txt note files.
    #[arg(long)]
    pub txt: Option<PathBuf>,
    /// Directory of .con annotation files.
    #[arg(long)]
    pub con: Option<PathBuf>,
    /// Model file to write (train) or read (predict).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory (predict, synth) or prediction directory (evaluate).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Phrase lexicon file (tab-separated).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Pre-trained word embedding file.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Directory of .pos sidecar files with precomputed tags.
    #[arg(long)]
    pub pos: Option<PathBuf>,
    /// Flat key=value config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for all random choices.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of documents to generate (synth).
    #[arg(long = "n-docs")]
    pub n_docs: Option<usize>,
}

impl CommonArgs {
    /// Resolves defaults, config file, and flags into a [`RunConfig`].
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Data(format!("cannot read config file {}: {e}", path.display()))
            })?;
            for (key, value) in parse_config_text(&text)? {
                config.apply(&key, &value)?;
            }
        }
        if let Some(mt) = self.model_type {
            config.model_type = Some(mt);
        }
        macro_rules! override_path {
            ($field:ident) => {
                if let Some(p) = &self.$field {
                    config.$field = Some(p.clone());
                }
            };
        }
        override_path!(txt);
        override_path!(con);
        override_path!(model);
        override_path!(out);
        override_path!(lexicon);
        override_path!(embeddings);
        override_path!(pos);
        if let Some(seed) = self.seed {
            config.seed = Some(seed);
        }
        if let Some(n) = self.n_docs {
            config.n_docs = n;
        }
        if let Some(seed) = config.seed {
            config.crf.seed = seed;
            config.neural.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "medspan",
    version,
    about = "Clinical concept extraction: tag problem, test, and treatment spans"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on aligned .txt/.con directories.
    Train(CommonArgs),
    /// Tag every .txt file with a trained model, writing .con files.
    Predict(CommonArgs),
    /// Score predicted .con files against gold annotations.
    Evaluate(CommonArgs),
    /// Generate a seeded synthetic corpus with a train/test manifest.
    Synth(CommonArgs),
}

/// Parses arguments and runs the selected subcommand, translating every
/// failure into its exit code.
pub fn run_from_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

/// Dispatches one parsed subcommand.
pub fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Train(args) => cmd_train(&args.resolve()?),
        Command::Predict(args) => cmd_predict(&args.resolve()?),
        Command::Evaluate(args) => cmd_evaluate(&args.resolve()?),
        Command::Synth(args) => cmd_synth(&args.resolve()?),
    }
}

fn require<'a, T>(field: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    field
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

/// Maps file stem → path for every `*.{ext}` file in `dir`, sorted by
/// stem.
fn list_files(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut files = BTreeMap::new();
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("cannot read directory {}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                files.insert(stem.to_string(), path);
            }
        }
    }
    Ok(files)
}

/// Loads a document and its gold tags, one tag sequence per sentence.
fn load_labeled_document(
    stem: &str,
    txt_path: &Path,
    con_path: &Path,
) -> Result<(Document, Vec<TagSequence>), CliError> {
    let doc = read_document(stem, txt_path)?;
    let con_text = fs::read_to_string(con_path)?;
    let spans = parse_concept_file(&con_text)
        .map_err(|e| CliError::Data(format!("{stem}.con: {e}")))?;
    for span in &spans {
        if doc.sentence_at_line(span.line_index).is_none() {
            return Err(CliError::Data(format!(
                "{stem}.con: span {span} addresses blank or missing line {}",
                span.line_index
            )));
        }
    }
    let mut tags = Vec::with_capacity(doc.sentences.len());
    for sentence in &doc.sentences {
        let line_spans: Vec<ConceptSpan> = spans
            .iter()
            .filter(|s| s.line_index == sentence.line_index)
            .cloned()
            .collect();
        let seq = spans_to_iob(sentence, &line_spans)
            .map_err(|e| CliError::Data(format!("{stem}: {e}")))?;
        tags.push(seq);
    }
    Ok((doc, tags))
}

fn read_document(stem: &str, txt_path: &Path) -> Result<Document, CliError> {
    let bytes = fs::read(txt_path)?;
    Document::from_bytes(stem, &bytes).map_err(|e| CliError::Data(format!("{stem}.txt: {e}")))
}

/// Pairs every .txt file with its .con file, rejecting unmatched
/// basenames on either side.
fn paired_corpus_files(
    txt_dir: &Path,
    con_dir: &Path,
) -> Result<Vec<(String, PathBuf, PathBuf)>, CliError> {
    let txt = list_files(txt_dir, "txt")?;
    let con = list_files(con_dir, "con")?;
    let missing_con: Vec<&str> = txt
        .keys()
        .filter(|stem| !con.contains_key(*stem))
        .map(String::as_str)
        .collect();
    let missing_txt: Vec<&str> = con
        .keys()
        .filter(|stem| !txt.contains_key(*stem))
        .map(String::as_str)
        .collect();
    if !missing_con.is_empty() || !missing_txt.is_empty() {
        let mut parts = Vec::new();
        if !missing_con.is_empty() {
            parts.push(format!(".txt without .con: {}", missing_con.join(", ")));
        }
        if !missing_txt.is_empty() {
            parts.push(format!(".con without .txt: {}", missing_txt.join(", ")));
        }
        return Err(CliError::Data(format!(
            "unmatched basenames — {}",
            parts.join("; ")
        )));
    }
    if txt.is_empty() {
        return Err(CliError::Data(format!(
            "no .txt files found in {}",
            txt_dir.display()
        )));
    }
    Ok(txt
        .into_iter()
        .map(|(stem, txt_path)| {
            let con_path = con[&stem].clone();
            (stem, txt_path, con_path)
        })
        .collect())
}

/// Builds the part-of-speech tagger: precomputed sidecar tags when a
/// directory is supplied, deterministic rules otherwise.
fn build_pos_tagger(
    pos_dir: Option<&PathBuf>,
    docs: &[(Document, Vec<TagSequence>)],
) -> Result<Box<dyn PosTagger>, CliError> {
    match pos_dir {
        None => Ok(Box::new(FallbackPosTagger)),
        Some(dir) => {
            let sidecars = list_files(dir, "pos")?;
            let mut tagger = SidecarPosTagger::new();
            for (doc, _) in docs {
                if let Some(path) = sidecars.get(&doc.doc_id) {
                    let text = fs::read_to_string(path)?;
                    tagger
                        .add_document(&doc.sentences, &text)
                        .map_err(|msg| CliError::Data(format!("{}.pos: {msg}", doc.doc_id)))?;
                }
            }
            Ok(Box::new(tagger))
        }
    }
}

fn load_lexicon(path: Option<&PathBuf>) -> Result<Lexicon, CliError> {
    match path {
        Some(p) => Ok(Lexicon::load(p)?),
        None => Ok(Lexicon::new()),
    }
}

/// Trains the selected model family and writes the versioned model file.
pub fn cmd_train(config: &RunConfig) -> Result<(), CliError> {
    let txt_dir = require(&config.txt, "txt")?;
    let con_dir = config.con.as_ref().unwrap_or(txt_dir);
    let model_path = require(&config.model, "model")?;
    let model_type = config
        .model_type
        .ok_or_else(|| CliError::Usage("missing required flag --model-type".to_string()))?;

    let pairs = paired_corpus_files(txt_dir, con_dir)?;
    let mut docs = Vec::with_capacity(pairs.len());
    for (stem, txt_path, con_path) in &pairs {
        docs.push(load_labeled_document(stem, txt_path, con_path)?);
    }

    match model_type {
        ModelType::Crf => {
            let lexicon = load_lexicon(config.lexicon.as_ref())?;
            let tagger = build_pos_tagger(config.pos.as_ref(), &docs)?;
            let mut corpus = Vec::new();
            for (doc, tag_rows) in &docs {
                for (sentence, tags) in doc.sentences.iter().zip(tag_rows) {
                    let features = extract_features(sentence, &lexicon, tagger.as_ref());
                    corpus.push((features, tags.clone()));
                }
            }
            let (model, log) = train_crf(&corpus, &config.crf)?;
            for epoch in &log.epochs {
                println!(
                    "epoch {:>3}  loss {:.6}  grad {:.6}  lr {:.6}",
                    epoch.epoch, epoch.loss, epoch.grad_norm, epoch.learning_rate
                );
            }
            save_model(
                model_path,
                &ModelFile::new_crf(config.crf.clone(), lexicon, model),
            )?;
        }
        ModelType::Lstm => {
            let embeddings = match config.embeddings.as_ref() {
                Some(path) => Some(load_word_embeddings(path)?),
                None => {
                    eprintln!(
                        "warning: no --embeddings file given; \
                         word vectors start from random initialization"
                    );
                    None
                }
            };
            let mut corpus = Vec::new();
            for (doc, tag_rows) in &docs {
                for (sentence, tags) in doc.sentences.iter().zip(tag_rows) {
                    let tokens: Vec<String> =
                        sentence.tokens.iter().map(|t| t.text.clone()).collect();
                    corpus.push((tokens, tags.clone()));
                }
            }
            let (model, log) = train_neural(&corpus, embeddings.as_ref(), &config.neural)?;
            if let Some(coverage) = &log.embedding_coverage {
                println!(
                    "embedding coverage: {}/{} vocabulary words",
                    coverage.matched, coverage.vocabulary
                );
            }
            for epoch in &log.epochs {
                match epoch.dev_loss {
                    Some(dev) => println!(
                        "epoch {:>3}  train-loss {:.6}  dev-loss {:.6}  lr {:.6}",
                        epoch.epoch, epoch.train_loss, dev, epoch.learning_rate
                    ),
                    None => println!(
                        "epoch {:>3}  train-loss {:.6}  lr {:.6}",
                        epoch.epoch, epoch.train_loss, epoch.learning_rate
                    ),
                }
            }
            if let Some(best) = log.best_epoch {
                println!("kept parameters from epoch {best}");
            }
            save_model(
                model_path,
                &ModelFile::new_lstm(config.neural.clone(), model),
            )?;
        }
    }
    println!("model written to {}", model_path.display());
    Ok(())
}

/// One sentence tagger built from a loaded model file.
enum LoadedTagger {
    Crf { model: CrfModel, lexicon: Lexicon },
    Lstm(Box<LstmCrfModel>),
}

impl LoadedTagger {
    fn from_payload(payload: ModelPayload) -> LoadedTagger {
        match payload {
            ModelPayload::Crf { lexicon, model, .. } => LoadedTagger::Crf { model, lexicon },
            ModelPayload::Lstm { model, .. } => LoadedTagger::Lstm(Box::new(model)),
        }
    }

    fn tag_document(&self, doc: &Document) -> Result<Vec<ConceptSpan>, CliError> {
        let mut spans = Vec::new();
        for sentence in &doc.sentences {
            let tags = match self {
                LoadedTagger::Crf { model, lexicon } => {
                    let features = extract_features(sentence, lexicon, &FallbackPosTagger);
                    model.decode(&features)
                }
                LoadedTagger::Lstm(model) => model.decode(sentence),
            };
            spans.extend(
                crate::corpus::iob_to_spans(&tags, sentence)
                    .map_err(|e| CliError::Data(format!("{}: {e}", doc.doc_id)))?,
            );
        }
        Ok(spans)
    }
}

/// Tags every .txt file in `--txt` with the `--model` file, writing one
/// .con file per document under `--out`.
pub fn cmd_predict(config: &RunConfig) -> Result<(), CliError> {
    let model_path = require(&config.model, "model")?;
    let txt_dir = require(&config.txt, "txt")?;
    let out_dir = require(&config.out, "out")?;

    let model_file = load_model(model_path)?;
    let tagger = LoadedTagger::from_payload(model_file.payload);

    let txt_files = list_files(txt_dir, "txt")?;
    fs::create_dir_all(out_dir)?;
    for (stem, txt_path) in &txt_files {
        let doc = read_document(stem, txt_path)?;
        let spans = tagger.tag_document(&doc)?;
        fs::write(
            out_dir.join(format!("{stem}.con")),
            write_concept_file(&spans),
        )?;
    }
    println!(
        "wrote {} concept files to {}",
        txt_files.len(),
        out_dir.display()
    );
    Ok(())
}

/// Scores predictions (`--out` directory) against gold annotations
/// (`--con` directory) over the documents in `--txt`, printing the
/// report table and its key=value form.
pub fn cmd_evaluate(config: &RunConfig) -> Result<(), CliError> {
    let txt_dir = require(&config.txt, "txt")?;
    let gold_dir = require(&config.con, "con")?;
    let pred_dir = require(&config.out, "out")?;

    let txt_files = list_files(txt_dir, "txt")?;
    if txt_files.is_empty() {
        return Err(CliError::Data(format!(
            "no .txt files found in {}",
            txt_dir.display()
        )));
    }
    let gold_files = list_files(gold_dir, "con")?;
    let pred_files = list_files(pred_dir, "con")?;

    let mut accumulator = EvalAccumulator::new();
    for (stem, txt_path) in &txt_files {
        let gold_path = gold_files.get(stem).ok_or_else(|| {
            CliError::Data(format!("missing gold annotation file {stem}.con"))
        })?;
        let pred_path = pred_files.get(stem).ok_or_else(|| {
            CliError::Data(format!("missing prediction file {stem}.con"))
        })?;
        let doc = read_document(stem, txt_path)?;
        let gold = parse_spans_checked(stem, gold_path, &doc)?;
        let pred = parse_spans_checked(stem, pred_path, &doc)?;
        accumulator
            .add_document(&gold, &pred)
            .map_err(|e| CliError::Data(format!("{stem}: {e}")))?;
    }
    let report = accumulator.finish();
    print!("{}", format_report(&report));
    println!();
    print!("{}", format_report_kv(&report));
    Ok(())
}

/// Parses a .con file and verifies every span addresses real tokens of
/// the document.
fn parse_spans_checked(
    stem: &str,
    con_path: &Path,
    doc: &Document,
) -> Result<Vec<ConceptSpan>, CliError> {
    let text = fs::read_to_string(con_path)?;
    let spans =
        parse_concept_file(&text).map_err(|e| CliError::Data(format!("{stem}.con: {e}")))?;
    for span in &spans {
        let sentence = doc.sentence_at_line(span.line_index).ok_or_else(|| {
            CliError::Data(format!(
                "{stem}.con: span {span} addresses blank or missing line {}",
                span.line_index
            ))
        })?;
        if span.end_token >= sentence.len() {
            return Err(CliError::Data(format!(
                "{stem}.con: span {span} exceeds line {} ({} tokens)",
                span.line_index,
                sentence.len()
            )));
        }
    }
    Ok(spans)
}

/// Generates a seeded corpus: one .txt/.con pair per document plus a
/// `manifest.tsv` assigning the first 80% of documents to `train` and
/// the rest to `test`.
pub fn cmd_synth(config: &RunConfig) -> Result<(), CliError> {
    let out_dir = require(&config.out, "out")?;
    let seed = config.seed.unwrap_or(0);
    let grammar = SyntheticGrammar::default();
    let (docs, gold) = generate_synthetic_corpus(seed, config.n_docs, &grammar)?;

    fs::create_dir_all(out_dir)?;
    let n_train = (docs.len() * 4).div_ceil(5);
    let mut manifest = String::new();
    for (i, (doc, spans)) in docs.iter().zip(&gold).enumerate() {
        fs::write(
            out_dir.join(format!("{}.txt", doc.doc_id)),
            doc.raw_lines.join("\n") + "\n",
        )?;
        fs::write(
            out_dir.join(format!("{}.con", doc.doc_id)),
            write_concept_file(spans),
        )?;
        let split = if i < n_train { "train" } else { "test" };
        manifest.push_str(&format!("{}\t{split}\n", doc.doc_id));
    }
    fs::write(out_dir.join("manifest.tsv"), manifest)?;
    println!(
        "wrote {} documents ({} train, {} test) to {}",
        docs.len(),
        n_train,
        docs.len() - n_train,
        out_dir.display()
    );
    Ok(())
}
