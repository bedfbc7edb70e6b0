//! Command-line driver for training and applying emoji prediction models.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use emopred::archive;
use emopred::corpus::{
    class_counts, load_corpus, load_labels, load_texts, stratified_split, ClassDistribution, LabelMapping, RawCorpus,
};
use emopred::features::vectorize_corpus;
use emopred::metrics::{confusion, evaluate, report_render};
use emopred::resample::{plan_resample, smote};
use emopred::{AsciiPolicy, Language, Selector, TrainConfig, TrainedPipeline};

/// Exit status for each kind of failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Internal = 3,
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub kind: ExitKind,
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    fn usage(stage: &'static str, message: impl Into<String>) -> Self {
        CliError { kind: ExitKind::Usage, stage, message: message.into() }
    }

    fn io(stage: &'static str, path: &Path, err: std::io::Error) -> Self {
        CliError { kind: ExitKind::Data, stage, message: format!("{}: {err}", path.display()) }
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for emopred::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|e| {
            use emopred::Error as E;
            let kind = match e {
                E::InvalidArgument(_) => ExitKind::Usage,
                E::DimensionMismatch { .. } => ExitKind::Internal,
                _ => ExitKind::Data,
            };
            CliError { kind, stage, message: e.to_string() }
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "emopred", version, about = "Emoji prediction for tweets with a two-level voting ensemble")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the base classifiers, both ensembles and the meta ensemble.
    Train(TrainArgs),
    /// Report the effect of SMOTE oversampling on a corpus.
    Resample(ResampleArgs),
    /// Predict one label per input line.
    Predict(PredictArgs),
    /// Predict and score against gold labels.
    Evaluate(EvaluateArgs),
    /// Print the label distribution of a corpus.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Tweet file, one tweet per line.
    #[arg(long)]
    pub texts: PathBuf,
    /// Label file, one class index per line.
    #[arg(long)]
    pub labels: PathBuf,
    /// Number of classes. Defaults to the largest label plus one.
    #[arg(long)]
    pub classes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelFlags {
    #[arg(long, default_value = "en")]
    pub lang: Language,
    #[arg(long, value_parser = ["strip-all", "keep-most"])]
    pub ascii_policy: Option<String>,
    #[arg(long)]
    pub min_df: Option<usize>,
    /// Naive Bayes smoothing.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Logistic regression L2 penalty.
    #[arg(long)]
    pub l2: Option<f64>,
    /// Random forest size.
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub smote_k: Option<usize>,
    /// Weights of MNB, LR and RF inside each ensemble, e.g. 1.5,6,1.
    #[arg(long)]
    pub base_weights: Option<String>,
    /// Weights of Ensemble1 and Ensemble2 in the meta ensemble, e.g. 4,1.
    #[arg(long)]
    pub meta_weights: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Where to write the model archive.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Hold out this stratified fraction of the corpus and evaluate on it.
    #[arg(long)]
    pub split: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Tweet file, one tweet per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// One of mnb, lr, rf, ensemble1, ensemble2, meta.
    #[arg(long, default_value = "meta")]
    pub selector: String,
    /// Append the class distribution to each line.
    #[arg(long)]
    pub proba: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub texts: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, default_value = "meta")]
    pub selector: String,
    /// Class names, one "<index>\t<name>" per line.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Write the text report here as well as to standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the confusion matrix as CSV.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub labels: PathBuf,
    /// Optional tweet file, checked for matching line count.
    #[arg(long)]
    pub texts: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Resample(a) => cmd_resample(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Stats(a) => cmd_stats(&a),
    }
}

fn parse_weights<const N: usize>(flag: &str, s: &str) -> Result<[f64; N], CliError> {
    let parsed: Vec<f64> = s
        .split(',')
        .map(|w| w.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::usage("arguments", format!("--{flag} {s:?}: {e}")))?;
    let weights: [f64; N] = parsed
        .try_into()
        .map_err(|_| CliError::usage("arguments", format!("--{flag} needs {N} comma-separated weights")))?;
    if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(CliError::usage("arguments", format!("--{flag} weights must be positive")));
    }
    Ok(weights)
}

/// Language presets first, then any flag given explicitly.
pub fn train_config(flags: &ModelFlags) -> Result<TrainConfig, CliError> {
    let mut cfg = TrainConfig::for_language(flags.lang).with_seed(flags.seed);
    if let Some(p) = &flags.ascii_policy {
        cfg.ascii_policy = p.parse::<AsciiPolicy>().stage("arguments")?;
    }
    if let Some(n) = flags.min_df {
        cfg.features.min_df = n;
    }
    if let Some(a) = flags.alpha {
        cfg.classifiers.mnb.alpha = a;
    }
    if let Some(l) = flags.l2 {
        cfg.classifiers.lr.l2_strength = l;
    }
    if let Some(t) = flags.trees {
        cfg.classifiers.rf.n_trees = t;
    }
    if let Some(k) = flags.smote_k {
        cfg.smote.k_neighbors = k;
    }
    if let Some(w) = &flags.base_weights {
        cfg.base_weights = parse_weights("base-weights", w)?;
    }
    if let Some(w) = &flags.meta_weights {
        cfg.meta_weights = parse_weights("meta-weights", w)?;
    }
    Ok(cfg)
}

fn infer_classes(labels: &Path, classes: Option<usize>) -> Result<usize, CliError> {
    if let Some(k) = classes {
        return Ok(k);
    }
    let labels = load_labels(labels, usize::MAX).stage("loading labels")?;
    Ok(labels.iter().max().map_or(2, |&m| (m + 1).max(2)))
}

fn read_corpus(args: &CorpusArgs) -> Result<RawCorpus, CliError> {
    let k = infer_classes(&args.labels, args.classes)?;
    load_corpus(&args.texts, &args.labels, k).stage("loading corpus")
}

fn write_output(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io("writing output", path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io("writing output", path, e))?;
    tmp.persist(path).map_err(|e| CliError::io("writing output", path, e.error))?;
    Ok(())
}

fn format_weights(w: &[f64]) -> String {
    w.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = train_config(&args.model)?;
    let corpus = read_corpus(&args.corpus)?;
    let (train_corpus, held_out) = match args.split {
        Some(f) => {
            let (tr, te) = stratified_split(corpus.labels(), corpus.num_classes(), f, cfg.seed()).stage("splitting")?;
            (corpus.subset(&tr), Some(corpus.subset(&te)))
        }
        None => (corpus, None),
    };
    let model = emopred::pipeline::train(&train_corpus, &cfg).stage("training")?;
    archive::save(&model, &args.output).stage("saving model")?;

    let v = &model.vocabulary;
    println!("language         {}", model.language.tag());
    println!("ascii policy     {}", model.ascii_policy.as_str());
    println!("tweets           {}", model.metadata.train_rows);
    println!("classes          {}", model.num_classes());
    println!("vocabulary       {} ({} unigrams, {} bigrams)", v.len(), v.num_unigrams(), v.num_bigrams());
    println!("resampled rows   {}", model.metadata.resampled_rows);
    println!("base weights     {}", format_weights(model.base_weights()));
    println!("meta weights     {}", format_weights(&model.meta.weights()));
    println!("seed             {}", model.metadata.seed);
    println!("model            {}", args.output.display());

    if let Some(test) = held_out {
        println!();
        println!("held-out tweets  {}", test.len());
        for sel in Selector::ALL {
            let pred = model.predict_texts(test.texts(), sel).stage("evaluating")?;
            let m = confusion(test.labels(), &pred, test.num_classes()).stage("evaluating")?;
            let r = evaluate(&m).stage("evaluating")?;
            println!(
                "{:<10} F1 {:6.2}  P {:6.2}  R {:6.2}  Acc. {:6.2}",
                sel.as_str(),
                100.0 * r.macro_f1,
                100.0 * r.macro_precision,
                100.0 * r.macro_recall,
                100.0 * r.accuracy
            );
        }
    }
    Ok(())
}

fn cmd_resample(args: &ResampleArgs) -> Result<(), CliError> {
    let cfg = train_config(&args.model)?;
    let corpus = read_corpus(&args.corpus)?;
    let (vocab, data) = vectorize_corpus(&corpus, cfg.ascii_policy, &cfg.features).stage("vectorizing")?;
    let plan = plan_resample(&data).stage("resampling")?;
    let resampled = smote(&data, &cfg.smote).stage("resampling")?;
    let before = data.class_counts();
    println!("vocabulary {}", vocab.len());
    println!("class\toriginal\tsynthetic\ttotal");
    for (c, after) in resampled.class_counts().into_iter().enumerate() {
        println!("{c}\t{}\t{}\t{after}", before[c], plan.synthetic(c));
    }
    println!("all\t{}\t{}\t{}", data.len(), plan.total_synthetic(), resampled.len());
    Ok(())
}

fn load_model(path: &Path, selector: &str) -> Result<(TrainedPipeline, Selector), CliError> {
    let selector = selector.parse::<Selector>().stage("arguments")?;
    let model = archive::load(path).stage("loading model")?;
    Ok((model, selector))
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let (model, selector) = load_model(&args.model, &args.selector)?;
    let texts = load_texts(&args.input).stage("loading input")?;
    let probs = model.predict_proba_texts(&texts, selector).stage("predicting")?;
    let mut out = String::new();
    for p in &probs {
        write!(out, "{}", p.argmax()).unwrap();
        if args.proba {
            let dist: Vec<String> = p.probs().iter().map(f64::to_string).collect();
            write!(out, "\t{}", dist.join(" ")).unwrap();
        }
        out.push('\n');
    }
    match &args.output {
        Some(path) => write_output(path, out.as_bytes()),
        None => std::io::stdout()
            .write_all(out.as_bytes())
            .map_err(|e| CliError::io("writing output", Path::new("<stdout>"), e)),
    }
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let (model, selector) = load_model(&args.model, &args.selector)?;
    let k = model.num_classes();
    let corpus = load_corpus(&args.texts, &args.gold, k).stage("loading test data")?;
    let mapping = match &args.mapping {
        Some(p) => LabelMapping::load(p).stage("loading mapping")?,
        None => LabelMapping::numeric(k),
    };
    let pred = model.predict_texts(corpus.texts(), selector).stage("predicting")?;
    let m = confusion(corpus.labels(), &pred, k).stage("scoring")?;
    let report = evaluate(&m).stage("scoring")?;
    let rendered = report_render(&report, &mapping).stage("rendering report")?;
    print!("{}", rendered.text);
    if let Some(p) = &args.report {
        write_output(p, rendered.text.as_bytes())?;
    }
    if let Some(p) = &args.matrix {
        write_output(p, rendered.matrix_csv.as_bytes())?;
    }
    Ok(())
}

/// Distribution table rows, most frequent class first.
pub fn stats_lines(dist: &ClassDistribution) -> Vec<String> {
    dist.ranked()
        .into_iter()
        .map(|c| format!("{c}: {} ({:.2}%)", dist.counts[c], 100.0 * dist.fractions[c]))
        .collect()
}

fn cmd_stats(args: &StatsArgs) -> Result<(), CliError> {
    let k = infer_classes(&args.labels, args.classes)?;
    let labels = match &args.texts {
        Some(t) => load_corpus(t, &args.labels, k).stage("loading corpus")?.labels().to_vec(),
        None => load_labels(&args.labels, k).stage("loading labels")?,
    };
    let dist = ClassDistribution::from_counts(class_counts(&labels, k)).stage("counting")?;
    for line in stats_lines(&dist) {
        println!("{line}");
    }
    Ok(())
}
