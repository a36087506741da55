use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "spiceu",
    version,
    about = "Uniqueness-aware caption scoring and MMI re-ranking"
)]
pub struct Cli {
    /// Worker threads for per-image processing; output order is unchanged.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count, per concept, the images whose annotations contain it.
    BuildIndex(BuildIndexArgs),
    /// Turn captions into scene-graph records.
    Extract(ExtractArgs),
    /// Score predictions with SPICE, uniqueness and SPICE-U.
    Score(ScoreArgs),
    /// Pick one caption per image by the mutual-information objective.
    Rerank(RerankArgs),
    /// Fraction of images where a flagged distractor beats a reference caption.
    Distractor(DistractorArgs),
    /// Build "There is a ..." captions from object detections.
    TemplateCaption(TemplateArgs),
    /// Per-caption hallucinated objects and the CHAIRs rate.
    Chair(ChairArgs),
    /// Agreement of a metric with pairwise human judgements.
    HumanCorr(HumanCorrArgs),
    /// Geometric mean of metric values.
    Aggregate(AggregateArgs),
    /// Search the LM weight and interpolation grid for the best geometric mean.
    GridSearch(GridSearchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ExtractorOpts {
    /// Directory with stopwords.txt, lemmas.tsv, concepts.txt and patterns.txt.
    #[arg(long, value_name = "DIR")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LexiconOpts {
    /// Synonym lexicon, lemma<TAB>synset[,synset...] per line.
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pool {
    /// Predicted and reference concepts pooled by exact key.
    Exact,
    /// Synonym-matching concepts pooled once.
    Synonym,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Lm {
    Unigram,
    External,
    Interpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ComparatorArg {
    /// Total sentence log-likelihood.
    Total,
    /// Log-likelihood per token, end of sentence included.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Spice,
    SpiceU,
}

#[derive(Debug, Args)]
pub struct BuildIndexArgs {
    /// Scene-graph records, one image per line.
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "captions",
        conflicts_with = "captions"
    )]
    pub graphs: Option<PathBuf>,
    /// Caption records; captions of the same image are merged.
    #[arg(long, value_name = "FILE")]
    pub captions: Option<PathBuf>,
    #[command(flatten)]
    pub extractor: ExtractorOpts,
    #[arg(long, short, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Caption records.
    #[arg(long, value_name = "FILE")]
    pub captions: PathBuf,
    /// Merge captions sharing an image id into one record (first-seen order).
    #[arg(long)]
    pub merge: bool,
    #[command(flatten)]
    pub extractor: ExtractorOpts,
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Predictions: caption or scene-graph records.
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    /// References: caption or scene-graph records.
    #[arg(long, value_name = "FILE")]
    pub refs: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    #[arg(long, value_enum, default_value_t = Pool::Exact)]
    pub pool: Pool,
    /// Decimal places in the report.
    #[arg(long, default_value_t = 2)]
    pub decimals: usize,
    #[command(flatten)]
    pub extractor: ExtractorOpts,
    #[command(flatten)]
    pub lexicon: LexiconOpts,
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LmOpts {
    #[arg(long, value_enum, default_value_t = Lm::Unigram)]
    pub lm: Lm,
    /// Weight of the language-model term.
    #[arg(long, default_value_t = 0.4)]
    pub lambda: f64,
    /// Unigram weight in the interpolated model.
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    /// Additive smoothing of the unigram model.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Caption records the unigram model is trained on.
    #[arg(long, value_name = "FILE")]
    pub lm_corpus: Option<PathBuf>,
    /// External per-token log-probabilities.
    #[arg(long, value_name = "FILE")]
    pub token_logps: Option<PathBuf>,
    /// Divide log P(s) by tokens + 1.
    #[arg(long)]
    pub length_normalize: bool,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    /// Candidate records in beam order.
    #[arg(long, value_name = "FILE")]
    pub candidates: PathBuf,
    #[command(flatten)]
    pub lm: LmOpts,
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistractorArgs {
    /// Likelihoods of each image's reference captions (candidate layout).
    #[arg(long, value_name = "FILE")]
    pub gt: PathBuf,
    /// Likelihoods of the distractor sentences per image, in sentence order.
    #[arg(long, value_name = "FILE")]
    pub distractors: PathBuf,
    /// Precomputed flags: {image_id, flagged: [distractor ids]}.
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "objects",
        conflicts_with = "objects"
    )]
    pub flags: Option<PathBuf>,
    /// Ground-truth objects; a distractor is flagged when it mentions one the image lacks.
    #[arg(long, value_name = "FILE")]
    pub objects: Option<PathBuf>,
    /// Distractor sentences, one per line. Defaults to the five shipped ones.
    #[arg(long, value_name = "FILE")]
    pub sentences: Option<PathBuf>,
    /// Object vocabulary, one per line. Defaults to the concept dictionary.
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ComparatorArg::Total)]
    pub comparator: ComparatorArg,
    #[command(flatten)]
    pub extractor: ExtractorOpts,
    #[command(flatten)]
    pub lexicon: LexiconOpts,
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TemplateArgs {
    /// Detection records.
    #[arg(long, value_name = "FILE")]
    pub detections: PathBuf,
    /// class<TAB>count lines.
    #[arg(long, value_name = "FILE")]
    pub class_freq: PathBuf,
    /// Keep only the N most frequent classes. Defaults to all.
    #[arg(long, value_name = "N")]
    pub top_n: Option<usize>,
    /// Minimum detection score; a comma list emits one caption per value.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub threshold: Vec<f64>,
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChairArgs {
    /// Caption records, one per image.
    #[arg(long, value_name = "FILE")]
    pub captions: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub objects: PathBuf,
    /// Object vocabulary, one per line. Defaults to the concept dictionary.
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
    #[command(flatten)]
    pub extractor: ExtractorOpts,
    #[command(flatten)]
    pub lexicon: LexiconOpts,
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HumanCorrArgs {
    #[arg(long, value_name = "FILE")]
    pub judgements: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::SpiceU)]
    pub metric: MetricArg,
    /// Required for spice-u.
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Pool::Exact)]
    pub pool: Pool,
    #[arg(long, default_value_t = 2)]
    pub decimals: usize,
    #[command(flatten)]
    pub extractor: ExtractorOpts,
    #[command(flatten)]
    pub lexicon: LexiconOpts,
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// metric<TAB>value lines.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Metric to invert before averaging (lower is better), e.g. CHAIRs.
    #[arg(long, value_name = "METRIC")]
    pub invert: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub decimals: usize,
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridSearchArgs {
    #[arg(long, value_name = "FILE")]
    pub candidates: PathBuf,
    /// References: caption or scene-graph records.
    #[arg(long, value_name = "FILE")]
    pub refs: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Ground-truth objects; adds inverted CHAIRs to the geometric mean.
    #[arg(long, value_name = "FILE")]
    pub objects: Option<PathBuf>,
    /// Object vocabulary for CHAIRs. Defaults to the concept dictionary.
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
    /// Grid resolution: points i/steps for i in 0..=steps.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[command(flatten)]
    pub lm: LmOpts,
    #[command(flatten)]
    pub extractor: ExtractorOpts,
    #[command(flatten)]
    pub lexicon: LexiconOpts,
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
