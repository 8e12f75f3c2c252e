use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use crossalign::{Distance, Method, Ridge, StsMethod, Weighting};

#[derive(Debug, Parser)]
#[command(name = "crossalign", version, about = "Cross-lingual embedding alignment and sentence similarity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a linear map from the source space to the target space.
    Align(AlignArgs),
    /// Score sentence pairs, one score per line.
    Sts(StsArgs),
    /// Score sentence pairs and correlate with gold scores.
    Eval(EvalArgs),
    /// k-occurrence counts and their skewness.
    Hubness(HubnessArgs),
    /// Repeat a run from its manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Align(_) => "align",
            Command::Sts(_) => "sts",
            Command::Eval(_) => "eval",
            Command::Hubness(_) => "hubness",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub src_vectors: PathBuf,
    #[arg(long)]
    pub tgt_vectors: PathBuf,
    /// Tab-separated `source<TAB>target` word pairs.
    #[arg(long)]
    pub dict: PathBuf,
    /// ls, ot, cca, rt or ort.
    #[arg(long)]
    pub method: Method,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    /// Negatives per example and side.
    #[arg(long, default_value_t = 50)]
    pub negatives: usize,
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// euclidean or inverse-cosine.
    #[arg(long, default_value = "euclidean")]
    pub distance: Distance,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Read at most this many words from each vector file.
    #[arg(long)]
    pub max_vocab: Option<usize>,
    /// auto, none, or a non-negative number added to the diagonal.
    #[arg(long, default_value = "auto", value_parser = parse_ridge)]
    pub ridge: Ridge,
}

#[derive(Debug, Args)]
pub struct StsArgs {
    #[arg(long)]
    pub src_vectors: PathBuf,
    /// Target space; omit for monolingual scoring in the source space.
    #[arg(long)]
    pub tgt_vectors: Option<PathBuf>,
    /// Matrix file mapping the source space; omit to score unmapped.
    #[arg(long)]
    pub transform: Option<PathBuf>,
    /// Tab-separated `sentence<TAB>sentence` lines.
    #[arg(long)]
    pub pairs: PathBuf,
    /// lc, pa or om.
    #[arg(long = "sts", default_value = "om")]
    pub method: StsMethod,
    /// uniform or idf.
    #[arg(long, default_value = "uniform")]
    pub weighting: Weighting,
    /// One document per line.
    #[arg(long)]
    pub idf_corpus_src: Option<PathBuf>,
    /// Defaults to the source corpus in monolingual runs.
    #[arg(long)]
    pub idf_corpus_tgt: Option<PathBuf>,
    /// Subspace rank for principal angles.
    #[arg(long, default_value_t = 4)]
    pub rank_r: usize,
    /// Score file, one line per input pair.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub max_vocab: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub sts: StsArgs,
    /// One gold score per line, aligned with the pairs file.
    #[arg(long)]
    pub gold: PathBuf,
}

#[derive(Debug, Args)]
pub struct HubnessArgs {
    /// Within-space mode: the space whose neighbor lists are counted.
    #[arg(long, conflicts_with_all = ["src_vectors", "tgt_vectors"])]
    pub vectors: Option<PathBuf>,
    /// Cross-lingual mode: query space (mapped by --transform).
    #[arg(long, requires = "tgt_vectors")]
    pub src_vectors: Option<PathBuf>,
    /// Cross-lingual mode: target space.
    #[arg(long, requires = "src_vectors")]
    pub tgt_vectors: Option<PathBuf>,
    #[arg(long)]
    pub transform: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Only the first N query words.
    #[arg(long)]
    pub query_limit: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub max_vocab: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

fn parse_ridge(s: &str) -> Result<Ridge, String> {
    match s.to_ascii_lowercase().as_str() {
        "auto" => Ok(Ridge::Auto),
        "none" => Ok(Ridge::None),
        other => match other.parse::<f64>() {
            Ok(e) if e.is_finite() && e >= 0.0 => Ok(Ridge::Fixed(e)),
            _ => Err(format!("expected auto, none or a non-negative number, got {s:?}")),
        },
    }
}

pub fn ridge_label(r: Ridge) -> String {
    match r {
        Ridge::Auto => "auto".into(),
        Ridge::None => "none".into(),
        Ridge::Fixed(e) => e.to_string(),
    }
}
