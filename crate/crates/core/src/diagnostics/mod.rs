//! Evaluation against gold similarity judgments and hubness analysis.

mod hubness;

use crate::embedding_store::Sentence;
use crate::sts::{SimilarityScore, StsError, StsPipeline};

pub use hubness::{hubness_counts, neighbor_lists, HubnessMode, HubnessReport};

#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("at least {needed} values are required, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("zero variance: statistic is undefined")]
    ZeroVariance,
    #[error("k = {k} must be smaller than the number of candidate neighbors ({available})")]
    KTooLarge { k: usize, available: usize },
    #[error("query and target spaces differ in dimension: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sts(#[from] StsError),
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample Pearson correlation.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64, DiagnosticsError> {
    if a.len() != b.len() {
        return Err(DiagnosticsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(DiagnosticsError::TooShort { needed: 2, got: a.len() });
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(DiagnosticsError::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Third standardized moment with population (`1/n`) moments.
pub fn skewness(values: &[f64]) -> Result<f64, DiagnosticsError> {
    if values.len() < 2 {
        return Err(DiagnosticsError::TooShort { needed: 2, got: values.len() });
    }
    let n = values.len() as f64;
    let mu = mean(values);
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in values {
        let d = v - mu;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 == 0.0 {
        return Err(DiagnosticsError::ZeroVariance);
    }
    Ok(m3 / m2.powf(1.5))
}

/// Result of scoring a labelled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub pearson: f64,
    pub scores: Vec<SimilarityScore>,
    /// Pairs where both sentences were entirely out of vocabulary.
    pub both_oov: usize,
}

impl Evaluation {
    pub fn values(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.value).collect()
    }
}

/// Scores every pair with `pipeline` and correlates the scores with `gold`.
pub fn evaluate_dataset(
    pairs: &[(Sentence, Sentence)],
    gold: &[f64],
    pipeline: &StsPipeline<'_>,
) -> Result<Evaluation, DiagnosticsError> {
    if pairs.len() != gold.len() {
        return Err(DiagnosticsError::LengthMismatch(pairs.len(), gold.len()));
    }
    pipeline.validate()?;
    let mut scores = Vec::with_capacity(pairs.len());
    let mut both_oov = 0;
    for (x, y) in pairs {
        let (bx, by) = pipeline.bags(x, y)?;
        if bx.is_empty() && by.is_empty() {
            both_oov += 1;
        }
        scores.push(crate::sts::score_bags(&pipeline.config, &bx, &by)?);
    }
    let values: Vec<f64> = scores.iter().map(|s| s.value).collect();
    let pearson = pearson_correlation(&values, gold)?;
    Ok(Evaluation {
        pearson,
        scores,
        both_oov,
    })
}
