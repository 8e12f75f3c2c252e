//! Unsupervised sentence similarity over (possibly aligned) semantic spaces.
//!
//! Three scorers, each taking per-word weights into account:
//!
//! * linear combination: cosine of the weighted mean vectors;
//! * principal angles: norm of the cosines of the principal angles between
//!   the rank-`r` column spaces of the weighted sentence matrices;
//! * optimal matching: maximum-weight word alignment over cosine edges,
//!   weighted per side and averaged.
//!
//! A bag with no in-vocabulary word (or zero total weight) yields a score of
//! 0 flagged as undefined.

mod hungarian;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::embedding_store::{sentence_lookup, IdfWeights, SemanticSpace, Sentence, WeightedBag};
use crate::linalg;
use crate::transforms::{AlignmentMatrix, TransformError};
use crate::vector::cosine;

pub use hungarian::hungarian_matching;

#[derive(Debug, thiserror::Error)]
pub enum StsError {
    #[error("vector dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("principal-angle rank must be at least 1")]
    InvalidRank,
    #[error("IDF weighting requested but no IDF weights for the {0} side")]
    MissingIdf(&'static str),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StsMethod {
    #[default]
    LinearCombination,
    PrincipalAngles,
    OptimalMatching,
}

impl StsMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            StsMethod::LinearCombination => "lc",
            StsMethod::PrincipalAngles => "pa",
            StsMethod::OptimalMatching => "om",
        }
    }
}

impl fmt::Display for StsMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StsMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lc" => Ok(StsMethod::LinearCombination),
            "pa" => Ok(StsMethod::PrincipalAngles),
            "om" => Ok(StsMethod::OptimalMatching),
            _ => Err(format!("unknown STS method {s:?} (expected lc, pa or om)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Uniform,
    Idf,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Uniform => "uniform",
            Weighting::Idf => "idf",
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Weighting::Uniform),
            "idf" => Ok(Weighting::Idf),
            _ => Err(format!("unknown weighting {s:?} (expected uniform or idf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StsConfig {
    pub method: StsMethod,
    /// Principal-angle subspace rank.
    pub rank: usize,
    pub weighting: Weighting,
}

impl Default for StsConfig {
    fn default() -> Self {
        StsConfig {
            method: StsMethod::LinearCombination,
            rank: 4,
            weighting: Weighting::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimilarityScore {
    pub value: f64,
    /// Set when a side had no usable words and the value defaulted to 0.
    pub undefined: bool,
    pub oov_x: usize,
    pub oov_y: usize,
    /// Optimal matching only: aligned `(x word, y word)` indices into the bags.
    pub matching: Vec<(usize, usize)>,
}

impl SimilarityScore {
    fn undefined(x: &WeightedBag, y: &WeightedBag) -> Self {
        SimilarityScore {
            value: 0.0,
            undefined: true,
            oov_x: x.oov,
            oov_y: y.oov,
            matching: Vec::new(),
        }
    }

    fn defined(value: f64, x: &WeightedBag, y: &WeightedBag) -> Self {
        SimilarityScore {
            value,
            undefined: false,
            oov_x: x.oov,
            oov_y: y.oov,
            matching: Vec::new(),
        }
    }
}

fn check_dims(x: &WeightedBag, y: &WeightedBag) -> Result<(), StsError> {
    match (x.dim(), y.dim()) {
        (Some(a), Some(b)) if a != b => Err(StsError::DimensionMismatch(a, b)),
        _ => Ok(()),
    }
}

fn usable(bag: &WeightedBag) -> bool {
    !bag.is_empty() && bag.total_weight > 0.0
}

fn weighted_mean(bag: &WeightedBag) -> Vec<f64> {
    let d = bag.dim().unwrap_or(0);
    let mut acc = vec![0.0; d];
    for (v, &w) in bag.vectors.iter().zip(&bag.weights) {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
    }
    acc.iter_mut().for_each(|a| *a /= bag.total_weight);
    acc
}

/// Cosine between the weighted mean vectors of the two bags.
pub fn sim_linear_combination(x: &WeightedBag, y: &WeightedBag) -> Result<SimilarityScore, StsError> {
    check_dims(x, y)?;
    if !usable(x) || !usable(y) {
        return Ok(SimilarityScore::undefined(x, y));
    }
    let (vx, vy) = (weighted_mean(x), weighted_mean(y));
    if vx.iter().all(|&v| v == 0.0) || vy.iter().all(|&v| v == 0.0) {
        return Ok(SimilarityScore::undefined(x, y));
    }
    Ok(SimilarityScore::defined(cosine(&vx, &vy), x, y))
}

/// Orthonormal basis (`d × r'`) of the top `r' = min(r, rank)` left singular
/// vectors of the matrix with columns `λ_w 𝒮(w)`.
fn principal_basis(bag: &WeightedBag, r: usize) -> Option<DMatrix<f64>> {
    let d = bag.dim()?;
    let n = bag.len();
    let w = DMatrix::from_fn(d, n, |i, j| bag.weights[j] * bag.vectors[j][i]);
    let svd = linalg::svd(&w)?;
    let s = &svd.singular_values;
    let tol = linalg::rank_tolerance(s.max(), d, n);
    let rank = s.iter().filter(|&&v| v > tol).count();
    let keep = r.min(rank);
    if keep == 0 {
        return None;
    }
    Some(svd.u.columns(0, keep).into_owned())
}

/// `sqrt(Σ σ_i²)` over the singular values of `U_xᵀ U_y`, i.e. the
/// Frobenius norm of that product. Lies in `[0, sqrt(r)]`.
pub fn sim_principal_angles(
    x: &WeightedBag,
    y: &WeightedBag,
    r: usize,
) -> Result<SimilarityScore, StsError> {
    if r == 0 {
        return Err(StsError::InvalidRank);
    }
    check_dims(x, y)?;
    if x.is_empty() || y.is_empty() {
        return Ok(SimilarityScore::undefined(x, y));
    }
    let (ux, uy) = match (principal_basis(x, r), principal_basis(y, r)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(SimilarityScore::undefined(x, y)),
    };
    let value = (ux.transpose() * uy).norm();
    Ok(SimilarityScore::defined(value, x, y))
}

/// Optimal word alignment score: `(δ_x + δ_y) / 2` with
/// `δ_x = Σ_matched λ_x δ / λ_total(x)` and symmetrically for `y`.
/// Unmatched words keep their weight in the denominators.
pub fn sim_optimal_matching(x: &WeightedBag, y: &WeightedBag) -> Result<SimilarityScore, StsError> {
    check_dims(x, y)?;
    if !usable(x) || !usable(y) {
        return Ok(SimilarityScore::undefined(x, y));
    }
    let edges: Vec<Vec<f64>> = x
        .vectors
        .iter()
        .map(|vx| y.vectors.iter().map(|vy| cosine(vx, vy)).collect())
        .collect();
    let matching = hungarian_matching(&edges);
    let (mut num_x, mut num_y) = (0.0, 0.0);
    for &(i, j) in &matching {
        num_x += x.weights[i] * edges[i][j];
        num_y += y.weights[j] * edges[i][j];
    }
    let value = 0.5 * (num_x / x.total_weight + num_y / y.total_weight);
    Ok(SimilarityScore {
        matching,
        ..SimilarityScore::defined(value, x, y)
    })
}

/// Dispatches on `config.method`.
pub fn score_bags(
    config: &StsConfig,
    x: &WeightedBag,
    y: &WeightedBag,
) -> Result<SimilarityScore, StsError> {
    match config.method {
        StsMethod::LinearCombination => sim_linear_combination(x, y),
        StsMethod::PrincipalAngles => sim_principal_angles(x, y, config.rank),
        StsMethod::OptimalMatching => sim_optimal_matching(x, y),
    }
}

/// Everything needed to score raw sentence pairs: the two spaces, an
/// optional map from the source space into the target space, IDF weights
/// and the scorer configuration.
#[derive(Debug, Clone, Copy)]
pub struct StsPipeline<'a> {
    pub src: &'a SemanticSpace,
    pub tgt: &'a SemanticSpace,
    pub transform: Option<&'a AlignmentMatrix>,
    pub src_idf: Option<&'a IdfWeights>,
    pub tgt_idf: Option<&'a IdfWeights>,
    pub config: StsConfig,
}

impl<'a> StsPipeline<'a> {
    /// Monolingual pipeline with uniform weights.
    pub fn monolingual(space: &'a SemanticSpace, config: StsConfig) -> Self {
        StsPipeline {
            src: space,
            tgt: space,
            transform: None,
            src_idf: None,
            tgt_idf: None,
            config,
        }
    }

    pub fn validate(&self) -> Result<(), StsError> {
        if self.config.method == StsMethod::PrincipalAngles && self.config.rank == 0 {
            return Err(StsError::InvalidRank);
        }
        if self.config.weighting == Weighting::Idf {
            if self.src_idf.is_none() {
                return Err(StsError::MissingIdf("source"));
            }
            if self.tgt_idf.is_none() {
                return Err(StsError::MissingIdf("target"));
            }
        }
        let mapped_dim = match self.transform {
            Some(t) => {
                if t.dim() != self.src.dim() {
                    return Err(StsError::DimensionMismatch(t.dim(), self.src.dim()));
                }
                t.dim()
            }
            None => self.src.dim(),
        };
        if mapped_dim != self.tgt.dim() {
            return Err(StsError::DimensionMismatch(mapped_dim, self.tgt.dim()));
        }
        Ok(())
    }

    /// Looks up both sentences, maps the source side and scores the pair.
    pub fn bags(&self, x: &Sentence, y: &Sentence) -> Result<(WeightedBag, WeightedBag), StsError> {
        self.validate()?;
        let uniform = IdfWeights::uniform();
        let (wx, wy) = match self.config.weighting {
            Weighting::Uniform => (&uniform, &uniform),
            Weighting::Idf => (
                self.src_idf.ok_or(StsError::MissingIdf("source"))?,
                self.tgt_idf.ok_or(StsError::MissingIdf("target"))?,
            ),
        };
        let mut bag_x = sentence_lookup(x, self.src, wx);
        if let Some(t) = self.transform {
            bag_x = bag_x.map_vectors(|v| t.apply(v))?;
        }
        let bag_y = sentence_lookup(y, self.tgt, wy);
        Ok((bag_x, bag_y))
    }

    pub fn score(&self, x: &Sentence, y: &Sentence) -> Result<SimilarityScore, StsError> {
        let (bx, by) = self.bags(x, y)?;
        score_bags(&self.config, &bx, &by)
    }
}
