//! Cross-lingual word-embedding alignment and unsupervised sentence similarity.
//!
//! The crate is organised around four pieces:
//!
//! * [`embedding_store`]: loading, preprocessing and querying monolingual
//!   semantic spaces, IDF weights and sentences.
//! * [`transforms`]: fitting a `d × d` linear map between two spaces from a
//!   bilingual dictionary (least squares, orthogonal Procrustes, CCA, ranking
//!   and orthogonal ranking) and applying it to vectors.
//! * [`sts`]: sentence similarity by linear combination, principal angles and
//!   optimal matching, all with per-word weights.
//! * [`diagnostics`]: Pearson evaluation against gold scores and hubness
//!   (k-occurrence counts and their skewness).
//!
//! Vectors are rows throughout: a mapped vector is `x T`.

pub mod diagnostics;
pub mod embedding_store;
mod linalg;
pub mod sts;
pub mod transforms;
pub mod vector;

pub use diagnostics::{
    evaluate_dataset, hubness_counts, pearson_correlation, skewness, DiagnosticsError,
    Evaluation, HubnessMode, HubnessReport,
};
pub use embedding_store::{
    compute_idf, load_vectors, sentence_lookup, tokenize, IdfWeights, LoadStats, SemanticSpace,
    Sentence, StoreError, WeightedBag,
};
pub use sts::{
    hungarian_matching, sim_linear_combination, sim_optimal_matching, sim_principal_angles,
    SimilarityScore, StsConfig, StsError, StsMethod, StsPipeline, Weighting,
};
pub use transforms::{
    apply_transform, build_training_matrices, fit_cca, fit_least_squares, fit_orthogonal,
    fit_orthogonal_ranking, fit_ranking, rank_loss, select_negatives, AlignmentMatrix,
    BilingualDictionary, Distance, FitReport, Method, RankingConfig, Ridge, TrainingData,
    TransformError,
};

/// Umbrella error for callers that drive the whole pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Sts(#[from] StsError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
