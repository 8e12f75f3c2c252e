//! k-occurrence counts `N_k` and their skewness.
//!
//! `N_k(w)` is the number of query words that have target word `w` among
//! their `k` nearest neighbors (exact Euclidean scan, ties to the lower
//! index). A heavily right-skewed `N_k` distribution means a few hubs show
//! up in most neighbor lists.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use super::{skewness, DiagnosticsError};
use crate::embedding_store::SemanticSpace;
use crate::vector::squared_euclidean;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HubnessMode {
    /// Queries and targets are the same space; a word is not its own neighbor.
    WithinSpace,
    /// Queries (typically a mapped source space) against a target space.
    CrossLingual,
}

impl fmt::Display for HubnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HubnessMode::WithinSpace => "within-space",
            HubnessMode::CrossLingual => "cross-lingual",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HubnessReport {
    /// Target vocabulary, in space order.
    pub words: Vec<String>,
    /// `N_k` per target word, aligned with `words`.
    pub counts: Vec<usize>,
    pub k: usize,
    pub mode: HubnessMode,
    pub queries: usize,
    /// Skewness of `counts`; 0 when every count is equal.
    pub skewness: f64,
}

impl HubnessReport {
    pub fn count(&self, word: &str) -> Option<usize> {
        self.words.iter().position(|w| w == word).map(|i| self.counts[i])
    }

    /// TSV: one comment line with `k`, mode and skewness, then
    /// `word<TAB>count` per target word.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# k={}\tmode={}\tqueries={}\tskewness={:.6}",
            self.k, self.mode, self.queries, self.skewness
        )?;
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        out.flush()
    }
}

/// The `k` nearest targets of each of the first `limit` queries, nearest
/// first. With `exclude_self` the target with the query's own index is
/// skipped.
pub fn neighbor_lists(
    queries: &SemanticSpace,
    targets: &SemanticSpace,
    k: usize,
    exclude_self: bool,
    limit: Option<usize>,
) -> Result<Vec<Vec<usize>>, DiagnosticsError> {
    if queries.dim() != targets.dim() {
        return Err(DiagnosticsError::DimensionMismatch(queries.dim(), targets.dim()));
    }
    let available = targets.len();
    if k >= available {
        return Err(DiagnosticsError::KTooLarge { k, available });
    }
    let n = limit.map_or(queries.len(), |l| l.min(queries.len()));
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let lists = (0..n)
        .into_par_iter()
        .map(|q| {
            let qv = queries.vector(q);
            let mut dists: Vec<(f64, usize)> = (0..available)
                .filter(|&t| !(exclude_self && t == q))
                .map(|t| (squared_euclidean(qv, targets.vector(t)), t))
                .collect();
            if k > 0 && k < dists.len() {
                dists.select_nth_unstable_by(k - 1, order);
            }
            dists.truncate(k);
            dists.sort_unstable_by(order);
            dists.into_iter().map(|(_, t)| t).collect()
        })
        .collect();
    Ok(lists)
}

/// Counts how often each target word occurs in the queries' `k`-NN lists.
///
/// In [`HubnessMode::WithinSpace`] `queries` and `targets` must be the same
/// vocabulary (index `i` is the same word on both sides).
pub fn hubness_counts(
    queries: &SemanticSpace,
    targets: &SemanticSpace,
    k: usize,
    mode: HubnessMode,
    query_limit: Option<usize>,
) -> Result<HubnessReport, DiagnosticsError> {
    let within = mode == HubnessMode::WithinSpace;
    if within && queries.len() != targets.len() {
        return Err(DiagnosticsError::LengthMismatch(queries.len(), targets.len()));
    }
    let lists = neighbor_lists(queries, targets, k, within, query_limit)?;
    let mut counts = vec![0usize; targets.len()];
    for list in &lists {
        for &t in list {
            counts[t] += 1;
        }
    }
    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let skew = match skewness(&as_f64) {
        Ok(s) => s,
        Err(DiagnosticsError::ZeroVariance) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(HubnessReport {
        words: targets.words().to_vec(),
        counts,
        k,
        mode,
        queries: lists.len(),
        skewness: skew,
    })
}
