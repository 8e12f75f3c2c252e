//! Max-margin ranking mappings.
//!
//! The ranking transformation pushes each mapped source vector `x_i T` closer
//! to its translation `y_i` than to the most intruding other targets. The
//! orthogonal variant adds the symmetric term for the backward estimate
//! `y_i Tᵀ` against the source rows, which keeps `T` nearly orthogonal.
//!
//! Both fits start from the orthogonal Procrustes solution and run plain SGD
//! over a seeded shuffle of the training rows.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::closed_form::procrustes;
use super::{
    check_shapes, orthogonality_defect, residual, row_times, AlignmentMatrix, FitReport, Method,
    TransformError,
};
use crate::vector::{dot, norm};

/// Neighborhood metric used by the ranking loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distance {
    #[default]
    Euclidean,
    /// `1 − cos(a, b)`.
    InverseCosine,
}

impl Distance {
    pub fn as_str(self) -> &'static str {
        match self {
            Distance::Euclidean => "euclidean",
            Distance::InverseCosine => "inverse-cosine",
        }
    }

    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => crate::vector::euclidean(a, b),
            Distance::InverseCosine => 1.0 - crate::vector::cosine(a, b),
        }
    }

    /// Adds `scale · ∂D(a, b)/∂a` to `out`. The gradient is taken as zero
    /// where the distance is not differentiable.
    fn add_grad_first(self, a: &[f64], b: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Distance::Euclidean => {
                let dist = crate::vector::euclidean(a, b);
                if dist > 0.0 {
                    let s = scale / dist;
                    for ((o, ai), bi) in out.iter_mut().zip(a).zip(b) {
                        *o += s * (ai - bi);
                    }
                }
            }
            Distance::InverseCosine => {
                let (na, nb) = (norm(a), norm(b));
                if na > 0.0 && nb > 0.0 {
                    let cos = dot(a, b) / (na * nb);
                    for ((o, ai), bi) in out.iter_mut().zip(a).zip(b) {
                        *o -= scale * (bi / (na * nb) - cos * ai / (na * na));
                    }
                }
            }
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Distance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Distance::Euclidean),
            "inverse-cosine" | "cosine" => Ok(Distance::InverseCosine),
            _ => Err(format!("unknown distance {s:?} (expected euclidean or inverse-cosine)")),
        }
    }
}

/// Hyperparameters shared by the ranking and orthogonal ranking fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingConfig {
    /// Margin γ.
    pub margin: f64,
    /// Negatives per example and per side.
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub distance: Distance,
    pub seed: u64,
}

impl Default for RankingConfig {
    fn default() -> Self {
        RankingConfig {
            margin: 0.0,
            negatives: 50,
            epochs: 5,
            learning_rate: 0.01,
            distance: Distance::Euclidean,
            seed: 0,
        }
    }
}

impl RankingConfig {
    fn validate(&self) -> Result<(), TransformError> {
        let bad = |msg: String| Err(TransformError::InvalidConfig(msg));
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return bad(format!("margin must be >= 0, got {}", self.margin));
        }
        if self.negatives == 0 {
            return bad("at least one negative sample is required".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        Ok(())
    }
}

/// `max(0, t)`, propagating NaN so divergence is not masked.
#[inline]
fn hinge(t: f64) -> f64 {
    if t > 0.0 || t.is_nan() {
        t
    } else {
        0.0
    }
}

/// `Σ_n max(0, γ + D(ŷ, y) − D(ŷ, n))`.
pub fn rank_loss<'a, I>(y_hat: &[f64], y: &[f64], negatives: I, margin: f64, distance: Distance) -> f64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let positive = distance.eval(y_hat, y);
    negatives
        .into_iter()
        .map(|n| hinge(margin + positive - distance.eval(y_hat, n)))
        .sum()
}

/// Row-major view of a training matrix.
#[derive(Debug, Clone)]
pub(crate) struct Rows {
    data: Vec<f64>,
    dim: usize,
}

impl Rows {
    pub(crate) fn from_matrix(m: &DMatrix<f64>) -> Self {
        Rows {
            data: m.transpose().as_slice().to_vec(),
            dim: m.ncols(),
        }
    }

    fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

const PARALLEL_THRESHOLD: usize = 1 << 16;

fn select_from_rows(y_hat: &[f64], index: usize, rows: &Rows, k: usize, distance: Distance) -> Vec<usize> {
    let m = rows.len();
    let k = k.min(m.saturating_sub(1));
    if k == 0 {
        return Vec::new();
    }
    let target = rows.row(index);
    let score = |j: usize| {
        let n = rows.row(j);
        (distance.eval(y_hat, n) - distance.eval(target, n), j)
    };
    let mut scored: Vec<(f64, usize)> = if m * rows.dim >= PARALLEL_THRESHOLD {
        (0..m).into_par_iter().filter(|&j| j != index).map(score).collect()
    } else {
        (0..m).filter(|&j| j != index).map(score).collect()
    };
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(order);
    scored.into_iter().map(|(_, j)| j).collect()
}

/// Indices `j ≠ index` of the `k` rows of `targets` with the smallest
/// intruder score `D(ŷ, n_j) − D(y_index, n_j)`; ties go to the lower index.
/// Returned in increasing score order.
pub fn select_negatives(
    y_hat: &[f64],
    index: usize,
    targets: &DMatrix<f64>,
    k: usize,
    distance: Distance,
) -> Vec<usize> {
    select_from_rows(y_hat, index, &Rows::from_matrix(targets), k, distance)
}

/// One ranking term: returns the loss and adds `∂loss/∂ŷ` to `grad`.
fn ranking_term(
    y_hat: &[f64],
    index: usize,
    rows: &Rows,
    negatives: &[usize],
    margin: f64,
    distance: Distance,
    grad: &mut [f64],
) -> f64 {
    let target = rows.row(index);
    let positive = distance.eval(y_hat, target);
    let mut loss = 0.0;
    for &j in negatives {
        let n = rows.row(j);
        let t = margin + positive - distance.eval(y_hat, n);
        if t.is_nan() {
            return f64::NAN;
        }
        if t > 0.0 {
            loss += t;
            distance.add_grad_first(y_hat, target, 1.0, grad);
            distance.add_grad_first(y_hat, n, -1.0, grad);
        }
    }
    loss
}

/// `x̂ = y Tᵀ` for a column-major `T`.
fn row_times_transpose(y: &[f64], t: &DMatrix<f64>) -> Vec<f64> {
    let d = t.nrows();
    let mut out = vec![0.0; d];
    for (col, &yb) in t.as_slice().chunks_exact(d).zip(y) {
        for (o, v) in out.iter_mut().zip(col) {
            *o += yb * v;
        }
    }
    out
}

/// Which objective a ranking fit minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Forward term only.
    Ranking,
    /// Forward and backward (transpose) terms.
    OrthogonalRanking,
}

/// Negative index sets per training row, per side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeSets {
    pub forward: Vec<Vec<usize>>,
    pub backward: Option<Vec<Vec<usize>>>,
}

/// Draws the top-k intruders for every row at the current `t`.
pub fn draw_negatives(
    objective: Objective,
    t: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    k: usize,
    distance: Distance,
) -> NegativeSets {
    let (xr, yr) = (Rows::from_matrix(x), Rows::from_matrix(y));
    let forward = (0..xr.len())
        .map(|i| select_from_rows(&row_times(xr.row(i), t), i, &yr, k, distance))
        .collect();
    let backward = (objective == Objective::OrthogonalRanking).then(|| {
        (0..yr.len())
            .map(|i| select_from_rows(&row_times_transpose(yr.row(i), t), i, &xr, k, distance))
            .collect()
    });
    NegativeSets { forward, backward }
}

/// Objective value and its (sub)gradient with respect to `t` for fixed
/// negative sets. The gradient is that of the plain sum over examples and
/// negatives.
pub fn objective_and_gradient(
    t: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    negatives: &NegativeSets,
    margin: f64,
    distance: Distance,
) -> (f64, DMatrix<f64>) {
    let (xr, yr) = (Rows::from_matrix(x), Rows::from_matrix(y));
    let d = t.nrows();
    let mut grad = DMatrix::zeros(d, d);
    let mut loss = 0.0;
    let mut g = vec![0.0; d];
    for i in 0..xr.len() {
        g.iter_mut().for_each(|v| *v = 0.0);
        let y_hat = row_times(xr.row(i), t);
        loss += ranking_term(&y_hat, i, &yr, &negatives.forward[i], margin, distance, &mut g);
        add_outer(&mut grad, xr.row(i), &g, 1.0);
        if let Some(backward) = &negatives.backward {
            g.iter_mut().for_each(|v| *v = 0.0);
            let x_hat = row_times_transpose(yr.row(i), t);
            loss += ranking_term(&x_hat, i, &xr, &backward[i], margin, distance, &mut g);
            add_outer(&mut grad, &g, yr.row(i), 1.0);
        }
    }
    (loss, grad)
}

/// `m += scale · a bᵀ`.
fn add_outer(m: &mut DMatrix<f64>, a: &[f64], b: &[f64], scale: f64) {
    let d = m.nrows();
    for (col, &bj) in m.as_mut_slice().chunks_exact_mut(d).zip(b) {
        let s = scale * bj;
        if s != 0.0 {
            for (v, &ai) in col.iter_mut().zip(a) {
                *v += s * ai;
            }
        }
    }
}

/// Full objective with negatives re-drawn at `t`.
fn objective_at(
    objective: Objective,
    t: &DMatrix<f64>,
    xr: &Rows,
    yr: &Rows,
    config: &RankingConfig,
) -> f64 {
    let m = xr.len();
    let d = t.nrows();
    let per_example = |i: usize| {
        let mut scratch = vec![0.0; d];
        let y_hat = row_times(xr.row(i), t);
        let negs = select_from_rows(&y_hat, i, yr, config.negatives, config.distance);
        let mut loss = ranking_term(&y_hat, i, yr, &negs, config.margin, config.distance, &mut scratch);
        if objective == Objective::OrthogonalRanking {
            let x_hat = row_times_transpose(yr.row(i), t);
            let negs = select_from_rows(&x_hat, i, xr, config.negatives, config.distance);
            loss += ranking_term(&x_hat, i, xr, &negs, config.margin, config.distance, &mut scratch);
        }
        loss
    };
    // fixed-order reduction keeps the value bitwise reproducible
    let losses: Vec<f64> = if m * m * d >= PARALLEL_THRESHOLD {
        (0..m).into_par_iter().map(per_example).collect()
    } else {
        (0..m).map(per_example).collect()
    };
    losses.iter().sum()
}

fn fit(
    objective: Objective,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    config: &RankingConfig,
) -> Result<AlignmentMatrix, TransformError> {
    check_shapes(x, y)?;
    config.validate()?;
    let method = match objective {
        Objective::Ranking => Method::Ranking,
        Objective::OrthogonalRanking => Method::OrthogonalRanking,
    };
    let mut t = procrustes(x, y)?;
    let (xr, yr) = (Rows::from_matrix(x), Rows::from_matrix(y));
    let (m, d) = x.shape();

    let mut report = FitReport {
        initial_loss: Some(objective_at(objective, &t, &xr, &yr, config)),
        ..FitReport::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..m).collect();
    let mut g_fwd = vec![0.0; d];
    let mut g_bwd = vec![0.0; d];
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            g_fwd.iter_mut().for_each(|v| *v = 0.0);
            let y_hat = row_times(xr.row(i), &t);
            let negs = select_from_rows(&y_hat, i, &yr, config.negatives, config.distance);
            let mut loss =
                ranking_term(&y_hat, i, &yr, &negs, config.margin, config.distance, &mut g_fwd);
            let fwd_scale = -config.learning_rate / negs.len().max(1) as f64;

            let mut bwd_scale = 0.0;
            if objective == Objective::OrthogonalRanking {
                g_bwd.iter_mut().for_each(|v| *v = 0.0);
                let x_hat = row_times_transpose(yr.row(i), &t);
                let negs = select_from_rows(&x_hat, i, &xr, config.negatives, config.distance);
                loss +=
                    ranking_term(&x_hat, i, &xr, &negs, config.margin, config.distance, &mut g_bwd);
                bwd_scale = -config.learning_rate / negs.len().max(1) as f64;
            }
            if !loss.is_finite() {
                return Err(TransformError::NonFiniteLoss { epoch: epoch + 1, example: i });
            }
            add_outer(&mut t, xr.row(i), &g_fwd, fwd_scale);
            if bwd_scale != 0.0 {
                add_outer(&mut t, &g_bwd, yr.row(i), bwd_scale);
            }
        }
        let loss = objective_at(objective, &t, &xr, &yr, config);
        if !loss.is_finite() || t.iter().any(|v| !v.is_finite()) {
            return Err(TransformError::NonFiniteLoss { epoch: epoch + 1, example: m });
        }
        report.epoch_losses.push(loss);
        report.epoch_defects.push(orthogonality_defect(&t));
    }
    report.residual = Some(residual(x, y, &t));
    Ok(AlignmentMatrix::with_report(method, t, report))
}

/// Ranking transformation: minimizes the forward max-margin loss.
pub fn fit_ranking(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    config: &RankingConfig,
) -> Result<AlignmentMatrix, TransformError> {
    fit(Objective::Ranking, x, y, config)
}

/// Orthogonal ranking transformation: minimizes the forward loss of `x T`
/// against `Y` plus the backward loss of `y Tᵀ` against `X`, with
/// independently drawn negatives per side.
pub fn fit_orthogonal_ranking(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    config: &RankingConfig,
) -> Result<AlignmentMatrix, TransformError> {
    fit(Objective::OrthogonalRanking, x, y, config)
}
