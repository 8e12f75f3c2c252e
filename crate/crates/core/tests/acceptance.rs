//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every check compares against an oracle written here, independent
//! of the library code path, and each criterion has a wall-clock budget.
//!
//! Run: cargo test -p crossalign --test acceptance

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use crossalign::diagnostics::neighbor_lists;
use crossalign::transforms::ranking::{draw_negatives, objective_and_gradient, Objective};
use crossalign::transforms::{apply_to_space, orthogonality_defect, residual};
use crossalign::{
    fit_cca, fit_least_squares, fit_orthogonal, fit_orthogonal_ranking, fit_ranking,
    hubness_counts, hungarian_matching, pearson_correlation, sentence_lookup, sim_linear_combination,
    sim_optimal_matching, sim_principal_angles, skewness, Distance, HubnessMode, IdfWeights,
    RankingConfig, Ridge, SemanticSpace, Sentence, WeightedBag,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

// Tolerances and budgets, as pinned by the acceptance contract.
const ORTHO_TOL: f64 = 1e-8;
const RECOVERY_TOL: f64 = 1e-8;
const LS_ORACLE_TOL: f64 = 1e-8;
const CCA_GRID_TOL: f64 = 1e-3;
const CCA_SELF_TOL: f64 = 1e-8;
const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;
const SYMMETRY_TOL: f64 = 1e-12;
const STAT_TOL: f64 = 1e-10;
const PRECISION_AT_1: f64 = 0.95;
const NOISE_SIGMA: f64 = 0.01;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn criterion(n: usize, name: &str, budget_s: u64, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    let in_budget = elapsed <= Duration::from_secs(budget_s);
    let (ok, detail) = match result {
        Ok(o) => (o.ok && in_budget, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, format!("panicked: {msg}"))
        }
    };
    println!(
        "[{}] criterion {n:>2} {name}: {detail} ({:.2}s, budget {budget_s}s{})",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        if in_budget { "" } else { ", OVER BUDGET" },
    );
    ok
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    gaussian(rng, d, d).qr().q()
}

fn unit_rows(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in m.row_iter_mut() {
        let n = row.norm();
        row /= n;
    }
    m
}

/// ‖A‖_∞: largest absolute row sum.
fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn space_from(m: &DMatrix<f64>, prefix: &str) -> SemanticSpace {
    let words: Vec<String> = (0..m.nrows()).map(|i| format!("{prefix}{i}")).collect();
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    SemanticSpace::from_rows(&words, &rows).unwrap()
}

// ── 1 ────────────────────────────────────────────────────────────────

fn orthogonality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for inst in 0..50 {
        let d = [2, 5, 20][inst % 3];
        let m = if (inst / 3) % 2 == 0 { d } else { 5 * d };
        let (x, y) = (gaussian(&mut rng, m, d), gaussian(&mut rng, m, d));
        let t = fit_orthogonal(&x, &y).unwrap();
        let tm = t.matrix();
        let defect = inf_norm(&(tm * tm.transpose() - DMatrix::identity(d, d)));
        worst = worst.max(defect);
        failures += usize::from(defect.is_nan() || defect >= ORTHO_TOL);
    }
    outcome(failures == 0, format!("50 instances, max ‖TTᵀ−I‖_∞ = {worst:.2e}, {failures} failures"))
}

// ── 2 and 6 ──────────────────────────────────────────────────────────

struct Synthetic {
    x_train: DMatrix<f64>,
    y_train: DMatrix<f64>,
    x_test: DMatrix<f64>,
    /// All target vectors; test pair `i` has target row `train + i`.
    y_all: DMatrix<f64>,
}

fn synthetic(seed: u64) -> Synthetic {
    let (d, train, test) = (10, 500, 100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = random_orthogonal(&mut rng, d);
    let x = unit_rows(gaussian(&mut rng, train + test, d));
    let y_all = &x * &r + gaussian(&mut rng, train + test, d) * NOISE_SIGMA;
    Synthetic {
        x_train: x.rows(0, train).into_owned(),
        y_train: y_all.rows(0, train).into_owned(),
        x_test: x.rows(train, test).into_owned(),
        y_all,
    }
}

fn precision_at_1(s: &Synthetic, t: &DMatrix<f64>) -> f64 {
    let train = s.x_train.nrows();
    let mapped = &s.x_test * t;
    let hits = (0..mapped.nrows())
        .filter(|&i| {
            let q = mapped.row(i);
            let nearest = (0..s.y_all.nrows())
                .min_by(|&a, &b| {
                    let da = (s.y_all.row(a) - q).norm_squared();
                    let db = (s.y_all.row(b) - q).norm_squared();
                    da.total_cmp(&db).then(a.cmp(&b))
                })
                .unwrap();
            nearest == train + i
        })
        .count();
    hits as f64 / mapped.nrows() as f64
}

fn procrustes_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for &(m, d) in &[(10, 10), (50, 10), (200, 20), (30, 3)] {
        let r = random_orthogonal(&mut rng, d);
        let x = gaussian(&mut rng, m, d);
        let t = fit_orthogonal(&x, &(&x * &r)).unwrap();
        worst = worst.max((t.matrix() - &r).norm());
    }
    let s = synthetic(20);
    let ot = fit_orthogonal(&s.x_train, &s.y_train).unwrap();
    let ort = fit_orthogonal_ranking(&s.x_train, &s.y_train, &RankingConfig::default()).unwrap();
    let (p_ot, p_ort) = (precision_at_1(&s, ot.matrix()), precision_at_1(&s, ort.matrix()));
    let ok = worst < RECOVERY_TOL && p_ot >= PRECISION_AT_1 && p_ort >= PRECISION_AT_1;
    outcome(
        ok,
        format!("noiseless max ‖T̂−R‖_F = {worst:.2e}; σ={NOISE_SIGMA}: P@1 OT {p_ot:.2}, ORT {p_ort:.2}"),
    )
}

fn ort_behavior() -> Outcome {
    let s = synthetic(20);
    let mut notes = Vec::new();
    let mut ok = true;

    let ot = fit_orthogonal(&s.x_train, &s.y_train).unwrap();
    let zero = RankingConfig { epochs: 0, ..RankingConfig::default() };
    let ort0 = fit_orthogonal_ranking(&s.x_train, &s.y_train, &zero).unwrap();
    let bitwise = ot.matrix().iter().zip(ort0.matrix().iter()).all(|(a, b)| a.to_bits() == b.to_bits());
    ok &= bitwise;
    notes.push(format!("epoch-0 = OT bitwise: {bitwise}"));

    // (b) and (c) on the contract setup (defaults, γ = 0); with γ = 0.5 the
    // hinges are active, and (b) is gated there too while the defect
    // comparison is only reported: on data generated by an exact rotation
    // both fits start at the optimum and neither ordering is systematic.
    for margin in [0.0, 0.5] {
        let cfg = RankingConfig { margin, seed: 6, ..RankingConfig::default() };
        let ort = fit_orthogonal_ranking(&s.x_train, &s.y_train, &cfg).unwrap();
        let rt = fit_ranking(&s.x_train, &s.y_train, &cfg).unwrap();
        let losses = &ort.report().epoch_losses;
        let (first, last) = (losses[0], losses[losses.len() - 1]);
        let (d_ort, d_rt) = (orthogonality_defect(ort.matrix()), orthogonality_defect(rt.matrix()));
        let gated = margin == 0.0;
        ok &= last <= first && (!gated || d_ort <= d_rt);
        notes.push(format!(
            "γ={margin}: loss e1 {first:.4e} → e5 {last:.4e}, defect ORT {d_ort:.2e} vs RT {d_rt:.2e}{}",
            if gated { "" } else { " (not gated)" }
        ));
    }
    outcome(ok, notes.join("; "))
}

// ── 3 ────────────────────────────────────────────────────────────────

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
fn gauss_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    let mut b = b.clone();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs())).unwrap();
        a.swap_rows(col, pivot);
        b.swap_rows(col, pivot);
        for row in col + 1..n {
            let f = a[(row, col)] / a[(col, col)];
            for k in col..n {
                a[(row, k)] -= f * a[(col, k)];
            }
            for k in 0..b.ncols() {
                b[(row, k)] -= f * b[(col, k)];
            }
        }
    }
    let mut x = DMatrix::zeros(n, b.ncols());
    for k in 0..b.ncols() {
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|j| a[(row, j)] * x[(j, k)]).sum();
            x[(row, k)] = (b[(row, k)] - s) / a[(row, row)];
        }
    }
    x
}

fn ls_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut violations): (f64, usize) = (0.0, 0);
    for inst in 0..20 {
        let d = 2 + inst % 7;
        let m = 3 * d + inst;
        let (x, y) = (gaussian(&mut rng, m, d), gaussian(&mut rng, m, d));
        let ls = fit_least_squares(&x, &y, Ridge::None).unwrap();
        let ot = fit_orthogonal(&x, &y).unwrap();
        if residual(&x, &y, ls.matrix()) > residual(&x, &y, ot.matrix()) {
            violations += 1;
        }
        let oracle = gauss_solve(&(x.transpose() * &x), &(x.transpose() * &y));
        worst = worst.max((ls.matrix() - oracle).norm());
    }
    outcome(
        violations == 0 && worst < LS_ORACLE_TOL,
        format!("20 instances, residual violations {violations}, max ‖T_LS − T_normal‖_F = {worst:.2e}"),
    )
}

// ── 4 ────────────────────────────────────────────────────────────────

fn centered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = m.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    c
}

/// max over unit directions a, b of corr(Xa, Yb) for d = 2, by a coarse
/// grid then a fine grid around the best cell.
fn grid_first_correlation(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let (xc, yc) = (centered(x), centered(y));
    let corr = |th: f64, ph: f64| {
        let a = xc.column(0) * th.cos() + xc.column(1) * th.sin();
        let b = yc.column(0) * ph.cos() + yc.column(1) * ph.sin();
        a.dot(&b) / (a.norm() * b.norm())
    };
    let pi = std::f64::consts::PI;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let n = 720;
    for i in 0..n {
        for j in 0..2 * n {
            let (th, ph) = (pi * i as f64 / n as f64, pi * j as f64 / n as f64);
            let c = corr(th, ph);
            if c > best.0 {
                best = (c, th, ph);
            }
        }
    }
    let step = pi / n as f64;
    let (_, th0, ph0) = best;
    for i in -100..=100 {
        for j in -100..=100 {
            let (th, ph) = (th0 + step * i as f64 / 50.0, ph0 + step * j as f64 / 50.0);
            best.0 = best.0.max(corr(th, ph));
        }
    }
    best.0
}

fn cca_correctness() -> Outcome {
    let instances: [([f64; 12], [f64; 12]); 3] = [
        (
            [1.0, 2.0, 2.0, 1.0, 3.0, 5.0, 4.0, 2.0, 5.0, 7.0, 6.0, 3.0],
            [2.0, 1.0, 1.0, 3.0, 4.0, 4.0, 3.0, 1.0, 6.0, 5.0, 5.0, 4.0],
        ),
        (
            [0.5, -1.0, 1.5, 0.0, -0.5, 2.0, 2.0, 1.0, -1.0, -2.0, 0.0, 0.5],
            [1.0, 0.3, -0.2, 1.1, 0.7, -0.9, 2.2, 0.4, -1.5, 0.0, 0.1, 0.6],
        ),
        (
            [3.0, 1.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0],
            [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0, 2.0, 8.0, 4.0, 5.0],
        ),
    ];
    let mut worst: f64 = 0.0;
    for (xs, ys) in &instances {
        let (x, y) = (DMatrix::from_row_slice(6, 2, xs), DMatrix::from_row_slice(6, 2, ys));
        let fit = fit_cca(&x, &y, Ridge::None).unwrap();
        let first = fit.report().canonical_correlations[0];
        worst = worst.max((first - grid_first_correlation(&x, &y)).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = gaussian(&mut rng, 40, 5);
    let self_fit = fit_cca(&x, &x, Ridge::None).unwrap();
    let self_dev = self_fit
        .report()
        .canonical_correlations
        .iter()
        .map(|c| (c - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(
        worst < CCA_GRID_TOL && self_dev < CCA_SELF_TOL && self_fit.report().canonical_correlations.len() == 5,
        format!("grid oracle max |Δρ₁| = {worst:.2e} on 3 instances; Y = X max |ρ−1| = {self_dev:.2e}"),
    )
}

// ── 5 ────────────────────────────────────────────────────────────────

/// Smallest |hinge argument| over all terms, with independently computed
/// forward and backward estimates.
fn min_hinge_gap(
    objective: Objective,
    t: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    negatives: &crossalign::transforms::ranking::NegativeSets,
    margin: f64,
    distance: Distance,
) -> f64 {
    let row = |m: &DMatrix<f64>, i: usize| -> Vec<f64> { m.row(i).iter().copied().collect() };
    let forward = x * t;
    let backward = y * t.transpose();
    let mut gap = f64::INFINITY;
    for i in 0..x.nrows() {
        let yh = row(&forward, i);
        let pos = distance.eval(&yh, &row(y, i));
        for &n in &negatives.forward[i] {
            gap = gap.min((margin + pos - distance.eval(&yh, &row(y, n))).abs());
        }
        if objective == Objective::OrthogonalRanking {
            let xh = row(&backward, i);
            let pos = distance.eval(&xh, &row(x, i));
            for &n in &negatives.backward.as_ref().unwrap()[i] {
                gap = gap.min((margin + pos - distance.eval(&xh, &row(x, n))).abs());
            }
        }
    }
    gap
}

fn ranking_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (d, m, k, margin) = (3, 8, 3, 0.5);
    let mut notes = Vec::new();
    let mut ok = true;
    for objective in [Objective::Ranking, Objective::OrthogonalRanking] {
        for distance in [Distance::Euclidean, Distance::InverseCosine] {
            let (mut points, mut worst, mut attempts): (usize, f64, usize) = (0, 0.0, 0);
            while points < 20 && attempts < 10_000 {
                attempts += 1;
                let x = gaussian(&mut rng, m, d);
                let y = gaussian(&mut rng, m, d);
                let t = gaussian(&mut rng, d, d);
                let negs = draw_negatives(objective, &t, &x, &y, k, distance);
                // keep the point only if no hinge is within reach of the stencil
                if min_hinge_gap(objective, &t, &x, &y, &negs, margin, distance) < 1e-3 {
                    continue;
                }
                let (_, grad) = objective_and_gradient(&t, &x, &y, &negs, margin, distance);
                if grad.norm() == 0.0 {
                    continue;
                }
                let mut fd = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        let (mut tp, mut tm) = (t.clone(), t.clone());
                        tp[(i, j)] += FD_STEP;
                        tm[(i, j)] -= FD_STEP;
                        let fp = objective_and_gradient(&tp, &x, &y, &negs, margin, distance).0;
                        let fm = objective_and_gradient(&tm, &x, &y, &negs, margin, distance).0;
                        fd[(i, j)] = (fp - fm) / (2.0 * FD_STEP);
                    }
                }
                worst = worst.max((&fd - &grad).norm() / grad.norm());
                points += 1;
            }
            ok &= points == 20 && worst < FD_REL_TOL;
            let name = if objective == Objective::Ranking { "RT" } else { "ORT" };
            notes.push(format!("{name}/{distance}: {points} pts, max rel {worst:.1e}"));
        }
    }
    outcome(ok, notes.join("; "))
}

// ── 7 ────────────────────────────────────────────────────────────────

fn brute_force_max(w: &[Vec<f64>]) -> f64 {
    fn rec(w: &[Vec<f64>], row: usize, used: &mut [bool], picked: &mut Vec<(usize, usize)>, need: usize, best: &mut f64) {
        if picked.len() == need {
            // sum in row order, the same order the matcher's pairs come in
            let total: f64 = picked.iter().map(|&(i, j)| w[i][j]).sum();
            *best = best.max(total);
            return;
        }
        if row == w.len() {
            return;
        }
        if w.len() - row > need - picked.len() {
            rec(w, row + 1, used, picked, need, best);
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                picked.push((row, j));
                rec(w, row + 1, used, picked, need, best);
                picked.pop();
                used[j] = false;
            }
        }
    }
    let need = w.len().min(w[0].len());
    let mut best = f64::NEG_INFINITY;
    rec(w, 0, &mut vec![false; w[0].len()], &mut Vec::new(), need, &mut best);
    best
}

fn hungarian_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for inst in 0..200 {
        let (r, c) = (rng.random_range(1..=7), rng.random_range(1..=7));
        // half continuous, half small integers with many ties
        let w: Vec<Vec<f64>> = (0..r)
            .map(|_| {
                (0..c)
                    .map(|_| {
                        if inst % 2 == 0 {
                            rng.random_range(-1.0..1.0)
                        } else {
                            rng.random_range(0..4) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let pairs = hungarian_matching(&w);
        let total: f64 = pairs.iter().map(|&(i, j)| w[i][j]).sum();
        if pairs.len() != r.min(c) || total != brute_force_max(&w) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("200 matrices up to 7×7, {mismatches} mismatches"))
}

// ── 8 ────────────────────────────────────────────────────────────────

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn unweighted_lc(x: &WeightedBag, y: &WeightedBag) -> f64 {
    let sum = |b: &WeightedBag| -> Vec<f64> {
        (0..b.vectors[0].len()).map(|j| b.vectors.iter().map(|v| v[j]).sum()).collect()
    };
    cos(&sum(x), &sum(y))
}

fn unweighted_om(x: &WeightedBag, y: &WeightedBag) -> f64 {
    let edges: Vec<Vec<f64>> = x.vectors.iter().map(|a| y.vectors.iter().map(|b| cos(a, b)).collect()).collect();
    let best = brute_force_max(&edges);
    0.5 * (best / x.len() as f64 + best / y.len() as f64)
}

/// Top eigenvectors of `W Wᵀ` in place of left singular vectors.
fn eigen_basis(bag: &WeightedBag, r: usize) -> DMatrix<f64> {
    let d = bag.vectors[0].len();
    let w = DMatrix::from_fn(d, bag.len(), |i, j| bag.vectors[j][i]);
    let eig = SymmetricEigen::new(&w * w.transpose());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let keep: Vec<usize> = order.into_iter().filter(|&i| eig.eigenvalues[i] > 1e-10 * top).take(r).collect();
    DMatrix::from_fn(d, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
}

fn unweighted_pa(x: &WeightedBag, y: &WeightedBag, r: usize) -> f64 {
    (eigen_basis(x, r).transpose() * eigen_basis(y, r)).norm()
}

fn sts_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n_words, d, r) = (60, 12, 4);
    let space = space_from(&gaussian(&mut rng, n_words, d), "w").preprocess().unwrap();
    let idf = IdfWeights::from_map(
        (0..n_words).map(|i| (format!("w{i}"), rng.random_range(0.1..3.0))).collect(),
        1.0,
        100,
    )
    .unwrap();
    let vocab: Vec<String> = space.words().to_vec();
    let sentence = |rng: &mut ChaCha8Rng| {
        let len = rng.random_range(1..=6);
        Sentence::new((0..len).map(|_| vocab.choose(rng).unwrap().clone()).collect()).unwrap()
    };

    let (mut sym, mut ident): (f64, f64) = (0.0, 0.0);
    let mut uni = [0.0f64; 3];
    let mut pa_out_of_range = 0;
    for _ in 0..100 {
        let (sx, sy) = (sentence(&mut rng), sentence(&mut rng));
        let (bx, by) = (sentence_lookup(&sx, &space, &idf), sentence_lookup(&sy, &space, &idf));
        let scores = |a: &WeightedBag, b: &WeightedBag| {
            [
                sim_linear_combination(a, b).unwrap().value,
                sim_principal_angles(a, b, r).unwrap().value,
                sim_optimal_matching(a, b).unwrap().value,
            ]
        };
        let (fwd, bwd) = (scores(&bx, &by), scores(&by, &bx));
        for (a, b) in fwd.iter().zip(&bwd) {
            sym = sym.max((a - b).abs());
        }
        if !(0.0..=(r as f64).sqrt() + 1e-12).contains(&fwd[1]) {
            pa_out_of_range += 1;
        }

        let (ux, uy) = (
            sentence_lookup(&sx, &space, &IdfWeights::uniform()),
            sentence_lookup(&sy, &space, &IdfWeights::uniform()),
        );
        let got = scores(&ux, &uy);
        let want = [unweighted_lc(&ux, &uy), unweighted_pa(&ux, &uy, r), unweighted_om(&ux, &uy)];
        for ((u, g), w) in uni.iter_mut().zip(&got).zip(&want) {
            *u = u.max((g - w).abs());
        }

        let rank = eigen_basis(&bx, r).ncols();
        let same = scores(&bx, &bx);
        ident = ident
            .max((same[0] - 1.0).abs())
            .max((same[1] - (rank as f64).sqrt()).abs())
            .max((same[2] - 1.0).abs());
    }
    outcome(
        sym <= SYMMETRY_TOL && uni.iter().all(|&u| u <= STAT_TOL) && ident <= STAT_TOL && pa_out_of_range == 0,
        format!(
            "100 pairs: max asymmetry {sym:.1e}, uniform vs unweighted LC/PA/OM {:.1e}/{:.1e}/{:.1e}, identical-sentence error {ident:.1e}, PA out of range {pa_out_of_range}",
            uni[0], uni[1], uni[2]
        ),
    )
}

// ── 9 ────────────────────────────────────────────────────────────────

fn monolingual_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, d, k) = (1000, 20, 20);
    let space = space_from(&gaussian(&mut rng, n, d), "w").preprocess().unwrap();
    let t = fit_orthogonal(&gaussian(&mut rng, 200, d), &gaussian(&mut rng, 200, d)).unwrap();
    let mapped = apply_to_space(&t, &space).unwrap();

    let before = neighbor_lists(&space, &space, k, true, None).unwrap();
    let after = neighbor_lists(&mapped, &mapped, k, true, None).unwrap();
    let changed = before.iter().zip(&after).filter(|(a, b)| a != b).count();
    let h0 = hubness_counts(&space, &space, k, HubnessMode::WithinSpace, None).unwrap();
    let h1 = hubness_counts(&mapped, &mapped, k, HubnessMode::WithinSpace, None).unwrap();
    let ok = changed == 0 && h0.counts == h1.counts && h0.skewness == h1.skewness;
    outcome(
        ok,
        format!("{n} words, {changed} neighbor lists changed, N_{k} skewness {:.4} → {:.4}", h0.skewness, h1.skewness),
    )
}

// ── 10 ───────────────────────────────────────────────────────────────

fn textbook_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let saa: f64 = a.iter().map(|x| x * x).sum();
    let sbb: f64 = b.iter().map(|y| y * y).sum();
    (n * sab - sa * sb) / ((n * saa - sa * sa).sqrt() * (n * sbb - sb * sb).sqrt())
}

/// Skewness from raw moments.
fn raw_moment_skewness(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let e1 = v.iter().sum::<f64>() / n;
    let e2 = v.iter().map(|x| x * x).sum::<f64>() / n;
    let e3 = v.iter().map(|x| x * x * x).sum::<f64>() / n;
    let var = e2 - e1 * e1;
    (e3 - 3.0 * e1 * e2 + 2.0 * e1.powi(3)) / var.powf(1.5)
}

/// N_k by full sort of an exhaustive distance table.
fn exhaustive_counts(q: &DMatrix<f64>, t: &DMatrix<f64>, k: usize, exclude_self: bool) -> Vec<usize> {
    let mut counts = vec![0; t.nrows()];
    for i in 0..q.nrows() {
        let mut table: Vec<(f64, usize)> = (0..t.nrows())
            .filter(|&j| !(exclude_self && i == j))
            .map(|j| ((q.row(i) - t.row(j)).norm_squared(), j))
            .collect();
        table.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in table.iter().take(k) {
            counts[j] += 1;
        }
    }
    counts
}

fn diagnostics_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut dp, mut ds): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let n = rng.random_range(5..60);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = a.iter().map(|x| 0.5 * x + rng.random_range(-1.0..1.0)).collect();
        let skewed: Vec<f64> = (0..n).map(|_| rng.random_range(0.0f64..1.0).powi(3)).collect();
        dp = dp.max((pearson_correlation(&a, &b).unwrap() - textbook_pearson(&a, &b)).abs());
        ds = ds.max((skewness(&skewed).unwrap() - raw_moment_skewness(&skewed)).abs());
    }

    let mut mismatches = 0;
    for trial in 0..10 {
        let d = 2 + trial % 4;
        let (qm, tm) = (gaussian(&mut rng, 20, d), gaussian(&mut rng, 20, d));
        let (qs, ts) = (space_from(&qm, "q"), space_from(&tm, "t"));
        for k in [1, 3, 5] {
            let within = hubness_counts(&ts, &ts, k, HubnessMode::WithinSpace, None).unwrap();
            let cross = hubness_counts(&qs, &ts, k, HubnessMode::CrossLingual, None).unwrap();
            mismatches += usize::from(within.counts != exhaustive_counts(&tm, &tm, k, true));
            mismatches += usize::from(cross.counts != exhaustive_counts(&qm, &tm, k, false));
        }
    }
    outcome(
        dp <= STAT_TOL && ds <= STAT_TOL && mismatches == 0,
        format!("50 samples: |Δr| {dp:.1e}, |Δskew| {ds:.1e}; hubness tables: {mismatches}/60 mismatches"),
    )
}

fn main() -> ExitCode {
    let results = [
        criterion(1, "orthogonality", 5, orthogonality),
        criterion(2, "procrustes recovery", 30, procrustes_recovery),
        criterion(3, "least-squares optimality", 5, ls_optimality),
        criterion(4, "cca correctness", 10, cca_correctness),
        criterion(5, "ranking gradient", 10, ranking_gradient),
        criterion(6, "orthogonal ranking behavior", 60, ort_behavior),
        criterion(7, "hungarian oracle", 10, hungarian_oracle),
        criterion(8, "sts invariants", 10, sts_invariants),
        criterion(9, "monolingual invariance", 30, monolingual_invariance),
        criterion(10, "diagnostics oracles", 10, diagnostics_oracles),
    ];
    println!("[SKIP] criterion 11 full-scale reproduction: opt-in, see scripts/reproduce_track4a.sh");
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
