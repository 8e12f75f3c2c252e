//! Maximum-weight bipartite matching (Kuhn-Munkres with potentials).
//!
//! The rectangular problem is padded to a square assignment with zero-weight
//! dummy rows or columns, solved in `O(n³)`, and then the optimum is moved to
//! the lexicographically smallest optimal pair set by walking alternating
//! paths through the tight (zero reduced cost) edges of the final duals.

use std::collections::VecDeque;

/// Maximum-weight matching of size `min(nx, ny)` for an `nx × ny` weight
/// matrix given as rows. Pairs `(row, col)` are returned sorted by row.
///
/// # Panics
///
/// If rows have different lengths or any weight is non-finite.
pub fn hungarian_matching(weights: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let nx = weights.len();
    let ny = weights.first().map_or(0, Vec::len);
    assert!(weights.iter().all(|r| r.len() == ny), "ragged weight matrix");
    assert!(
        weights.iter().flatten().all(|w| w.is_finite()),
        "weights must be finite"
    );
    if nx == 0 || ny == 0 {
        return Vec::new();
    }
    let n = nx.max(ny);
    let cost = |i: usize, j: usize| -> f64 {
        if i < nx && j < ny {
            -weights[i][j]
        } else {
            0.0
        }
    };
    let scale = 1.0 + weights.iter().flatten().fold(0.0f64, |a, w| a.max(w.abs()));
    let (mut col_of, u, v) = solve_assignment(n, &cost);
    let tol = 64.0 * n as f64 * f64::EPSILON * scale;
    let tight = |i: usize, j: usize| cost(i, j) - u[i] - v[j] <= tol;
    lexicographic_refine(n, nx, &mut col_of, &tight);

    (0..nx)
        .filter(|&i| col_of[i] < ny)
        .map(|i| (i, col_of[i]))
        .collect()
}

/// Minimum-cost assignment on an `n × n` cost function. Returns the column
/// of every row and the row/column potentials `u`, `v` with
/// `cost(i, j) ≥ u[i] + v[j]`, equality on assigned pairs.
fn solve_assignment(n: usize, cost: &dyn Fn(usize, usize) -> f64) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based with a sentinel column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    (col_of, u[1..].to_vec(), v[1..].to_vec())
}

/// Rewrites a perfect tight matching into the lexicographically smallest
/// one over the first `real_rows` rows.
fn lexicographic_refine(
    n: usize,
    real_rows: usize,
    col_of: &mut [usize],
    tight: &dyn Fn(usize, usize) -> bool,
) {
    let mut row_of = vec![0; n];
    for (i, &j) in col_of.iter().enumerate() {
        row_of[j] = i;
    }
    for i in 0..real_rows {
        let freed = col_of[i];
        for j in 0..freed {
            let owner = row_of[j];
            if owner <= i || !tight(i, j) {
                continue;
            }
            // can `owner` move away from `j` so that `freed` gets covered?
            if let Some(path) = alternating_path(n, i, owner, freed, col_of, &row_of, tight) {
                // path: (row, new column) moves, applied in order
                col_of[i] = j;
                row_of[j] = i;
                for (r, c) in path {
                    col_of[r] = c;
                    row_of[c] = r;
                }
                break;
            }
        }
    }
}

/// BFS over tight edges from `start` (a row that lost its column) to the
/// free column `target`, using only rows after `locked`.
fn alternating_path(
    n: usize,
    locked: usize,
    start: usize,
    target: usize,
    col_of: &[usize],
    row_of: &[usize],
    tight: &dyn Fn(usize, usize) -> bool,
) -> Option<Vec<(usize, usize)>> {
    // parent[c] = row that reaches column c
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen_row = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen_row[start] = true;
    while let Some(r) = queue.pop_front() {
        for c in 0..n {
            if parent[c].is_some() || c == col_of[r] || !tight(r, c) {
                continue;
            }
            if c == target {
                parent[c] = Some(r);
                let mut moves = Vec::new();
                let mut col = c;
                loop {
                    let row = parent[col].expect("path parent");
                    moves.push((row, col));
                    if row == start {
                        break;
                    }
                    col = col_of[row];
                }
                return Some(moves);
            }
            let owner = row_of[c];
            if owner <= locked || seen_row[owner] {
                continue;
            }
            parent[c] = Some(r);
            seen_row[owner] = true;
            queue.push_back(owner);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn total(w: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(i, j)| w[i][j]).sum()
    }

    /// Every injective assignment of the smaller side, best total kept.
    fn brute_force(w: &[Vec<f64>]) -> f64 {
        let nx = w.len();
        let ny = w[0].len();
        fn rec(w: &[Vec<f64>], i: usize, used: &mut Vec<bool>, acc: &mut Vec<(usize, usize)>, best: &mut f64, need: usize) {
            if acc.len() == need {
                let mut pairs = acc.clone();
                pairs.sort();
                let t: f64 = pairs.iter().map(|&(a, b)| w[a][b]).sum();
                if t > *best {
                    *best = t;
                }
                return;
            }
            if i == w.len() {
                return;
            }
            // skip row i only when rows outnumber columns
            if w.len() - i > need - acc.len() {
                rec(w, i + 1, used, acc, best, need);
            }
            for j in 0..w[0].len() {
                if !used[j] {
                    used[j] = true;
                    acc.push((i, j));
                    rec(w, i + 1, used, acc, best, need);
                    acc.pop();
                    used[j] = false;
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        rec(w, 0, &mut vec![false; ny], &mut Vec::new(), &mut best, nx.min(ny));
        best
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(hungarian_matching(&[vec![1.0]]), [(0, 0)]);
        assert!(hungarian_matching(&[]).is_empty());
        assert!(hungarian_matching(&[vec![]]).is_empty());
    }

    #[test]
    fn two_by_two_example() {
        let w = vec![vec![0.9, 0.1], vec![0.8, 0.2]];
        assert_eq!(hungarian_matching(&w), [(0, 0), (1, 1)]);
    }

    #[test]
    fn negative_weights_still_full_size() {
        let w = vec![vec![-1.0, -2.0], vec![-3.0, -0.5]];
        assert_eq!(hungarian_matching(&w), [(0, 0), (1, 1)]);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let ones = vec![vec![1.0; 3]; 3];
        assert_eq!(hungarian_matching(&ones), [(0, 0), (1, 1), (2, 2)]);
        let wide = vec![vec![1.0; 4]; 2];
        assert_eq!(hungarian_matching(&wide), [(0, 0), (1, 1)]);
        let tall = vec![vec![1.0; 2]; 4];
        assert_eq!(hungarian_matching(&tall), [(0, 0), (1, 1)]);
        // (0,1),(1,0) ties with (0,0),(1,1); the latter is smaller
        let w = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert_eq!(hungarian_matching(&w), [(0, 0), (1, 1)]);
        let w = vec![vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert_eq!(hungarian_matching(&w), [(0, 1), (1, 0)]);
    }

    #[test]
    fn random_square_matches_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let w: Vec<Vec<f64>> = (0..5).map(|_| (0..5).map(|_| rng.random::<f64>()).collect()).collect();
            let pairs = hungarian_matching(&w);
            assert_eq!(pairs.len(), 5);
            assert_eq!(total(&w, &pairs), brute_force(&w));
        }
    }

    #[test]
    fn random_rectangular_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let nx = rng.random_range(1..=6);
            let ny = rng.random_range(1..=6);
            let w: Vec<Vec<f64>> = (0..nx)
                .map(|_| (0..ny).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let pairs = hungarian_matching(&w);
            assert_eq!(pairs.len(), nx.min(ny));
            let mut rows: Vec<_> = pairs.iter().map(|p| p.0).collect();
            let mut cols: Vec<_> = pairs.iter().map(|p| p.1).collect();
            rows.dedup();
            cols.sort();
            cols.dedup();
            assert_eq!(rows.len(), pairs.len());
            assert_eq!(cols.len(), pairs.len());
            assert_eq!(total(&w, &pairs), brute_force(&w));
        }
    }
}
