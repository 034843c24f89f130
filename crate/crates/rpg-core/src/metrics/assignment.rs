//! Maximum-weight bipartite assignment.
//!
//! Multi-span scoring needs the best one-to-one alignment between predicted
//! and gold spans. This is the classic O(n^3) potential-based algorithm on
//! a square matrix; rectangular inputs are padded with zero-weight dummies.

/// Best one-to-one assignment of rows to columns. Returns the total weight
/// and, per row, the matched column (`None` for dummy matches when rows
/// outnumber columns).
pub fn max_sum_assignment(weights: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (0.0, vec![None; rows]);
    }
    let n = rows.max(cols);
    // Minimise negated weights over the padded square matrix.
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            -weights[i][j]
        } else {
            0.0
        }
    };

    // Potentials u/v and the matching p over 1-based columns; p[j] is the
    // row assigned to column j, 0 meaning free.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
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
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![None; rows];
    let mut total = 0.0;
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            assign[i - 1] = Some(j - 1);
            total += weights[i - 1][j - 1];
        }
    }
    (total, assign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(weights: &[Vec<f64>]) -> f64 {
        let cols = weights.first().map_or(0, Vec::len);
        let mut cols_left: Vec<usize> = (0..cols).collect();
        fn go(weights: &[Vec<f64>], row: usize, cols_left: &mut Vec<usize>) -> f64 {
            if row == weights.len() {
                return 0.0;
            }
            // Skipping this row entirely is allowed when columns run short.
            let mut best = go(weights, row + 1, cols_left);
            for k in 0..cols_left.len() {
                let c = cols_left.swap_remove(k);
                let sub = weights[row][c] + go(weights, row + 1, cols_left);
                best = best.max(sub);
                cols_left.push(c);
                let last = cols_left.len() - 1;
                cols_left.swap(k, last);
            }
            best
        }
        go(weights, 0, &mut cols_left)
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let rows = rng.random_range(1..=5);
            let cols = rng.random_range(1..=5);
            let w: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.random_range(0..=100) as f64 / 100.0).collect())
                .collect();
            let (total, assign) = max_sum_assignment(&w);
            let expect = brute_force(&w);
            assert!(
                (total - expect).abs() < 1e-9,
                "got {total}, want {expect} for {w:?} ({assign:?})"
            );
        }
    }

    #[test]
    fn assignment_is_a_matching() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let rows = rng.random_range(1..=6);
            let cols = rng.random_range(1..=6);
            let w: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.random()).collect())
                .collect();
            let (total, assign) = max_sum_assignment(&w);
            let mut seen = std::collections::BTreeSet::new();
            let mut sum = 0.0;
            for (i, a) in assign.iter().enumerate() {
                if let Some(j) = a {
                    assert!(seen.insert(*j), "column {j} used twice");
                    sum += w[i][*j];
                }
            }
            assert!((sum - total).abs() < 1e-9);
            if rows <= cols {
                assert!(assign.iter().all(Option::is_some), "all rows match when they fit");
            }
        }
    }

    #[test]
    fn picks_the_cross_pairing() {
        // Greedy on rows would take 0.9 then 0.0; the optimum crosses over.
        let w = vec![vec![0.9, 0.8], vec![0.9, 0.0]];
        let (total, assign) = max_sum_assignment(&w);
        assert!((total - 1.7).abs() < 1e-9);
        assert_eq!(assign, vec![Some(1), Some(0)]);
    }

    #[test]
    fn degenerate_shapes() {
        assert_eq!(max_sum_assignment(&[]), (0.0, vec![]));
        let (t, a) = max_sum_assignment(&[vec![]]);
        assert_eq!((t, a), (0.0, vec![None]));
        let (t, a) = max_sum_assignment(&[vec![0.4]]);
        assert_eq!((t, a), (0.4, vec![Some(0)]));
    }
}
