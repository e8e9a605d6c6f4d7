//! Maximum-weight perfect matching on small square integer matrices.

/// Minimum-cost assignment (Kuhn–Munkres with potentials, O(n³)).
/// `cost` is row-major `n × n`. Returns `col[row]`.
fn min_cost_assignment(cost: &[i64], n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays with a virtual column 0
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
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
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

fn best_value(weights: &[i64], rows: &[usize], cols: &[usize], n: usize) -> i64 {
    let m = rows.len();
    let mut cost = vec![0i64; m * m];
    for (a, &r) in rows.iter().enumerate() {
        for (b, &c) in cols.iter().enumerate() {
            cost[a * m + b] = -weights[r * n + c];
        }
    }
    let asg = min_cost_assignment(&cost, m);
    asg.iter()
        .enumerate()
        .map(|(a, &b)| weights[rows[a] * n + cols[b]])
        .sum()
}

/// Permutation maximizing `Σ weights[i][perm[i]]`; among optimal
/// permutations, the lexicographically smallest one.
pub fn max_weight_assignment(weights: &[i64], n: usize) -> Vec<usize> {
    assert_eq!(weights.len(), n * n);
    let all: Vec<usize> = (0..n).collect();
    let mut remaining_value = best_value(weights, &all, &all, n);
    let mut free_cols: Vec<usize> = all.clone();
    let mut perm = Vec::with_capacity(n);
    for r in 0..n {
        let rest_rows: Vec<usize> = (r + 1..n).collect();
        let mut chosen = None;
        for (pos, &c) in free_cols.iter().enumerate() {
            let rest_cols: Vec<usize> = free_cols
                .iter()
                .enumerate()
                .filter(|&(q, _)| q != pos)
                .map(|(_, &x)| x)
                .collect();
            let v = weights[r * n + c] + best_value(weights, &rest_rows, &rest_cols, n);
            if v == remaining_value {
                chosen = Some((pos, c, v - weights[r * n + c]));
                break;
            }
        }
        let (pos, c, rest) = chosen.expect("an optimal completion always exists");
        perm.push(c);
        free_cols.remove(pos);
        remaining_value = rest;
    }
    perm
}
