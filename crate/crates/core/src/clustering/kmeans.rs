use rand::Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::seed::SeedStream;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// Row-major `[k, d]`.
    pub centers: Vec<f64>,
    pub inertia: f64,
}

const MAX_ITER: usize = 300;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centers: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, ctr) in centers.chunks(d).enumerate() {
        let dist = sq_dist(x, ctr);
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

fn plus_plus_seed(points: &[f64], n: usize, d: usize, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut centers = Vec::with_capacity(k * d);
    let first = rng.gen_range(0..n);
    centers.extend_from_slice(&points[first * d..(first + 1) * d]);
    let mut dist: Vec<f64> = points.chunks(d).map(|x| sq_dist(x, &centers[..d])).collect();
    for _ in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if r < w {
                    idx = i;
                    break;
                }
                r -= w;
            }
            idx
        } else {
            rng.gen_range(0..n)
        };
        let c = points[pick * d..(pick + 1) * d].to_vec();
        for (x, dv) in points.chunks(d).zip(dist.iter_mut()) {
            *dv = dv.min(sq_dist(x, &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

fn lloyd(points: &[f64], n: usize, d: usize, k: usize, mut centers: Vec<f64>) -> KMeansResult {
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_ITER {
        let assign: Vec<(usize, f64)> = par::map_range(n, |i| nearest(&points[i * d..(i + 1) * d], &centers, d));
        let changed = assign.iter().zip(&labels).any(|((c, _), &old)| *c != old);
        for (l, (c, _)) in labels.iter_mut().zip(&assign) {
            *l = *c;
        }
        let mut counts = vec![0usize; k];
        let mut sums = vec![0.0; k * d];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for j in 0..d {
                sums[l * d + j] += points[i * d + j];
            }
        }
        // empty clusters: split the largest by stealing its farthest point
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let big = (0..k).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
            if counts[big] < 2 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| labels[i] == big)
                .max_by(|&a, &b| {
                    let da = sq_dist(&points[a * d..(a + 1) * d], &centers[big * d..(big + 1) * d]);
                    let db = sq_dist(&points[b * d..(b + 1) * d], &centers[big * d..(big + 1) * d]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .unwrap();
            labels[far] = c;
            counts[big] -= 1;
            counts[c] = 1;
            for j in 0..d {
                sums[big * d + j] -= points[far * d + j];
                sums[c * d + j] = points[far * d + j];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..d {
                    centers[c * d + j] = sums[c * d + j] / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| {
            sq_dist(
                &points[i * d..(i + 1) * d],
                &centers[labels[i] * d..(labels[i] + 1) * d],
            )
        })
        .sum();
    KMeansResult {
        labels,
        centers,
        inertia,
    }
}

/// Lloyd's algorithm with k-means++ seeding; keeps the lowest-inertia run of
/// `n_init`. `points` is row-major `[n, d]`.
pub fn kmeans(points: &[f64], d: usize, k: usize, n_init: usize, seed: SeedStream) -> Result<KMeansResult> {
    if d == 0 || !points.len().is_multiple_of(d) {
        return Err(Error::shape(
            "kmeans",
            format!("{} values not divisible by dimension {d}", points.len()),
        ));
    }
    let n = points.len() / d;
    if k == 0 || n < k {
        return Err(Error::InvalidArgument(format!(
            "k-means needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut best: Option<KMeansResult> = None;
    for run in 0..n_init.max(1) {
        let mut rng = seed.index(run as u64).rng();
        let init = plus_plus_seed(points, n, d, k, &mut rng);
        let res = lloyd(points, n, d, k, init);
        if best.as_ref().is_none_or(|b| res.inertia < b.inertia) {
            best = Some(res);
        }
    }
    Ok(best.unwrap())
}
