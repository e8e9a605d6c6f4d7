use crate::error::{Error, Result};
use crate::par;

/// Exact k nearest neighbors (self excluded), each row sorted by distance
/// then index.
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    pub n: usize,
    pub k: usize,
    /// `[n, k]`
    pub indices: Vec<usize>,
    /// `[n, k]` Euclidean distances.
    pub dists: Vec<f64>,
}

/// Brute-force Euclidean k-NN over row-major `[n, d]` points.
pub fn knn_graph(points: &[f64], d: usize, k: usize) -> Result<Knn> {
    if d == 0 || !points.len().is_multiple_of(d) {
        return Err(Error::shape(
            "knn_graph",
            format!("{} values not divisible by dimension {d}", points.len()),
        ));
    }
    let n = points.len() / d;
    if k == 0 || n <= k {
        return Err(Error::InvalidArgument(format!(
            "k-NN needs 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let rows: Vec<Vec<(f64, usize)>> = par::map_range(n, |i| {
        let xi = &points[i * d..(i + 1) * d];
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let xj = &points[j * d..(j + 1) * d];
                let s: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
                (s, j)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if cand.len() > k {
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
        }
        cand.sort_by(cmp);
        cand
    });
    let mut indices = Vec::with_capacity(n * k);
    let mut dists = Vec::with_capacity(n * k);
    for row in rows {
        for (s, j) in row {
            indices.push(j);
            dists.push(s.sqrt());
        }
    }
    Ok(Knn { n, k, indices, dists })
}

/// Symmetric fuzzy membership graph in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph {
    pub n: usize,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl FuzzyGraph {
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }
}

const SIGMA_TOL: f64 = 1e-8;
const SIGMA_ITERS: usize = 128;
const MIN_DIST_SCALE: f64 = 1e-3;

fn membership_sum(dists: &[f64], rho: f64, sigma: f64) -> f64 {
    dists
        .iter()
        .map(|&d| {
            let e = d - rho;
            if e > 0.0 {
                (-e / sigma).exp()
            } else {
                1.0
            }
        })
        .sum()
}

/// `|Σ_j exp(-max(0, d_ij - rho_i)/sigma_i) - log2(k)|` for point `i`.
pub fn sigma_residual(knn: &Knn, graph: &FuzzyGraph, i: usize) -> f64 {
    let d = &knn.dists[i * knn.k..(i + 1) * knn.k];
    (membership_sum(d, graph.rho[i], graph.sigma[i]) - (knn.k as f64).log2()).abs()
}

fn smooth_knn(dists: &[f64], mean_all: f64) -> (f64, f64) {
    let k = dists.len();
    let target = (k as f64).log2();
    let rho = dists.iter().copied().find(|&d| d > 0.0).unwrap_or(0.0);
    let (mut lo, mut hi, mut mid) = (0.0f64, f64::INFINITY, 1.0f64);
    for _ in 0..SIGMA_ITERS {
        let psum = membership_sum(dists, rho, mid);
        if (psum - target).abs() < SIGMA_TOL {
            // solved; the floor below is only for unreachable targets
            return (rho, mid);
        }
        if psum > target {
            hi = mid;
            mid = 0.5 * (lo + hi);
        } else {
            lo = mid;
            mid = if hi.is_infinite() { mid * 2.0 } else { 0.5 * (lo + hi) };
        }
    }
    let mean_i = dists.iter().sum::<f64>() / k as f64;
    let floor = MIN_DIST_SCALE * if rho > 0.0 { mean_i } else { mean_all };
    (rho, mid.max(floor))
}

/// Per-point bandwidth search and fuzzy union `w + wᵀ - w∘wᵀ`.
pub fn fuzzy_simplicial_set(knn: &Knn) -> FuzzyGraph {
    let (n, k) = (knn.n, knn.k);
    let mean_all = knn.dists.iter().sum::<f64>() / knn.dists.len().max(1) as f64;
    let rs: Vec<(f64, f64)> = par::map_range(n, |i| smooth_knn(&knn.dists[i * k..(i + 1) * k], mean_all));
    let rho: Vec<f64> = rs.iter().map(|r| r.0).collect();
    let sigma: Vec<f64> = rs.iter().map(|r| r.1).collect();

    // directed memberships keyed by the unordered pair
    let mut directed: Vec<(usize, usize, bool, f64)> = Vec::with_capacity(n * k);
    for i in 0..n {
        for p in 0..k {
            let j = knn.indices[i * k + p];
            let e = knn.dists[i * k + p] - rho[i];
            let w = if e > 0.0 { (-e / sigma[i]).exp() } else { 1.0 };
            if w > 0.0 {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                directed.push((a, b, i < j, w));
            }
        }
    }
    directed.sort_by_key(|x| (x.0, x.1, x.2));
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * directed.len());
    let mut q = 0;
    while q < directed.len() {
        let (a, b) = (directed[q].0, directed[q].1);
        let (mut fwd, mut bwd) = (0.0, 0.0);
        while q < directed.len() && directed[q].0 == a && directed[q].1 == b {
            if directed[q].2 {
                fwd = directed[q].3;
            } else {
                bwd = directed[q].3;
            }
            q += 1;
        }
        let w = fwd + bwd - fwd * bwd;
        if w > 0.0 {
            entries.push((a, b, w));
            entries.push((b, a, w));
        }
    }
    entries.sort_by_key(|x| (x.0, x.1));
    let mut row_ptr = vec![0usize; n + 1];
    for &(i, _, _) in &entries {
        row_ptr[i + 1] += 1;
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    FuzzyGraph {
        n,
        rho,
        sigma,
        row_ptr,
        cols: entries.iter().map(|e| e.1).collect(),
        vals: entries.iter().map(|e| e.2).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_middle_point() {
        let pts = [0.0, 1.0, 3.0];
        let knn = knn_graph(&pts, 1, 1).unwrap();
        assert_eq!(knn.indices, vec![1, 0, 1]);
        assert_eq!(knn.dists, vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn identical_points() {
        let pts = vec![0.5; 20];
        let knn = knn_graph(&pts, 2, 4).unwrap();
        assert!(knn.dists.iter().all(|&d| d == 0.0));
        let g = fuzzy_simplicial_set(&knn);
        assert!(g.vals.iter().all(|v| v.is_finite() && *v > 0.0 && *v <= 1.0));
    }

    #[test]
    fn equidistant_neighbors_equal_weights() {
        // center plus four points on a unit cross
        let pts = [0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0];
        let knn = knn_graph(&pts, 2, 4).unwrap();
        let g = fuzzy_simplicial_set(&knn);
        let w: Vec<f64> = g.row(0).map(|(_, v)| v).collect();
        assert_eq!(w.len(), 4);
        assert!(w.iter().all(|&v| v == w[0]));
    }

    #[test]
    fn near_tied_neighbors_still_calibrate() {
        // the first two neighbours differ by 3e-4, so sigma lands well under
        // 1e-3 of the mean distance
        let (rho, sigma) = smooth_knn(&[1.1043, 1.1046, 1.66], 1.0);
        assert!(sigma < 1e-3);
        assert!((membership_sum(&[1.1043, 1.1046, 1.66], rho, sigma) - 3f64.log2()).abs() < 1e-8);
    }

    #[test]
    fn k_must_be_below_n() {
        assert!(knn_graph(&[0.0, 1.0], 1, 2).is_err());
    }
}
