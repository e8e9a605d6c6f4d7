//! Full-covariance multivariate Gaussian densities.

use std::f64::consts::PI;

pub const RIDGE: f64 = 1e-6;

/// Lower Cholesky factor of a `d × d` row-major SPD matrix.
pub fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    /// Row-major `d × d` covariance (after any ridge).
    pub cov: Vec<f64>,
    chol: Vec<f64>,
    log_norm: f64,
}

impl Gaussian {
    /// Factorizes `cov`, adding `1e-6·I` (growing tenfold) until the
    /// Cholesky factorization succeeds.
    pub fn new(mean: Vec<f64>, mut cov: Vec<f64>) -> Self {
        let d = mean.len();
        // symmetrize against round-off
        for i in 0..d {
            for j in 0..i {
                let v = 0.5 * (cov[i * d + j] + cov[j * d + i]);
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
        }
        let mut ridge = RIDGE;
        let chol = loop {
            if let Some(l) = cholesky(&cov, d) {
                break l;
            }
            let scale = (0..d).map(|i| cov[i * d + i].abs()).fold(0.0, f64::max).max(1.0);
            for i in 0..d {
                cov[i * d + i] += ridge * if ridge > RIDGE { scale } else { 1.0 };
            }
            ridge *= 10.0;
        };
        let log_det: f64 = (0..d).map(|i| 2.0 * chol[i * d + i].ln()).sum();
        let log_norm = -0.5 * (d as f64 * (2.0 * PI).ln() + log_det);
        Self {
            mean,
            cov,
            chol,
            log_norm,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let d = self.mean.len();
        // forward substitution L z = x - mu
        let mut z = [0.0f64; 64];
        let mut zv;
        let zs: &mut [f64] = if d <= 64 {
            &mut z[..d]
        } else {
            zv = vec![0.0; d];
            &mut zv
        };
        let mut quad = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for k in 0..i {
                s -= self.chol[i * d + k] * zs[k];
            }
            zs[i] = s / self.chol[i * d + i];
            quad += zs[i] * zs[i];
        }
        self.log_norm - 0.5 * quad
    }

    /// Weighted maximum-likelihood estimate plus `RIDGE·I`. The ridge is added
    /// every time so that a component spanning fewer than `d + 1` points keeps
    /// the same density from one EM step to the next. Falls back to
    /// `fallback` when the total weight is negligible.
    pub fn fit_weighted(points: &[f64], d: usize, w: &[f64], fallback: &Gaussian) -> Self {
        let total: f64 = w.iter().sum();
        if total < 1e-10 {
            return fallback.clone();
        }
        let mut mean = vec![0.0; d];
        for (x, &wi) in points.chunks(d).zip(w) {
            for (m, xv) in mean.iter_mut().zip(x) {
                *m += wi * xv;
            }
        }
        for m in &mut mean {
            *m /= total;
        }
        let mut cov = vec![0.0; d * d];
        for (x, &wi) in points.chunks(d).zip(w) {
            if wi == 0.0 {
                continue;
            }
            for i in 0..d {
                let di = x[i] - mean[i];
                for j in 0..=i {
                    cov[i * d + j] += wi * di * (x[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in 0..=i {
                let v = cov[i * d + j] / total;
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
            cov[i * d + i] += RIDGE;
        }
        Self::new(mean, cov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_density() {
        let g = Gaussian::new(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]);
        let expect = -(2.0 * PI).ln();
        assert!((g.log_pdf(&[0.0, 0.0]) - expect).abs() < 1e-12);
        assert!((g.log_pdf(&[1.0, 0.0]) - (expect - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn correlated_density_matches_closed_form() {
        // Σ = [[2, 1], [1, 2]], det 3, Σ⁻¹ = [[2,-1],[-1,2]]/3
        let g = Gaussian::new(vec![1.0, -1.0], vec![2.0, 1.0, 1.0, 2.0]);
        let (dx, dy) = (0.5, 0.25);
        let quad = (2.0 * dx * dx - 2.0 * dx * dy + 2.0 * dy * dy) / 3.0;
        let expect = -(2.0 * PI).ln() - 0.5 * 3f64.ln() - 0.5 * quad;
        assert!((g.log_pdf(&[1.5, -0.75]) - expect).abs() < 1e-12);
    }

    #[test]
    fn singular_covariance_is_ridged() {
        let g = Gaussian::new(vec![0.0, 0.0], vec![1.0, 1.0, 1.0, 1.0]);
        assert!(g.log_pdf(&[0.0, 0.0]).is_finite());
        let z = Gaussian::new(vec![0.0], vec![0.0]);
        assert!(z.cov[0] >= RIDGE);
    }
}
