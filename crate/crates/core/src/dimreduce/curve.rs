/// Fits `a`, `b` of the low-dimensional similarity `1 / (1 + a·x^(2b))` to
/// the target curve (1 below `min_dist`, `exp(-(x - min_dist)/spread)`
/// beyond) by Levenberg–Marquardt least squares on 300 points in
/// `[0, 3·spread]`.
pub fn fit_ab(spread: f64, min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if x < min_dist {
                1.0
            } else {
                (-(x - min_dist) / spread).exp()
            }
        })
        .collect();
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let f = 1.0 / (1.0 + a * x.powf(2.0 * b));
                (f - y) * (f - y)
            })
            .sum()
    };
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let mut cur = sse(a, b);
    for _ in 0..500 {
        // normal equations JᵀJ δ = -Jᵀr
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x <= 0.0 {
                continue;
            }
            let p = x.powf(2.0 * b);
            let den = 1.0 + a * p;
            let f = 1.0 / den;
            let r = f - y;
            let da = -p / (den * den);
            let db = -a * p * 2.0 * x.ln() / (den * den);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let (m11, m22) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
        let det = m11 * m22 - jab * jab;
        if det.abs() < 1e-300 {
            break;
        }
        let step_a = -(m22 * ga - jab * gb) / det;
        let step_b = -(m11 * gb - jab * ga) / det;
        let (na, nb) = (a + step_a, b + step_b);
        let next = if na > 0.0 && nb > 0.0 {
            sse(na, nb)
        } else {
            f64::INFINITY
        };
        if next < cur {
            let improvement = cur - next;
            a = na;
            b = nb;
            cur = next;
            lambda = (lambda / 10.0).max(1e-12);
            if improvement < 1e-16 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_min_dist_coefficients() {
        let (a, b) = fit_ab(1.0, 0.0);
        assert!((a - 1.929).abs() < 5e-3, "a = {a}");
        assert!((b - 0.7915).abs() < 5e-3, "b = {b}");
    }

    #[test]
    fn default_min_dist_coefficients() {
        let (a, b) = fit_ab(1.0, 0.1);
        assert!((a - 1.577).abs() < 5e-3, "a = {a}");
        assert!((b - 0.895).abs() < 5e-3, "b = {b}");
    }
}
