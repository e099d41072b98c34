//! Gauss–Legendre quadrature on [-1, 1].

use std::f64::consts::PI;

pub(crate) struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub(crate) fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            weights[i] = w;
            nodes[n - 1 - i] = -x;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub(crate) fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let q = GaussLegendre::new(8);
        // exact for degree ≤ 15
        let v = q.integrate(|x| x.powi(14) + 3.0 * x.powi(3) + 1.0);
        assert!((v - (2.0 / 15.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [5, 16, 63, 128] {
            let q = GaussLegendre::new(n);
            assert!((q.integrate(|_| 1.0) - 2.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn smooth_function() {
        let q = GaussLegendre::new(64);
        let v = q.integrate(|x| (1.0 + 0.5 * x * x).sqrt());
        // ∫_{-1}^{1} sqrt(1 + x²/2) dx
        let exact = 2.0 * 0.5 * ((1.5f64).sqrt() + 2f64.sqrt() * (0.5f64.sqrt() + 1.5f64.sqrt()).ln());
        assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
    }
}
