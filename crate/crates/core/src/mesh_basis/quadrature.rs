//! Gauss–Legendre quadrature.

use super::legendre;

/// Gauss–Legendre rule on [−1, 1]; exact for polynomials of degree ≤ 2n − 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for k in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, d, _) = legendre::values_and_derivatives(n, x);
                let dx = p[n] / d[n];
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let dp = legendre::values_and_derivatives(n, x).1[n];
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // nodes ascending, mirrored exactly about 0
            nodes[k] = -x;
            nodes[n - 1 - k] = x;
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The rule mapped to [0, 1].
    pub fn on_unit_interval(&self) -> (Vec<f64>, Vec<f64>) {
        let nodes = self.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let weights = self.weights.iter().map(|w| 0.5 * w).collect();
        (nodes, weights)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}
