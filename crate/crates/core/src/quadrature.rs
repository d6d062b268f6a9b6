//! Quadrature rules on `[0, 1]`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// `n`-point Gauss–Legendre rule mapped to `[0, 1]` (weights sum to 1).
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n > 0, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like first guess, refined by Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    /// Equal-weight collocation at the midpoints `(i + ½)/n`.
    pub fn collocation(n: usize) -> Self {
        assert!(n > 0, "need at least one node");
        Self {
            nodes: (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Positive weights, nodes strictly inside `(0, 1)`, weights summing to 1.
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() || self.nodes.len() != self.weights.len() {
            return Err("nodes and weights must be non-empty and of equal length".into());
        }
        if self.nodes.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err("quadrature nodes must lie strictly inside (0, 1)".into());
        }
        if self.weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
            return Err("quadrature weights must be positive".into());
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("quadrature weights sum to {total}, not 1"));
        }
        Ok(())
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
        for n in [1, 2, 5, 30] {
            let q = Quadrature::gauss_legendre(n);
            q.validate().unwrap();
            for k in 0..2 * n {
                let got = q.integrate(|x| x.powi(k as i32));
                let want = 1.0 / (k as f64 + 1.0);
                assert!((got - want).abs() < 1e-14, "n={n} k={k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn two_point_nodes() {
        let q = Quadrature::gauss_legendre(2);
        let off = 0.5 / 3f64.sqrt();
        assert!((q.nodes[0] - (0.5 - off)).abs() < 1e-15);
        assert!((q.nodes[1] - (0.5 + off)).abs() < 1e-15);
        assert!(q.nodes[0] < q.nodes[1]);
    }

    #[test]
    fn collocation_grid() {
        let q = Quadrature::collocation(31);
        q.validate().unwrap();
        assert_eq!(q.len(), 31);
        assert!((q.nodes[15] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_rules() {
        let bad = Quadrature {
            nodes: vec![0.0, 0.5],
            weights: vec![0.5, 0.5],
        };
        assert!(bad.validate().is_err());
        let unnormalized = Quadrature {
            nodes: vec![0.5],
            weights: vec![2.0],
        };
        assert!(unnormalized.validate().is_err());
    }
}
