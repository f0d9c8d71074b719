//! Gauss–Legendre rules on `[-1, 1]`, cached per order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::hp::legendre::legendre_with_derivative;

#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `∫_a^b f` with the rule mapped to `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (c, r) = ((a + b) / 2.0, (b - a) / 2.0);
        let mut s = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + r * t);
        }
        s * r
    }
}

/// The `n`-point rule, exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard.entry(n).or_insert_with(|| Arc::new(compute_rule(n))).clone()
}

fn compute_rule(n: usize) -> GaussRule {
    assert!(n >= 1, "Gauss rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on L_n
        let k = i as f64 + 1.0;
        let nf = n as f64;
        let mut x = (std::f64::consts::PI * (k - 0.25) / (nf + 0.5)).cos() * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_degree_2n_minus_1() {
        for n in [1usize, 2, 5, 10, 20, 40] {
            let rule = gauss_legendre(n);
            for deg in 0..2 * n {
                let got = rule.integrate(-1.0, 1.0, |t| t.powi(deg as i32));
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn weights_sum_to_two() {
        let r = gauss_legendre(77);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }
}
