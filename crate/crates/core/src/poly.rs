//! Univariate polynomials in the monomial basis and piecewise polynomials
//! stored per interval in the local coordinate `s ∈ [-1, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    /// `coeffs[k]` multiplies `t^k`.
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Polynomial {
        let mut p = Polynomial { coeffs };
        if p.coeffs.is_empty() {
            p.coeffs.push(0.0);
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Value and derivative by a single Horner pass.
    pub fn eval_with_derivative(&self, t: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for c in self.coeffs.iter().rev() {
            d = d * t + v;
            v = v * t + c;
        }
        (v, d)
    }

    /// `Σ |c_k| R^k`, an upper bound of `sup_{|t| ≤ R} |p(t)|`.
    pub fn abs_bound(&self, radius: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * radius + c.abs())
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new(
            (0..n)
                .map(|k| self.coeffs.get(k).copied().unwrap_or(0.0) + other.coeffs.get(k).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    pub fn scale(&self, a: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| a * c).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// `p(α t + β)` expanded in the monomial basis of `t`.
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> Polynomial {
        let lin = Polynomial::new(vec![beta, alpha]);
        let mut out = Polynomial::new(vec![0.0]);
        for c in self.coeffs.iter().rev() {
            out = out.mul(&lin).add(&Polynomial::new(vec![*c]));
        }
        out
    }

    /// Split `p = (1 - t²) q + r` with `deg r ≤ 1`; returns `(q, r)`.
    pub fn divide_by_bubble(&self) -> (Polynomial, Polynomial) {
        // Division by -(t² - 1): run synthetic division on the top coefficients.
        let mut rem = self.coeffs.clone();
        let n = rem.len();
        if n <= 2 {
            return (Polynomial::new(vec![0.0]), Polynomial::new(rem));
        }
        let mut q = vec![0.0; n - 2];
        for k in (2..n).rev() {
            // t^k = t^{k-2}(t² - 1) + t^{k-2}
            let c = rem[k];
            q[k - 2] = -c;
            rem[k] = 0.0;
            rem[k - 2] += c;
        }
        rem.truncate(2);
        (Polynomial::new(q), Polynomial::new(rem))
    }
}

/// Continuous-or-not piecewise polynomial on `breaks[0] < ... < breaks[N]`.
/// Piece `i` lives on `[breaks[i], breaks[i+1]]` and is stored in the local
/// variable `s = 2(x - x_i)/h_i - 1`. Outside the breakpoints it is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    pub breaks: Vec<f64>,
    pub pieces: Vec<Polynomial>,
}

impl PiecewisePolynomial {
    pub fn new(breaks: Vec<f64>, pieces: Vec<Polynomial>) -> Result<PiecewisePolynomial> {
        if pieces.is_empty() || breaks.len() != pieces.len() + 1 {
            return Err(Error::Invalid(
                "a piecewise polynomial needs N pieces and N+1 breakpoints".into(),
            ));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("breakpoints must increase strictly".into()));
        }
        Ok(PiecewisePolynomial { breaks, pieces })
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    pub fn width(&self, i: usize) -> f64 {
        self.breaks[i + 1] - self.breaks[i]
    }

    /// Local coordinate of `x` in piece `i`.
    pub fn local(&self, i: usize, x: f64) -> f64 {
        2.0 * (x - self.breaks[i]) / self.width(i) - 1.0
    }

    /// Index of the piece containing `x` (closed on the right for the last piece).
    pub fn locate(&self, x: f64) -> Option<usize> {
        let n = self.pieces.len();
        if !(x >= self.breaks[0] && x <= self.breaks[n]) {
            return None;
        }
        let k = self.breaks.partition_point(|b| *b <= x);
        Some(k.saturating_sub(1).min(n - 1))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }

    /// Value and x-derivative.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        match self.locate(x) {
            None => (0.0, 0.0),
            Some(i) => {
                let (v, d) = self.pieces[i].eval_with_derivative(self.local(i, x));
                (v, d * 2.0 / self.width(i))
            }
        }
    }

    /// Values at the two ends of piece `i`.
    pub fn end_values(&self, i: usize) -> (f64, f64) {
        (self.pieces[i].eval(-1.0), self.pieces[i].eval(1.0))
    }

    /// Nodal values `v(x_0), ..., v(x_N)`, rejecting jumps larger than
    /// `1e-10` relative to the largest nodal magnitude.
    pub fn nodal_values(&self) -> Result<Vec<f64>> {
        let n = self.pieces.len();
        let mut vals = Vec::with_capacity(n + 1);
        vals.push(self.end_values(0).0);
        let scale = (0..n)
            .flat_map(|i| {
                let (a, b) = self.end_values(i);
                [a.abs(), b.abs()]
            })
            .fold(1.0f64, f64::max);
        for i in 0..n {
            let (a, b) = self.end_values(i);
            if i > 0 {
                let prev = self.end_values(i - 1).1;
                if (prev - a).abs() > 1e-10 * scale {
                    return Err(Error::Invalid(format!(
                        "discontinuous at node {i} (x = {}): {prev} vs {a}",
                        self.breaks[i]
                    )));
                }
            }
            vals.push(b);
        }
        Ok(vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bubble_division() {
        // p = (1 - t²)(2 + 3t) + (0.5 - t)
        let q = Polynomial::new(vec![2.0, 3.0]);
        let r = Polynomial::new(vec![0.5, -1.0]);
        let p = Polynomial::new(vec![1.0, -1.0, 0.0, 0.0])
            .add(&Polynomial::new(vec![1.0, 0.0, -1.0]).mul(&q))
            .add(&r.add(&Polynomial::new(vec![-1.0, 1.0])));
        let (q2, r2) = p.divide_by_bubble();
        for t in [-1.0, -0.3, 0.0, 0.7, 2.0] {
            assert!((q2.eval(t) - q.eval(t)).abs() < 1e-14);
            assert!((r2.eval(t) - r.eval(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn affine_composition() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.5, 3.0]);
        let c = p.compose_affine(0.5, -0.25);
        for t in [-1.0, 0.2, 1.5] {
            assert!((c.eval(t) - p.eval(0.5 * t - 0.25)).abs() < 1e-14);
        }
    }

    #[test]
    fn piecewise_locate_and_eval() {
        let pw = PiecewisePolynomial::new(
            vec![0.0, 0.5, 1.0],
            vec![Polynomial::new(vec![0.5, 0.5]), Polynomial::new(vec![0.5, -0.5])],
        )
        .unwrap();
        assert_eq!(pw.eval(0.5), 1.0);
        assert_eq!(pw.eval(0.0), 0.0);
        assert_eq!(pw.eval(1.0), 0.0);
        assert_eq!(pw.eval(1.5), 0.0);
        let (_, d) = pw.eval_with_derivative(0.25);
        assert!((d - 2.0).abs() < 1e-15);
        assert_eq!(pw.nodal_values().unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn jump_is_rejected() {
        let pw = PiecewisePolynomial::new(
            vec![0.0, 1.0, 2.0],
            vec![Polynomial::new(vec![0.0, 1.0]), Polynomial::new(vec![0.0])],
        )
        .unwrap();
        assert!(pw.nodal_values().is_err());
    }
}
