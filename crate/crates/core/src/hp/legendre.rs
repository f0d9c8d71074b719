//! Legendre polynomials normalized by `L_n(1) = 1`, and their antiderivatives.

/// `L_n(t)` by the three-term recurrence.
pub fn legendre(n: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `(L_n(t), L_n'(t))`.
pub fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, t);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        let d2 = ((2.0 * kf + 1.0) * (p1 + t * d1) - kf * d0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// `L_0(t), ..., L_n(t)` into `out`.
pub fn legendre_all(n: usize, t: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if n == 0 {
        return;
    }
    out.push(t);
    for k in 1..n {
        let kf = k as f64;
        let p = ((2.0 * kf + 1.0) * t * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(p);
    }
}

/// `∫_{-1}^t L_n`, which is `(L_{n+1} - L_{n-1}) / (2n + 1)` for `n ≥ 1`.
pub fn legendre_antideriv(n: usize, t: f64) -> f64 {
    if n == 0 {
        return t + 1.0;
    }
    (legendre(n + 1, t) - legendre(n - 1, t)) / (2.0 * n as f64 + 1.0)
}

/// Monomial coefficients of `L_n`.
pub fn legendre_coeffs(n: usize) -> Vec<f64> {
    let mut p0 = vec![1.0];
    if n == 0 {
        return p0;
    }
    let mut p1 = vec![0.0, 1.0];
    for k in 1..n {
        let kf = k as f64;
        let mut p2 = vec![0.0; k + 2];
        for (i, c) in p1.iter().enumerate() {
            p2[i + 1] += (2.0 * kf + 1.0) * c / (kf + 1.0);
        }
        for (i, c) in p0.iter().enumerate() {
            p2[i] -= kf * c / (kf + 1.0);
        }
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Monomial coefficients of `∫_{-1}^t L_n`.
pub fn legendre_antideriv_coeffs(n: usize) -> Vec<f64> {
    let c = legendre_coeffs(n);
    let mut out = vec![0.0; c.len() + 1];
    for (k, v) in c.iter().enumerate() {
        out[k + 1] = v / (k as f64 + 1.0);
    }
    // constant so that the value at -1 vanishes
    let at_minus_one: f64 = out
        .iter()
        .enumerate()
        .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
        .sum();
    out[0] -= at_minus_one;
    out
}
