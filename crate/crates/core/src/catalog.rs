//! Test functions with exact mixed partial derivatives and singular-set
//! metadata, and the extension across the re-entrant corner of the Fichera
//! domain.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// A scalar function on a subset of `R^d` with first-order mixed partials.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// `∂^α u(x)` for `α ∈ {0,1}^d` encoded as a bit mask (bit `j` is axis `j`).
    /// Returns NaN where the derivative is undefined.
    fn mixed(&self, x: &[f64], mask: u32) -> f64;

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = self.mixed(x, 1 << j);
        }
    }

    /// Points and lines where derivatives blow up; quadrature grades toward them.
    fn singular_set(&self) -> SingularSet {
        SingularSet::default()
    }

    /// `(name, params)` for reports.
    fn describe(&self) -> (String, String) {
        ("field".into(), String::new())
    }
}

/// Singular corners and edges of a function.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularSet {
    pub corners: Vec<Vec<f64>>,
    pub edges: Vec<SingularEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Univariate {
    Poly(Polynomial),
    /// `sin(ω t + φ)`
    Sin {
        omega: f64,
        phase: f64,
    },
    /// `exp(a t)`
    Exp {
        a: f64,
    },
}

impl Univariate {
    fn eval(&self, t: f64) -> (f64, f64) {
        match self {
            Univariate::Poly(p) => p.eval_with_derivative(t),
            Univariate::Sin { omega, phase } => {
                let arg = omega * t + phase;
                (arg.sin(), omega * arg.cos())
            }
            Univariate::Exp { a } => {
                let e = (a * t).exp();
                (e, a * e)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Term {
    /// `coef · dist(x, S)^λ` where `S` is the point `center` (no axis) or the
    /// line through `center` parallel to `axis`.
    Radial {
        coef: f64,
        lambda: f64,
        center: Vec<f64>,
        axis: Option<usize>,
    },
    /// `coef · Π_j f_j(x_j)`
    Separable { coef: f64, factors: Vec<Univariate> },
}

impl Term {
    fn value(&self, x: &[f64]) -> f64 {
        self.mixed(x, 0)
    }

    fn mixed(&self, x: &[f64], mask: u32) -> f64 {
        match self {
            Term::Radial {
                coef,
                lambda,
                center,
                axis,
            } => {
                if let Some(a) = axis {
                    if mask & (1 << a) != 0 {
                        return 0.0;
                    }
                }
                let mut q = 0.0;
                let mut prod = 1.0;
                for (j, (xj, cj)) in x.iter().zip(center).enumerate() {
                    if Some(j) == *axis {
                        continue;
                    }
                    let y = xj - cj;
                    q += y * y;
                    if mask & (1 << j) != 0 {
                        prod *= 2.0 * y;
                    }
                }
                let k = mask.count_ones() as i32;
                if q == 0.0 {
                    return if k == 0 { 0.0 } else { f64::NAN };
                }
                // d^k/dq^k q^{λ/2}
                let half = lambda / 2.0;
                let mut fk = 1.0;
                for i in 0..k {
                    fk *= half - i as f64;
                }
                coef * fk * q.powf(half - k as f64) * prod
            }
            Term::Separable { coef, factors } => {
                let mut v = *coef;
                for (j, (f, xj)) in factors.iter().zip(x).enumerate() {
                    let (val, der) = f.eval(*xj);
                    v *= if mask & (1 << j) != 0 { der } else { val };
                }
                v
            }
        }
    }
}

/// Singular line through `point` parallel to coordinate `axis`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularEdge {
    pub point: Vec<f64>,
    pub axis: usize,
}

/// A member of the weighted analytic class, given in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedFunction {
    pub dim: usize,
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub terms: Vec<Term>,
    pub corners: Vec<Vec<f64>>,
    pub edges: Vec<SingularEdge>,
    /// Corner weight; `+∞` for smooth functions.
    pub gamma_c: f64,
    /// Edge weight; `+∞` when there is no edge singularity.
    pub gamma_e: f64,
}

const GAMMA_SLACK: f64 = 1e-6;

impl WeightedFunction {
    fn smooth(dim: usize, name: &str, terms: Vec<Term>) -> WeightedFunction {
        WeightedFunction {
            dim,
            name: name.to_string(),
            params: BTreeMap::new(),
            terms,
            corners: Vec::new(),
            edges: Vec::new(),
            gamma_c: f64::INFINITY,
            gamma_e: f64::INFINITY,
        }
    }

    fn with_param(mut self, key: &str, v: f64) -> WeightedFunction {
        self.params.insert(key.to_string(), v);
        self
    }

    /// `u + v`, merging metadata (weights take the minimum).
    pub fn plus(&self, other: &WeightedFunction) -> Result<WeightedFunction> {
        if self.dim != other.dim {
            return Err(Error::Dimension("sum of functions of different dimension".into()));
        }
        let mut out = self.clone();
        out.name = format!("{}+{}", self.name, other.name);
        out.terms.extend(other.terms.iter().cloned());
        for (k, v) in &other.params {
            out.params.insert(format!("{}.{k}", other.name), *v);
        }
        for c in &other.corners {
            if !out.corners.contains(c) {
                out.corners.push(c.clone());
            }
        }
        for e in &other.edges {
            if !out.edges.contains(e) {
                out.edges.push(e.clone());
            }
        }
        out.gamma_c = out.gamma_c.min(other.gamma_c);
        out.gamma_e = out.gamma_e.min(other.gamma_e);
        Ok(out)
    }

    /// `a · u`.
    pub fn scaled(&self, a: f64) -> WeightedFunction {
        let mut out = self.clone();
        out.name = format!("{a}*{}", self.name);
        for t in &mut out.terms {
            match t {
                Term::Radial { coef, .. } | Term::Separable { coef, .. } => *coef *= a,
            }
        }
        out
    }

    /// Short `k=v;k=v` rendering of the parameters, for CSV output.
    pub fn params_string(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl Field for WeightedFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value(x)).sum()
    }

    fn mixed(&self, x: &[f64], mask: u32) -> f64 {
        self.terms.iter().map(|t| t.mixed(x, mask)).sum()
    }

    fn singular_set(&self) -> SingularSet {
        SingularSet {
            corners: self.corners.clone(),
            edges: self.edges.clone(),
        }
    }

    fn describe(&self) -> (String, String) {
        (self.name.clone(), self.params_string())
    }
}

/// `r_c^λ` with `r_c = |x - corner|`, admissible when `γ_c = λ + 1 - 10^-6`
/// exceeds `d/2` (so `λ > 0` in 2D and `λ > 1/2` in 3D).
pub fn corner_singular(d: usize, lambda: f64, corner: &[f64]) -> Result<WeightedFunction> {
    if !(1..=3).contains(&d) || corner.len() != d {
        return Err(Error::Invalid(format!(
            "corner_singular needs d in 1..=3 and a corner with d coordinates (d = {d})"
        )));
    }
    let gamma_c = lambda + 1.0 - GAMMA_SLACK;
    let need = match d {
        3 => 1.5,
        _ => 1.0,
    };
    if !(lambda > 0.0 && gamma_c > need) {
        return Err(Error::Invalid(format!(
            "corner exponent lambda = {lambda} violates gamma_c = lambda + 1 - 1e-6 > {need} for d = {d}"
        )));
    }
    let mut f = WeightedFunction::smooth(
        d,
        "corner_r_alpha",
        vec![Term::Radial {
            coef: 1.0,
            lambda,
            center: corner.to_vec(),
            axis: None,
        }],
    )
    .with_param("alpha", lambda);
    f.corners.push(corner.to_vec());
    f.gamma_c = gamma_c;
    Ok(f)
}

/// `r_e^λ` in 3D with `r_e` the distance to the coordinate axis `axis`
/// through the origin.
pub fn edge_singular(lambda: f64, axis: usize) -> Result<WeightedFunction> {
    if lambda <= 0.0 {
        return Err(Error::Invalid(format!(
            "edge exponent lambda = {lambda} violates gamma_e = lambda + 1 > 1"
        )));
    }
    if axis > 2 {
        return Err(Error::Invalid(format!("edge axis {axis} is not one of 0, 1, 2")));
    }
    let mut f = WeightedFunction::smooth(
        3,
        "edge_r_alpha",
        vec![Term::Radial {
            coef: 1.0,
            lambda,
            center: vec![0.0; 3],
            axis: Some(axis),
        }],
    )
    .with_param("alpha", lambda)
    .with_param("axis", axis as f64);
    f.edges.push(SingularEdge {
        point: vec![0.0; 3],
        axis,
    });
    f.gamma_e = lambda + 1.0 - GAMMA_SLACK;
    Ok(f)
}

/// Smooth catalog members.
#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticKind {
    /// `Π_j q(x_j)` for one univariate polynomial `q`.
    PolynomialProduct(Vec<f64>),
    /// `Π_j sin(ω x_j)`.
    SinProduct(f64),
    /// `exp(Σ_j a x_j)`.
    Exp(f64),
    Constant(f64),
}

pub fn analytic_fn(d: usize, kind: AnalyticKind) -> Result<WeightedFunction> {
    if !(1..=3).contains(&d) {
        return Err(Error::Invalid(format!("dimension {d} not in 1..=3")));
    }
    let (name, coef, f, key, val): (&str, f64, Univariate, &str, f64) = match kind {
        AnalyticKind::PolynomialProduct(c) => {
            let deg = c.len() as f64;
            ("poly_product", 1.0, Univariate::Poly(Polynomial::new(c)), "len", deg)
        }
        AnalyticKind::SinProduct(omega) => (
            "sin_product",
            1.0,
            Univariate::Sin { omega, phase: 0.0 },
            "omega",
            omega,
        ),
        AnalyticKind::Exp(a) => ("exp", 1.0, Univariate::Exp { a }, "a", a),
        AnalyticKind::Constant(c) => ("constant", c, Univariate::Poly(Polynomial::new(vec![1.0])), "value", c),
    };
    Ok(WeightedFunction::smooth(
        d,
        name,
        vec![Term::Separable {
            coef,
            factors: vec![f; d],
        }],
    )
    .with_param(key, val))
}

/// `Σ_j a_j x_j + b`.
pub fn affine_fn(a: &[f64], b: f64) -> WeightedFunction {
    let d = a.len();
    let mut terms: Vec<Term> = (0..d)
        .map(|j| Term::Separable {
            coef: 1.0,
            factors: (0..d)
                .map(|i| Univariate::Poly(Polynomial::new(if i == j { vec![0.0, a[j]] } else { vec![1.0] })))
                .collect(),
        })
        .collect();
    terms.push(Term::Separable {
        coef: b,
        factors: vec![Univariate::Poly(Polynomial::new(vec![1.0])); d],
    });
    WeightedFunction::smooth(d, "affine", terms)
}

/// The three-dimensional smoke-test function `r_c^{α_c} + r_e^{α_e}` with the
/// edge along `axis`.
pub fn corner_edge(alpha_c: f64, alpha_e: f64, axis: usize) -> Result<WeightedFunction> {
    let mut f = corner_singular(3, alpha_c, &[0.0; 3])?.plus(&edge_singular(alpha_e, axis)?)?;
    f.name = "corner_edge".into();
    f.params = BTreeMap::from([
        ("alpha_c".to_string(), alpha_c),
        ("alpha_e".to_string(), alpha_e),
        ("axis".to_string(), axis as f64),
    ]);
    Ok(f)
}

/// Catalog lookup by CLI key.
pub fn from_key(key: &str, d: usize, params: &BTreeMap<String, f64>) -> Result<WeightedFunction> {
    let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
    match key {
        "corner_r_alpha" => corner_singular(d, get("alpha", 0.5), &vec![0.0; d]),
        "edge_r_alpha" => {
            if d != 3 {
                return Err(Error::Invalid("edge_r_alpha is defined for d = 3".into()));
            }
            edge_singular(get("alpha", 0.6), get("axis", 0.0) as usize)
        }
        "corner_edge" => {
            if d != 3 {
                return Err(Error::Invalid("corner_edge is defined for d = 3".into()));
            }
            corner_edge(get("alpha_c", 0.8), get("alpha_e", 0.6), get("axis", 0.0) as usize)
        }
        "sin_product" => analytic_fn(d, AnalyticKind::SinProduct(get("omega", PI))),
        "exp" => analytic_fn(d, AnalyticKind::Exp(get("a", 1.0))),
        "constant" => analytic_fn(d, AnalyticKind::Constant(get("value", 1.0))),
        "poly_product" => analytic_fn(
            d,
            AnalyticKind::PolynomialProduct(vec![get("c0", 1.0), get("c1", -1.0), get("c2", 0.5), get("c3", 0.25)]),
        ),
        _ => Err(Error::Invalid(format!(
            "unknown function key '{key}' (known: {})",
            CATALOG_KEYS.join(", ")
        ))),
    }
}

pub const CATALOG_KEYS: &[&str] = &[
    "corner_r_alpha",
    "edge_r_alpha",
    "corner_edge",
    "sin_product",
    "exp",
    "constant",
    "poly_product",
];

/// Extension of `u` from the Fichera domain `(-1,1)^d \ (-1,0]^d` into the
/// cube `(-1,0]^d`: `w = Σ_{∅≠T} (-1)^{|T|+1} u(P_T x)` where `P_T` zeroes
/// the coordinates in `T`. For `d = 3` this is `u_0 - Σ_e u_e + Σ_f u_f`
/// with face and edge liftings constant in their normal directions.
#[derive(Clone, Debug)]
pub struct FicheraExtension<F> {
    pub inner: F,
}

pub fn fichera_extend<F: Field>(u: F) -> Result<FicheraExtension<F>> {
    let d = u.dim();
    if !(2..=3).contains(&d) {
        return Err(Error::Invalid(format!(
            "Fichera extension needs d in {{2, 3}}, got {d}"
        )));
    }
    Ok(FicheraExtension { inner: u })
}

impl<F: Field> FicheraExtension<F> {
    fn in_omega(x: &[f64]) -> bool {
        x.iter().any(|v| *v > 0.0)
    }

    fn lift(&self, x: &[f64], mask: u32) -> f64 {
        let d = x.len();
        let mut y = [0.0; 3];
        let mut acc = 0.0;
        for t in 1u32..(1 << d) {
            if t & mask != 0 {
                continue;
            }
            for j in 0..d {
                y[j] = if t & (1 << j) != 0 { 0.0 } else { x[j] };
            }
            let sign = if t.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * self.inner.mixed(&y[..d], mask);
        }
        acc
    }
}

impl<F: Field> Field for FicheraExtension<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        if Self::in_omega(x) {
            self.inner.value(x)
        } else {
            self.lift(x, 0)
        }
    }

    fn mixed(&self, x: &[f64], mask: u32) -> f64 {
        if Self::in_omega(x) {
            self.inner.mixed(x, mask)
        } else {
            self.lift(x, mask)
        }
    }

    fn singular_set(&self) -> SingularSet {
        self.inner.singular_set()
    }

    fn describe(&self) -> (String, String) {
        let (n, p) = self.inner.describe();
        (format!("fichera({n})"), p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_values() {
        let u = corner_singular(2, 0.5, &[0.0, 0.0]).unwrap();
        assert!((u.value(&[0.3, 0.4]) - 0.5f64.sqrt()).abs() < 1e-15);
        let mut g = [0.0; 2];
        u.gradient(&[0.3, 0.4], &mut g);
        assert!((g[0] - 0.42426).abs() < 1e-5 && (g[1] - 0.56569).abs() < 1e-5);
        assert_eq!(u.value(&[0.0, 0.0]), 0.0);
        assert!(u.mixed(&[0.0, 0.0], 1).is_nan());
    }

    #[test]
    fn corner_gating() {
        assert!(corner_singular(3, 0.4, &[0.0; 3]).is_err());
        assert!(corner_singular(3, 0.8, &[0.0; 3]).is_ok());
        assert!(corner_singular(2, -0.1, &[0.0; 2]).is_err());
        assert!(edge_singular(0.0, 0).is_err());
    }

    #[test]
    fn edge_values() {
        let u = edge_singular(0.6, 0).unwrap();
        assert!((u.value(&[0.5, 0.3, 0.4]) - 0.5f64.powf(0.6)).abs() < 1e-15);
        assert_eq!(u.mixed(&[0.5, 0.3, 0.4], 1), 0.0);
        assert_eq!(u.mixed(&[0.5, 0.3, 0.4], 0b011), 0.0);
    }

    #[test]
    fn sin_product_closed_form() {
        let u = analytic_fn(2, AnalyticKind::SinProduct(PI)).unwrap();
        for x in [[0.25, 0.5], [0.1, 0.9], [0.7, 0.3]] {
            let (s0, s1) = ((PI * x[0]).sin(), (PI * x[1]).sin());
            let (c0, c1) = ((PI * x[0]).cos(), (PI * x[1]).cos());
            assert!((u.value(&x) - s0 * s1).abs() < 1e-15);
            assert!((u.mixed(&x, 1) - PI * c0 * s1).abs() < 1e-14);
            assert!((u.mixed(&x, 2) - PI * s0 * c1).abs() < 1e-14);
            assert!((u.mixed(&x, 3) - PI * PI * c0 * c1).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let u = analytic_fn(3, AnalyticKind::Constant(1.0)).unwrap();
        assert_eq!(u.value(&[0.2, 0.3, 0.4]), 1.0);
        for mask in 1..8 {
            assert_eq!(u.mixed(&[0.2, 0.3, 0.4], mask), 0.0);
        }
    }

    #[test]
    fn fichera_affine_and_constant() {
        let w = fichera_extend(affine_fn(&[1.0, 1.0, 1.0], 0.0)).unwrap();
        let x = [-0.3, -0.7, -0.2];
        assert!((w.value(&x) - (-1.2)).abs() < 1e-15);
        let one = fichera_extend(analytic_fn(3, AnalyticKind::Constant(1.0)).unwrap()).unwrap();
        assert_eq!(one.value(&x), 1.0);
    }

    #[test]
    fn unknown_key_lists_catalog() {
        let err = from_key("nope", 2, &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("corner_r_alpha"));
    }
}
