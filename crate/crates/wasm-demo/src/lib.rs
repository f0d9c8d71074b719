//! Browser bindings. Each exported function takes plain numbers and returns a
//! JSON string, so the page needs no glue beyond `JSON.parse`. The `*_report`
//! functions hold the logic and are what the host tests exercise.

use std::collections::BTreeMap;

use relu_hp::catalog::{from_key, Field};
use relu_hp::hp::{geometric_mesh, hp_interpolate, project_element, TensorMesh};
use relu_hp::metrics::{fit_rate, h1_error, CellMesh, FieldEval, QuadConfig, RateModel};
use relu_hp::nn::emulation::{product_net, pwpoly_net};
use relu_hp::poly::PiecewisePolynomial;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct ProductReport {
    pub size: usize,
    pub depth: usize,
    /// `(t, network, t^d)` along the diagonal `x = (t, ..., t)`.
    pub curve: Vec<(f64, f64, f64)>,
    pub max_error: f64,
}

/// Product network for `d` factors in `[-1, 1]`, sampled on the diagonal.
pub fn product_report(d: usize, eps: f64, samples: usize) -> Result<ProductReport, String> {
    if !(2..=6).contains(&d) {
        return Err(format!("dimension must be in 2..=6, got {d}"));
    }
    let p = product_net(d, eps, 1.0).map_err(|e| e.to_string())?;
    let n = samples.clamp(2, 2000);
    let mut grad = vec![0.0; d];
    let mut x = vec![0.0; d];
    let curve: Vec<(f64, f64, f64)> = (0..n)
        .map(|k| {
            let t = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
            x.fill(t);
            (t, p.eval_with_gradient(&x, &mut grad), t.powi(d as i32))
        })
        .collect();
    let max_error = curve.iter().map(|c| (c.1 - c.2).abs()).fold(0.0, f64::max);
    Ok(ProductReport {
        size: p.net.size(),
        depth: p.net.depth(),
        curve,
        max_error,
    })
}

#[derive(Debug, Serialize)]
pub struct SineReport {
    pub size: usize,
    pub depth: usize,
    /// `(x, network, sin(freq x))`.
    pub curve: Vec<(f64, f64, f64)>,
    /// Sup distance between the network and the piecewise polynomial.
    pub emulation_error: f64,
    /// Sup distance between the network and the sine.
    pub total_error: f64,
}

/// Projects `sin(freq x)` on `[-1, 1]` onto `pieces` uniform intervals with
/// degree `degree`, then emulates the result by a ReLU network.
pub fn sine_report(freq: f64, pieces: usize, degree: usize, eps: f64, samples: usize) -> Result<SineReport, String> {
    if pieces == 0 || pieces > 64 || degree == 0 || degree > 12 {
        return Err("need 1..=64 pieces and degree 1..=12".into());
    }
    let breaks: Vec<f64> = (0..=pieces).map(|i| -1.0 + 2.0 * i as f64 / pieces as f64).collect();
    let polys = (0..pieces)
        .map(|i| {
            let (a, b) = (breaks[i], breaks[i + 1]);
            let half = (b - a) / 2.0;
            project_element(
                |s| {
                    let x = a + (s + 1.0) * half;
                    ((freq * x).sin(), freq * (freq * x).cos() * half)
                },
                degree,
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let v = PiecewisePolynomial::new(breaks, polys).map_err(|e| e.to_string())?;
    let r = pwpoly_net(&v, eps).map_err(|e| e.to_string())?;
    let n = samples.clamp(2, 4000);
    let mut emulation_error = 0.0f64;
    let curve: Vec<(f64, f64, f64)> = (0..n)
        .map(|k| {
            let x = (-1.0 + 2.0 * k as f64 / (n - 1) as f64).min(1.0);
            let y = r.net.realize(&[x]).map_or(f64::NAN, |o| o[0]);
            emulation_error = emulation_error.max((y - v.eval(x)).abs());
            (x, y, (freq * x).sin())
        })
        .collect();
    let total_error = curve.iter().map(|c| (c.1 - c.2).abs()).fold(0.0, f64::max);
    Ok(SineReport {
        size: r.net.size(),
        depth: r.net.depth(),
        curve,
        emulation_error,
        total_error,
    })
}

#[derive(Debug, Serialize)]
pub struct ConvergenceRow {
    pub ell: usize,
    pub p: usize,
    pub dofs: usize,
    pub h1_error: f64,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// `b` in `e ≈ C exp(-b ℓ)`, when at least three rows exist.
    pub rate: Option<f64>,
}

/// H¹ error of the hp interpolant of `|x|^alpha` on `(0,1)^2` for
/// `ℓ = 1..=ell_max` with `p = ℓ`.
pub fn convergence_report(alpha: f64, sigma: f64, ell_max: usize) -> Result<ConvergenceReport, String> {
    if !(1..=6).contains(&ell_max) {
        return Err(format!("ell_max must be in 1..=6, got {ell_max}"));
    }
    let params = BTreeMap::from([("alpha".to_string(), alpha)]);
    let u = from_key("corner_r_alpha", 2, &params).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for ell in 1..=ell_max {
        let mesh =
            TensorMesh::new(2, geometric_mesh(sigma, ell).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let it = hp_interpolate(&u, &mesh, ell).map_err(|e| e.to_string())?;
        let cells = CellMesh::from_interpolant(&it, u.singular_set());
        let rep = h1_error(&FieldEval(&u), &it, &cells, &QuadConfig::default()).map_err(|e| e.to_string())?;
        rows.push(ConvergenceRow {
            ell,
            p: it.p(),
            dofs: it.num_dofs(),
            h1_error: rep.h1_error,
        });
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.ell as f64, r.h1_error)).collect();
    let rate = fit_rate(&pairs, RateModel::ExpInN).ok().map(|f| f.b);
    Ok(ConvergenceReport { rows, rate })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn product_demo(d: usize, eps: f64, samples: usize) -> Result<String, JsError> {
    to_js(product_report(d, eps, samples))
}

#[wasm_bindgen]
pub fn sine_demo(freq: f64, pieces: usize, degree: usize, eps: f64, samples: usize) -> Result<String, JsError> {
    to_js(sine_report(freq, pieces, degree, eps, samples))
}

#[wasm_bindgen]
pub fn convergence_demo(alpha: f64, sigma: f64, ell_max: usize) -> Result<String, JsError> {
    to_js(convergence_report(alpha, sigma, ell_max))
}
