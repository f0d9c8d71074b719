//! H¹ / L² / L∞ error measurement by composite Gauss quadrature on the hp
//! cells, graded toward singular corners and edges, and least-squares rate fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Field, SingularSet};
use crate::error::{Error, Result};
use crate::hp::interpolant::HpInterpolant;
use crate::hp::quadrature::gauss_legendre;
use crate::nn::{NeuralNetwork, Workspace};

/// Something that can be evaluated, with gradient, on tensor grids of points.
pub trait TensorEval: Sync {
    fn dim(&self) -> usize;

    /// Values and gradients at all points of `coords[0] × ... × coords[d-1]`
    /// (first axis fastest); gradients are stored point-major.
    fn eval_tensor(&self, coords: &[Vec<f64>], vals: &mut Vec<f64>, grads: &mut Vec<f64>);
}

/// Runs `f(point_index, axis_indices)` over a tensor grid, first axis fastest.
pub(crate) fn for_each_point(counts: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = counts.iter().product();
    let mut idx = vec![0usize; counts.len()];
    for t in 0..total {
        f(t, &idx);
        for (j, c) in counts.iter().enumerate() {
            idx[j] += 1;
            if idx[j] < *c {
                break;
            }
            idx[j] = 0;
        }
    }
}

fn pointwise(
    dim: usize,
    coords: &[Vec<f64>],
    vals: &mut Vec<f64>,
    grads: &mut Vec<f64>,
    mut f: impl FnMut(&[f64], &mut [f64]) -> f64,
) {
    let counts: Vec<usize> = coords.iter().map(|c| c.len()).collect();
    let total: usize = counts.iter().product();
    vals.resize(total, 0.0);
    grads.resize(total * dim, 0.0);
    let mut x = vec![0.0; dim];
    for_each_point(&counts, |t, idx| {
        for j in 0..dim {
            x[j] = coords[j][idx[j]];
        }
        vals[t] = f(&x, &mut grads[t * dim..(t + 1) * dim]);
    });
}

/// A catalog function seen through [`TensorEval`].
pub struct FieldEval<'a, F: ?Sized>(pub &'a F);

impl<F: Field + ?Sized> TensorEval for FieldEval<'_, F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval_tensor(&self, coords: &[Vec<f64>], vals: &mut Vec<f64>, grads: &mut Vec<f64>) {
        pointwise(self.0.dim(), coords, vals, grads, |x, g| {
            self.0.gradient(x, g);
            self.0.value(x)
        });
    }
}

/// A closure `x, grad -> value` seen through [`TensorEval`].
pub struct PointFn<F>(pub usize, pub F);

impl<F: Fn(&[f64], &mut [f64]) -> f64 + Sync> TensorEval for PointFn<F> {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval_tensor(&self, coords: &[Vec<f64>], vals: &mut Vec<f64>, grads: &mut Vec<f64>) {
        pointwise(self.0, coords, vals, grads, &self.1);
    }
}

/// A single-output network evaluated point by point with `grad_realize`.
pub struct NetEval<'a>(pub &'a NeuralNetwork);

impl TensorEval for NetEval<'_> {
    fn dim(&self) -> usize {
        self.0.input_dim()
    }

    fn eval_tensor(&self, coords: &[Vec<f64>], vals: &mut Vec<f64>, grads: &mut Vec<f64>) {
        let mut ws = Workspace::default();
        pointwise(self.0.input_dim(), coords, vals, grads, |x, g| {
            let (v, jac) = self.0.grad_realize_with(x, &mut ws);
            g.copy_from_slice(&jac[..g.len()]);
            v[0]
        });
    }
}

impl TensorEval for HpInterpolant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_tensor(&self, coords: &[Vec<f64>], vals: &mut Vec<f64>, grads: &mut Vec<f64>) {
        let d = self.dim;
        let mut leg = Vec::new();
        let locals: Vec<Vec<Vec<(usize, f64, f64)>>> = coords
            .iter()
            .map(|axis| {
                axis.iter()
                    .map(|&x| {
                        let mut l = Vec::new();
                        self.basis.local_functions(x, &mut l, &mut leg);
                        l
                    })
                    .collect()
            })
            .collect();
        let counts: Vec<usize> = coords.iter().map(|c| c.len()).collect();
        let total: usize = counts.iter().product();
        vals.resize(total, 0.0);
        grads.resize(total * d, 0.0);
        let n = self.n1d();
        for_each_point(&counts, |t, idx| {
            let lists: Vec<&[(usize, f64, f64)]> = (0..d).map(|j| locals[j][idx[j]].as_slice()).collect();
            let g = &mut grads[t * d..(t + 1) * d];
            g.iter_mut().for_each(|v| *v = 0.0);
            let mut value = 0.0;
            let inner: Vec<usize> = lists.iter().map(|l| l.len()).collect();
            if inner.contains(&0) {
                vals[t] = 0.0;
                return;
            }
            for_each_point(&inner, |_, k| {
                let mut flat = 0;
                let mut stride = 1;
                for j in 0..d {
                    flat += lists[j][k[j]].0 * stride;
                    stride *= n;
                }
                let c = self.coeffs[flat];
                if c == 0.0 {
                    return;
                }
                let mut prod = c;
                for j in 0..d {
                    prod *= lists[j][k[j]].1;
                }
                value += prod;
                for (jj, gj) in g.iter_mut().enumerate() {
                    let mut p = c * lists[jj][k[jj]].2;
                    for j in 0..d {
                        if j != jj {
                            p *= lists[j][k[j]].1;
                        }
                    }
                    *gj += p;
                }
            });
            vals[t] = value;
        });
    }
}

/// Quadrature settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Gauss points per axis per sub-cell.
    pub q: usize,
    /// Sub-cells per axis of each hp cell on the first pass.
    pub n_q: usize,
    /// Relative change of the H¹ error under doubling `n_q` that certifies it.
    pub rtol: f64,
    /// Number of `n_q` doublings tried.
    pub max_refinements: usize,
    /// Dyadic grading levels toward singular sets; `None` picks by dimension.
    pub grading_levels: Option<usize>,
    /// Node jitter as a fraction of the sub-cell width.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for QuadConfig {
    fn default() -> QuadConfig {
        QuadConfig {
            q: 10,
            n_q: 2,
            rtol: 1e-3,
            max_refinements: 2,
            grading_levels: None,
            jitter: 1e-7,
            seed: 0x5eed,
        }
    }
}

/// Measured errors of `f - g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l2_error: f64,
    pub h1_seminorm_error: f64,
    pub h1_error: f64,
    /// Largest pointwise difference over the quadrature nodes.
    pub linf_error: f64,
    pub quadrature_cells: usize,
    /// Relative change of `h1_error` between the last two refinements.
    pub richardson_gap: f64,
    pub certified: bool,
}

/// Axis-aligned box partition to integrate over, with the singular set to
/// grade toward.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMesh {
    pub axes: Vec<Vec<f64>>,
    pub singular: SingularSet,
}

impl CellMesh {
    /// Tensor grid of the interpolant's 1D mesh.
    pub fn from_interpolant(it: &HpInterpolant, singular: SingularSet) -> CellMesh {
        CellMesh {
            axes: vec![it.basis.mesh.nodes().to_vec(); it.dim],
            singular,
        }
    }

    /// `breaks` on every axis.
    pub fn uniform(dim: usize, breaks: Vec<f64>, singular: SingularSet) -> CellMesh {
        CellMesh {
            axes: vec![breaks; dim],
            singular,
        }
    }

    fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Leaf cells for a pass with `n_q` sub-cells per axis and `levels` of grading.
    fn leaves(&self, n_q: usize, levels: usize) -> Vec<Cell> {
        let d = self.dim();
        let mut subs: Vec<Vec<(f64, f64)>> = Vec::with_capacity(d);
        for axis in &self.axes {
            let mut s = Vec::new();
            for w in axis.windows(2) {
                let h = (w[1] - w[0]) / n_q as f64;
                for k in 0..n_q {
                    let lo = w[0] + k as f64 * h;
                    let hi = if k + 1 == n_q { w[1] } else { lo + h };
                    s.push((lo, hi));
                }
            }
            subs.push(s);
        }
        let counts: Vec<usize> = subs.iter().map(|s| s.len()).collect();
        let mut out = Vec::new();
        for_each_point(&counts, |_, idx| {
            let mut c = Cell {
                lo: [0.0; 3],
                hi: [0.0; 3],
            };
            for j in 0..d {
                (c.lo[j], c.hi[j]) = subs[j][idx[j]];
            }
            self.grade(c, levels, &mut out);
        });
        out
    }

    fn touches_corner(&self, c: &Cell) -> bool {
        let d = self.dim();
        self.singular
            .corners
            .iter()
            .any(|p| (0..d).all(|j| c.lo[j] <= p[j] && p[j] <= c.hi[j]))
    }

    /// Axis of an edge touching the cell, if any.
    fn touching_edge(&self, c: &Cell) -> Option<usize> {
        let d = self.dim();
        self.singular
            .edges
            .iter()
            .find(|e| {
                (0..d)
                    .filter(|&j| j != e.axis)
                    .all(|j| c.lo[j] <= e.point[j] && e.point[j] <= c.hi[j])
            })
            .map(|e| e.axis)
    }

    fn grade(&self, c: Cell, levels: usize, out: &mut Vec<Cell>) {
        let d = self.dim();
        let split_mask = if levels == 0 {
            0
        } else if self.touches_corner(&c) {
            (1u32 << d) - 1
        } else if let Some(a) = self.touching_edge(&c) {
            ((1u32 << d) - 1) & !(1 << a)
        } else {
            0
        };
        if split_mask == 0 {
            out.push(c);
            return;
        }
        for child in 0u32..(1 << d) {
            if child & !split_mask != 0 {
                continue;
            }
            let mut k = c;
            for j in 0..d {
                if split_mask & (1 << j) != 0 {
                    let mid = 0.5 * (c.lo[j] + c.hi[j]);
                    if child & (1 << j) == 0 {
                        k.hi[j] = mid;
                    } else {
                        k.lo[j] = mid;
                    }
                }
            }
            self.grade(k, levels - 1, out);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Cell {
    lo: [f64; 3],
    hi: [f64; 3],
}

#[derive(Clone, Copy, Debug, Default)]
struct Sums {
    l2sq: f64,
    semisq: f64,
    linf: f64,
}

fn integrate_pass(f: &dyn TensorEval, g: &dyn TensorEval, leaves: &[Cell], q: usize, jitter: &[Vec<f64>]) -> Sums {
    let d = f.dim();
    let rule = gauss_legendre(q);
    let chunks: Vec<&[Cell]> = leaves.chunks(64).collect();
    let partial = crate::par::par_map(&chunks, |cells| {
        let mut s = Sums::default();
        let (mut fv, mut fg, mut gv, mut gg) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut coords = vec![Vec::with_capacity(q); d];
        let mut wts = vec![Vec::with_capacity(q); d];
        for c in cells.iter() {
            for j in 0..d {
                let w = c.hi[j] - c.lo[j];
                coords[j].clear();
                wts[j].clear();
                for k in 0..q {
                    let x = c.lo[j] + (rule.nodes[k] + 1.0) * 0.5 * w + jitter[j][k] * w;
                    coords[j].push(x);
                    wts[j].push(rule.weights[k] * 0.5 * w);
                }
            }
            f.eval_tensor(&coords, &mut fv, &mut fg);
            g.eval_tensor(&coords, &mut gv, &mut gg);
            let counts = vec![q; d];
            for_each_point(&counts, |t, idx| {
                let w: f64 = (0..d).map(|j| wts[j][idx[j]]).product();
                let e = fv[t] - gv[t];
                s.l2sq += w * e * e;
                s.linf = s.linf.max(e.abs());
                for j in 0..d {
                    let de = fg[t * d + j] - gg[t * d + j];
                    s.semisq += w * de * de;
                }
            });
        }
        s
    });
    partial.into_iter().fold(Sums::default(), |a, b| Sums {
        l2sq: a.l2sq + b.l2sq,
        semisq: a.semisq + b.semisq,
        linf: a.linf.max(b.linf),
    })
}

/// `f - g` in L², H¹-seminorm, H¹ and sampled L∞ over `mesh`, doubling the
/// sub-cell count until the H¹ value changes by less than `cfg.rtol`.
pub fn h1_error(f: &dyn TensorEval, g: &dyn TensorEval, mesh: &CellMesh, cfg: &QuadConfig) -> Result<ErrorReport> {
    let d = mesh.dim();
    if f.dim() != d || g.dim() != d {
        return Err(Error::Dimension(format!(
            "integrands have dimensions {} and {}, mesh has {d}",
            f.dim(),
            g.dim()
        )));
    }
    if cfg.q == 0 || cfg.n_q == 0 {
        return Err(Error::Invalid("quadrature needs q >= 1 and n_q >= 1".into()));
    }
    let base_levels = cfg.grading_levels.unwrap_or(if d <= 2 { 12 } else { 6 });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jitter: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..cfg.q).map(|_| cfg.jitter * rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut prev: Option<f64> = None;
    let mut report = None;
    for r in 0..=cfg.max_refinements {
        let leaves = mesh.leaves(cfg.n_q << r, base_levels + 2 * r);
        let s = integrate_pass(f, g, &leaves, cfg.q, &jitter);
        let h1 = (s.l2sq + s.semisq).sqrt();
        let gap = match prev {
            None => f64::INFINITY,
            Some(p) if h1.max(p) < 1e-14 => 0.0,
            Some(p) => (h1 - p).abs() / h1.max(p),
        };
        let certified = gap < cfg.rtol;
        report = Some(ErrorReport {
            l2_error: s.l2sq.sqrt(),
            h1_seminorm_error: s.semisq.sqrt(),
            h1_error: h1,
            linf_error: s.linf,
            quadrature_cells: leaves.len(),
            richardson_gap: gap,
            certified,
        });
        if certified {
            break;
        }
        prev = Some(h1);
    }
    Ok(report.expect("at least one pass runs"))
}

/// Convergence models for [`fit_rate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RateModel {
    /// `e = C exp(-b n)`.
    ExpInN,
    /// `e = C exp(-b n^{1/k})`.
    ExpInRoot(u32),
    /// `y = C x^b`, e.g. network size against `1 + |ln ε|`.
    PolyInLogEps,
}

/// Result of a least-squares fit on the linearized model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub c: f64,
    pub b: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = a + s x`; returns `(a, s, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a0, b)| (b - a - slope * a0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    (a, slope, r2)
}

/// Fits `pairs = (n, e)` to `model`.
pub fn fit_rate(pairs: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::Invalid(format!(
            "rate fit needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    if let Some(p) = pairs.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::Invalid(format!(
            "rate fit needs positive values, got {} at n = {}",
            p.1, p.0
        )));
    }
    let ly: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let x: Vec<f64> = match model {
        RateModel::ExpInN => pairs.iter().map(|p| p.0).collect(),
        RateModel::ExpInRoot(k) => pairs.iter().map(|p| p.0.powf(1.0 / k as f64)).collect(),
        RateModel::PolyInLogEps => {
            if let Some(p) = pairs.iter().find(|p| !(p.0 > 0.0)) {
                return Err(Error::Invalid(format!(
                    "power fit needs positive abscissae, got {}",
                    p.0
                )));
            }
            pairs.iter().map(|p| p.0.ln()).collect()
        }
    };
    let (a, s, r2) = linear_fit(&x, &ly);
    let b = match model {
        RateModel::PolyInLogEps => s,
        _ => -s,
    };
    Ok(RateFit {
        c: a.exp(),
        b,
        r_squared: r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize) -> CellMesh {
        CellMesh::uniform(d, vec![0.0, 0.5, 1.0], SingularSet::default())
    }

    #[test]
    fn identical_functions_have_zero_error() {
        let f = PointFn(2, |x: &[f64], g: &mut [f64]| {
            g[0] = x[1];
            g[1] = x[0];
            x[0] * x[1]
        });
        let r = h1_error(&f, &f, &unit(2), &QuadConfig::default()).unwrap();
        assert!(r.h1_error <= 1e-14 && r.certified);
    }

    #[test]
    fn square_versus_identity() {
        let f = PointFn(1, |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            x[0] * x[0]
        });
        let g = PointFn(1, |x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            x[0]
        });
        let r = h1_error(&f, &g, &unit(1), &QuadConfig::default()).unwrap();
        let want = (1.0f64 / 30.0 + 1.0 / 3.0).sqrt();
        assert!((r.h1_error - want).abs() < 1e-6, "{}", r.h1_error);
        assert!((r.h1_error.powi(2) - r.l2_error.powi(2) - r.h1_seminorm_error.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn exact_for_high_degree_per_cell() {
        // degree 2q-1 = 19 per axis; jitter off
        let f = PointFn(1, |x: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            x[0].powi(9)
        });
        let zero = PointFn(1, |_: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            0.0
        });
        let cfg = QuadConfig {
            jitter: 0.0,
            ..QuadConfig::default()
        };
        let r = h1_error(&f, &zero, &unit(1), &cfg).unwrap();
        // ∫ x^18 = 1/19
        assert!((r.l2_error.powi(2) - 1.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn grading_counts() {
        let s = SingularSet {
            corners: vec![vec![0.0, 0.0]],
            edges: vec![],
        };
        let m = CellMesh::uniform(2, vec![0.0, 1.0], s);
        assert_eq!(m.leaves(1, 3).len(), 3 * 3 + 1);
    }

    #[test]
    fn synthetic_fits() {
        let pairs: Vec<(f64, f64)> = (1..=6).map(|l| (l as f64, 3.0 * (-0.7 * l as f64).exp())).collect();
        let fit = fit_rate(&pairs, RateModel::ExpInN).unwrap();
        assert!((fit.c - 3.0).abs() < 1e-10 && (fit.b - 0.7).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
        let pairs: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|e: &f64| {
                let l = e.ln().abs();
                (l, 5.0 * l.powi(7))
            })
            .collect();
        let fit = fit_rate(&pairs, RateModel::PolyInLogEps).unwrap();
        assert!((fit.b - 7.0).abs() < 0.01);
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)], RateModel::ExpInN).is_err());
    }
}
