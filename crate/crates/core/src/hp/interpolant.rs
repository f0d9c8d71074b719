//! The tensor-product hp quasi-interpolant.
//!
//! In 1D the projector keeps the nodal values and replaces `u'` on each
//! interval by its L² projection onto `P_{p-1}`; on intervals flagged linear
//! it is plain endpoint interpolation. The global basis is the nodal hats
//! followed by the interval bubbles `ζ_n(s) = ½∫_{-1}^s L_n`, `n = 1..p-1`,
//! and the d-dimensional interpolant is the tensor product, so every
//! coefficient is a tensor product of 1D functionals applied to `u`: a point
//! value per hat axis, a Legendre moment of the derivative per bubble axis.

use serde::Serialize;

use crate::catalog::Field;
use crate::error::{Error, Result};
use crate::hp::legendre::{legendre_all, legendre_antideriv_coeffs};
use crate::hp::mesh::{multipatch_mesh, Mesh1D, MeshKind, TensorMesh};
use crate::hp::quadrature::gauss_legendre;
use crate::poly::{PiecewisePolynomial, Polynomial};

const QUAD_RTOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 3;

fn base_order(p: usize) -> usize {
    (p + 4).max(20)
}

/// `π̂_p v` on `(-1, 1)` in monomial coefficients, from `v` and `v'`.
pub fn project_element(v: impl Fn(f64) -> (f64, f64), p: usize) -> Result<Polynomial> {
    if p == 0 {
        return Err(Error::Invalid("polynomial degree p must be at least 1".into()));
    }
    let (vl, _) = v(-1.0);
    let (vr, _) = v(1.0);
    let moments = |q: usize| -> Vec<f64> {
        let rule = gauss_legendre(q);
        let mut acc = vec![0.0; p];
        let mut leg = Vec::new();
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let d = v(*t).1;
            legendre_all(p - 1, *t, &mut leg);
            for n in 1..p {
                acc[n] += w * d * leg[n];
            }
        }
        (1..p).for_each(|n| acc[n] *= (2 * n + 1) as f64 / 2.0);
        acc
    };
    let mut a = vec![0.0; p];
    if p > 1 {
        let mut q = base_order(p);
        let mut prev = moments(q);
        let mut residual = f64::INFINITY;
        for _ in 0..=MAX_DOUBLINGS + 3 {
            q *= 2;
            let next = moments(q);
            let scale = next.iter().fold(vl.abs().max(vr.abs()), |m, c| m.max(c.abs()));
            let diff = next.iter().zip(&prev).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            residual = if scale > 0.0 { diff / scale } else { 0.0 };
            prev = next;
            if residual < QUAD_RTOL {
                break;
            }
        }
        if !(residual < QUAD_RTOL) {
            return Err(Error::Quadrature {
                location: "project_element".into(),
                residual,
            });
        }
        a = prev;
    }
    // the mean slope comes from the endpoints, which makes them exact
    a[0] = (vr - vl) / 2.0;
    let mut out = Polynomial::new(vec![vl]);
    for (n, an) in a.iter().enumerate() {
        out = out.add(&Polynomial::new(legendre_antideriv_coeffs(n)).scale(*an));
    }
    Ok(out)
}

/// One global 1D basis function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BasisFn {
    Hat { node: usize },
    Bubble { interval: usize, mode: usize },
}

/// The 1D hp basis on a mesh: `n_int + 1` hats, then `p - 1` bubble slots
/// per interval. Bubble slots on linear intervals exist but carry no weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HpBasis {
    pub mesh: Mesh1D,
    pub p: usize,
}

impl HpBasis {
    pub fn new(mesh: Mesh1D, p: usize) -> Result<HpBasis> {
        if p == 0 {
            return Err(Error::Invalid("polynomial degree p must be at least 1".into()));
        }
        Ok(HpBasis { mesh, p })
    }

    /// `N_1d = n_int · p + 1`.
    pub fn len(&self) -> usize {
        self.mesh.num_intervals() * self.p + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn function(&self, i: usize) -> BasisFn {
        let nn = self.mesh.num_intervals() + 1;
        if i < nn {
            BasisFn::Hat { node: i }
        } else {
            let j = i - nn;
            BasisFn::Bubble {
                interval: j / (self.p - 1),
                mode: j % (self.p - 1) + 1,
            }
        }
    }

    pub fn bubble_index(&self, interval: usize, mode: usize) -> usize {
        self.mesh.num_intervals() + 1 + interval * (self.p - 1) + mode - 1
    }

    /// False for bubble slots of linear intervals.
    pub fn is_active(&self, i: usize) -> bool {
        match self.function(i) {
            BasisFn::Hat { .. } => true,
            BasisFn::Bubble { interval, .. } => !self.mesh.is_linear(interval),
        }
    }

    /// Nonzero functions at `x` as `(index, value, derivative)`, taking the
    /// interval to the right at interior nodes.
    pub fn local_functions(&self, x: f64, out: &mut Vec<(usize, f64, f64)>, leg: &mut Vec<f64>) {
        out.clear();
        let Some(k) = self.mesh.locate(x) else {
            return;
        };
        let h = self.mesh.width(k);
        let s = self.mesh.to_local(k, x);
        out.push((k, (1.0 - s) / 2.0, -1.0 / h));
        out.push((k + 1, (1.0 + s) / 2.0, 1.0 / h));
        if self.mesh.is_linear(k) || self.p < 2 {
            return;
        }
        legendre_all(self.p, s, leg);
        for n in 1..self.p {
            let v = 0.5 * (leg[n + 1] - leg[n - 1]) / (2 * n + 1) as f64;
            out.push((self.bubble_index(k, n), v, leg[n] / h));
        }
    }

    /// Function `i` as a piecewise polynomial on its support (local monomials).
    pub fn piecewise(&self, i: usize) -> PiecewisePolynomial {
        let m = &self.mesh;
        let (breaks, pieces) = match self.function(i) {
            BasisFn::Hat { node } => {
                let mut b = Vec::new();
                let mut p = Vec::new();
                if node > 0 {
                    b.push(m.nodes()[node - 1]);
                    p.push(Polynomial::new(vec![0.5, 0.5]));
                }
                b.push(m.nodes()[node]);
                if node < m.num_intervals() {
                    b.push(m.nodes()[node + 1]);
                    p.push(Polynomial::new(vec![0.5, -0.5]));
                }
                (b, p)
            }
            BasisFn::Bubble { interval, mode } => {
                let (l, r) = m.interval(interval);
                let c = Polynomial::new(legendre_antideriv_coeffs(mode)).scale(0.5);
                (vec![l, r], vec![c])
            }
        };
        PiecewisePolynomial::new(breaks, pieces).expect("mesh breakpoints increase")
    }

    /// `(‖v_i‖_∞, |v_i|_{H¹})` in closed form.
    pub fn norms(&self, i: usize) -> (f64, f64) {
        match self.function(i) {
            BasisFn::Hat { node } => {
                let mut s = 0.0;
                if node > 0 {
                    s += 1.0 / self.mesh.width(node - 1);
                }
                if node < self.mesh.num_intervals() {
                    s += 1.0 / self.mesh.width(node);
                }
                (1.0, s.sqrt())
            }
            BasisFn::Bubble { interval, mode } => {
                // |ζ_n| peaks where L_n vanishes; sample the piece
                let pw = self.piecewise(i);
                let sup = (0..=512)
                    .map(|k| pw.pieces[0].eval(-1.0 + k as f64 / 256.0).abs())
                    .fold(0.0, f64::max);
                let h = self.mesh.width(interval);
                (sup, (1.0 / (h * (2 * mode + 1) as f64)).sqrt())
            }
        }
    }
}

/// Summary statistics of an interpolant's basis and coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisStats {
    pub n1d: usize,
    pub num_coeffs: usize,
    pub nonzero_coeffs: usize,
    pub coeff_l1: f64,
    pub max_basis_sup: f64,
    /// `max_i ‖v_i‖_{H¹}` over the 1D basis.
    pub max_basis_h1: f64,
}

/// `Σ_i c_i ∏_j v_{i_j}(x_j)` with coefficients in vvec order (first axis fastest).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HpInterpolant {
    pub dim: usize,
    pub basis: HpBasis,
    /// Patches per axis: 1 on the unit cube, 4 for the multipatch mesh.
    pub patches: usize,
    pub coeffs: Vec<f64>,
}

impl HpInterpolant {
    pub fn n1d(&self) -> usize {
        self.basis.len()
    }

    pub fn p(&self) -> usize {
        self.basis.p
    }

    pub fn ell(&self) -> usize {
        self.basis.mesh.ell
    }

    pub fn sigma(&self) -> f64 {
        self.basis.mesh.sigma
    }

    /// vvec position of a multi-index (0-based).
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let n = self.n1d();
        idx.iter().rev().fold(0, |acc, &i| acc * n + i)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let n = self.n1d();
        (0..self.dim).map(|j| flat / n.pow(j as u32) % n).collect()
    }

    pub fn coeff(&self, idx: &[usize]) -> f64 {
        self.coeffs[self.flat_index(idx)]
    }

    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Number of active degrees of freedom `N_dof`.
    pub fn num_dofs(&self) -> usize {
        let active = (0..self.n1d()).filter(|&i| self.basis.is_active(i)).count();
        active.pow(self.dim as u32)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.basis.mesh.span()
    }

    pub fn stats(&self) -> BasisStats {
        let (mut sup, mut h1) = (0.0f64, 0.0f64);
        let m = &self.basis.mesh;
        for i in 0..self.n1d() {
            if !self.basis.is_active(i) {
                continue;
            }
            let (s, semi) = self.basis.norms(i);
            // exact L² norm for hats, sup-based bound for bubbles
            let l2sq = match self.basis.function(i) {
                BasisFn::Hat { node } => {
                    let left = if node > 0 { m.width(node - 1) } else { 0.0 };
                    let right = if node < m.num_intervals() { m.width(node) } else { 0.0 };
                    (left + right) / 3.0
                }
                BasisFn::Bubble { interval, .. } => m.width(interval) * s * s,
            };
            sup = sup.max(s);
            h1 = h1.max((semi * semi + l2sq).sqrt());
        }
        BasisStats {
            n1d: self.n1d(),
            num_coeffs: self.coeffs.len(),
            nonzero_coeffs: self.coeffs.iter().filter(|c| **c != 0.0).count(),
            coeff_l1: self.coeff_l1(),
            max_basis_sup: sup,
            max_basis_h1: h1,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim];
        self.eval_with_gradient(x, &mut g)
    }

    /// Value, with the gradient written to `grad`. Points outside the
    /// domain give zero.
    pub fn eval_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut leg = Vec::new();
        let mut locals: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); self.dim];
        for j in 0..self.dim {
            self.basis.local_functions(x[j], &mut locals[j], &mut leg);
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        let counts: Vec<usize> = locals.iter().map(|l| l.len()).collect();
        if counts.contains(&0) {
            return 0.0;
        }
        let total: usize = counts.iter().product();
        let n = self.n1d();
        for t in 0..total {
            let mut rem = t;
            let mut flat = 0usize;
            let mut stride = 1usize;
            let mut vals = [0.0f64; 3];
            let mut ders = [0.0f64; 3];
            for j in 0..self.dim {
                let (i, v, d) = locals[j][rem % counts[j]];
                rem /= counts[j];
                flat += i * stride;
                stride *= n;
                vals[j] = v;
                ders[j] = d;
            }
            let c = self.coeffs[flat];
            if c == 0.0 {
                continue;
            }
            value += c * vals[..self.dim].iter().product::<f64>();
            for k in 0..self.dim {
                let mut prod = c * ders[k];
                for j in 0..self.dim {
                    if j != k {
                        prod *= vals[j];
                    }
                }
                grad[k] += prod;
            }
        }
        value
    }

    /// JSON record with the per-interval monomial blocks of every basis function.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Piece {
            left: f64,
            right: f64,
            coeffs: Vec<f64>,
        }
        #[derive(Serialize)]
        struct Record<'a> {
            sigma: f64,
            ell: usize,
            p: usize,
            dim: usize,
            patches: usize,
            n1d: usize,
            basis: Vec<Vec<Piece>>,
            coeffs: &'a [f64],
        }
        let basis = (0..self.n1d())
            .map(|i| {
                let pw = self.basis.piecewise(i);
                (0..pw.num_pieces())
                    .map(|k| Piece {
                        left: pw.breaks[k],
                        right: pw.breaks[k + 1],
                        coeffs: pw.pieces[k].coeffs.clone(),
                    })
                    .collect()
            })
            .collect();
        serde_json::to_string(&Record {
            sigma: self.sigma(),
            ell: self.ell(),
            p: self.p(),
            dim: self.dim,
            patches: self.patches,
            n1d: self.n1d(),
            basis,
            coeffs: &self.coeffs,
        })
        .expect("interpolant serializes")
    }
}

/// A 1D functional slot: point value at a node, or Legendre moments of the
/// derivative over an interval.
#[derive(Clone, Copy, Debug)]
enum Slot {
    Node(usize),
    Interval(usize),
}

/// `Π_hp u` on the tensor mesh with degree `p` on non-linear intervals.
pub fn hp_interpolate<F: Field + ?Sized>(u: &F, mesh: &TensorMesh, p: usize) -> Result<HpInterpolant> {
    if u.dim() != mesh.dim {
        return Err(Error::Dimension(format!(
            "function has dimension {}, mesh has {}",
            u.dim(),
            mesh.dim
        )));
    }
    let basis = HpBasis::new(mesh.axis.clone(), p)?;
    let patches = match mesh.axis.kind {
        MeshKind::Geometric => 1,
        MeshKind::Multipatch { .. } => 4,
    };
    let m = &basis.mesh;
    let mut slots: Vec<Slot> = (0..=m.num_intervals()).map(Slot::Node).collect();
    if p >= 2 {
        slots.extend((0..m.num_intervals()).filter(|&k| !m.is_linear(k)).map(Slot::Interval));
    }
    let d = mesh.dim;
    let combos: Vec<Vec<Slot>> = (0..slots.len().pow(d as u32))
        .map(|t| {
            (0..d)
                .map(|j| slots[t / slots.len().pow(j as u32) % slots.len()])
                .collect()
        })
        .collect();
    let n1d = basis.len();
    let blocks = crate::par::par_map(&combos, |c| combo_coefficients(u, &basis, c));
    let mut coeffs = vec![0.0; n1d.pow(d as u32)];
    for block in blocks {
        for (i, v) in block? {
            coeffs[i] = v;
        }
    }
    Ok(HpInterpolant {
        dim: d,
        basis,
        patches,
        coeffs,
    })
}

/// Interpolant on `(-a, a)^d` over four mapped geometric meshes per axis.
pub fn multipatch_interpolate<F: Field + ?Sized>(
    u: &F,
    a: f64,
    sigma: f64,
    ell: usize,
    p: usize,
) -> Result<HpInterpolant> {
    let mesh = TensorMesh::new(u.dim(), multipatch_mesh(a, sigma, ell)?)?;
    hp_interpolate(u, &mesh, p)
}

/// Coefficients (vvec index, value) contributed by one slot tuple.
fn combo_coefficients<F: Field + ?Sized>(u: &F, basis: &HpBasis, combo: &[Slot]) -> Result<Vec<(usize, f64)>> {
    let d = combo.len();
    let n1d = basis.len();
    let m = &basis.mesh;
    let mut point = vec![0.0; d];
    let mut moment_axes = Vec::new();
    for (j, s) in combo.iter().enumerate() {
        match s {
            Slot::Node(i) => point[j] = m.nodes()[*i],
            Slot::Interval(k) => moment_axes.push((j, *k)),
        }
    }
    if moment_axes.is_empty() {
        let v = u.value(&point);
        if !v.is_finite() {
            return Err(Error::Quadrature {
                location: format!("node value at {point:?}"),
                residual: f64::NAN,
            });
        }
        let idx = combo.iter().rev().fold(0, |acc, s| match s {
            Slot::Node(i) => acc * n1d + i,
            Slot::Interval(_) => unreachable!(),
        });
        return Ok(vec![(idx, v)]);
    }
    let p = basis.p;
    let mut q = base_order(p);
    let (mut prev, _) = moments(u, basis, &point, &moment_axes, q)?;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        q *= 2;
        let (next, l1) = moments(u, basis, &point, &moment_axes, q)?;
        let scale = next.iter().fold(l1, |a, c| a.max(c.abs()));
        let diff = next.iter().zip(&prev).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        residual = if scale > 0.0 { diff / scale } else { 0.0 };
        prev = next;
        if residual < QUAD_RTOL {
            break;
        }
    }
    if !(residual < QUAD_RTOL) {
        return Err(Error::Quadrature {
            location: format!("element slots {combo:?}"),
            residual,
        });
    }
    // modes are laid out first moment axis fastest
    let nm = p - 1;
    let mut out = Vec::with_capacity(prev.len());
    for (t, v) in prev.into_iter().enumerate() {
        let mut rem = t;
        let mut mode_of = [0usize; 3];
        for (a, _) in moment_axes.iter().enumerate() {
            mode_of[a] = rem % nm + 1;
            rem /= nm;
        }
        let mut a = moment_axes.len();
        let idx = combo.iter().rev().fold(0, |acc, s| match s {
            Slot::Node(i) => acc * n1d + i,
            Slot::Interval(k) => {
                a -= 1;
                acc * n1d + basis.bubble_index(*k, mode_of[a])
            }
        });
        out.push((idx, v));
    }
    Ok(out)
}

/// All moment tuples `∏(2n_j+1) ∫ ∂^M u ∏ L_{n_j}(φ)` by sum factorization
/// on a `q`-point tensor Gauss grid, plus `∫|∂^M u|` for scaling.
fn moments<F: Field + ?Sized>(
    u: &F,
    basis: &HpBasis,
    point: &[f64],
    axes: &[(usize, usize)],
    q: usize,
) -> Result<(Vec<f64>, f64)> {
    let rule = gauss_legendre(q);
    let m = &basis.mesh;
    let na = axes.len();
    let mask = axes.iter().fold(0u32, |acc, (j, _)| acc | (1 << j));
    let total = q.pow(na as u32);
    let mut data = vec![0.0; total];
    let mut y = point.to_vec();
    let mut l1 = 0.0;
    for (t, slot) in data.iter_mut().enumerate() {
        let mut rem = t;
        let mut w = 1.0;
        for &(j, k) in axes {
            let qi = rem % q;
            rem /= q;
            y[j] = m.from_local(k, rule.nodes[qi]);
            w *= rule.weights[qi] * m.width(k) / 2.0;
        }
        let g = u.mixed(&y, mask);
        if !g.is_finite() {
            return Err(Error::Quadrature {
                location: format!("derivative {mask:#b} at {y:?}"),
                residual: f64::NAN,
            });
        }
        *slot = g;
        l1 += w * g.abs();
    }
    let nm = basis.p - 1;
    let mut shape = vec![q; na];
    let mut leg = Vec::new();
    for (a, &(_, k)) in axes.iter().enumerate() {
        let h = m.width(k);
        let mut b = vec![0.0; nm * q];
        for qi in 0..q {
            legendre_all(nm, rule.nodes[qi], &mut leg);
            for n in 1..=nm {
                b[(n - 1) * q + qi] = (2 * n + 1) as f64 * rule.weights[qi] * h / 2.0 * leg[n];
            }
        }
        data = contract(&data, &shape, a, &b, nm);
        shape[a] = nm;
    }
    Ok((data, l1))
}

/// Contract axis `a` of `data` (axis 0 fastest) with the `r × shape[a]` matrix `b`.
fn contract(data: &[f64], shape: &[usize], a: usize, b: &[f64], r: usize) -> Vec<f64> {
    let inner: usize = shape[..a].iter().product();
    let len = shape[a];
    let outer: usize = shape[a + 1..].iter().product();
    let mut out = vec![0.0; inner * r * outer];
    for o in 0..outer {
        for n in 0..r {
            let row = &b[n * len..(n + 1) * len];
            let dst = &mut out[inner * (n + r * o)..inner * (n + 1 + r * o)];
            for (qi, bq) in row.iter().enumerate() {
                let src = &data[inner * (qi + len * o)..inner * (qi + 1 + len * o)];
                for (dv, sv) in dst.iter_mut().zip(src) {
                    *dv += bq * sv;
                }
            }
        }
    }
    out
}

/// Evaluates `Π_hp u (x)` element by element, applying the 1D projector
/// recursively axis by axis. Independent of the global basis; used to check
/// the coefficient representation.
pub fn direct_projection<F: Field + ?Sized>(u: &F, mesh: &Mesh1D, p: usize, x: &[f64]) -> Result<f64> {
    let elem = x
        .iter()
        .map(|&xj| mesh.locate(xj))
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(|| Error::Invalid(format!("point {x:?} outside the mesh")))?;
    element_projection(u, mesh, p, &elem, x)
}

/// The polynomial of `Π_hp u` on element `elem`, evaluated at `x` (which may
/// lie on the element boundary or outside it). Comparing neighbours at a
/// shared face checks interelement continuity.
pub fn element_projection<F: Field + ?Sized>(u: &F, mesh: &Mesh1D, p: usize, elem: &[usize], x: &[f64]) -> Result<f64> {
    if elem.len() != x.len() || elem.iter().any(|&k| k >= mesh.num_intervals()) {
        return Err(Error::Invalid(format!("invalid element index {elem:?}")));
    }
    let mut y = x.to_vec();
    let q = 2 * base_order(p);
    direct_rec(u, mesh, p, x, elem, &mut y, 0, 0, q)
}

#[allow(clippy::too_many_arguments)]
fn direct_rec<F: Field + ?Sized>(
    u: &F,
    mesh: &Mesh1D,
    p: usize,
    x: &[f64],
    elem: &[usize],
    y: &mut Vec<f64>,
    axis: usize,
    mask: u32,
    q: usize,
) -> Result<f64> {
    if axis == x.len() {
        let v = u.mixed(y, mask);
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Quadrature {
                location: format!("direct projection at {y:?}"),
                residual: f64::NAN,
            })
        };
    }
    let k = elem[axis];
    let (l, r) = mesh.interval(k);
    let h = r - l;
    let s = mesh.to_local(k, x[axis]);
    y[axis] = l;
    let at_l = direct_rec(u, mesh, p, x, elem, y, axis + 1, mask, q)?;
    y[axis] = r;
    let at_r = direct_rec(u, mesh, p, x, elem, y, axis + 1, mask, q)?;
    let mut value = at_l + (at_r - at_l) * (s + 1.0) / 2.0;
    if !mesh.is_linear(k) && p >= 2 {
        let rule = gauss_legendre(q);
        let mut a = vec![0.0; p];
        let mut leg = Vec::new();
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            y[axis] = mesh.from_local(k, *t);
            let g = direct_rec(u, mesh, p, x, elem, y, axis + 1, mask | (1 << axis), q)?;
            legendre_all(p - 1, *t, &mut leg);
            for n in 1..p {
                a[n] += w * g * leg[n] * h / 2.0;
            }
        }
        legendre_all(p, s, &mut leg);
        for n in 1..p {
            // a_n (2n+1)/h times (h/2) ∫_{-1}^s L_n
            let anti = (leg[n + 1] - leg[n - 1]) / (2 * n + 1) as f64;
            value += a[n] * (2 * n + 1) as f64 / h * h / 2.0 * anti;
        }
    }
    y[axis] = x[axis];
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{affine_fn, analytic_fn, corner_singular, AnalyticKind};
    use crate::hp::mesh::geometric_mesh;

    #[test]
    fn projector_examples() {
        let sq = project_element(|t| (t * t, 2.0 * t), 2).unwrap();
        assert!((sq.coeffs[0]).abs() < 1e-12 && (sq.coeffs[1]).abs() < 1e-12);
        assert!((sq.coeffs[2] - 1.0).abs() < 1e-12);
        let c = project_element(|t: f64| (t.cos(), -t.sin()), 3).unwrap();
        assert!((c.eval(1.0) - 1f64.cos()).abs() < 1e-12);
        assert!((c.eval(-1.0) - 1f64.cos()).abs() < 1e-12);
        let cub = project_element(|t| (t * t * t, 3.0 * t * t), 1).unwrap();
        assert!((cub.eval(0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn xy_coefficients() {
        let u = analytic_fn(2, AnalyticKind::PolynomialProduct(vec![0.0, 1.0])).unwrap();
        let mesh = TensorMesh::new(2, geometric_mesh(0.5, 2).unwrap()).unwrap();
        let it = hp_interpolate(&u, &mesh, 3).unwrap();
        let nodes = mesh.axis.nodes().to_vec();
        for (a, xa) in nodes.iter().enumerate() {
            for (b, xb) in nodes.iter().enumerate() {
                assert!((it.coeff(&[a, b]) - xa * xb).abs() < 1e-15);
            }
        }
        // interior modes of xy vanish; x·y is reproduced
        let b1 = it.basis.bubble_index(2, 1);
        assert!(it.coeff(&[b1, b1]).abs() < 1e-14);
        for pt in [[0.3, 0.7], [0.01, 0.9], [0.55, 0.2]] {
            assert!((it.eval(&pt) - pt[0] * pt[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn affine_is_reproduced_with_gradient() {
        let u = affine_fn(&[0.5, -2.0, 1.0], 0.25);
        let mesh = TensorMesh::new(3, geometric_mesh(0.5, 2).unwrap()).unwrap();
        let it = hp_interpolate(&u, &mesh, 2).unwrap();
        let mut g = [0.0; 3];
        let x = [0.3, 0.05, 0.8];
        let v = it.eval_with_gradient(&x, &mut g);
        assert!((v - u.value(&x)).abs() < 1e-14);
        assert!((g[0] - 0.5).abs() < 1e-12 && (g[1] + 2.0).abs() < 1e-12 && (g[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_matches_1d_product() {
        let u = analytic_fn(2, AnalyticKind::SinProduct(std::f64::consts::PI)).unwrap();
        let mesh = geometric_mesh(0.5, 2).unwrap();
        let tm = TensorMesh::new(2, mesh.clone()).unwrap();
        let it = hp_interpolate(&u, &tm, 4).unwrap();
        let u1 = analytic_fn(1, AnalyticKind::SinProduct(std::f64::consts::PI)).unwrap();
        let it1 = hp_interpolate(&u1, &TensorMesh::new(1, mesh).unwrap(), 4).unwrap();
        for pt in [[0.1, 0.2], [0.33, 0.91], [0.6, 0.02]] {
            let want = it1.eval(&pt[..1]) * it1.eval(&pt[1..]);
            assert!((it.eval(&pt) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn representation_matches_direct_projector() {
        let u = corner_singular(2, 0.5, &[0.0, 0.0]).unwrap();
        let mesh = geometric_mesh(0.5, 3).unwrap();
        let it = hp_interpolate(&u, &TensorMesh::new(2, mesh.clone()).unwrap(), 3).unwrap();
        for pt in [[0.013, 0.4], [0.3, 0.3], [0.77, 0.06], [0.2, 0.9]] {
            let direct = direct_projection(&u, &mesh, 3, &pt).unwrap();
            assert!((it.eval(&pt) - direct).abs() < 1e-10, "{pt:?}");
        }
    }

    #[test]
    fn basis_bounds_and_support() {
        let b = HpBasis::new(geometric_mesh(0.5, 3).unwrap(), 5).unwrap();
        assert_eq!(b.len(), 4 * 5 + 1);
        for i in 0..b.len() {
            let (sup, _) = b.norms(i);
            assert!(sup <= 1.0);
            assert!(b.piecewise(i).num_pieces() <= 2);
        }
    }

    #[test]
    fn multipatch_constant() {
        let u = analytic_fn(2, AnalyticKind::Constant(1.0)).unwrap();
        let it = multipatch_interpolate(&u, 1.0, 0.5, 1, 2).unwrap();
        assert_eq!(it.n1d(), 4 * 2 * 2 + 1);
        for pt in [[-0.9, 0.1], [0.3, -0.45], [0.99, 0.99]] {
            assert!((it.eval(&pt) - 1.0).abs() < 1e-14);
        }
    }
}
