//! ReLU emulation of products, polynomials and piecewise polynomials with
//! explicit error budgets.

use crate::error::{Error, Result};
use crate::nn::calculus::{
    affine_postcompose, affine_precompose, concat, full_parallel, identity_net, pad_to_depth, parallel,
};
use crate::nn::network::{Layer, NeuralNetwork};
use crate::poly::{PiecewisePolynomial, Polynomial};

/// Sawtooth levels beyond this are refused: `4^-60` is far below f64 resolution.
pub const MAX_LEVELS: u32 = 60;

/// Accuracy target and input box of a product network, with the number of
/// sawtooth levels needed to meet it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceBudget {
    pub epsilon: f64,
    pub m: f64,
    pub levels: u32,
}

impl ToleranceBudget {
    /// Smallest level count for which the `d`-fold product tree meets
    /// `epsilon` in value and in every partial derivative on `[-m, m]^d`.
    pub fn new(d: usize, epsilon: f64, m: f64) -> Result<ToleranceBudget> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Invalid(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::Invalid(format!("box half-width M = {m} must be >= 1")));
        }
        if d < 2 {
            return Err(Error::Invalid("product networks need d >= 2".into()));
        }
        for levels in 1..=MAX_LEVELS {
            let b = tree_bound(d, m, levels);
            if b.value <= epsilon && b.derivative <= epsilon {
                return Ok(ToleranceBudget { epsilon, m, levels });
            }
        }
        Err(Error::Infeasible(format!(
            "product of {d} factors on [-{m}, {m}] to {epsilon:e} needs more than {MAX_LEVELS} levels"
        )))
    }
}

/// Worst-case bounds for a (sub)product over a set of inputs.
#[derive(Clone, Copy, Debug)]
struct NodeBound {
    range: f64,
    value: f64,
    dbound: f64,
    derivative: f64,
}

/// Value and derivative error of one binary product net with `levels` on `[-m, m]^2`.
pub fn binary_errors(m: f64, levels: u32) -> (f64, f64) {
    let l = levels as i32;
    (m * m * 4f64.powi(-l), 2.0 * m * 2f64.powi(-l))
}

fn combine(a: NodeBound, b: NodeBound, levels: u32) -> NodeBound {
    let mm = (a.range + a.value).max(b.range + b.value).max(1.0);
    let (dv, dd) = binary_errors(mm, levels);
    let value = dv + (a.range + a.value) * b.value + b.range * a.value;
    let da = (b.value + dd) * a.dbound + (b.range + b.value + dd) * a.derivative;
    let db = (a.value + dd) * b.dbound + (a.range + a.value + dd) * b.derivative;
    NodeBound {
        range: a.range * b.range,
        value,
        dbound: (b.range * a.dbound).max(a.range * b.dbound),
        derivative: da.max(db),
    }
}

fn tree_bound(d: usize, m: f64, levels: u32) -> NodeBound {
    let mut nodes = vec![
        NodeBound {
            range: m,
            value: 0.0,
            dbound: 1.0,
            derivative: 0.0,
        };
        d
    ];
    while nodes.len() > 1 {
        nodes = nodes
            .chunks(2)
            .map(|c| {
                if c.len() == 2 {
                    combine(c[0], c[1], levels)
                } else {
                    c[0]
                }
            })
            .collect();
    }
    nodes[0]
}

/// Levels needed by a binary product on `[-m, m]^2` for value error `delta`
/// and derivative error `delta_d`.
pub fn binary_levels(m: f64, delta: f64, delta_d: f64) -> Result<u32> {
    let m = m.max(1.0);
    let a = (m / delta.sqrt()).log2().ceil();
    let b = (2.0 * m / delta_d).log2().ceil();
    let levels = a.max(b).max(1.0);
    if !levels.is_finite() || levels > MAX_LEVELS as f64 {
        return Err(Error::Infeasible(format!(
            "binary product on [-{m}, {m}] with tolerances ({delta:e}, {delta_d:e}) needs more than {MAX_LEVELS} levels"
        )));
    }
    Ok(levels as u32)
}

/// Univariate network equal to the piecewise-linear interpolant of `t²` at
/// `k 2^-levels` on `[0, 1]`; depth `levels + 1`.
pub fn square_net(levels: u32) -> Result<NeuralNetwork> {
    if levels == 0 {
        return Err(Error::Invalid("square_net needs levels >= 1".into()));
    }
    let layers = sawtooth_layers(levels, &[(vec![(0, 1.0)], 1.0)], 1)?;
    NeuralNetwork::new(1, layers)
}

/// Layers of `k` interleaved sawtooth squarers. Block `b` reads
/// `t_b = Σ w x_j` over `inputs[b]` and contributes `c_b f(t_b)` to the single
/// output. Neuron `j` of block `b` sits at index `j * k + b`, so the output sum
/// visits equal neurons of different blocks consecutively; with `c_0 = -c_2`
/// this makes `c_0 f(t) + c_2 f(t)` cancel exactly.
fn sawtooth_layers(levels: u32, blocks: &[(Vec<(usize, f64)>, f64)], in_dim: usize) -> Result<Vec<Layer>> {
    let k = blocks.len();
    let mut layers = Vec::with_capacity(levels as usize + 1);
    // first layer: ρ(t), ρ(t - 1/2), ρ(t - 1)
    let mut trip = Vec::new();
    let mut bias = vec![0.0; 3 * k];
    for j in 0..3 {
        for (b, (inp, _)) in blocks.iter().enumerate() {
            let row = j * k + b;
            for &(col, w) in inp {
                trip.push((row, col, w));
            }
            bias[row] = -(j as f64) * 0.5;
        }
    }
    layers.push(Layer::from_triplets(3 * k, in_dim, trip, bias)?);
    let saw = [2.0, -4.0, 2.0];
    let mut prev_rows = 3 * k;
    for level in 2..=levels {
        let scale = 4f64.powi(-(level as i32 - 1));
        let mut trip = Vec::new();
        let mut bias = vec![0.0; 4 * k];
        for b in 0..k {
            for j in 0..3 {
                let row = j * k + b;
                for (jj, s) in saw.iter().enumerate() {
                    trip.push((row, jj * k + b, *s));
                }
                bias[row] = -(j as f64) * 0.5;
            }
            // accumulator: previous accumulator minus g_{level-1} / 4^{level-1}
            let row = 3 * k + b;
            if level == 2 {
                trip.push((row, b, 1.0 - saw[0] * scale));
                trip.push((row, k + b, -saw[1] * scale));
                trip.push((row, 2 * k + b, -saw[2] * scale));
            } else {
                for (jj, s) in saw.iter().enumerate() {
                    trip.push((row, jj * k + b, -s * scale));
                }
                trip.push((row, 3 * k + b, 1.0));
            }
        }
        layers.push(Layer::from_triplets(4 * k, prev_rows, trip, bias)?);
        prev_rows = 4 * k;
    }
    let scale = 4f64.powi(-(levels as i32));
    let mut trip = Vec::new();
    for (b, (_, c)) in blocks.iter().enumerate() {
        if levels == 1 {
            trip.push((0, b, c * (1.0 - saw[0] * scale)));
            trip.push((0, k + b, c * (-saw[1] * scale)));
            trip.push((0, 2 * k + b, c * (-saw[2] * scale)));
        } else {
            for (jj, s) in saw.iter().enumerate() {
                trip.push((0, jj * k + b, c * (-s * scale)));
            }
            trip.push((0, 3 * k + b, *c));
        }
    }
    layers.push(Layer::from_triplets(1, prev_rows, trip, vec![0.0])?);
    Ok(layers)
}

/// Binary product on `[-m, m]^2` with `levels` sawtooth levels, depth `levels + 2`.
///
/// `xy = 2M² (f(|x+y|/2M) - f(|x|/2M) - f(|y|/2M))` with `f` the sawtooth
/// square. If either input is exactly zero the first and one of the other two
/// squarers see bit-identical inputs, so the output is exactly zero.
pub fn binary_product_net(m: f64, levels: u32) -> Result<NeuralNetwork> {
    let first = Layer::from_triplets(
        6,
        2,
        vec![
            (0, 0, 1.0),
            (0, 1, 1.0),
            (1, 0, -1.0),
            (1, 1, -1.0),
            (2, 0, 1.0),
            (3, 0, -1.0),
            (4, 1, 1.0),
            (5, 1, -1.0),
        ],
        vec![0.0; 6],
    )?;
    let w = 1.0 / (2.0 * m);
    let c = 2.0 * m * m;
    let blocks = [
        (vec![(0, w), (1, w)], c),
        (vec![(2, w), (3, w)], -c),
        (vec![(4, w), (5, w)], -c),
    ];
    let mut layers = vec![first];
    layers.extend(sawtooth_layers(levels, &blocks, 6)?);
    NeuralNetwork::new(2, layers)
}

/// A product network together with the budget that produced it.
#[derive(Clone, Debug)]
pub struct ProductNet {
    pub net: NeuralNetwork,
    pub budget: ToleranceBudget,
    /// Per stage of the tree, the box half-width of each binary product, or
    /// `None` where a factor is carried through unchanged.
    stages: Vec<Vec<Option<f64>>>,
}

impl ProductNet {
    /// `max(size, depth) / (1 + d log(d M^d / ε))`, the implementation constant.
    pub fn constant(&self) -> f64 {
        let d = self.net.input_dim() as f64;
        let b = self.budget;
        let denom = 1.0 + d * (d * b.m.powf(d) / b.epsilon).ln();
        self.net.size().max(self.net.depth()) as f64 / denom
    }

    /// The realization of `net` and its gradient, evaluated in closed form
    /// from the tree layout instead of layer by layer. Agrees with the
    /// network up to rounding; `grad` gets one entry per input.
    pub fn eval_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = x.len();
        if d > FAST_MAX_DIM {
            let (v, jac) = self.net.grad_realize(x).expect("input dimension");
            grad[..d].copy_from_slice(&jac[0]);
            return v[0];
        }
        let levels = self.budget.levels;
        // (value, gradient w.r.t. the original inputs) per tree node
        let mut nodes = [(0.0, [0.0; FAST_MAX_DIM]); FAST_MAX_DIM];
        for (i, &xi) in x.iter().enumerate() {
            nodes[i].0 = xi;
            nodes[i].1[i] = 1.0;
        }
        for stage in &self.stages {
            let mut read = 0;
            for (k, part) in stage.iter().enumerate() {
                let a = nodes[read];
                nodes[k] = match part {
                    None => {
                        read += 1;
                        a
                    }
                    Some(m) => {
                        let b = nodes[read + 1];
                        read += 2;
                        let (v, da, db) = binary_product(*m, levels, a.0, b.0);
                        let mut g = [0.0; FAST_MAX_DIM];
                        for j in 0..d {
                            g[j] = da * a.1[j] + db * b.1[j];
                        }
                        (v, g)
                    }
                };
            }
        }
        grad[..d].copy_from_slice(&nodes[0].1[..d]);
        nodes[0].0
    }
}

const FAST_MAX_DIM: usize = 8;

/// `f(t)` and `f'(t)` of the sawtooth squarer: the piecewise-linear
/// interpolant of `t²` at `k 2^-levels` on `[0, 1]`, `0` below and `t` above.
pub fn sawtooth_square(levels: u32, t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (t, 1.0);
    }
    let h = 2f64.powi(-(levels as i32));
    let a = (t / h).floor() * h;
    let b = a + h;
    (a * a + (t - a) * (a + b), a + b)
}

/// Closed form of [`binary_product_net`]: value and both partial derivatives.
fn binary_product(m: f64, levels: u32, x: f64, y: f64) -> (f64, f64, f64) {
    let w = 1.0 / (2.0 * m);
    let c = 2.0 * m * m;
    let (fs, ds) = sawtooth_square(levels, w * (x + y).abs());
    let (fx, dx) = sawtooth_square(levels, w * x.abs());
    let (fy, dy) = sawtooth_square(levels, w * y.abs());
    let s = sgn(x + y);
    // with a zero factor the network cancels the squarers exactly
    let value = if x == 0.0 || y == 0.0 { 0.0 } else { c * (fs - fx - fy) };
    (value, c * w * (ds * s - dx * sgn(x)), c * w * (ds * s - dy * sgn(y)))
}

fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `Π^d_{ε,M}`: `d`-fold product as a balanced tree of binary products.
pub fn product_net(d: usize, epsilon: f64, m: f64) -> Result<ProductNet> {
    let budget = ToleranceBudget::new(d, epsilon, m)?;
    let (net, stages) = product_tree(d, m, budget.levels)?;
    Ok(ProductNet { net, budget, stages })
}

type Stages = Vec<Vec<Option<f64>>>;

fn product_tree(d: usize, m: f64, levels: u32) -> Result<(NeuralNetwork, Stages)> {
    let leaf = NodeBound {
        range: m,
        value: 0.0,
        dbound: 1.0,
        derivative: 0.0,
    };
    let mut bounds = vec![leaf; d];
    let mut net: Option<NeuralNetwork> = None;
    let mut stages = Vec::new();
    while bounds.len() > 1 {
        let mut plan = Vec::new();
        let mut parts = Vec::new();
        let mut next = Vec::new();
        let depth = levels as usize + 2;
        for c in bounds.chunks(2) {
            if c.len() == 2 {
                let mm = (c[0].range + c[0].value).max(c[1].range + c[1].value).max(1.0);
                parts.push(binary_product_net(mm, levels)?);
                plan.push(Some(mm));
                next.push(combine(c[0], c[1], levels));
            } else {
                parts.push(identity_net(1, depth)?);
                plan.push(None);
                next.push(c[0]);
            }
        }
        let stage = full_parallel(&parts)?;
        net = Some(match net {
            None => stage,
            Some(inner) => concat(&stage, &inner)?,
        });
        bounds = next;
        stages.push(plan);
    }
    let net = net.ok_or_else(|| Error::Invalid("product of fewer than two factors".into()))?;
    Ok((net, stages))
}

/// A univariate network with certified sup and derivative error bounds.
#[derive(Clone, Debug)]
pub struct ApproxNet {
    pub net: NeuralNetwork,
    pub value_error: f64,
    pub derivative_error: f64,
}

/// Horner evaluation of `q` for inputs in `[-radius, radius]` with every
/// binary product accurate to `delta` (value and derivative).
fn horner_with_delta(q: &Polynomial, radius: f64, delta: f64) -> Result<ApproxNet> {
    let c = &q.coeffs[..=q.degree()];
    let n = c.len() - 1;
    if n <= 1 {
        let a = c.get(1).copied().unwrap_or(0.0);
        let net = NeuralNetwork::affine(1, 1, &[a], vec![c[0]])?;
        return Ok(ApproxNet {
            net,
            value_error: 0.0,
            derivative_error: 0.0,
        });
    }
    let x = radius.max(1e-300);
    // running tail q_{k}(x) = c_k + x q_{k+1}(x): ranges, derivative bounds, errors
    let mut tail = Polynomial::new(vec![c[n]]);
    let mut e = 0.0;
    let mut ed = 0.0;
    // x ↦ (x, c_n)
    let mut net = NeuralNetwork::new(1, vec![Layer::from_triplets(2, 1, vec![(0, 0, 1.0)], vec![0.0, c[n]])?])?;
    for k in (0..n).rev() {
        let range = tail.abs_bound(x);
        let dbound = tail.derivative().abs_bound(x);
        let mm = x.max(range + e).max(1.0);
        let levels = binary_levels(mm, delta, delta)?;
        let (dv, dd) = binary_errors(mm, levels);
        let prod = binary_product_net(mm, levels)?;
        let depth = prod.depth();
        let shift = Layer::from_triplets(1, 1, vec![(0, 0, 1.0)], vec![c[k]])?;
        let step_y = affine_postcompose(&shift, &prod)?;
        let step = if k == 0 {
            step_y
        } else {
            let pick_x = Layer::from_triplets(1, 2, vec![(0, 0, 1.0)], vec![0.0])?;
            let carry = affine_precompose(&identity_net(1, depth)?, &pick_x)?;
            parallel(&[carry, step_y])?
        };
        net = concat(&step, &net)?;
        let e_new = dv + x * e;
        ed = dd + e + dd * (dbound + ed) + x * ed;
        e = e_new;
        tail = Polynomial::new(vec![c[k]]).add(&Polynomial::new(vec![0.0, 1.0]).mul(&tail));
    }
    Ok(ApproxNet {
        net,
        value_error: e,
        derivative_error: ed,
    })
}

/// Horner network for `q` on `[-radius, radius]` whose value and derivative
/// errors are at most `target`. Constant and linear `q` are exact.
fn horner_to_target(q: &Polynomial, radius: f64, target: f64) -> Result<ApproxNet> {
    let mut delta = target;
    for _ in 0..200 {
        let a = horner_with_delta(q, radius, delta)?;
        if a.value_error <= target && a.derivative_error <= target {
            return Ok(a);
        }
        delta *= 0.5;
    }
    Err(Error::Infeasible(format!("Horner network cannot reach {target:e}")))
}

/// Network approximating the polynomial `Σ coeffs[k] x^k` on `(a, b)` with
/// sup error `≤ ε (1 + Σ|c_k|)` and derivative error `≤ ε (1 + Σ k|c_k| R^{k-1})`.
pub fn poly_net(coeffs: &[f64], interval: (f64, f64), epsilon: f64) -> Result<ApproxNet> {
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::Invalid("poly_net needs a < b".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Invalid("poly_net needs epsilon > 0".into()));
    }
    let q = Polynomial::new(coeffs.to_vec());
    let radius = a.abs().max(b.abs());
    let target = epsilon * (1.0 + q.l1_norm()).min(1.0 + q.derivative().abs_bound(radius));
    horner_to_target(&q, radius, target)
}

/// Four clamp neurons of a piece `[xl, xr]`:
/// `ρ(x - xl), ρ(x - xr), ρ(xr - x), ρ(xl - x)`.
fn clamp_layer(xl: f64, xr: f64) -> Result<Layer> {
    Layer::from_triplets(
        4,
        1,
        vec![(0, 0, 1.0), (1, 0, 1.0), (2, 0, -1.0), (3, 0, -1.0)],
        vec![-xl, -xr, xr, xl],
    )
}

/// Bubble `b(s) = (1 - s²) w(s)` on `[xl, xr]` in the local variable
/// `s ∈ [-1, 1]`, with its s-derivative error at most `target`.
///
/// Realized as `P2(P1(1+s, 1-s), W(s))` where `1 ± s` come from exact clamps.
/// Outside the piece one clamp vanishes, `P1` returns exactly zero and so does
/// `P2`; hence the network is exactly zero at and beyond both ends.
pub fn bubble_net(xl: f64, xr: f64, w: &Polynomial, target: f64) -> Result<ApproxNet> {
    let alpha = 2.0 / (xr - xl);
    let clamp = clamp_layer(xl, xr)?;
    // clamp neurons -> (τ_L, τ_R) and s = τ_L - 1
    let to_tau = Layer::from_triplets(
        2,
        4,
        vec![(0, 0, alpha), (0, 1, -alpha), (1, 2, alpha), (1, 3, -alpha)],
        vec![0.0, 0.0],
    )?;
    let to_s = Layer::from_triplets(1, 4, vec![(0, 0, alpha), (0, 1, -alpha)], vec![-1.0])?;
    let wdeg = w.degree();
    let wmax = w.abs_bound(1.0);
    let wdmax = w.derivative().abs_bound(1.0);

    let build = |delta: f64| -> Result<(NeuralNetwork, f64)> {
        let l1 = binary_levels(2.0, delta, delta)?;
        let (d1, d1d) = binary_errors(2.0, l1);
        let p1 = affine_precompose(&binary_product_net(2.0, l1)?, &to_tau)?;
        if wdeg == 0 {
            // b = w_0 (1 - s²): scale the first product
            let c0 = w.coeffs[0];
            let scale = Layer::from_triplets(1, 1, vec![(0, 0, c0)], vec![0.0])?;
            let net = affine_postcompose(&scale, &p1)?;
            let bound = c0.abs() * 2.0 * d1d;
            return Ok((prepend(clamp.clone(), net)?, bound));
        }
        let wnet = horner_to_target(w, 1.0, delta)?;
        let wn = affine_precompose(&wnet.net, &to_s)?;
        let depth = p1.depth().max(wn.depth());
        let pair = parallel(&[pad_to_depth(&p1, depth)?, pad_to_depth(&wn, depth)?])?;
        let m2 = (1.0 + d1).max(wmax + wnet.value_error).max(1.0);
        let l2 = binary_levels(m2, delta, delta)?;
        let (_, d2d) = binary_errors(m2, l2);
        let net = concat(&binary_product_net(m2, l2)?, &pair)?;
        let (ew, ewd) = (wnet.value_error, wnet.derivative_error);
        let bound = (d2d + ew) * (2.0 + 2.0 * d1d) + wmax * 2.0 * d1d + (d2d + d1) * (wdmax + ewd) + ewd;
        Ok((prepend(clamp.clone(), net)?, bound))
    };
    let mut delta = (target / (8.0 + 2.0 * wmax + 2.0 * wdmax)).min(0.25);
    for _ in 0..200 {
        let (net, bound) = build(delta)?;
        if bound <= target {
            return Ok(ApproxNet {
                net,
                value_error: bound,
                derivative_error: bound * alpha,
            });
        }
        delta *= 0.5;
    }
    Err(Error::Infeasible(format!("bubble network cannot reach {target:e}")))
}

/// Put a ReLU layer with `1` input in front of `net`.
fn prepend(first: Layer, net: NeuralNetwork) -> Result<NeuralNetwork> {
    let mut layers = vec![first];
    layers.extend(net.into_layers());
    NeuralNetwork::new(1, layers)
}

/// Exact network of the continuous piecewise-linear interpolant of `values`
/// at `nodes`, constant outside `[nodes[0], nodes[N]]`. Depth 2.
pub fn pl_net(nodes: &[f64], values: &[f64]) -> Result<NeuralNetwork> {
    let n = nodes.len();
    if n < 2 || values.len() != n {
        return Err(Error::Invalid("pl_net needs at least two nodes".into()));
    }
    let slopes: Vec<f64> = (0..n - 1)
        .map(|i| (values[i + 1] - values[i]) / (nodes[i + 1] - nodes[i]))
        .collect();
    let first = Layer::from_triplets(
        n,
        1,
        (0..n).map(|j| (j, 0, 1.0)).collect(),
        nodes.iter().map(|x| -x).collect(),
    )?;
    let coef: Vec<(usize, usize, f64)> = (0..n)
        .map(|j| {
            let right = if j < n - 1 { slopes[j] } else { 0.0 };
            let left = if j > 0 { slopes[j - 1] } else { 0.0 };
            (0, j, right - left)
        })
        .filter(|t| t.2 != 0.0)
        .collect();
    let out = Layer::from_triplets(1, n, coef, vec![values[0]])?;
    NeuralNetwork::new(1, vec![first, out])
}

/// Hat-shaped exact network: `min(r_L, r_R)` of the clamped ramps around
/// `center`. A missing side means the ramp is constant 1 on that side. The
/// result is exactly zero outside `(left, right)`.
pub fn hat_net(left: Option<f64>, center: f64, right: Option<f64>, height: f64) -> Result<NeuralNetwork> {
    match (left, right) {
        (None, None) => NeuralNetwork::affine(1, 1, &[0.0], vec![height]),
        (Some(l), None) => {
            let h = center - l;
            ramp_net(&[(0, 1.0 / h), (1, -1.0 / h)], vec![-l, -center], height, 1.0)
        }
        (None, Some(r)) => {
            let h = r - center;
            ramp_net(&[(0, 1.0 / h), (1, -1.0 / h)], vec![r, center], height, -1.0)
        }
        (Some(l), Some(r)) => {
            let (hl, hr) = (center - l, r - center);
            let first = Layer::from_triplets(
                4,
                1,
                vec![(0, 0, 1.0), (1, 0, 1.0), (2, 0, -1.0), (3, 0, -1.0)],
                vec![-l, -center, r, -center],
            )?;
            // ρ(r_L) and ρ(r_L - r_R)
            let second = Layer::from_triplets(
                2,
                4,
                vec![
                    (0, 0, 1.0 / hl),
                    (0, 1, -1.0 / hl),
                    (1, 0, 1.0 / hl),
                    (1, 1, -1.0 / hl),
                    (1, 2, -1.0 / hr),
                    (1, 3, 1.0 / hr),
                ],
                vec![0.0, 0.0],
            )?;
            let out = Layer::from_triplets(1, 2, vec![(0, 0, height), (0, 1, -height)], vec![0.0])?;
            NeuralNetwork::new(1, vec![first, second, out])
        }
    }
}

fn ramp_net(w: &[(usize, f64)], bias: Vec<f64>, height: f64, dir: f64) -> Result<NeuralNetwork> {
    let first = Layer::from_triplets(2, 1, vec![(0, 0, dir), (1, 0, dir)], bias)?;
    let out = Layer::from_triplets(1, 2, w.iter().map(|&(j, v)| (0, j, height * v)).collect(), vec![0.0])?;
    NeuralNetwork::new(1, vec![first, out])
}

/// Interpolating decomposition of a piecewise polynomial: nodal values plus,
/// per piece, the quotient `w_i` with `v_i(s) = lin_i(s) + (1 - s²) w_i(s)`.
fn split_pieces(v: &PiecewisePolynomial) -> Result<(Vec<f64>, Vec<Polynomial>)> {
    let nodal = v.nodal_values()?;
    let mut ws = Vec::with_capacity(v.num_pieces());
    for (i, piece) in v.pieces.iter().enumerate() {
        let (a, b) = (nodal[i], nodal[i + 1]);
        let lin = Polynomial::new(vec![-(a + b) / 2.0, -(b - a) / 2.0]);
        let (q, _) = piece.add(&lin).divide_by_bubble();
        ws.push(q);
    }
    Ok((nodal, ws))
}

/// Sum of the outputs of equal-input networks as one network.
fn sum_nets(nets: Vec<NeuralNetwork>) -> Result<NeuralNetwork> {
    if nets.len() == 1 {
        return Ok(nets.into_iter().next().unwrap());
    }
    let aligned = crate::nn::calculus::depth_align(&nets)?;
    let par = parallel(&aligned)?;
    let k = par.output_dim();
    let sum = Layer::from_triplets(1, k, (0..k).map(|j| (0, j, 1.0)).collect(), vec![0.0])?;
    affine_postcompose(&sum, &par)
}

/// Network for a continuous piecewise polynomial on its breakpoints.
#[derive(Clone, Debug)]
pub struct PwPolyNet {
    pub net: NeuralNetwork,
    /// Certified sup bound of the error.
    pub value_error: f64,
    /// Certified sup bound of the a.e. derivative error.
    pub derivative_error: f64,
    /// `|v|_{W^{1,∞}} = max(sup|v|, sup|v'|)` on the breakpoint span (sampled).
    pub w1inf: f64,
}

/// `Φ^{v,T,p}_ε`: the piecewise-linear nodal interpolant, exact in ReLU, plus
/// one bubble network per piece. Bubbles vanish exactly at nodes, so nodal
/// values are those of the interpolant. Errors satisfy
/// `max(sup|e|, sup|e'|) ≤ ε |v|_{W^{1,∞}}`.
pub fn pwpoly_net(v: &PiecewisePolynomial, epsilon: f64) -> Result<PwPolyNet> {
    if !(epsilon > 0.0) {
        return Err(Error::Invalid("pwpoly_net needs epsilon > 0".into()));
    }
    let (nodal, ws) = split_pieces(v)?;
    let w1inf = w1inf_seminorm(v);
    let mut nets = vec![pl_net(&v.breaks, &nodal)?];
    let (mut ev, mut ed) = (0.0f64, 0.0f64);
    for (i, w) in ws.iter().enumerate() {
        if w.coeffs.iter().all(|c| *c == 0.0) {
            continue;
        }
        let h = v.width(i);
        let target = epsilon * w1inf * (h / 2.0).min(1.0);
        let b = bubble_net(v.breaks[i], v.breaks[i + 1], w, target)?;
        ev = ev.max(b.value_error);
        ed = ed.max(b.derivative_error);
        nets.push(b.net);
    }
    Ok(PwPolyNet {
        net: sum_nets(nets)?,
        value_error: ev,
        derivative_error: ed,
        w1inf,
    })
}

fn w1inf_seminorm(v: &PiecewisePolynomial) -> f64 {
    let mut m = 0.0f64;
    for i in 0..v.num_pieces() {
        let dp = v.pieces[i].derivative();
        let scale = 2.0 / v.width(i);
        for k in 0..=256 {
            let s = -1.0 + 2.0 * k as f64 / 256.0;
            m = m.max(v.pieces[i].eval(s).abs()).max(dp.eval(s).abs() * scale);
        }
    }
    m
}

/// Network of an hp basis function with certified H¹ error.
#[derive(Clone, Debug)]
pub struct BasisNet {
    pub net: NeuralNetwork,
    /// Upper bound of `‖v - R(Φ)‖_{H¹}`.
    pub h1_error_bound: f64,
    /// Upper bound of `‖v - R(Φ)‖_{L∞}`.
    pub sup_error_bound: f64,
}

/// `Φ^{v_i}_{ε₁}` for a function supported on at most two neighbouring
/// intervals and vanishing at interior support ends. The nodal part is an
/// exact hat network that is zero outside the support; each piece gets a
/// bubble network with `‖e‖_{H¹(piece)}² ≤ ε₁² |v|²_{H¹} / (#pieces)`.
pub fn basis_net(v: &PiecewisePolynomial, epsilon1: f64) -> Result<BasisNet> {
    if v.num_pieces() > 2 {
        return Err(Error::Invalid(format!(
            "basis function spans {} intervals; at most 2 neighbouring intervals are supported",
            v.num_pieces()
        )));
    }
    if !(epsilon1 > 0.0 && epsilon1 <= 1.0) {
        return Err(Error::Invalid(format!("epsilon1 = {epsilon1} must lie in (0, 1]")));
    }
    let (nodal, ws) = split_pieces(v)?;
    let seminorm = h1_seminorm(v);
    let n = v.num_pieces();
    let b = &v.breaks;
    let mut nets = Vec::new();
    for (k, &val) in nodal.iter().enumerate() {
        if val == 0.0 {
            continue;
        }
        let left = (k > 0).then(|| b[k - 1]);
        let right = (k < n).then(|| b[k + 1]);
        nets.push(hat_net(left, b[k], right, val)?);
    }
    let (mut h1sq, mut sup) = (0.0f64, 0.0f64);
    for (i, w) in ws.iter().enumerate() {
        if w.coeffs.iter().all(|c| *c == 0.0) {
            continue;
        }
        let h = v.width(i);
        let target = epsilon1 * seminorm / (n as f64 * (4.0 / h + h)).sqrt();
        let bn = bubble_net(b[i], b[i + 1], w, target)?;
        h1sq += bn.value_error.powi(2) * (4.0 / h + h);
        sup = sup.max(bn.value_error);
        nets.push(bn.net);
    }
    if nets.is_empty() {
        nets.push(NeuralNetwork::affine(1, 1, &[0.0], vec![0.0])?);
    }
    Ok(BasisNet {
        net: sum_nets(nets)?,
        h1_error_bound: h1sq.sqrt(),
        sup_error_bound: sup,
    })
}

/// `|v|_{H¹}` by Gauss–Legendre on each piece.
pub fn h1_seminorm(v: &PiecewisePolynomial) -> f64 {
    let rule = crate::hp::quadrature::gauss_legendre(32);
    let mut acc = 0.0;
    for i in 0..v.num_pieces() {
        let dp = v.pieces[i].derivative();
        let scale = 2.0 / v.width(i);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let d = dp.eval(*t) * scale;
            acc += w * d * d / scale;
        }
    }
    acc.sqrt()
}
