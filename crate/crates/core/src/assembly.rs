//! Compiles an hp interpolant into one explicit ReLU network, and the
//! end-to-end builders that pick the mesh depth by measurement.
//!
//! Layout of the compiled network, input to output:
//! 1. `Φ_basis`: for each axis, all active 1D basis networks in parallel on
//!    that coordinate, depth-aligned; the `d` axis blocks fully parallel.
//! 2. one branch per nonzero coefficient: a selector layer picking the `d`
//!    factor outputs, then the product network `Π^d_{ε₂,2}`.
//! 3. the coefficient layer.
//!
//! Error split: with `c_v = max_i ‖v_i‖_{H¹}` and every basis network within
//! `ε₁` of its target in H¹, the tensor telescoping bound gives at most
//! `ε₁ d (c_v+1)^d ‖c‖₁`; the product networks add at most
//! `ε₂ (√d+1)(c_v+1) ‖c‖₁` (value and partials within `ε₂` on `[-2,2]^d`).

use serde::Serialize;

use crate::catalog::Field;
use crate::error::{Error, Result};
use crate::hp::interpolant::{hp_interpolate, multipatch_interpolate, HpInterpolant};
use crate::hp::mesh::{geometric_mesh, TensorMesh};
use crate::metrics::{for_each_point, h1_error, CellMesh, ErrorReport, FieldEval, QuadConfig, TensorEval};
use crate::nn::calculus::{concat, full_parallel, pad_to_depth, ParallelBuilder};
use crate::nn::emulation::{basis_net, h1_seminorm, product_net, BasisNet, ProductNet};
use crate::nn::{Layer, NeuralNetwork, Workspace};

/// Tolerances below this are refused.
pub const UNDERFLOW: f64 = 1e-12;
/// Input box of the product networks.
pub const PRODUCT_BOX: f64 = 2.0;

/// The tolerance split of one build.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssemblyPlan {
    pub dim: usize,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub m_times: f64,
    pub c_v_max: f64,
    pub c_l1: f64,
    /// `max(1, |I|^{d/2})` for the axis interval `I`; 1 on the unit cube.
    pub volume_factor: f64,
}

impl AssemblyPlan {
    /// `axis_length` is the length of the 1D domain interval.
    pub fn new(dim: usize, epsilon: f64, c_v_max: f64, c_l1: f64, axis_length: f64) -> Result<AssemblyPlan> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Invalid(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        let d = dim as f64;
        let cv1 = c_v_max + 1.0;
        let volume_factor = axis_length.powf(d / 2.0).max(1.0);
        // basis errors vanish at the support ends, so sup ≤ √|I| · H¹ error;
        // keeping that ≤ 1 keeps every product input inside [-2, 2]
        let box_term = 1.0 / axis_length.sqrt().max(1.0);
        let mut epsilon1 = (0.5f64).min(box_term);
        let mut epsilon2 = 0.5f64;
        if c_l1 > 0.0 {
            epsilon1 = epsilon1.min(epsilon / (2.0 * d * cv1.powi(dim as i32) * c_l1));
            epsilon2 = epsilon2.min(epsilon / (2.0 * (d.sqrt() + 1.0) * cv1 * c_l1 * volume_factor));
        }
        if epsilon1 < UNDERFLOW {
            return Err(Error::Underflow {
                name: "epsilon1",
                value: epsilon1,
            });
        }
        if epsilon2 < UNDERFLOW {
            return Err(Error::Underflow {
                name: "epsilon2",
                value: epsilon2,
            });
        }
        Ok(AssemblyPlan {
            dim,
            epsilon,
            epsilon1,
            epsilon2,
            m_times: PRODUCT_BOX,
            c_v_max,
            c_l1,
            volume_factor,
        })
    }

    /// The two-term bound on `‖Σ c v - R(Φ)‖_{H¹}`.
    pub fn budget(&self) -> f64 {
        let d = self.dim as f64;
        let cv1 = self.c_v_max + 1.0;
        self.epsilon1 * d * cv1.powi(self.dim as i32) * self.c_l1
            + self.epsilon2 * (d.sqrt() + 1.0) * cv1 * self.c_l1 * self.volume_factor
    }
}

/// A compiled network together with the parts it was wired from. The parts
/// give a fast evaluator that skips branches whose factors are exactly zero;
/// [`AssembledNetwork::net`] is the single flattened network.
#[derive(Clone, Debug)]
pub struct AssembledNetwork {
    pub plan: AssemblyPlan,
    pub interp: HpInterpolant,
    /// One coefficient array (vvec order) per output.
    pub outputs: Vec<Vec<f64>>,
    /// Per 1D basis index; `None` for inactive slots.
    pub basis_nets: Vec<Option<BasisNet>>,
    /// Absent for `d = 1`.
    pub product: Option<ProductNet>,
    /// Flat indices of the instantiated branches.
    pub tuples: Vec<usize>,
    pub basis_depth: usize,
    pub net: NeuralNetwork,
}

/// `Φ_{ε,c}` for the interpolant's own coefficients.
pub fn build_phi_eps_c(interp: &HpInterpolant, epsilon: f64) -> Result<AssembledNetwork> {
    assemble(interp, vec![interp.coeffs.clone()], epsilon)
}

fn assemble(interp: &HpInterpolant, outputs: Vec<Vec<f64>>, epsilon: f64) -> Result<AssembledNetwork> {
    let d = interp.dim;
    let n1d = interp.n1d();
    let stats = interp.stats();
    let c_l1 = outputs
        .iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let (lo, hi) = interp.domain();
    let plan = AssemblyPlan::new(d, epsilon, stats.max_basis_h1, c_l1, hi - lo)?;
    if plan.budget() > epsilon * (1.0 + 1e-12) {
        return Err(Error::Infeasible(format!(
            "tolerance split {} exceeds epsilon {epsilon}",
            plan.budget()
        )));
    }

    let active: Vec<usize> = (0..n1d).filter(|&i| interp.basis.is_active(i)).collect();
    let built = crate::par::par_map(&active, |&i| -> Result<BasisNet> {
        let v = interp.basis.piecewise(i);
        let semi = h1_seminorm(&v);
        let rel = if semi > 0.0 {
            (plan.epsilon1 / semi).min(1.0)
        } else {
            1.0
        };
        let bn = basis_net(&v, rel)?;
        if bn.h1_error_bound > plan.epsilon1 * (1.0 + 1e-9) || bn.sup_error_bound > 1.0 {
            return Err(Error::Infeasible(format!(
                "basis network {i} misses its budget: H1 bound {:e}, sup bound {:e}",
                bn.h1_error_bound, bn.sup_error_bound
            )));
        }
        Ok(bn)
    });
    let mut basis_nets: Vec<Option<BasisNet>> = vec![None; n1d];
    for (&i, bn) in active.iter().zip(built) {
        basis_nets[i] = Some(bn?);
    }
    let product = if d >= 2 {
        Some(product_net(d, plan.epsilon2, PRODUCT_BOX)?)
    } else {
        None
    };
    let tuples: Vec<usize> = (0..interp.coeffs.len())
        .filter(|&t| outputs.iter().any(|c| c[t] != 0.0))
        .collect();

    // 1. basis block
    let basis_depth = active
        .iter()
        .map(|&i| basis_nets[i].as_ref().unwrap().net.depth())
        .max()
        .unwrap_or(1);
    let mut axis = ParallelBuilder::shared(basis_depth);
    let mut axis_bound = 0usize;
    let mut position = vec![usize::MAX; n1d];
    for (pos, &i) in active.iter().enumerate() {
        let padded = pad_to_depth(&basis_nets[i].as_ref().unwrap().net, basis_depth)?;
        axis_bound += padded.size();
        axis.push(&padded)?;
        position[i] = pos;
    }
    let axis_net = axis.finish()?;
    let phi_basis = if d == 1 {
        axis_net
    } else {
        full_parallel(&vec![axis_net; d])?
    };
    let basis_bound = d * axis_bound;
    let na = active.len();

    // 2. selector + product branches
    let branch_depth = product.as_ref().map_or(1, |p| p.net.depth() + 1);
    let mut branches = ParallelBuilder::shared(branch_depth);
    let mut branch_bound = 0usize;
    for &t in &tuples {
        let idx = interp.multi_index(t);
        let entries: Vec<(usize, usize, f64)> = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| (j, j * na + position[i], 1.0))
            .collect();
        if entries.iter().any(|e| e.1 >= d * na) {
            return Err(Error::Invalid(format!(
                "coefficient {t} sits on an inactive basis slot"
            )));
        }
        let selector = NeuralNetwork::new(d * na, vec![Layer::from_triplets(d, d * na, entries, vec![0.0; d])?])?;
        debug_assert_eq!(selector.size(), d);
        let branch = match &product {
            Some(p) => {
                branch_bound += 2 * (p.net.size() + d);
                concat(&p.net, &selector)?
            }
            None => {
                branch_bound += d;
                selector
            }
        };
        branches.push(&branch)?;
    }
    if branches.is_empty() {
        // all coefficients zero: a single zero branch keeps the wiring valid
        let zero = NeuralNetwork::new(d * na, vec![Layer::from_triplets(1, d * na, vec![], vec![0.0])?])?;
        branches.push(&pad_to_depth(&zero, branch_depth)?)?;
    }
    let branch_net = branches.finish()?;
    let phi_eps = concat(&branch_net, &phi_basis)?;
    let eps_bound = 2 * (branch_bound + basis_bound);

    // 3. coefficient layer
    let nb = branch_net.output_dim();
    let mut entries = Vec::new();
    for (o, c) in outputs.iter().enumerate() {
        for (k, &t) in tuples.iter().enumerate() {
            if c[t] != 0.0 {
                entries.push((o, k, c[t]));
            }
        }
    }
    let nnz_c = entries.len();
    let coeff_layer = NeuralNetwork::new(
        nb,
        vec![Layer::from_triplets(
            outputs.len(),
            nb,
            entries,
            vec![0.0; outputs.len()],
        )?],
    )?;
    let net = concat(&coeff_layer, &phi_eps)?;
    let total_bound = 2 * (nnz_c + eps_bound);

    let want_depth = basis_depth + branch_depth + 1;
    if net.depth() != want_depth || net.size() > total_bound {
        return Err(Error::Invalid(format!(
            "structural check failed: depth {} (want {want_depth}), size {} (bound {total_bound})",
            net.depth(),
            net.size()
        )));
    }
    Ok(AssembledNetwork {
        plan,
        interp: interp.clone(),
        outputs,
        basis_nets,
        product,
        tuples,
        basis_depth,
        net,
    })
}

impl AssembledNetwork {
    pub fn dim(&self) -> usize {
        self.interp.dim
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// View of one output as a [`TensorEval`].
    pub fn output(&self, o: usize) -> OutputEval<'_> {
        OutputEval { net: self, output: o }
    }

    /// Value and gradient of output `o` at one point via the parts.
    pub fn eval_with_gradient(&self, o: usize, x: &[f64], grad: &mut [f64]) -> f64 {
        let coords: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        let (mut v, mut g) = (Vec::new(), Vec::new());
        self.output(o).eval_tensor(&coords, &mut v, &mut g);
        grad.copy_from_slice(&g[..x.len()]);
        v[0]
    }

    /// Largest `|composed - flattened|` over `n` seeded points, relative to
    /// `max(1, |value|)`.
    pub fn check_against_flat(&self, n: usize, seed: u64) -> Result<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = self.interp.domain();
        let d = self.dim();
        let mut worst = 0.0f64;
        let mut g = vec![0.0; d];
        for _ in 0..n {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(lo..hi)).collect();
            let flat = self.net.realize(&x)?;
            for o in 0..self.num_outputs() {
                let v = self.eval_with_gradient(o, &x, &mut g);
                worst = worst.max((v - flat[o]).abs() / v.abs().max(1.0));
            }
        }
        Ok(worst)
    }
}

/// One output of an [`AssembledNetwork`] evaluated through its parts.
pub struct OutputEval<'a> {
    net: &'a AssembledNetwork,
    output: usize,
}

impl TensorEval for OutputEval<'_> {
    fn dim(&self) -> usize {
        self.net.dim()
    }

    fn eval_tensor(&self, coords: &[Vec<f64>], vals: &mut Vec<f64>, grads: &mut Vec<f64>) {
        let a = self.net;
        let d = a.dim();
        let n = a.interp.n1d();
        let coeffs = &a.outputs[self.output];
        let mut ws = Workspace::default();
        let mut leg = Vec::new();
        let mut local = Vec::new();
        // per axis, per coordinate: (basis index, R_i, R_i') with R_i ≠ 0
        let factors: Vec<Vec<Vec<(usize, f64, f64)>>> = coords
            .iter()
            .map(|axis| {
                axis.iter()
                    .map(|&x| {
                        a.interp.basis.local_functions(x, &mut local, &mut leg);
                        local
                            .iter()
                            .filter_map(|&(i, _, _)| {
                                let bn = a.basis_nets[i].as_ref()?;
                                let (v, dv) = bn.net.grad_realize_with(&[x], &mut ws);
                                (v[0] != 0.0).then_some((i, v[0], dv[0]))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let counts: Vec<usize> = coords.iter().map(|c| c.len()).collect();
        let total: usize = counts.iter().product();
        vals.resize(total, 0.0);
        grads.resize(total * d, 0.0);
        let mut input = vec![0.0; d];
        let mut pg = vec![0.0; d];
        for_each_point(&counts, |t, idx| {
            let lists: Vec<&[(usize, f64, f64)]> = (0..d).map(|j| factors[j][idx[j]].as_slice()).collect();
            let g = &mut grads[t * d..(t + 1) * d];
            g.iter_mut().for_each(|v| *v = 0.0);
            let mut value = 0.0;
            let inner: Vec<usize> = lists.iter().map(|l| l.len()).collect();
            if !inner.contains(&0) {
                for_each_point(&inner, |_, k| {
                    let mut flat = 0;
                    let mut stride = 1;
                    for j in 0..d {
                        flat += lists[j][k[j]].0 * stride;
                        stride *= n;
                        input[j] = lists[j][k[j]].1;
                    }
                    let c = coeffs[flat];
                    if c == 0.0 {
                        return;
                    }
                    match &a.product {
                        None => {
                            value += c * input[0];
                            g[0] += c * lists[0][k[0]].2;
                        }
                        Some(p) => {
                            let v = p.eval_with_gradient(&input, &mut pg);
                            value += c * v;
                            for j in 0..d {
                                g[j] += c * pg[j] * lists[j][k[j]].2;
                            }
                        }
                    }
                });
            }
            vals[t] = value;
        });
    }
}

impl TensorEval for AssembledNetwork {
    fn dim(&self) -> usize {
        self.interp.dim
    }

    fn eval_tensor(&self, coords: &[Vec<f64>], vals: &mut Vec<f64>, grads: &mut Vec<f64>) {
        self.output(0).eval_tensor(coords, vals, grads);
    }
}

/// Where the target function lives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub enum Domain {
    /// `(0, 1)^d`, geometric mesh graded toward the origin.
    UnitCube,
    /// `(-a, a)^d` with the four-patch mesh on each axis.
    Cube { a: f64 },
}

/// Settings of the end-to-end builders.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct BuildConfig {
    pub sigma: f64,
    /// `p = max(1, ⌈c_p ℓ⌉)`.
    pub c_p: f64,
    pub ell_min: usize,
    pub ell_max: usize,
    pub domain: Domain,
    pub quad: QuadConfig,
    /// Random points for the composed-versus-flattened check; 0 skips it.
    pub verify_points: usize,
}

impl Default for BuildConfig {
    fn default() -> BuildConfig {
        BuildConfig {
            sigma: 0.5,
            c_p: 1.0,
            ell_min: 0,
            ell_max: 12,
            domain: Domain::UnitCube,
            quad: QuadConfig::default(),
            verify_points: 100,
        }
    }
}

impl BuildConfig {
    pub fn degree(&self, ell: usize) -> usize {
        ((self.c_p * ell as f64).ceil() as usize).max(1)
    }

    /// The interpolant at layer count `ell` under this configuration.
    pub fn interpolate<F: Field + ?Sized>(&self, u: &F, ell: usize) -> Result<HpInterpolant> {
        let p = self.degree(ell);
        match self.domain {
            Domain::UnitCube => hp_interpolate(u, &TensorMesh::new(u.dim(), geometric_mesh(self.sigma, ell)?)?, p),
            Domain::Cube { a } => multipatch_interpolate(u, a, self.sigma, ell, p),
        }
    }
}

/// One row of a build: mesh, network statistics and measured errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuildReport {
    pub dim: usize,
    pub func: String,
    pub params: String,
    pub sigma: f64,
    pub ell: usize,
    pub p: usize,
    pub n1d: usize,
    pub coeff_l1: f64,
    pub nn_size: usize,
    pub nn_depth: usize,
    /// `‖u - Π_hp u‖_{H¹}` from calibration.
    pub hp_h1_error: f64,
    /// `‖u - R(Φ)‖_{H¹}`.
    pub h1_error: f64,
    pub linf_error: f64,
    pub richardson_gap: f64,
    pub certified: bool,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    /// Composed-versus-flattened discrepancy; NaN when not checked.
    pub flat_check: f64,
    pub seconds: f64,
}

/// Wall-clock seconds since `start`; zero where no clock is available.
pub(crate) fn elapsed(start: &Option<std::time::Instant>) -> f64 {
    start.map_or(0.0, |s| s.elapsed().as_secs_f64())
}

pub(crate) fn now() -> Option<std::time::Instant> {
    if cfg!(target_arch = "wasm32") {
        None
    } else {
        Some(std::time::Instant::now())
    }
}

/// Grows `ℓ` from `cfg.ell_min` until every function's interpolation error
/// is at most `target`; returns the interpolants and their reports.
fn calibrate<F: Field + ?Sized>(
    us: &[&F],
    target: f64,
    cfg: &BuildConfig,
) -> Result<(Vec<HpInterpolant>, Vec<ErrorReport>)> {
    let mut best = f64::INFINITY;
    for ell in cfg.ell_min..=cfg.ell_max {
        let mut its = Vec::new();
        let mut reps = Vec::new();
        for u in us {
            let it = cfg.interpolate(*u, ell)?;
            let mesh = CellMesh::from_interpolant(&it, u.singular_set());
            reps.push(h1_error(&FieldEval(*u), &it, &mesh, &cfg.quad)?);
            its.push(it);
        }
        let worst = reps.iter().map(|r| r.h1_error).fold(0.0, f64::max);
        best = best.min(worst);
        if worst <= target {
            return Ok((its, reps));
        }
    }
    Err(Error::Calibration {
        ell_max: cfg.ell_max,
        best,
    })
}

/// `Φ_{ε,f}`: calibrate the interpolant to `ε/2`, compile it with budget
/// `ε/2`, then measure `‖u - R(Φ)‖_{H¹}`.
pub fn build_phi_eps_f<F: Field + ?Sized>(
    u: &F,
    epsilon: f64,
    cfg: &BuildConfig,
) -> Result<(AssembledNetwork, BuildReport)> {
    let (net, mut reports) = build_vector(&[u], epsilon, cfg)?;
    Ok((net, reports.remove(0)))
}

/// One network with an output per function, sharing `Φ_basis` and the
/// product branches; each output is certified separately.
pub fn build_vector<F: Field + ?Sized>(
    us: &[&F],
    epsilon: f64,
    cfg: &BuildConfig,
) -> Result<(AssembledNetwork, Vec<BuildReport>)> {
    if us.is_empty() {
        return Err(Error::Invalid("build_vector needs at least one function".into()));
    }
    if us.iter().any(|u| u.dim() != us[0].dim()) {
        return Err(Error::Dimension("functions of different dimension".into()));
    }
    let start = now();
    let (its, hp_reports) = calibrate(us, epsilon / 2.0, cfg)?;
    let outputs: Vec<Vec<f64>> = its.iter().map(|it| it.coeffs.clone()).collect();
    let assembled = assemble(&its[0], outputs, epsilon / 2.0)?;
    let flat_check = if cfg.verify_points > 0 {
        assembled.check_against_flat(cfg.verify_points, cfg.quad.seed)?
    } else {
        f64::NAN
    };
    let mut reports = Vec::new();
    for (o, u) in us.iter().enumerate() {
        let mesh = CellMesh::from_interpolant(&its[o], u.singular_set());
        let rep = h1_error(&FieldEval(*u), &assembled.output(o), &mesh, &cfg.quad)?;
        let (func, params) = u.describe();
        reports.push(BuildReport {
            dim: u.dim(),
            func,
            params,
            sigma: cfg.sigma,
            ell: its[o].ell(),
            p: its[o].p(),
            n1d: its[o].n1d(),
            coeff_l1: its[o].coeff_l1(),
            nn_size: assembled.net.size(),
            nn_depth: assembled.net.depth(),
            hp_h1_error: hp_reports[o].h1_error,
            h1_error: rep.h1_error,
            linf_error: rep.linf_error,
            richardson_gap: rep.richardson_gap,
            certified: rep.certified && rep.h1_error <= epsilon,
            epsilon,
            epsilon1: assembled.plan.epsilon1,
            epsilon2: assembled.plan.epsilon2,
            flat_check,
            seconds: 0.0,
        });
    }
    let secs = elapsed(&start);
    reports.iter_mut().for_each(|r| r.seconds = secs);
    Ok((assembled, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{analytic_fn, AnalyticKind};

    fn small_interp(u: &dyn Field, ell: usize, p: usize) -> HpInterpolant {
        hp_interpolate(
            u,
            &TensorMesh::new(u.dim(), geometric_mesh(0.5, ell).unwrap()).unwrap(),
            p,
        )
        .unwrap()
    }

    #[test]
    fn zero_coefficients_give_zero_network() {
        let u = analytic_fn(2, AnalyticKind::Constant(0.0)).unwrap();
        let it = small_interp(&u, 1, 2);
        let a = build_phi_eps_c(&it, 1e-2).unwrap();
        for x in [[0.1, 0.2], [0.7, 0.9]] {
            assert_eq!(a.net.realize(&x).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn plan_budget_is_sound() {
        let plan = AssemblyPlan::new(3, 1e-2, 7.5, 40.0, 1.0).unwrap();
        assert!(plan.budget() <= 1e-2 * (1.0 + 1e-12));
        assert!(matches!(
            AssemblyPlan::new(3, 1e-2, 1e4, 1e8, 1.0),
            Err(Error::Underflow { .. })
        ));
    }

    #[test]
    fn composed_matches_flattened() {
        let u = analytic_fn(2, AnalyticKind::SinProduct(2.0)).unwrap();
        let it = small_interp(&u, 1, 2);
        let a = build_phi_eps_c(&it, 1e-1).unwrap();
        assert!(a.check_against_flat(50, 1).unwrap() < 1e-10);
        assert_eq!(
            a.net.depth(),
            a.basis_depth + a.product.as_ref().unwrap().net.depth() + 2
        );
        // emulation error against the interpolant stays under budget
        let rep = h1_error(
            &it,
            &a,
            &CellMesh::from_interpolant(&it, Default::default()),
            &QuadConfig::default(),
        )
        .unwrap();
        assert!(rep.h1_error <= 1e-1, "{}", rep.h1_error);
    }

    #[test]
    fn vector_outputs_are_linear() {
        let u = analytic_fn(2, AnalyticKind::Exp(0.5)).unwrap();
        let v = u.scaled(2.0);
        let cfg = BuildConfig {
            verify_points: 0,
            ..BuildConfig::default()
        };
        let (a, reps) = build_vector(&[&u, &v], 0.2, &cfg).unwrap();
        let y = a.net.realize(&[0.3, 0.4]).unwrap();
        assert!((y[1] - 2.0 * y[0]).abs() <= 1e-12 * y[1].abs().max(1.0));
        assert!(reps.iter().all(|r| r.h1_error <= 0.2));
    }
}
