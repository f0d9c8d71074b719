//! Acceptance suite: criteria 1-10, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so that the verdict lines appear in the
//! plain `cargo test` output. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 4 9`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relu_hp::assembly::{build_phi_eps_f, BuildConfig, BuildReport};
use relu_hp::catalog::{affine_fn, analytic_fn, corner_edge, corner_singular, fichera_extend, AnalyticKind, Field};
use relu_hp::hp::{element_projection, geometric_mesh, hp_interpolate, project_element, HpBasis, TensorMesh};
use relu_hp::metrics::{fit_rate, h1_error, linear_fit, CellMesh, FieldEval, QuadConfig, RateModel};
use relu_hp::nn::emulation::{basis_net, product_net, pwpoly_net};
use relu_hp::poly::{PiecewisePolynomial, Polynomial};
use relu_hp::selfcheck::calculus_suite;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Interpolation errors of `u` for `ell = 1..=ell_max` with `p = ell`.
fn hp_sweep(
    u: &dyn Field,
    sigma: f64,
    ells: std::ops::RangeInclusive<usize>,
) -> Result<Vec<(usize, usize, f64, bool)>, String> {
    let mut out = Vec::new();
    for ell in ells {
        let mesh = TensorMesh::new(u.dim(), geometric_mesh(sigma, ell).map_err(err)?).map_err(err)?;
        let it = hp_interpolate(u, &mesh, ell).map_err(err)?;
        let cells = CellMesh::from_interpolant(&it, u.singular_set());
        let r = h1_error(&FieldEval(u), &it, &cells, &QuadConfig::default()).map_err(err)?;
        out.push((ell, it.num_dofs(), r.h1_error, r.certified));
    }
    Ok(out)
}

/// Strict decrease, allowing one step that grows by less than a factor 2.
fn decreasing_with_slack(e: &[f64]) -> bool {
    let bad: Vec<f64> = e.windows(2).filter(|w| w[1] >= w[0]).map(|w| w[1] / w[0]).collect();
    bad.is_empty() || (bad.len() == 1 && bad[0] < 2.0)
}

fn criterion1() -> Check {
    let t = Instant::now();
    let u = corner_singular(2, 0.5, &[0.0, 0.0]).map_err(err)?;
    let rows = hp_sweep(&u, 0.5, 1..=8)?;
    let errs: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let by_ell = fit_rate(
        &rows.iter().map(|r| (r.0 as f64, r.2)).collect::<Vec<_>>(),
        RateModel::ExpInN,
    )
    .map_err(err)?;
    let by_dof = fit_rate(
        &rows.iter().map(|r| (r.1 as f64, r.2)).collect::<Vec<_>>(),
        RateModel::ExpInRoot(4),
    )
    .map_err(err)?;
    let secs = t.elapsed().as_secs_f64();
    let certified = rows.iter().all(|r| r.3);
    ensure(
        decreasing_with_slack(&errs)
            && by_ell.b > 0.0
            && by_ell.r_squared >= 0.98
            && by_dof.b > 0.0
            && by_dof.r_squared >= 0.95
            && certified
            && secs < 120.0,
        format!(
            "H1 {:.2e} -> {:.2e}; vs ell b={:.3} r2={:.4}; vs Ndof^(1/4) b={:.3} r2={:.4}; certified={certified}; {secs:.1}s",
            errs[0],
            errs[errs.len() - 1],
            by_ell.b,
            by_ell.r_squared,
            by_dof.b,
            by_dof.r_squared
        ),
    )
}

fn criterion2() -> Check {
    let t = Instant::now();
    let u = corner_edge(0.8, 0.6, 2).map_err(err)?;
    let rows = hp_sweep(&u, 0.5, 1..=4)?;
    let errs: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let fit = fit_rate(
        &rows.iter().map(|r| (r.0 as f64, r.2)).collect::<Vec<_>>(),
        RateModel::ExpInN,
    )
    .map_err(err)?;
    let secs = t.elapsed().as_secs_f64();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    ensure(
        monotone && fit.b > 0.0 && fit.r_squared >= 0.9 && secs < 600.0,
        format!(
            "H1 {}; b={:.3} r2={:.4}; {secs:.1}s",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" "),
            fit.b,
            fit.r_squared
        ),
    )
}

fn criterion3() -> Check {
    let rules = calculus_suite(2024, 1000).map_err(err)?;
    let worst = rules.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    let violations: usize = rules.iter().map(|r| r.violations).sum();
    ensure(
        rules.iter().all(|r| r.passed(1e-12)),
        format!(
            "{} rules x 1000 nets; max rel error {worst:.1e}; {violations} violations",
            rules.len()
        ),
    )
}

fn grid(d: usize, m: f64, n: usize) -> impl Iterator<Item = Vec<f64>> {
    let total = n.pow(d as u32);
    (0..total).map(move |k| {
        (0..d)
            .map(|j| -m + 2.0 * m * ((k / n.pow(j as u32)) % n) as f64 / (n - 1) as f64)
            .collect()
    })
}

fn criterion4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_v = 0.0f64;
    let mut worst_d = 0.0f64;
    let mut zero_fail = 0;
    let mut min_r2 = 1.0f64;
    let mut lines = Vec::new();
    let mut ok = true;
    for d in [2usize, 3] {
        for m in [1.0, 2.0] {
            let mut sizes = Vec::new();
            for eps in [1e-2, 1e-3, 1e-4] {
                let p = product_net(d, eps, m).map_err(err)?;
                let n = if d == 2 { 201 } else { 61 };
                let mut ev = 0.0f64;
                let mut ws = Default::default();
                for x in grid(d, m, n) {
                    let v = p.net.realize_with(&x, &mut ws)[0];
                    ev = ev.max((v - x.iter().product::<f64>()).abs());
                }
                let mut ed = 0.0f64;
                for _ in 0..1000 {
                    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-m..m)).collect();
                    let (_, jac) = p.net.grad_realize(&x).map_err(err)?;
                    for (j, dj) in jac[0].iter().enumerate() {
                        let exact: f64 = (0..d).filter(|&i| i != j).map(|i| x[i]).product();
                        ed = ed.max((dj - exact).abs());
                    }
                }
                for _ in 0..100 {
                    let mut x: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
                    x[rng.gen_range(0..d)] = 0.0;
                    if p.net.realize(&x).map_err(err)?[0] != 0.0 {
                        zero_fail += 1;
                    }
                }
                ok &= ev <= eps && ed <= eps;
                worst_v = worst_v.max(ev / eps);
                worst_d = worst_d.max(ed / eps);
                sizes.push(((1.0 / eps).ln(), p.net.size() as f64));
            }
            let x: Vec<f64> = sizes.iter().map(|s| s.0).collect();
            let y: Vec<f64> = sizes.iter().map(|s| s.1).collect();
            let (_, slope, r2) = linear_fit(&x, &y);
            min_r2 = min_r2.min(r2);
            lines.push(format!("d={d},M={m}: size {:.0}..{:.0}, slope {slope:.0}", y[0], y[2]));
        }
    }
    ensure(
        ok && zero_fail == 0 && min_r2 >= 0.95,
        format!(
            "max value err/eps {worst_v:.3}, max deriv err/eps {worst_d:.3}, zero-on-zero failures {zero_fail}, min size-fit r2 {min_r2:.4} ({})",
            lines.join("; ")
        ),
    )
}

/// Continuous piecewise polynomial with random nodal values and random
/// bubble parts of degree up to `p`.
fn random_pwpoly(rng: &mut impl Rng) -> PiecewisePolynomial {
    let n = rng.gen_range(1..=4);
    let mut breaks = vec![rng.gen_range(-2.0..0.0)];
    for _ in 0..n {
        let last = *breaks.last().unwrap();
        breaks.push(last + rng.gen_range(0.1..1.0));
    }
    let nodal: Vec<f64> = (0..=n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let pieces = (0..n)
        .map(|i| {
            let p = rng.gen_range(1..=6);
            let (a, b) = (nodal[i], nodal[i + 1]);
            let lin = Polynomial::new(vec![(a + b) / 2.0, (b - a) / 2.0]);
            if p < 2 {
                return lin;
            }
            let w = Polynomial::new((0..=p - 2).map(|_| rng.gen_range(-1.0..1.0)).collect());
            lin.add(&Polynomial::new(vec![1.0, 0.0, -1.0]).mul(&w))
        })
        .collect();
    PiecewisePolynomial::new(breaks, pieces).unwrap()
}

fn criterion5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let v = random_pwpoly(&mut rng);
        let net = pwpoly_net(&v, 1e-3).map_err(err)?;
        let nodal = v.nodal_values().map_err(err)?;
        for (x, y) in v.breaks.iter().zip(&nodal) {
            worst = worst.max((net.net.realize(&[*x]).map_err(err)?[0] - y).abs());
        }
    }
    // basis networks of an hp space at every mesh node
    let basis = HpBasis::new(geometric_mesh(0.5, 3).map_err(err)?, 4).map_err(err)?;
    let nodes = basis.mesh.nodes().to_vec();
    let mut worst_basis = 0.0f64;
    for i in 0..basis.len() {
        let v = basis.piecewise(i);
        let bn = basis_net(&v, 1e-3).map_err(err)?;
        for &x in &nodes {
            let exact = v.eval(x);
            worst_basis = worst_basis.max((bn.net.realize(&[x]).map_err(err)?[0] - exact).abs());
        }
    }
    ensure(
        worst <= 1e-12 && worst_basis <= 1e-12,
        format!(
            "50 piecewise polynomials: max nodal error {worst:.1e}; {} hp basis nets: {worst_basis:.1e}",
            basis.len()
        ),
    )
}

fn run_e2e(d: usize, eps: f64) -> Result<BuildReport, String> {
    let (u, sigma) = if d == 2 {
        (corner_singular(2, 0.5, &[0.0, 0.0]).map_err(err)?, 0.15)
    } else {
        (corner_edge(0.8, 0.6, 2).map_err(err)?, 0.25)
    };
    let cfg = BuildConfig {
        sigma,
        ..BuildConfig::default()
    };
    build_phi_eps_f(&u, eps, &cfg).map(|r| r.1).map_err(err)
}

fn summary(r: &BuildReport) -> String {
    format!(
        "d={} eps={:.0e}: ell={} size={} H1={:.2e}{}",
        r.dim,
        r.epsilon,
        r.ell,
        r.nn_size,
        r.h1_error,
        if r.certified { "" } else { " (uncertified)" }
    )
}

fn criterion6(runs: &mut Vec<BuildReport>) -> Check {
    let t = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for (d, eps) in [(2, 1e-1), (2, 3e-2), (2, 1e-2), (3, 2e-1), (3, 1e-1)] {
        match run_e2e(d, eps) {
            Ok(r) => {
                ok &= r.certified && r.h1_error <= eps;
                lines.push(summary(&r));
                runs.push(r);
            }
            Err(e) => {
                ok = false;
                lines.push(format!("d={d} eps={eps:.0e}: {e}"));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(ok && secs < 900.0, format!("{}; {secs:.1}s", lines.join("; ")))
}

fn criterion7(runs: &[BuildReport]) -> Check {
    let mut pts: Vec<(f64, f64)> = runs
        .iter()
        .filter(|r| r.dim == 2)
        .map(|r| (1.0 + r.epsilon.ln().abs(), r.nn_size as f64))
        .collect();
    let extra = run_e2e(2, 3e-3)?;
    let extra_ok = extra.certified && extra.h1_error <= 3e-3;
    pts.push((1.0 + 3e-3f64.ln().abs(), extra.nn_size as f64));
    let fit = fit_rate(&pts, RateModel::PolyInLogEps).map_err(err)?;
    ensure(
        pts.len() == 4 && fit.b <= 5.5,
        format!(
            "size exponent {:.2} (r2 {:.3}) over {} points, bound 5.5; {}",
            fit.b,
            fit.r_squared,
            pts.len(),
            if extra_ok {
                summary(&extra)
            } else {
                format!("{} [not certified]", summary(&extra))
            }
        ),
    )
}

fn criterion8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut repro = 0.0f64;
    for p in 1..=10 {
        for _ in 0..20 {
            let q = Polynomial::new((0..=p).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let dq = q.derivative();
            let proj = project_element(|t| (q.eval(t), dq.eval(t)), p).map_err(err)?;
            for k in 0..=200 {
                let t = -1.0 + k as f64 / 100.0;
                repro = repro.max((proj.eval(t) - q.eval(t)).abs());
            }
        }
    }
    type ValueAndSlope = fn(f64) -> (f64, f64);
    let fns: [(&str, ValueAndSlope); 3] = [
        ("cos", |t| (t.cos(), -t.sin())),
        ("exp", |t| ((2.0 * t).exp(), 2.0 * (2.0 * t).exp())),
        ("sqrt", |t| ((t + 1.5).sqrt(), 0.5 / (t + 1.5).sqrt())),
    ];
    let mut endpoint = 0.0f64;
    for (_, f) in fns {
        for p in 1..=10 {
            let proj = project_element(f, p).map_err(err)?;
            for t in [-1.0, 1.0] {
                endpoint = endpoint.max((proj.eval(t) - f(t).0).abs());
            }
        }
    }
    // neighbouring element polynomials agree on shared faces
    let cases: Vec<(Box<dyn Field>, usize)> = vec![
        (Box::new(corner_singular(2, 0.5, &[0.0, 0.0]).map_err(err)?), 4),
        (Box::new(analytic_fn(2, AnalyticKind::SinProduct(3.0)).map_err(err)?), 3),
        (Box::new(corner_edge(0.8, 0.6, 2).map_err(err)?), 2),
    ];
    let mut jump = 0.0f64;
    for (u, ell) in &cases {
        let d = u.dim();
        let mesh = geometric_mesh(0.5, *ell).map_err(err)?;
        let nodes = mesh.nodes().to_vec();
        for _ in 0..30 {
            let axis = rng.gen_range(0..d);
            let k = rng.gen_range(1..mesh.num_intervals());
            let mut elem: Vec<usize> = (0..d).map(|_| rng.gen_range(0..mesh.num_intervals())).collect();
            let mut x: Vec<f64> = elem
                .iter()
                .map(|&e| {
                    let (l, r) = mesh.interval(e);
                    l + rng.gen_range(0.0..1.0) * (r - l)
                })
                .collect();
            x[axis] = nodes[k];
            elem[axis] = k - 1;
            let left = element_projection(u.as_ref(), &mesh, *ell, &elem, &x).map_err(err)?;
            elem[axis] = k;
            let right = element_projection(u.as_ref(), &mesh, *ell, &elem, &x).map_err(err)?;
            jump = jump.max((left - right).abs());
        }
    }
    ensure(
        repro <= 1e-10 && endpoint <= 1e-12 && jump <= 1e-10,
        format!("reproduction {repro:.1e}, endpoints {endpoint:.1e}, face jumps {jump:.1e}"),
    )
}

fn criterion9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sum = fichera_extend(affine_fn(&[1.0, 1.0, 1.0], 0.0)).map_err(err)?;
    let mut affine = 0.0f64;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..0.0)).collect();
        affine = affine.max((sum.value(&x) - x.iter().sum::<f64>()).abs());
    }
    let fields = vec![
        analytic_fn(3, AnalyticKind::SinProduct(2.0)).map_err(err)?,
        analytic_fn(3, AnalyticKind::Exp(0.7)).map_err(err)?,
        corner_singular(3, 0.9, &[0.5, 0.5, 0.5]).map_err(err)?,
        analytic_fn(2, AnalyticKind::SinProduct(1.5)).map_err(err)?,
    ];
    let mut face = 0.0f64;
    let mut identical = true;
    for u in fields {
        let d = u.dim();
        let ext = fichera_extend(u).map_err(err)?;
        for _ in 0..500 {
            // a point on a face shared by the cube (-1,0]^d and the domain
            let mut x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..0.0)).collect();
            x[rng.gen_range(0..d)] = 0.0;
            face = face.max((ext.value(&x) - ext.inner.value(&x)).abs());
            // restriction to the domain
            let mut y: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let j = rng.gen_range(0..d);
            y[j] = y[j].abs().max(1e-3);
            identical &= ext.value(&y).to_bits() == ext.inner.value(&y).to_bits();
            for mask in 0..(1u32 << d) {
                identical &= ext.mixed(&y, mask).to_bits() == ext.inner.mixed(&y, mask).to_bits();
            }
        }
    }
    ensure(
        affine <= 1e-12 && face <= 1e-12 && identical,
        format!("x+y+z error {affine:.1e}, face jumps {face:.1e}, restriction bit-identical: {identical}"),
    )
}

fn criterion10(runs: &[BuildReport]) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for d in [2usize, 3] {
        let pts: Vec<(f64, f64)> = runs
            .iter()
            .filter(|r| r.dim == d)
            .map(|r| ((1.0 + r.epsilon.ln().abs()).ln(), r.coeff_l1.ln()))
            .collect();
        if pts.len() < 2 {
            ok = false;
            lines.push(format!("d={d}: fewer than two runs"));
            continue;
        }
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (_, degree, _) = linear_fit(&x, &y);
        let bound = 2.0 * d as f64 + 0.5;
        ok &= degree <= bound;
        lines.push(format!("d={d}: degree {degree:.2} <= {bound}"));
    }
    ensure(ok, lines.join("; "))
}

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n: usize| wanted.is_empty() || wanted.contains(&n);
    let mut runs = Vec::new();
    let names = [
        "hp exponential convergence, d=2",
        "hp convergence smoke test, d=3",
        "network calculus identities",
        "product network certification",
        "nodal exactness",
        "end-to-end H1 certification",
        "network size exponent",
        "element projector",
        "Fichera extension",
        "coefficient norm growth",
    ];
    let mut failed = 0;
    for (i, name) in names.iter().enumerate() {
        let n = i + 1;
        // 7 and 10 reuse the builds of 6
        let needed = want(n) || (n == 6 && (want(7) || want(10)));
        if !needed {
            continue;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| match n {
            1 => criterion1(),
            2 => criterion2(),
            3 => criterion3(),
            4 => criterion4(),
            5 => criterion5(),
            6 => criterion6(&mut runs),
            7 => criterion7(&runs),
            8 => criterion8(),
            9 => criterion9(),
            _ => criterion10(&runs),
        }))
        .unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {n:>2} {tag}  {name} [{:.1}s]: {detail}",
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
