//! `relu-hp`: convergence studies, network builds and self-checks.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use relu_hp::assembly::{build_phi_eps_f, BuildConfig, Domain};
use relu_hp::catalog::{from_key, Field, WeightedFunction};
use relu_hp::metrics::{fit_rate, h1_error, CellMesh, FieldEval, QuadConfig, RateModel};
use relu_hp::nn::emulation::product_net;
use relu_hp::nn::network::NeuralNetwork;
use relu_hp::selfcheck::calculus_suite;

#[derive(Parser)]
#[command(
    name = "relu-hp",
    version,
    about = "hp quasi-interpolation compiled into ReLU networks"
)]
struct Cli {
    /// JSON file with default settings; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "RELU_HP_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interpolation error against ell, one CSV row per ell plus a rate fit.
    HpStudy {
        #[command(flatten)]
        func: FuncArgs,
        /// Layer counts, `a..b` (inclusive) or a comma list.
        #[arg(long)]
        ell: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// gnuplot script to write; defaults to the CSV path with `.gp`.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Build and certify a network approximating a catalog function.
    NnBuild {
        #[command(flatten)]
        func: FuncArgs,
        #[arg(long)]
        eps: Option<f64>,
        /// Network JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// One-row CSV report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        ell_max: Option<usize>,
    },
    /// Evaluate a network at the points of a CSV file (`x1,...,xd`).
    NnEval {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        points: PathBuf,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Size, depth and shape of a network JSON file.
    NnInfo {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Randomized checks of the network calculus; exit status 1 on failure.
    VerifyCalculus {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Build a product network and certify it on a grid.
    MulNet {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        /// Half-width of the input box.
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// Grid points per axis (default 201 for d = 2, 61 for d = 3, 21 above).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct FuncArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// Catalog key, e.g. corner_r_alpha.
    #[arg(long)]
    func: Option<String>,
    /// Shorthand for `--param alpha=...`.
    #[arg(long)]
    alpha: Option<f64>,
    /// Function parameter `key=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Degree law `p = max(1, ceil(cp * ell))`.
    #[arg(long)]
    cp: Option<f64>,
    /// `unit` for (0,1)^d or `cube:A` for (-A,A)^d.
    #[arg(long)]
    domain: Option<String>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let v: f64 = v
        .parse()
        .map_err(|_| format!("parameter '{k}' is not a number: '{v}'"))?;
    Ok((k.to_string(), v))
}

/// Settings file; every field is optional.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Config {
    dim: Option<usize>,
    func: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    sigma: Option<f64>,
    cp: Option<f64>,
    domain: Option<String>,
    ell: Option<String>,
    eps: Option<f64>,
    ell_max: Option<usize>,
    jobs: Option<usize>,
    seed: Option<u64>,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn load_config(path: Option<&Path>) -> AnyResult<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?)
        }
    }
}

struct Resolved {
    u: WeightedFunction,
    build: BuildConfig,
}

fn resolve(f: &FuncArgs, cfg: &Config) -> AnyResult<Resolved> {
    let dim = f.dim.or(cfg.dim).unwrap_or(2);
    let key = f
        .func
        .clone()
        .or_else(|| cfg.func.clone())
        .unwrap_or_else(|| "corner_r_alpha".into());
    let mut params = cfg.params.clone();
    if let Some(a) = f.alpha {
        params.insert("alpha".into(), a);
    }
    params.extend(f.params.iter().cloned());
    let u = from_key(&key, dim, &params)?;
    let domain = match f.domain.clone().or_else(|| cfg.domain.clone()).as_deref() {
        None | Some("unit") => Domain::UnitCube,
        Some(s) => match s.strip_prefix("cube:").map(str::parse::<f64>) {
            Some(Ok(a)) => Domain::Cube { a },
            _ => return Err(format!("unknown domain '{s}' (use unit or cube:A)").into()),
        },
    };
    let build = BuildConfig {
        sigma: f.sigma.or(cfg.sigma).unwrap_or(0.5),
        c_p: f.cp.or(cfg.cp).unwrap_or(1.0),
        ell_max: cfg.ell_max.unwrap_or(12),
        domain,
        ..BuildConfig::default()
    };
    Ok(Resolved { u, build })
}

fn parse_ells(s: &str) -> AnyResult<Vec<usize>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse()?;
        let b: usize = b.trim_start_matches('=').trim().parse()?;
        if a > b {
            return Err(format!("empty ell range '{s}'").into());
        }
        return Ok((a..=b).collect());
    }
    Ok(s.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>()?)
}

/// One CSV row; `nn_size` and `nn_depth` are empty for interpolation-only rows.
#[derive(Serialize, Clone)]
struct Row {
    dim: usize,
    func: String,
    params: String,
    sigma: f64,
    ell: usize,
    p: usize,
    #[serde(rename = "N1d")]
    n1d: usize,
    coeff_l1: f64,
    nn_size: Option<usize>,
    nn_depth: Option<usize>,
    h1_error: f64,
    linf_error: f64,
    certified: u8,
    seconds: f64,
}

fn csv_bytes(rows: &[Row]) -> AnyResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.to_string())?)
}

fn hp_study(
    f: &FuncArgs,
    ell: Option<String>,
    out: Option<PathBuf>,
    plot: Option<PathBuf>,
    cfg: &Config,
) -> AnyResult<()> {
    let r = resolve(f, cfg)?;
    let ells = parse_ells(&ell.or_else(|| cfg.ell.clone()).unwrap_or_else(|| "1..8".into()))?;
    let (name, params) = r.u.describe();
    let results = relu_hp::par::par_map(&ells, |&ell| -> Result<(Row, usize), String> {
        let start = std::time::Instant::now();
        let it = r.build.interpolate(&r.u, ell).map_err(|e| e.to_string())?;
        let mesh = CellMesh::from_interpolant(&it, r.u.singular_set());
        let rep = h1_error(&FieldEval(&r.u), &it, &mesh, &QuadConfig::default()).map_err(|e| e.to_string())?;
        let row = Row {
            dim: it.dim,
            func: name.clone(),
            params: params.clone(),
            sigma: r.build.sigma,
            ell,
            p: it.p(),
            n1d: it.n1d(),
            coeff_l1: it.coeff_l1(),
            nn_size: None,
            nn_depth: None,
            h1_error: rep.h1_error,
            linf_error: rep.linf_error,
            certified: rep.certified as u8,
            seconds: start.elapsed().as_secs_f64(),
        };
        Ok((row, it.num_dofs()))
    });
    let mut rows = Vec::new();
    for res in results {
        rows.push(res?);
    }
    rows.sort_by_key(|r| r.0.ell);
    let mut text = csv_bytes(&rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>())?;
    let d = r.u.dim() as u32;
    let by_ell: Vec<(f64, f64)> = rows.iter().map(|r| (r.0.ell as f64, r.0.h1_error)).collect();
    let by_dof: Vec<(f64, f64)> = rows.iter().map(|r| (r.1 as f64, r.0.h1_error)).collect();
    for (label, pairs, model) in [
        ("exp_in_ell", by_ell, RateModel::ExpInN),
        ("exp_in_ndof_root", by_dof, RateModel::ExpInRoot(2 * d)),
    ] {
        match fit_rate(&pairs, model) {
            Ok(fit) => writeln!(
                text,
                "# fit {label}: C={:.6e} b={:.6e} r2={:.6}",
                fit.c, fit.b, fit.r_squared
            )?,
            Err(e) => writeln!(text, "# fit {label}: skipped ({e})")?,
        }
    }
    match &out {
        Some(p) => {
            fs::write(p, &text)?;
            let gp = plot.unwrap_or_else(|| p.with_extension("gp"));
            fs::write(&gp, gnuplot_script(p))?;
            eprintln!("wrote {} and {}", p.display(), gp.display());
        }
        None => std::io::stdout().write_all(&text)?,
    }
    Ok(())
}

fn gnuplot_script(csv: &Path) -> String {
    let name = csv
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!(
        "# gnuplot script for {name}\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale y\n\
         set xlabel 'ell'\n\
         set ylabel 'H1 error'\n\
         set grid\n\
         plot '{name}' using 5:11 with linespoints title 'H1 error', \\\n     \
         '{name}' using 5:12 with linespoints title 'Linf error'\n"
    )
}

fn nn_build(
    f: &FuncArgs,
    eps: Option<f64>,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
    ell_max: Option<usize>,
    cfg: &Config,
) -> AnyResult<()> {
    let mut r = resolve(f, cfg)?;
    if let Some(m) = ell_max {
        r.build.ell_max = m;
    }
    let eps = eps.or(cfg.eps).unwrap_or(1e-2);
    let (net, rep) = build_phi_eps_f(&r.u, eps, &r.build)?;
    if let Some(p) = &out {
        fs::write(p, net.net.to_json())?;
    }
    let row = Row {
        dim: rep.dim,
        func: rep.func.clone(),
        params: rep.params.clone(),
        sigma: rep.sigma,
        ell: rep.ell,
        p: rep.p,
        n1d: rep.n1d,
        coeff_l1: rep.coeff_l1,
        nn_size: Some(rep.nn_size),
        nn_depth: Some(rep.nn_depth),
        h1_error: rep.h1_error,
        linf_error: rep.linf_error,
        certified: rep.certified as u8,
        seconds: rep.seconds,
    };
    if let Some(p) = &report {
        fs::write(p, csv_bytes(&[row])?)?;
    }
    println!(
        "{}({}) d={} eps={eps:e}: ell={} p={} N1d={} size={} depth={} H1 error={:.3e} (interpolant {:.3e}) certified={} [{:.1}s]",
        rep.func,
        rep.params,
        rep.dim,
        rep.ell,
        rep.p,
        rep.n1d,
        rep.nn_size,
        rep.nn_depth,
        rep.h1_error,
        rep.hp_h1_error,
        rep.certified,
        rep.seconds
    );
    if !rep.certified {
        return Err(format!("H1 error {:.3e} not certified below {eps:e}", rep.h1_error).into());
    }
    Ok(())
}

fn read_net(path: &Path) -> AnyResult<NeuralNetwork> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(NeuralNetwork::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn nn_eval(net: &Path, points: &Path, out: Option<PathBuf>) -> AnyResult<()> {
    let net = read_net(net)?;
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(points)?;
    let d = net.input_dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    if net.output_dim() == 1 {
        header.push("value".into());
    } else {
        header.extend((1..=net.output_dim()).map(|k| format!("value{k}")));
    }
    w.write_record(&header)?;
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let x = match parsed {
            Ok(x) => x,
            // a header line
            Err(_) if line == 0 => continue,
            Err(_) => return Err(format!("row {}: not a list of numbers", line + 1).into()),
        };
        if x.len() != d {
            return Err(format!("row {}: expected {d} coordinates, got {}", line + 1, x.len()).into());
        }
        let y = net.realize(&x)?;
        let mut fields: Vec<String> = rec.iter().map(str::to_string).collect();
        fields.extend(y.iter().map(|v| format!("{v:.17e}")));
        w.write_record(&fields)?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn nn_info(net: &Path, json: bool) -> AnyResult<()> {
    let n = read_net(net)?;
    let s = n.stats();
    let widths: Vec<usize> = n.layers().iter().map(|l| l.rows()).collect();
    if json {
        let v = serde_json::json!({
            "input_dim": n.input_dim(),
            "output_dim": s.output_dim,
            "depth": s.depth,
            "size": s.size,
            "num_neurons": s.num_neurons,
            "widths": widths,
        });
        println!("{v}");
    } else {
        println!("input_dim   {}", n.input_dim());
        println!("output_dim  {}", s.output_dim);
        println!("depth       {}", s.depth);
        println!("size        {}", s.size);
        println!("num_neurons {}", s.num_neurons);
        println!("max width   {}", widths.iter().max().unwrap_or(&0));
    }
    Ok(())
}

fn verify_calculus(seed: u64, trials: usize) -> AnyResult<bool> {
    let rules = calculus_suite(seed, trials)?;
    let mut ok = true;
    println!(
        "{:<14} {:>7} {:>14} {:>10}  result",
        "rule", "trials", "max rel err", "violations"
    );
    for r in &rules {
        let pass = r.passed(1e-12);
        ok &= pass;
        println!(
            "{:<14} {:>7} {:>14.3e} {:>10}  {}",
            r.rule,
            r.trials,
            r.max_rel_error,
            r.violations,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(ok)
}

fn mul_net(dim: usize, eps: f64, m: f64, grid: Option<usize>, out: Option<PathBuf>, seed: u64) -> AnyResult<bool> {
    let p = product_net(dim, eps, m)?;
    let n = grid.unwrap_or(match dim {
        2 => 201,
        3 => 61,
        _ => 21,
    });
    if n < 2 {
        return Err("grid needs at least 2 points per axis".into());
    }
    let mut ws = Default::default();
    let mut x = vec![0.0; dim];
    let mut value_err = 0.0f64;
    for k in 0..n.pow(dim as u32) {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = -m + 2.0 * m * ((k / n.pow(j as u32)) % n) as f64 / (n - 1) as f64;
        }
        let v = p.net.realize_with(&x, &mut ws)[0];
        value_err = value_err.max((v - x.iter().product::<f64>()).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deriv_err = 0.0f64;
    let mut zero_fail = 0;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-m..m)).collect();
        let (_, jac) = p.net.grad_realize(&x)?;
        for (j, dj) in jac[0].iter().enumerate() {
            let exact: f64 = (0..dim).filter(|&i| i != j).map(|i| x[i]).product();
            deriv_err = deriv_err.max((dj - exact).abs());
        }
        let mut z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0 * m..5.0 * m)).collect();
        z[rng.gen_range(0..dim)] = 0.0;
        if p.net.realize(&z)?[0] != 0.0 {
            zero_fail += 1;
        }
    }
    if let Some(path) = &out {
        fs::write(path, p.net.to_json())?;
    }
    let ok = value_err <= eps && deriv_err <= eps && zero_fail == 0;
    println!(
        "product of {dim} on [-{m}, {m}]^{dim}, eps={eps:e}: levels={} size={} depth={} constant={:.2}",
        p.budget.levels,
        p.net.size(),
        p.net.depth(),
        p.constant()
    );
    println!("value error {value_err:.3e} on {n}^{dim} grid, derivative error {deriv_err:.3e}, zero-on-zero failures {zero_fail}");
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

fn run(cli: Cli) -> AnyResult<bool> {
    let cfg = load_config(cli.config.as_deref())?;
    if let Some(j) = cli.jobs.or(cfg.jobs) {
        relu_hp::par::set_jobs(j.max(1));
    }
    match cli.command {
        Command::HpStudy { func, ell, out, plot } => hp_study(&func, ell, out, plot, &cfg).map(|_| true),
        Command::NnBuild {
            func,
            eps,
            out,
            report,
            ell_max,
        } => nn_build(&func, eps, out, report, ell_max, &cfg).map(|_| true),
        Command::NnEval { net, points, out } => nn_eval(&net, &points, out).map(|_| true),
        Command::NnInfo { net, json } => nn_info(&net, json).map(|_| true),
        Command::VerifyCalculus { seed, trials } => verify_calculus(seed.or(cfg.seed).unwrap_or(42), trials),
        Command::MulNet { dim, eps, m, grid, out } => mul_net(
            dim.or(cfg.dim).unwrap_or(2),
            eps.or(cfg.eps).unwrap_or(1e-3),
            m,
            grid,
            out,
            cfg.seed.unwrap_or(42),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
