//! Randomized checks of the network calculus, shared by the acceptance
//! suite and `relu-hp verify-calculus`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::nn::calculus::{concat, depth_align, full_parallel, identity_net, parallel};
use crate::nn::network::{Layer, NeuralNetwork};

/// Random network with sparse Gaussian-ish weights. Roughly a third of the
/// entries are dropped so that the sparse storage path is exercised.
pub fn random_net(
    rng: &mut impl Rng,
    input_dim: usize,
    output_dim: usize,
    depth: usize,
    width: usize,
) -> NeuralNetwork {
    let mut layers = Vec::with_capacity(depth);
    let mut cols = input_dim;
    for l in 0..depth {
        let rows = if l + 1 == depth {
            output_dim
        } else {
            rng.gen_range(1..=width)
        };
        let mut trip = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if rng.gen_bool(0.67) {
                    trip.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        let bias = (0..rows).map(|_| rng.gen_range(-0.5..0.5)).collect();
        layers.push(Layer::from_triplets(rows, cols, trip, bias).expect("valid random layer"));
        cols = rows;
    }
    NeuralNetwork::new(input_dim, layers).expect("chained random layers")
}

/// Outcome of one calculus rule over many random trials.
#[derive(Clone, Debug, Serialize)]
pub struct RuleCheck {
    pub rule: &'static str,
    pub trials: usize,
    /// Largest `|lhs - rhs| / (1 + |rhs|)` of the realization identity.
    pub max_rel_error: f64,
    /// Trials breaking a size or depth statement.
    pub violations: usize,
}

impl RuleCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.violations == 0 && self.max_rel_error <= tol
    }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / (1.0 + y.abs()))
        .fold(0.0, f64::max)
}

fn point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// Runs `trials` random instances of each rule: concatenation,
/// associativity, parallelization, full parallelization, identity and depth
/// alignment. Each trial evaluates a few random points.
pub fn calculus_suite(seed: u64, trials: usize) -> Result<Vec<RuleCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let pts = 4;

    let mut c = RuleCheck {
        rule: "concat",
        trials,
        max_rel_error: 0.0,
        violations: 0,
    };
    for _ in 0..trials {
        let (a, m, b) = (rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(1..4));
        let g = {
            let l = rng.gen_range(1..4);
            random_net(&mut rng, a, m, l, 6)
        };
        let f = {
            let l = rng.gen_range(1..4);
            random_net(&mut rng, m, b, l, 6)
        };
        let h = concat(&f, &g)?;
        if h.depth() != f.depth() + g.depth() || h.size() > 2 * f.size() + 2 * g.size() {
            c.violations += 1;
        }
        for _ in 0..pts {
            let x = point(&mut rng, a);
            let lhs = h.realize(&x)?;
            let rhs = f.realize(&g.realize(&x)?)?;
            c.max_rel_error = c.max_rel_error.max(rel(&lhs, &rhs));
        }
    }
    out.push(c);

    let mut c = RuleCheck {
        rule: "associativity",
        trials,
        max_rel_error: 0.0,
        violations: 0,
    };
    for _ in 0..trials {
        let dims: Vec<usize> = (0..4).map(|_| rng.gen_range(1..4)).collect();
        let h = {
            let l = rng.gen_range(1..3);
            random_net(&mut rng, dims[0], dims[1], l, 5)
        };
        let g = {
            let l = rng.gen_range(1..3);
            random_net(&mut rng, dims[1], dims[2], l, 5)
        };
        let f = {
            let l = rng.gen_range(1..3);
            random_net(&mut rng, dims[2], dims[3], l, 5)
        };
        let left = concat(&concat(&f, &g)?, &h)?;
        let right = concat(&f, &concat(&g, &h)?)?;
        if left.depth() != right.depth() {
            c.violations += 1;
        }
        for _ in 0..pts {
            let x = point(&mut rng, dims[0]);
            c.max_rel_error = c.max_rel_error.max(rel(&left.realize(&x)?, &right.realize(&x)?));
        }
    }
    out.push(c);

    let mut c = RuleCheck {
        rule: "parallel",
        trials,
        max_rel_error: 0.0,
        violations: 0,
    };
    for _ in 0..trials {
        let d = rng.gen_range(1..4);
        let depth = rng.gen_range(1..4);
        let k = rng.gen_range(1..4);
        let nets: Vec<NeuralNetwork> = (0..k)
            .map(|_| {
                let o = rng.gen_range(1..3);
                random_net(&mut rng, d, o, depth, 5)
            })
            .collect();
        let p = parallel(&nets)?;
        let sum: usize = nets.iter().map(NeuralNetwork::size).sum();
        if p.size() != sum || p.depth() != depth {
            c.violations += 1;
        }
        for _ in 0..pts {
            let x = point(&mut rng, d);
            let mut rhs = Vec::new();
            for n in &nets {
                rhs.extend(n.realize(&x)?);
            }
            c.max_rel_error = c.max_rel_error.max(rel(&p.realize(&x)?, &rhs));
        }
    }
    out.push(c);

    let mut c = RuleCheck {
        rule: "full_parallel",
        trials,
        max_rel_error: 0.0,
        violations: 0,
    };
    for _ in 0..trials {
        let depth = rng.gen_range(1..4);
        let k = rng.gen_range(1..4);
        let nets: Vec<NeuralNetwork> = (0..k)
            .map(|_| {
                let (i, o) = (rng.gen_range(1..3), rng.gen_range(1..3));
                random_net(&mut rng, i, o, depth, 5)
            })
            .collect();
        let p = full_parallel(&nets)?;
        let sum: usize = nets.iter().map(NeuralNetwork::size).sum();
        let din: usize = nets.iter().map(NeuralNetwork::input_dim).sum();
        if p.size() != sum || p.depth() != depth || p.input_dim() != din {
            c.violations += 1;
        }
        for _ in 0..pts {
            let x = point(&mut rng, din);
            let mut rhs = Vec::new();
            let mut at = 0;
            for n in &nets {
                rhs.extend(n.realize(&x[at..at + n.input_dim()])?);
                at += n.input_dim();
            }
            c.max_rel_error = c.max_rel_error.max(rel(&p.realize(&x)?, &rhs));
        }
    }
    out.push(c);

    let mut c = RuleCheck {
        rule: "identity",
        trials,
        max_rel_error: 0.0,
        violations: 0,
    };
    for _ in 0..trials {
        let (d, l) = (rng.gen_range(1..5), rng.gen_range(1..7));
        let id = identity_net(d, l)?;
        if id.depth() != l || id.size() > 2 * d * l {
            c.violations += 1;
        }
        for _ in 0..pts {
            let x = point(&mut rng, d);
            if id.realize(&x)? != x {
                c.violations += 1;
            }
        }
    }
    out.push(c);

    let mut c = RuleCheck {
        rule: "depth_align",
        trials,
        max_rel_error: 0.0,
        violations: 0,
    };
    for _ in 0..trials {
        let d = rng.gen_range(1..3);
        let k = rng.gen_range(1..4);
        let nets: Vec<NeuralNetwork> = (0..k)
            .map(|_| {
                let (o, l) = (rng.gen_range(1..3), rng.gen_range(1..5));
                random_net(&mut rng, d, o, l, 5)
            })
            .collect();
        let aligned = depth_align(&nets)?;
        let target = nets.iter().map(NeuralNetwork::depth).max().unwrap();
        for (n, a) in nets.iter().zip(&aligned) {
            let dl = target - n.depth();
            let bound = if dl == 0 {
                n.size()
            } else {
                2 * n.size() + 2 * (2 * n.output_dim() * dl)
            };
            if a.depth() != target || a.size() > bound {
                c.violations += 1;
            }
            for _ in 0..pts {
                let x = point(&mut rng, d);
                c.max_rel_error = c.max_rel_error.max(rel(&a.realize(&x)?, &n.realize(&x)?));
            }
        }
    }
    out.push(c);
    Ok(out)
}
