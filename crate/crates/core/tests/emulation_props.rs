use proptest::prelude::*;
use relu_hp::nn::emulation::{binary_product_net, pl_net, product_net, pwpoly_net, sawtooth_square, square_net};
use relu_hp::poly::{PiecewisePolynomial, Polynomial};
use std::sync::OnceLock;

fn products() -> &'static [relu_hp::nn::emulation::ProductNet] {
    static NETS: OnceLock<Vec<relu_hp::nn::emulation::ProductNet>> = OnceLock::new();
    NETS.get_or_init(|| (2..=4).map(|d| product_net(d, 1e-3, 1.5).unwrap()).collect())
}

/// Continuous piecewise polynomial from nodal values and bubble coefficients.
fn pwpoly_strategy() -> impl Strategy<Value = PiecewisePolynomial> {
    (1usize..5)
        .prop_flat_map(|n| {
            (
                -2.0..0.0f64,
                prop::collection::vec(0.1..1.0f64, n),
                prop::collection::vec(-2.0..2.0f64, n + 1),
                prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 0..5), n),
            )
        })
        .prop_map(|(x0, widths, nodal, bubbles)| {
            let mut breaks = vec![x0];
            for w in widths {
                breaks.push(breaks.last().unwrap() + w);
            }
            let pieces = bubbles
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let (a, b) = (nodal[i], nodal[i + 1]);
                    let lin = Polynomial::new(vec![(a + b) / 2.0, (b - a) / 2.0]);
                    if w.is_empty() {
                        lin
                    } else {
                        lin.add(&Polynomial::new(vec![1.0, 0.0, -1.0]).mul(&Polynomial::new(w.clone())))
                    }
                })
                .collect();
            PiecewisePolynomial::new(breaks, pieces).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_vanishes_when_a_factor_does(d in 2usize..5, x in prop::collection::vec(-1.5..1.5f64, 4), zero in 0usize..4) {
        let p = &products()[d - 2];
        let mut x = x[..d].to_vec();
        x[zero % d] = 0.0;
        prop_assert_eq!(p.net.realize(&x).unwrap()[0], 0.0);
        let mut g = vec![0.0; d];
        prop_assert_eq!(p.eval_with_gradient(&x, &mut g), 0.0);
    }

    #[test]
    fn product_error_within_budget(d in 2usize..5, x in prop::collection::vec(-1.5..1.5f64, 4)) {
        let p = &products()[d - 2];
        let x = &x[..d];
        let exact: f64 = x.iter().product();
        let got = p.net.realize(x).unwrap()[0];
        prop_assert!((got - exact).abs() <= 1e-3, "|{got} - {exact}| > 1e-3");
        let mut g = vec![0.0; d];
        let closed = p.eval_with_gradient(x, &mut g);
        prop_assert!((closed - got).abs() <= 1e-12 * (1.0 + got.abs()));
    }

    #[test]
    fn binary_product_is_symmetric(x in -2.0..2.0f64, y in -2.0..2.0f64, levels in 1u32..10) {
        let net = binary_product_net(2.0, levels).unwrap();
        let a = net.realize(&[x, y]).unwrap()[0];
        let b = net.realize(&[y, x]).unwrap()[0];
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn square_net_matches_closed_form(levels in 1u32..12, t in 0.0..1.0f64) {
        let net = square_net(levels).unwrap();
        let (v, _) = sawtooth_square(levels, t);
        let n = net.realize(&[t]).unwrap()[0];
        prop_assert!((v - n).abs() <= 1e-13);
        // interpolant of t² on a grid of width h overshoots by at most h²/4
        let h = 0.5f64.powi(levels as i32);
        prop_assert!(v >= t * t - 1e-15 && v - t * t <= h * h / 4.0 + 1e-15);
    }

    #[test]
    fn pl_net_interpolates_nodes(values in prop::collection::vec(-3.0..3.0f64, 2..8)) {
        let nodes: Vec<f64> = (0..values.len()).map(|i| i as f64 * 0.7 - 1.0).collect();
        let net = pl_net(&nodes, &values).unwrap();
        for (x, v) in nodes.iter().zip(&values) {
            let got = net.realize(&[*x]).unwrap()[0];
            prop_assert!((got - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
        prop_assert_eq!(net.depth(), 2);
    }

    #[test]
    fn pwpoly_net_is_exact_at_nodes_and_within_bound(v in pwpoly_strategy()) {
        let eps = 1e-3;
        let r = pwpoly_net(&v, eps).unwrap();
        let nodal = v.nodal_values().unwrap();
        for (x, want) in v.breaks.iter().zip(&nodal) {
            let got = r.net.realize(&[*x]).unwrap()[0];
            prop_assert!((got - want).abs() <= 1e-11 * (1.0 + want.abs()));
        }
        let (a, b) = v.support();
        for k in 0..=200 {
            let x = (a + (b - a) * k as f64 / 200.0).min(b);
            let e = (r.net.realize(&[x]).unwrap()[0] - v.eval(x)).abs();
            prop_assert!(e <= r.value_error + 1e-12, "x={x} e={e} bound={}", r.value_error);
            prop_assert!(e <= eps * r.w1inf + 1e-12);
        }
    }
}
