//! Layered ReLU networks: storage, realization, a.e. Jacobians and JSON I/O.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Weight storage of one layer. Sparse layers keep their triplets in
/// row-major order (CSR); layers denser than one half are stored dense.
#[derive(Clone, Debug)]
pub enum Weights {
    Sparse {
        row_ptr: Vec<usize>,
        col: Vec<u32>,
        val: Vec<f64>,
    },
    Dense(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct Layer {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) weights: Weights,
    pub(crate) bias: Vec<f64>,
}

impl Layer {
    /// Build a layer from `(row, col, value)` triplets. Triplets may come in any
    /// order; duplicates are rejected. Explicit zeros are kept in storage.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        bias: Vec<f64>,
    ) -> Result<Layer> {
        if bias.len() != rows {
            return Err(Error::Dimension(format!(
                "bias has length {} but the layer has {rows} rows",
                bias.len()
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty layer shape {rows}x{cols}")));
        }
        for &(i, j, _) in &triplets {
            if i >= rows || j >= cols {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
        }
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        if triplets.windows(2).any(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
            return Err(Error::Dimension("duplicate weight entry".into()));
        }
        let weights = if 2 * triplets.len() > rows * cols {
            let mut dense = vec![0.0; rows * cols];
            for (i, j, v) in triplets {
                dense[i * cols + j] = v;
            }
            Weights::Dense(dense)
        } else {
            let mut row_ptr = vec![0usize; rows + 1];
            let mut col = Vec::with_capacity(triplets.len());
            let mut val = Vec::with_capacity(triplets.len());
            for (i, j, v) in triplets {
                row_ptr[i + 1] += 1;
                col.push(j as u32);
                val.push(v);
            }
            for i in 0..rows {
                row_ptr[i + 1] += row_ptr[i];
            }
            Weights::Sparse { row_ptr, col, val }
        };
        Ok(Layer {
            rows,
            cols,
            weights,
            bias,
        })
    }

    /// Build from CSR arrays whose rows are already sorted by column.
    pub(crate) fn from_csr(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col: Vec<u32>,
        val: Vec<f64>,
        bias: Vec<f64>,
    ) -> Layer {
        debug_assert_eq!(row_ptr.len(), rows + 1);
        debug_assert_eq!(bias.len(), rows);
        let weights = if 2 * val.len() > rows * cols {
            let mut dense = vec![0.0; rows * cols];
            for i in 0..rows {
                for k in row_ptr[i]..row_ptr[i + 1] {
                    dense[i * cols + col[k] as usize] = val[k];
                }
            }
            Weights::Dense(dense)
        } else {
            Weights::Sparse { row_ptr, col, val }
        };
        Layer {
            rows,
            cols,
            weights,
            bias,
        }
    }

    /// Visit the stored entries of row `i` in column order.
    pub(crate) fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match &self.weights {
            Weights::Sparse { row_ptr, col, val } => {
                for k in row_ptr[i]..row_ptr[i + 1] {
                    f(col[k] as usize, val[k]);
                }
            }
            Weights::Dense(a) => {
                for j in 0..self.cols {
                    let v = a[i * self.cols + j];
                    if v != 0.0 {
                        f(j, v);
                    }
                }
            }
        }
    }

    /// Affine layer from a dense row-major matrix; zero entries are not stored.
    pub fn from_dense(rows: usize, cols: usize, a: &[f64], bias: Vec<f64>) -> Result<Layer> {
        if a.len() != rows * cols {
            return Err(Error::Dimension("matrix data length".into()));
        }
        let trip = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = a[i * cols + j];
                (v != 0.0).then_some((i, j, v))
            })
            .collect();
        Layer::from_triplets(rows, cols, trip, bias)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Stored entries in row-major order. Dense layers report only nonzeros.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        self.for_each_entry(|i, j, v| out.push((i, j, v)));
        out
    }

    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, f64)) {
        match &self.weights {
            Weights::Sparse { row_ptr, col, val } => {
                for i in 0..self.rows {
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        f(i, col[k] as usize, val[k]);
                    }
                }
            }
            Weights::Dense(a) => {
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        let v = a[i * self.cols + j];
                        if v != 0.0 {
                            f(i, j, v);
                        }
                    }
                }
            }
        }
    }

    /// Number of nonzero weights plus nonzero biases.
    pub fn size(&self) -> usize {
        let w = match &self.weights {
            Weights::Sparse { val, .. } => val.iter().filter(|v| **v != 0.0).count(),
            Weights::Dense(a) => a.iter().filter(|v| **v != 0.0).count(),
        };
        w + self.bias.iter().filter(|v| **v != 0.0).count()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.weights {
            Weights::Sparse { row_ptr, col, val } => {
                let r = row_ptr[i]..row_ptr[i + 1];
                match col[r.clone()].binary_search(&(j as u32)) {
                    Ok(k) => val[r.start + k],
                    Err(_) => 0.0,
                }
            }
            Weights::Dense(a) => a[i * self.cols + j],
        }
    }

    /// `out = A x + b`.
    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match &self.weights {
            Weights::Sparse { row_ptr, col, val } => {
                for i in 0..self.rows {
                    let mut s = self.bias[i];
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        s += val[k] * x[col[k] as usize];
                    }
                    out[i] = s;
                }
            }
            Weights::Dense(a) => {
                for i in 0..self.rows {
                    let row = &a[i * self.cols..(i + 1) * self.cols];
                    let mut s = self.bias[i];
                    for (w, xv) in row.iter().zip(x) {
                        s += w * xv;
                    }
                    out[i] = s;
                }
            }
        }
    }

    /// Tangent propagation: `out = A t` where `t` is `cols x n` row-major.
    #[inline]
    fn apply_tangent(&self, t: &[f64], n: usize, out: &mut [f64]) {
        out[..self.rows * n].iter_mut().for_each(|v| *v = 0.0);
        match &self.weights {
            Weights::Sparse { row_ptr, col, val } => {
                for i in 0..self.rows {
                    let o = &mut out[i * n..(i + 1) * n];
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        let w = val[k];
                        let src = &t[col[k] as usize * n..(col[k] as usize + 1) * n];
                        for (a, b) in o.iter_mut().zip(src) {
                            *a += w * b;
                        }
                    }
                }
            }
            Weights::Dense(a) => {
                for i in 0..self.rows {
                    let o = &mut out[i * n..(i + 1) * n];
                    for j in 0..self.cols {
                        let w = a[i * self.cols + j];
                        if w == 0.0 {
                            continue;
                        }
                        let src = &t[j * n..(j + 1) * n];
                        for (a, b) in o.iter_mut().zip(src) {
                            *a += w * b;
                        }
                    }
                }
            }
        }
    }
}

/// Network statistics in the sense of the usual definitions: `size` counts
/// nonzero weights and biases, `num_neurons` includes the input layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetStats {
    pub size: usize,
    pub depth: usize,
    pub num_neurons: usize,
    pub output_dim: usize,
}

/// A ReLU network `x ↦ A_L ρ(... ρ(A_1 x + b_1) ...) + b_L`.
#[derive(Clone, Debug)]
pub struct NeuralNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl NeuralNetwork {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<NeuralNetwork> {
        if input_dim == 0 {
            return Err(Error::Dimension("input dimension must be positive".into()));
        }
        if layers.is_empty() {
            return Err(Error::Dimension("a network needs at least one layer".into()));
        }
        let mut prev = input_dim;
        for (l, layer) in layers.iter().enumerate() {
            if layer.cols != prev {
                return Err(Error::Dimension(format!(
                    "layer {l} expects {} inputs but receives {prev}",
                    layer.cols
                )));
            }
            prev = layer.rows;
        }
        Ok(NeuralNetwork { input_dim, layers })
    }

    /// Single affine layer `x ↦ A x + b` with `A` given densely (row-major).
    pub fn affine(rows: usize, cols: usize, a: &[f64], b: Vec<f64>) -> Result<NeuralNetwork> {
        NeuralNetwork::new(cols, vec![Layer::from_dense(rows, cols, a, b)?])
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.rows).unwrap_or(0)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn size(&self) -> usize {
        self.layers.iter().map(Layer::size).sum()
    }

    pub fn stats(&self) -> NetStats {
        NetStats {
            size: self.size(),
            depth: self.depth(),
            num_neurons: self.input_dim + self.layers.iter().map(|l| l.rows).sum::<usize>(),
            output_dim: self.output_dim(),
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension(format!(
                "input has length {} but the network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(())
    }

    fn max_width(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.rows)
            .max()
            .unwrap_or(0)
            .max(self.input_dim)
    }

    pub fn realize(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut ws = Workspace::default();
        Ok(self.realize_with(x, &mut ws).to_vec())
    }

    /// Forward evaluation reusing scratch buffers; the input is not validated.
    pub fn realize_with<'a>(&self, x: &[f64], ws: &'a mut Workspace) -> &'a [f64] {
        let w = self.max_width();
        ws.a.resize(w, 0.0);
        ws.b.resize(w, 0.0);
        ws.a[..x.len()].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&ws.a[..layer.cols], &mut ws.b[..layer.rows]);
            if l != last {
                for v in &mut ws.b[..layer.rows] {
                    if *v <= 0.0 {
                        *v = 0.0;
                    }
                }
            }
            std::mem::swap(&mut ws.a, &mut ws.b);
        }
        &ws.a[..self.output_dim()]
    }

    /// Value and Jacobian by forward-mode accumulation. The ReLU derivative is
    /// taken as 0 where the pre-activation is exactly 0.
    pub fn grad_realize(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        self.check_input(x)?;
        let mut ws = Workspace::default();
        let (v, j) = self.grad_realize_with(x, &mut ws);
        let n = self.input_dim;
        let jac = (0..v.len()).map(|i| j[i * n..(i + 1) * n].to_vec()).collect();
        Ok((v.to_vec(), jac))
    }

    /// Value and row-major Jacobian (`output_dim x input_dim`) in scratch space.
    pub fn grad_realize_with<'a>(&self, x: &[f64], ws: &'a mut Workspace) -> (&'a [f64], &'a [f64]) {
        let n = self.input_dim;
        let w = self.max_width();
        ws.a.resize(w, 0.0);
        ws.b.resize(w, 0.0);
        ws.ta.resize(w * n, 0.0);
        ws.tb.resize(w * n, 0.0);
        ws.a[..n].copy_from_slice(x);
        for i in 0..n {
            for j in 0..n {
                ws.ta[i * n + j] = if i == j { 1.0 } else { 0.0 };
            }
        }
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&ws.a[..layer.cols], &mut ws.b[..layer.rows]);
            layer.apply_tangent(&ws.ta, n, &mut ws.tb);
            if l != last {
                for i in 0..layer.rows {
                    if ws.b[i] <= 0.0 {
                        ws.b[i] = 0.0;
                        ws.tb[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = 0.0);
                    }
                }
            }
            std::mem::swap(&mut ws.a, &mut ws.b);
            std::mem::swap(&mut ws.ta, &mut ws.tb);
        }
        let m = self.output_dim();
        (&ws.a[..m], &ws.ta[..m * n])
    }

    pub fn to_json(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{{\"input_dim\":{},\"layers\":[", self.input_dim);
        for (l, layer) in self.layers.iter().enumerate() {
            if l > 0 {
                s.push(',');
            }
            let _ = write!(s, "{{\"rows\":{},\"cols\":{},\"weights\":[", layer.rows, layer.cols);
            let mut first = true;
            layer.for_each_entry(|i, j, v| {
                if !first {
                    s.push(',');
                }
                first = false;
                let _ = write!(s, "[{i},{j},{}]", fmt17(v));
            });
            s.push_str("],\"bias\":[");
            for (k, b) in layer.bias.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                s.push_str(&fmt17(*b));
            }
            s.push_str("]}");
        }
        s.push_str("]}");
        s
    }

    pub fn from_json(text: &str) -> Result<NeuralNetwork> {
        let raw: RawNet = serde_json::from_str(text).map_err(|e| Error::Parse {
            layer: None,
            msg: e.to_string(),
        })?;
        if raw.layers.is_empty() {
            return Err(Error::Parse {
                layer: None,
                msg: "layer list is empty".into(),
            });
        }
        let mut prev = raw.input_dim;
        let mut layers = Vec::with_capacity(raw.layers.len());
        for (l, rl) in raw.layers.into_iter().enumerate() {
            let perr = |msg: String| Error::Parse { layer: Some(l), msg };
            if rl.cols != prev {
                return Err(perr(format!("cols = {} but previous width is {prev}", rl.cols)));
            }
            prev = rl.rows;
            let layer = Layer::from_triplets(rl.rows, rl.cols, rl.weights, rl.bias).map_err(|e| perr(e.to_string()))?;
            layers.push(layer);
        }
        NeuralNetwork::new(raw.input_dim, layers).map_err(|e| Error::Parse {
            layer: None,
            msg: e.to_string(),
        })
    }
}

/// 17 significant digits: enough to round-trip any f64.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Deserialize)]
struct RawNet {
    input_dim: usize,
    layers: Vec<RawLayer>,
}

#[derive(Deserialize)]
struct RawLayer {
    rows: usize,
    cols: usize,
    weights: Vec<(usize, usize, f64)>,
    bias: Vec<f64>,
}

/// Scratch buffers for repeated evaluation.
#[derive(Default, Clone, Debug)]
pub struct Workspace {
    a: Vec<f64>,
    b: Vec<f64>,
    ta: Vec<f64>,
    tb: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_1d() -> NeuralNetwork {
        NeuralNetwork::new(
            1,
            vec![
                Layer::from_dense(2, 1, &[1.0, -1.0], vec![0.0, 0.0]).unwrap(),
                Layer::from_dense(1, 2, &[1.0, -1.0], vec![0.0]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_affine_layer() {
        let net = NeuralNetwork::affine(1, 1, &[2.0], vec![1.0]).unwrap();
        assert_eq!(net.realize(&[3.0]).unwrap(), vec![7.0]);
        let s = NeuralNetwork::affine(1, 1, &[2.0], vec![0.0]).unwrap().stats();
        assert_eq!((s.size, s.depth), (1, 1));
    }

    #[test]
    fn relu_split_identity() {
        let net = identity_1d();
        assert_eq!(net.realize(&[-3.5]).unwrap(), vec![-3.5]);
        let (v, j) = net.grad_realize(&[2.0]).unwrap();
        assert_eq!((v[0], j[0][0]), (2.0, 1.0));
        let (v, j) = net.grad_realize(&[-2.0]).unwrap();
        assert_eq!((v[0], j[0][0]), (-2.0, 1.0));
    }

    #[test]
    fn constant_network() {
        let net = NeuralNetwork::new(
            2,
            vec![
                Layer::from_dense(3, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0], vec![0.1, 0.0, -2.0]).unwrap(),
                Layer::from_triplets(1, 3, vec![], vec![4.25]).unwrap(),
            ],
        )
        .unwrap();
        for x in [[0.0, 0.0], [-7.0, 3.0], [1e3, -1e3]] {
            assert_eq!(net.realize(&x).unwrap(), vec![4.25]);
        }
    }

    #[test]
    fn explicit_zero_not_counted() {
        let a = Layer::from_triplets(2, 2, vec![(0, 0, 1.0)], vec![0.0, 0.0]).unwrap();
        let b = Layer::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 0.0)], vec![0.0, 0.0]).unwrap();
        assert_eq!(a.size(), b.size());
        assert_eq!(b.triplets().len(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        let net = identity_1d();
        assert!(matches!(net.realize(&[1.0, 2.0]), Err(Error::Dimension(_))));
        assert!(matches!(net.realize(&[f64::NAN]), Err(Error::NonFinite(0))));
        assert!(NeuralNetwork::new(1, vec![]).is_err());
    }

    #[test]
    fn json_errors_name_the_layer() {
        let bad = r#"{"input_dim":1,"layers":[{"rows":2,"cols":1,"weights":[[0,0,1.0]],"bias":[0,0]},
                     {"rows":1,"cols":3,"weights":[],"bias":[0]}]}"#;
        match NeuralNetwork::from_json(bad) {
            Err(Error::Parse { layer: Some(1), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let empty = r#"{"input_dim":1,"layers":[]}"#;
        assert!(NeuralNetwork::from_json(empty).is_err());
        let oob = r#"{"input_dim":1,"layers":[{"rows":1,"cols":1,"weights":[[0,4,1.0]],"bias":[0]}]}"#;
        assert!(matches!(
            NeuralNetwork::from_json(oob),
            Err(Error::Parse { layer: Some(0), .. })
        ));
    }

    #[test]
    fn json_uses_17_digits() {
        let net = NeuralNetwork::affine(1, 1, &[0.1], vec![1.0 / 3.0]).unwrap();
        let s = net.to_json();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
    }
}
