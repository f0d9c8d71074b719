//! Network calculus: sparse concatenation, parallelization, identity networks.

use crate::error::{Error, Result};
use crate::nn::network::{Layer, NeuralNetwork};

/// `phi1 ⊙ phi2`, realizing `phi1 ∘ phi2` with depth `L1 + L2`.
///
/// The interface is doubled: the last layer of `phi2` becomes `(A; -A)`,
/// `(b; -b)` followed by ReLU, and the first layer of `phi1` becomes
/// `(A | -A)`, so that `ρ(z) - ρ(-z) = z` passes the value through.
pub fn concat(phi1: &NeuralNetwork, phi2: &NeuralNetwork) -> Result<NeuralNetwork> {
    if phi1.input_dim() != phi2.output_dim() {
        return Err(Error::Dimension(format!(
            "concat: outer network takes {} inputs, inner network returns {}",
            phi1.input_dim(),
            phi2.output_dim()
        )));
    }
    let l2 = phi2.layers();
    let l1 = phi1.layers();
    let mut layers: Vec<Layer> = Vec::with_capacity(l1.len() + l2.len());
    layers.extend(l2[..l2.len() - 1].iter().cloned());

    let last = &l2[l2.len() - 1];
    let n = last.rows;
    let mut row_ptr = Vec::with_capacity(2 * n + 1);
    let mut col = Vec::new();
    let mut val = Vec::new();
    row_ptr.push(0);
    for sign in [1.0, -1.0] {
        for i in 0..n {
            last.for_each_in_row(i, |j, v| {
                col.push(j as u32);
                val.push(sign * v);
            });
            row_ptr.push(col.len());
        }
    }
    let mut bias = last.bias.clone();
    bias.extend(last.bias.iter().map(|b| -b));
    layers.push(Layer::from_csr(2 * n, last.cols, row_ptr, col, val, bias));

    let first = &l1[0];
    let mut row_ptr = Vec::with_capacity(first.rows + 1);
    let mut col = Vec::new();
    let mut val = Vec::new();
    row_ptr.push(0);
    for i in 0..first.rows {
        let start = col.len();
        first.for_each_in_row(i, |j, v| {
            col.push(j as u32);
            val.push(v);
        });
        let end = col.len();
        for k in start..end {
            col.push(col[k] + n as u32);
            val.push(-val[k]);
        }
        row_ptr.push(col.len());
    }
    layers.push(Layer::from_csr(
        first.rows,
        2 * n,
        row_ptr,
        col,
        val,
        first.bias.clone(),
    ));
    layers.extend(l1[1..].iter().cloned());
    NeuralNetwork::new(phi2.input_dim(), layers)
}

/// Incremental block assembly for parallelizations. Networks are appended
/// one at a time so long lists never have to be held in memory.
pub struct ParallelBuilder {
    shared_input: bool,
    depth: usize,
    input_dim: usize,
    row_ptr: Vec<Vec<usize>>,
    col: Vec<Vec<u32>>,
    val: Vec<Vec<f64>>,
    bias: Vec<Vec<f64>>,
    cols: Vec<usize>,
    count: usize,
}

impl ParallelBuilder {
    /// Parallelization with a shared input (`P`).
    pub fn shared(depth: usize) -> ParallelBuilder {
        ParallelBuilder::new(true, depth)
    }

    /// Full parallelization with distinct inputs (`FP`).
    pub fn separate(depth: usize) -> ParallelBuilder {
        ParallelBuilder::new(false, depth)
    }

    fn new(shared_input: bool, depth: usize) -> ParallelBuilder {
        ParallelBuilder {
            shared_input,
            depth,
            input_dim: 0,
            row_ptr: vec![vec![0]; depth],
            col: vec![Vec::new(); depth],
            val: vec![Vec::new(); depth],
            bias: vec![Vec::new(); depth],
            cols: vec![0; depth],
            count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn push(&mut self, net: &NeuralNetwork) -> Result<()> {
        if net.depth() != self.depth {
            return Err(Error::Dimension(format!(
                "parallelization needs equal depths: got {} and {}",
                self.depth,
                net.depth()
            )));
        }
        if self.shared_input && self.count > 0 && net.input_dim() != self.input_dim {
            return Err(Error::Dimension(format!(
                "shared-input parallelization needs equal input dims: got {} and {}",
                self.input_dim,
                net.input_dim()
            )));
        }
        for (l, layer) in net.layers().iter().enumerate() {
            let offset = if l == 0 && self.shared_input {
                0
            } else {
                self.cols[l] as u32
            };
            let (col, val) = (&mut self.col[l], &mut self.val[l]);
            for i in 0..layer.rows {
                layer.for_each_in_row(i, |j, v| {
                    col.push(j as u32 + offset);
                    val.push(v);
                });
                self.row_ptr[l].push(col.len());
            }
            self.bias[l].extend_from_slice(&layer.bias);
            if l == 0 && self.shared_input {
                self.cols[0] = layer.cols;
            } else {
                self.cols[l] += layer.cols;
            }
        }
        if self.shared_input {
            self.input_dim = net.input_dim();
        } else {
            self.input_dim += net.input_dim();
        }
        self.count += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<NeuralNetwork> {
        if self.count == 0 {
            return Err(Error::Dimension("parallelization of an empty list".into()));
        }
        let mut layers = Vec::with_capacity(self.depth);
        let parts = self
            .row_ptr
            .into_iter()
            .zip(self.col)
            .zip(self.val)
            .zip(self.bias)
            .zip(self.cols);
        for ((((row_ptr, col), val), bias), cols) in parts {
            layers.push(Layer::from_csr(bias.len(), cols, row_ptr, col, val, bias));
        }
        NeuralNetwork::new(self.input_dim, layers)
    }
}

fn common_depth(phis: &[NeuralNetwork]) -> Result<usize> {
    let depth = phis
        .first()
        .ok_or_else(|| Error::Dimension("parallelization of an empty list".into()))?
        .depth();
    if let Some(bad) = phis.iter().find(|p| p.depth() != depth) {
        return Err(Error::Dimension(format!(
            "parallelization needs equal depths: got {depth} and {} (use depth_align)",
            bad.depth()
        )));
    }
    Ok(depth)
}

/// `P(phi_1, ..., phi_k)`: shared input, stacked outputs.
pub fn parallel(phis: &[NeuralNetwork]) -> Result<NeuralNetwork> {
    let depth = common_depth(phis)?;
    if phis.len() == 1 {
        return Ok(phis[0].clone());
    }
    let mut b = ParallelBuilder::shared(depth);
    for p in phis {
        b.push(p)?;
    }
    b.finish()
}

/// `FP(phi_1, ..., phi_k)`: block-diagonal, inputs and outputs stacked.
pub fn full_parallel(phis: &[NeuralNetwork]) -> Result<NeuralNetwork> {
    let depth = common_depth(phis)?;
    let mut b = ParallelBuilder::separate(depth);
    for p in phis {
        b.push(p)?;
    }
    b.finish()
}

/// Exact identity on `R^d` with `L` layers and at most `2dL` nonzeros.
pub fn identity_net(d: usize, depth: usize) -> Result<NeuralNetwork> {
    if d == 0 || depth == 0 {
        return Err(Error::Invalid("identity_net needs d >= 1 and L >= 1".into()));
    }
    if depth == 1 {
        let trip = (0..d).map(|i| (i, i, 1.0)).collect();
        return NeuralNetwork::new(d, vec![Layer::from_triplets(d, d, trip, vec![0.0; d])?]);
    }
    let mut layers = Vec::with_capacity(depth);
    let split = (0..d).flat_map(|i| [(i, i, 1.0), (d + i, i, -1.0)]).collect();
    layers.push(Layer::from_triplets(2 * d, d, split, vec![0.0; 2 * d])?);
    for _ in 1..depth - 1 {
        let carry = (0..2 * d).map(|i| (i, i, 1.0)).collect();
        layers.push(Layer::from_triplets(2 * d, 2 * d, carry, vec![0.0; 2 * d])?);
    }
    let join = (0..d).flat_map(|i| [(i, i, 1.0), (i, d + i, -1.0)]).collect();
    layers.push(Layer::from_triplets(d, 2 * d, join, vec![0.0; d])?);
    NeuralNetwork::new(d, layers)
}

/// Pad `net` with an identity network after its output until it has `depth` layers.
pub fn pad_to_depth(net: &NeuralNetwork, depth: usize) -> Result<NeuralNetwork> {
    if net.depth() > depth {
        return Err(Error::Dimension(format!(
            "cannot pad a depth-{} network to depth {depth}",
            net.depth()
        )));
    }
    if net.depth() == depth {
        return Ok(net.clone());
    }
    concat(&identity_net(net.output_dim(), depth - net.depth())?, net)
}

/// Equalize depths by output-side identity padding.
pub fn depth_align(phis: &[NeuralNetwork]) -> Result<Vec<NeuralNetwork>> {
    let target = phis.iter().map(NeuralNetwork::depth).max().unwrap_or(0);
    phis.iter().map(|p| pad_to_depth(p, target)).collect()
}

/// Sparse product `C = A B` of two layers' weight matrices, as CSR arrays.
fn matmul(a: &Layer, b: &Layer) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
    let cols = b.cols;
    let mut acc = vec![0.0; cols];
    let mut mark = vec![usize::MAX; cols];
    let mut touched: Vec<usize> = Vec::new();
    let mut row_ptr = vec![0];
    let mut col = Vec::new();
    let mut val = Vec::new();
    for i in 0..a.rows {
        touched.clear();
        a.for_each_in_row(i, |k, aik| {
            b.for_each_in_row(k, |j, bkj| {
                if mark[j] != i {
                    mark[j] = i;
                    acc[j] = 0.0;
                    touched.push(j);
                }
                acc[j] += aik * bkj;
            });
        });
        touched.sort_unstable();
        for &j in &touched {
            if acc[j] != 0.0 {
                col.push(j as u32);
                val.push(acc[j]);
            }
        }
        row_ptr.push(col.len());
    }
    (row_ptr, col, val)
}

/// `net ∘ (x ↦ A x + b)`, merged into the first layer (no depth increase).
pub fn affine_precompose(net: &NeuralNetwork, map: &Layer) -> Result<NeuralNetwork> {
    let first = &net.layers()[0];
    if first.cols != map.rows {
        return Err(Error::Dimension("affine_precompose: shape mismatch".into()));
    }
    let (row_ptr, col, val) = matmul(first, map);
    let mut bias = first.bias.clone();
    for (i, bi) in bias.iter_mut().enumerate() {
        first.for_each_in_row(i, |k, w| *bi += w * map.bias[k]);
    }
    let mut layers = vec![Layer::from_csr(first.rows, map.cols, row_ptr, col, val, bias)];
    layers.extend(net.layers()[1..].iter().cloned());
    NeuralNetwork::new(map.cols, layers)
}

/// `(x ↦ A x + b) ∘ net`, merged into the last layer (no depth increase).
pub fn affine_postcompose(map: &Layer, net: &NeuralNetwork) -> Result<NeuralNetwork> {
    let depth = net.depth();
    let last = &net.layers()[depth - 1];
    if map.cols != last.rows {
        return Err(Error::Dimension("affine_postcompose: shape mismatch".into()));
    }
    let (row_ptr, col, val) = matmul(map, last);
    let mut bias = map.bias.clone();
    for (i, bi) in bias.iter_mut().enumerate() {
        map.for_each_in_row(i, |k, w| *bi += w * last.bias[k]);
    }
    let mut layers: Vec<Layer> = net.layers()[..depth - 1].to_vec();
    layers.push(Layer::from_csr(map.rows, last.cols, row_ptr, col, val, bias));
    NeuralNetwork::new(net.input_dim(), layers)
}
