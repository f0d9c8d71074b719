//! Geometrically graded 1D meshes, their multipatch variant, and tensor meshes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a 1D mesh was generated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeshKind {
    /// Graded toward 0 on `(0, 1)`.
    Geometric,
    /// Four mapped geometric meshes on `(-a, a)`, graded toward `-a`, `0`, `a`.
    Multipatch { a: f64 },
}

/// A partition `x_0 < ... < x_n` of an interval. Intervals flagged `linear`
/// carry polynomial degree 1 (the layer touching a singular point).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub sigma: f64,
    pub ell: usize,
    pub kind: MeshKind,
    nodes: Vec<f64>,
    linear: Vec<bool>,
}

/// `J_0 = (0, σ^ℓ)`, `J_k = (σ^{ℓ-k+1}, σ^{ℓ-k})`.
pub fn geometric_mesh(sigma: f64, ell: usize) -> Result<Mesh1D> {
    check_sigma(sigma)?;
    let mut nodes = vec![0.0];
    for k in 1..=ell + 1 {
        nodes.push(sigma.powi((ell + 1 - k) as i32));
    }
    let mut linear = vec![false; ell + 1];
    linear[0] = true;
    Ok(Mesh1D {
        sigma,
        ell,
        kind: MeshKind::Geometric,
        nodes,
        linear,
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma <= 0.5) {
        return Err(Error::Invalid(format!("sigma = {sigma} must lie in (0, 1/2]")));
    }
    Ok(())
}

/// Four geometric meshes mapped by `ψ_{1,±}(x) = ±(a/2) x` and
/// `ψ_{2,±}(x) = ±(a - (a/2) x)` onto the quarters of `(-a, a)`.
pub fn multipatch_mesh(a: f64, sigma: f64, ell: usize) -> Result<Mesh1D> {
    if !(a > 0.0) {
        return Err(Error::Invalid(format!("half-width a = {a} must be positive")));
    }
    let g = geometric_mesh(sigma, ell)?;
    let mut pts: Vec<(f64, bool)> = Vec::new();
    // each reference interval keeps its linear flag; record its mapped left end
    let maps: [&dyn Fn(f64) -> f64; 4] = [&|x| -(a - a / 2.0 * x), &|x| -(a / 2.0) * x, &|x| (a / 2.0) * x, &|x| {
        a - a / 2.0 * x
    }];
    for map in maps {
        for k in 0..g.num_intervals() {
            let (l, r) = g.interval(k);
            pts.push((map(l).min(map(r)), g.linear[k]));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let linear: Vec<bool> = pts.iter().map(|p| p.1).collect();
    nodes.push(a);
    Ok(Mesh1D {
        sigma,
        ell,
        kind: MeshKind::Multipatch { a },
        nodes,
        linear,
    })
}

impl Mesh1D {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn num_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn interval(&self, k: usize) -> (f64, f64) {
        (self.nodes[k], self.nodes[k + 1])
    }

    pub fn width(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    /// Whether interval `k` uses the degree-one rule.
    pub fn is_linear(&self, k: usize) -> bool {
        self.linear[k]
    }

    /// `φ_k(x) = 2 (x - x_k) / h_k - 1`.
    pub fn to_local(&self, k: usize, x: f64) -> f64 {
        2.0 * (x - self.nodes[k]) / self.width(k) - 1.0
    }

    pub fn from_local(&self, k: usize, s: f64) -> f64 {
        self.nodes[k] + (s + 1.0) * 0.5 * self.width(k)
    }

    /// Interval containing `x`; points on a node go to the interval on the
    /// right, except the last node.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let n = self.num_intervals();
        if !(x >= self.nodes[0] && x <= self.nodes[n]) {
            return None;
        }
        let k = self.nodes.partition_point(|b| *b <= x);
        Some(k.saturating_sub(1).min(n - 1))
    }

    pub fn span(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }
}

/// Isotropic `d`-fold tensor product of a 1D mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorMesh {
    pub dim: usize,
    pub axis: Mesh1D,
}

impl TensorMesh {
    pub fn new(dim: usize, axis: Mesh1D) -> Result<TensorMesh> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Invalid(format!("dimension {dim} not in 1..=3")));
        }
        Ok(TensorMesh { dim, axis })
    }

    pub fn num_elements(&self) -> usize {
        self.axis.num_intervals().pow(self.dim as u32)
    }

    /// Element multi-index from a flat index (first axis fastest).
    pub fn element(&self, flat: usize) -> Vec<usize> {
        let n = self.axis.num_intervals();
        (0..self.dim).map(|j| flat / n.pow(j as u32) % n).collect()
    }

    /// `Φ_K(x)`: local coordinates in `(-1, 1)^d`.
    pub fn to_local(&self, k: &[usize], x: &[f64]) -> Vec<f64> {
        k.iter().zip(x).map(|(&kj, &xj)| self.axis.to_local(kj, xj)).collect()
    }

    /// Distances of element `k` to the singular corner and (for `d = 3`)
    /// edges, by the closed-form sums over `σ^{2(ℓ - k_i + 1)}`.
    pub fn element_distances(&self, k: &[usize]) -> Result<(f64, Option<f64>)> {
        if self.axis.kind != MeshKind::Geometric {
            return Err(Error::Invalid(
                "element distances are defined on geometric meshes".into(),
            ));
        }
        let ell = self.axis.ell as i32;
        if k.len() != self.dim || k.iter().any(|&ki| ki > self.axis.ell) {
            return Err(Error::Invalid(format!("invalid element index {k:?}")));
        }
        let sq: Vec<f64> = k
            .iter()
            .map(|&ki| self.axis.sigma.powi(2 * (ell - ki as i32 + 1)))
            .collect();
        let dc = sq.iter().sum::<f64>().sqrt();
        let de = (self.dim == 3).then(|| {
            let mut m = f64::INFINITY;
            for i in 0..3 {
                for j in i + 1..3 {
                    m = m.min((sq[i] + sq[j]).sqrt());
                }
            }
            m
        });
        Ok((dc, de))
    }

    /// Edge distance; only defined for `d = 3`.
    pub fn edge_distance(&self, k: &[usize]) -> Result<f64> {
        self.element_distances(k)?
            .1
            .ok_or_else(|| Error::Invalid("edge distance requested for d != 3".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_intervals() {
        let m = geometric_mesh(0.5, 3).unwrap();
        let got: Vec<_> = (0..4).map(|k| m.interval(k)).collect();
        assert_eq!(got, vec![(0.0, 0.125), (0.125, 0.25), (0.25, 0.5), (0.5, 1.0)]);
        let m = geometric_mesh(0.5, 0).unwrap();
        assert_eq!(m.interval(0), (0.0, 1.0));
        let m = geometric_mesh(0.25, 2).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.0625, 0.25, 1.0]);
        assert!(geometric_mesh(0.6, 2).is_err());
        assert!(geometric_mesh(0.0, 2).is_err());
    }

    #[test]
    fn multipatch_layout() {
        let m = multipatch_mesh(1.0, 0.5, 2).unwrap();
        assert_eq!(m.num_intervals(), 12);
        let n = m.nodes();
        assert_eq!(n[0], -1.0);
        assert_eq!(*n.last().unwrap(), 1.0);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
        assert!(n.contains(&0.0) && n.contains(&0.5) && n.contains(&-0.5));
        let linear: Vec<usize> = (0..12).filter(|&k| m.is_linear(k)).collect();
        // intervals touching -1, 0 (both sides) and 1
        assert_eq!(linear, vec![0, 5, 6, 11]);
    }

    #[test]
    fn distances() {
        let t = TensorMesh::new(2, geometric_mesh(0.5, 2).unwrap()).unwrap();
        let (dc, de) = t.element_distances(&[1, 1]).unwrap();
        assert!((dc - (2.0 * 0.5f64.powi(4)).sqrt()).abs() < 1e-15);
        assert!((dc - 0.3536).abs() < 1e-4);
        assert!(de.is_none());
        assert!(t.edge_distance(&[1, 1]).is_err());
        let (dc0, _) = t.element_distances(&[0, 0]).unwrap();
        assert!((dc0 - (2.0 * 0.5f64.powi(6)).sqrt()).abs() < 1e-15);
        let t3 = TensorMesh::new(3, geometric_mesh(0.5, 2).unwrap()).unwrap();
        let s = |k: i32| 0.5f64.powi(2 * (2 - k + 1));
        let brute = [(1, 1), (1, 2), (1, 2)]
            .iter()
            .map(|&(a, b)| (s(a) + s(b)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!((t3.edge_distance(&[1, 1, 2]).unwrap() - brute).abs() < 1e-15);
    }
}
