//! Geometric meshes, Legendre machinery and the tensor hp quasi-interpolant.

pub mod interpolant;
pub mod legendre;
pub mod mesh;
pub mod quadrature;

pub use interpolant::{
    direct_projection, element_projection, hp_interpolate, multipatch_interpolate, project_element, BasisFn,
    BasisStats, HpBasis, HpInterpolant,
};
pub use mesh::{geometric_mesh, multipatch_mesh, Mesh1D, MeshKind, TensorMesh};
