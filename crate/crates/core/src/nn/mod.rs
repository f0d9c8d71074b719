//! ReLU networks, their calculus, and emulation of products and polynomials.

pub mod calculus;
pub mod emulation;
pub mod network;

pub use network::{Layer, NetStats, NeuralNetwork, Weights, Workspace};
