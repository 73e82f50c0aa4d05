//! Tensor-network engine for noise mitigation of simulated quantum circuits
//! at the pre-processing stage.
//!
//! The engine builds the surrogate observable satisfying `E†(Ŷ) = X` by
//! middle-out contraction of the inverse adjoint sparse Pauli-Lindblad noise
//! channel in Pauli-transfer-matrix form, evaluates it with the Dominant
//! Component Approximation or over all Pauli components, and validates the
//! whole pipeline against dense small-system oracles and the quantum
//! Cramér-Rao bound.
//!
//! All numerics are generic over the working precision through [`Scalar`];
//! concrete `f64` aliases are exported at the crate root.

pub mod circuit;
pub mod mitigation;
pub mod noise;
pub mod pauli;
pub mod qcrb;
pub mod scalar;
pub mod sim;
pub mod tensor;

pub use scalar::{LinalgError, Scalar};

/// Default-precision aliases.
pub type Mps64 = tensor::Mps<f64>;
pub type Mpo64 = tensor::Mpo<f64>;
pub type PtmVector64 = pauli::PtmVector<f64>;
pub type PtmMatrix64 = pauli::PtmMatrix<f64>;
