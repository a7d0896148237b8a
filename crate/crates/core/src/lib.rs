//! Dual-number linear algebra and dual-valued matrix norms, applied to the
//! detection of causal emergence in discrete-time Markov chains.
//!
//! A dual transition probability matrix `P_s + P_i ε` pairs a Markov chain
//! with an infinitesimal perturbation. Dual Ky Fan norms of such a matrix
//! locate the coarse-graining scale `k` at which the chain is most
//! sensitive to its perturbation.

pub mod cluster;
pub mod dual;
pub mod error;
pub mod fit;
pub mod gateaux;
pub mod io;
pub mod linalg;
pub mod markov;
pub mod matrix_norms;
pub mod pipeline;
pub mod svd;
pub mod sweep;
pub mod vector_norms;

pub use dual::{DualMatrix, DualScalar, DualVector};
pub use error::{Error, Result};
