//! Dual numbers, vectors and matrices over the reals (`ε² = 0`).

mod matrix;
mod scalar;
mod vector;

pub use matrix::{DualMatrix, MAX_INVERSE_CONDITION};
pub use scalar::DualScalar;
pub use vector::DualVector;
