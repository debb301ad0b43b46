//! Small dense numeric kernel: matrices, activations, masked softmax,
//! seeded RNG streams, Adam and a finite-difference gradient oracle.
//!
//! Everything runs in 64-bit floats with fixed summation order.

pub mod activation;
pub mod adam;
pub mod gradcheck;
pub mod matrix;
pub mod rng;

pub use activation::{masked_softmax, masked_softmax_into, sigmoid, softmax_into, tanh};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_grad, max_relative_error, relative_error};
pub use matrix::{axpy, dot, Matrix, ParamSet};
pub use rng::{derive_seed, dropout_mask, permutation, rng_for, SeededRng};
