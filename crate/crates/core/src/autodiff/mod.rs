//! Minimal reverse-mode differentiation over dense `f64` tensors, covering
//! exactly the operations the denoiser needs.

pub mod conv;
pub mod gradcheck;
pub mod norm;
mod tape;
mod tensor;

pub use tape::{sigmoid, softplus, Tape, Var, SOFTPLUS_FLOOR};
pub use tensor::Tensor;
