//! Dense tensors, a reverse-mode tape, Adam, and gradient-check helpers.

mod adam;
pub mod flops;
mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use adam::Adam;
pub use flops::{flop_count, full_attention_flops, FlopCount, PatternFlops};
pub use gradcheck::{finite_diff_grad, relative_error};
pub use params::{Gradients, ParamId, ParamStore};
pub use tape::{softmax, AttentionArgs, Neighborhood, Tape, Var};
pub use tensor::{Scalar, Tensor};

#[cfg(test)]
mod tape_tests;
