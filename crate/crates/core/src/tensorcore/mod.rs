//! Dense tensors and the reverse-mode tape the model is trained with.

mod gradcheck;
pub mod kernels;
mod tape;
mod tensor;

pub use gradcheck::{finite_diff_check, GradCheck};
pub use kernels::{add_bias, concat_time_pad, conv_feature_1d, conv_temporal_2d, matmul, mean_abs, row_slice, time_step};
pub use tape::{Gradients, OpKind, Tape, Var};
pub use tensor::Tensor;
