//! Dense tensors, layer primitives with hand-written backward passes, and
//! the finite-difference oracle used to check them.

pub mod activation;
pub mod gradcheck;
pub mod layer;
pub mod rng;
pub mod softmax;
pub mod tensor;

pub use activation::Activation;
pub use gradcheck::{grad_check, relative_error, GradCheckConfig, GradCheckReport};
pub use layer::{affine_backward, affine_forward, affine_param_grads, LayerParams};
pub use rng::SeededRng;
pub use softmax::{softmax_backward, softmax_forward};
pub use tensor::{gemm, Tensor};
