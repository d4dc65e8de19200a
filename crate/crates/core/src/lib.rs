//! Mixture of autoencoders for deep clustering: K autoencoders share the
//! data through a softmax assignment network, trained on a reconstruction
//! objective with sample- and batch-entropy regularizers.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision.

pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod numerics;
pub mod objective;
pub mod scalar;
pub mod training;

pub use data::{Dataset, FeatureView, Normalization};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalReport};
pub use model::{Mixae, MixaeParams, ModelConfig};
pub use numerics::{SeededRng, Tensor};
pub use objective::{LossWeights, ReconstructionKind, ScheduleConfig};
pub use scalar::Scalar;
pub use training::{train, TrainConfig, TrainOutcome, TrainStatus};

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Mixae32 = Mixae<f32>;
pub type Mixae64 = Mixae<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Dataset64 = Dataset<f64>;
