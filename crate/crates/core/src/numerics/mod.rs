//! Dense tensors, the handful of differentiable layers the encoder needs, and
//! the Adam optimizer.
//!
//! Each layer exposes a forward function and a matching backward function;
//! there is no general autodiff graph. All arithmetic is `f64`.

mod adam;
mod batchnorm;
mod conv;
mod dense;
mod loss;
mod pool;
mod tensor;

pub use adam::{AdamConfig, ParamId, ParamSet};
pub use batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormCache, BnMode, RunningStats};
pub use conv::{conv1d_backward, conv1d_forward, conv_out_len, ConvGrads};
pub use dense::{dense_backward, dense_forward, DenseGrads};
pub use loss::softmax_cross_entropy;
pub use pool::{maxpool1d_backward, maxpool1d_forward, PoolIndices};
pub use tensor::{relu_backward, relu_forward, Tensor};
