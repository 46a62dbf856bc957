//! Minimal CNN toolkit: tensors, layer kernels with backward passes, Adam,
//! the GAF classifier and its training loop.

mod adam;
mod checkpoint;
pub mod gradcheck;
pub mod layers;
mod model;
mod scalar;
mod tensor;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, SPEC_HEADER_LEN};
pub use layers::{
    conv2d, conv2d_backward, dense, dense_backward_t as dense_backward, leaky_relu, leaky_relu_backward, maxpool2d, maxpool2d_backward,
    softmax, softmax_cross_entropy, Conv2dGrads, DenseGrads,
};
pub use model::{argmax, batch_loss_grad, forward, init_params, param_count, Activations, BatchGrad, ModelSpec, Network, INPUT_SIZE};
pub use scalar::Scalar;
pub use tensor::{ModelParams, Tensor};
pub use train::{train_epoch, EpochMetrics};
