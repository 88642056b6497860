//! Minimal differentiable-network core.

pub mod adam;
pub mod checkpoint;
mod gemm;
pub mod layer;
pub mod loss;
pub mod network;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, load_checkpoint_with, save_checkpoint,
    save_checkpoint_with,
};
pub use layer::LayerSpec;
pub use loss::{cross_entropy, mse, one_hot, softmax};
pub use network::{GradRequest, Gradients, Network};
