//! Borderline-instance generation and decision-boundary characterization
//! for small neural classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`netcore`]: tensors, layers, reverse-mode gradients, Adam, checkpoints.
//! - [`data`]: IDX loading, class filtering, seeded splits, synthetic data.
//! - [`models`]: the classifier zoo, training, scoring and embeddings.
//! - [`deepdig`]: adversarial autoencoders and bisection refinement that
//!   produce instances within `beta` of a pairwise decision boundary.
//! - [`baselines`]: random and embedding-nearest pairings fed to the same refinement.
//! - [`charmetrics`]: oscillation/IDC in input space, linear-SVM distances and
//!   accuracies in embedding space, PCA projections.
//! - [`viz`]: PNG image grids and scatter plots.

// Index loops mirror the math in the numeric kernels.
#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod charmetrics;
pub mod data;
pub mod deepdig;
pub mod error;
pub mod io;
pub mod models;
pub mod netcore;
pub mod rng;
pub mod tensor;
pub mod viz;

pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::Tensor;
