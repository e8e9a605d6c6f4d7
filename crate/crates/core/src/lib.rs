//! Unsupervised clustering of multichannel wearable-sensor recordings into
//! activity classes.
//!
//! The engine windows raw sensor streams, encodes each window with a small
//! shared-weight 1D CNN, reduces the latent space to two dimensions with
//! UMAP, clusters with a Gaussian-emission HMM, and refines the encoder by
//! pseudo-label training restricted to windows whose labels stayed
//! consistent across iterations. An evaluation harness scores the output
//! under subject-dependent or subject-independent and window-wise or
//! point-wise settings.

pub mod clustering;
pub mod data;
pub mod dimreduce;
pub mod encoder;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod par;
pub mod pipeline;
pub mod seed;

pub use error::{Error, Result};
