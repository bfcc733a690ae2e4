//! Beta-VAE laboratory: trains a diagonal-Gaussian beta-VAE under an
//! exponential staircase β schedule on synthetic four-factor data, and
//! compares the learned latents with PCA and FastICA decompositions.
//!
//! - [`numkit`]: dense matrices, Jacobi eigensolver, seeded sampling, Pearson r
//! - [`nn`]: SELU/tanh MLPs with manual backprop, Adam
//! - [`betavae`]: model, loss, schedule, training loop, checkpoints
//! - [`datasets`]: linear and non-linear factor datasets, split, CSV I/O
//! - [`baselines`]: PCA, whitening, symmetric FastICA
//! - [`analysis`]: active latents, correlation grids, Hungarian matching
//! - [`expcli`]: experiment orchestration behind the `bvae` binary

pub mod analysis;
pub mod baselines;
pub mod betavae;
pub mod datasets;
pub mod error;
pub mod expcli;
pub mod nn;
pub mod numkit;
pub mod textio;

pub use error::{Error, Result};
