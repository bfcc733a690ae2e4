//! Dense linear algebra, seeded sampling and statistics.

mod eig;
mod matrix;
mod rng;
mod stats;

pub use eig::{eig_sym, numerical_rank, EigResult};
pub use matrix::{covariance, matmul, matmul_nt, matmul_tn, Matrix};
pub use rng::{sample, splitmix64, Distribution, RngState};
pub use stats::{mean, pearson, variance};
