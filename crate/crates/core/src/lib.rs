pub mod config;
pub mod distance;
pub mod entropy;
pub mod error;
pub mod exact;
mod group;
pub mod kernel;
pub mod matching;
pub mod mc;
pub mod perm;
pub mod scalar;
pub mod seeding;
pub mod shuffle;
pub mod stats;
pub mod suite;
pub mod table;

pub use error::{Error, Result};
pub use perm::{PermRank, Permutation};

pub type SnDistributionF64 = entropy::SnDistribution<f64>;
pub type SnDistributionF32 = entropy::SnDistribution<f32>;
pub type SnDistributionQ = entropy::SnDistribution<scalar::Rational>;
pub type TransitionMatrixF64 = kernel::TransitionMatrix<f64>;
pub type TransitionMatrixQ = kernel::TransitionMatrix<scalar::Rational>;
pub type DistanceKernelF64 = distance::DistanceKernel<f64>;
pub type DistanceKernelQ = distance::DistanceKernel<scalar::Rational>;

/// Library version recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
