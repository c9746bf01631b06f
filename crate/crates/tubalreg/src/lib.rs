//! Low-tubal-rank robust tensor regression.
//!
//! The crate fits coefficient tensors `b` in models `y ≈ ⟨x, b⟩` where the
//! predictors are 3-way tensors, the coefficient has low tubal rank, and the
//! noise may be heavy-tailed. Ingredients:
//!
//! - [`tensor`]/[`tsvd`]: the t-product algebra (mode-3 DFT, t-SVD, tubal
//!   rank, tubal nuclear norm) on dense real tensors;
//! - [`penalty`]: folded-concave spectral penalties (SCAD, MCP, Geman,
//!   Laplace, ETP, Logarithm) and the convex tubal nuclear norm;
//! - [`loss`]: squared, logistic, Huber, correntropy, and minimum-distance
//!   logistic risks with analytic gradients;
//! - [`solver`]: an iteratively reweighted proximal solver with weighted
//!   tensor singular value thresholding, monotone backtracking, and
//!   Barzilai-Borwein step initialization;
//! - [`model`]: cross-validation over tuning grids and evaluation metrics;
//! - [`datagen`]: seeded simulation designs;
//! - [`io`]: the `TB3` tensor format, dataset directories, and CSV exports.
//!
//! With the default `parallel` feature, slice factorizations, fold-by-grid
//! cross-validation refits, and replication sweeps run on rayon; all results
//! stay bitwise identical to the sequential build except for the explicitly
//! opt-in parallel loss reductions.

pub mod cmat;
pub mod datagen;
pub mod error;
pub mod io;
pub mod loss;
pub mod model;
pub mod penalty;
pub mod rng;
pub mod solver;
pub mod tensor;
pub mod tsvd;

pub use error::{Error, Result};
pub use loss::{Dataset, LossSpec};
pub use penalty::{PenaltyKind, PenaltySpec};
pub use solver::{FitResult, SolverConfig};
pub use tensor::Tensor3;
pub use tsvd::TSvd;
