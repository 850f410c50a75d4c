//! Exact and Monte Carlo machinery for repeatedly iterated stochastic processes.
//!
//! | Module        | Contents                                                            |
//! |---------------|---------------------------------------------------------------------|
//! | [`kernel`]    | gaps, encodings, E-sets, rate maps `F` and weights `w`              |
//! | [`mixture`]   | exponential mixtures, their exact propagation, parameter chains     |
//! | [`samplers`]  | stable/Brownian evaluation at finite time sets and their iteration  |
//! | [`attractor`] | box covers, chaos game, Hausdorff distance, contraction diagnostics |
//! | [`verify`]    | Kolmogorov–Smirnov statistics and the check suite                   |
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`. Encodings only need ordered ring arithmetic and
//! also work over exact rationals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod error;
pub mod io;
pub mod kernel;
pub mod mixture;
pub mod perm;
pub mod rng;
pub mod samplers;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use perm::Permutation;
pub use rng::RandomStream;
pub use scalar::Real;

pub type StableParams = kernel::StableParams<f64>;
pub type GapVector = kernel::GapVector<f64>;
pub type Encoding = kernel::Encoding<f64>;
pub type ExponentialMixture = mixture::ExponentialMixture<f64>;
pub type EncodingMixture = mixture::EncodingMixture<f64>;
pub type PruningPolicy = mixture::PruningPolicy<f64>;
pub type BoxSet = attractor::BoxSet<f64>;
pub type PointCloud = attractor::PointCloud<f64>;

pub type StableParams32 = kernel::StableParams<f32>;
pub type ExponentialMixture32 = mixture::ExponentialMixture<f32>;
