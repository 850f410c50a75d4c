//! Attractor of the parameter maps: box-cover iteration, chaos game,
//! Hausdorff distance, composition fixed points and contraction diagnostics.

mod boxes;
mod cloud;
mod contraction;
mod kdtree;

pub use boxes::{BoxSet, DEFAULT_SUBDIVISIONS, DENSE_CELL_CAP};
pub use cloud::{chaos_game, chaos_game_uniform, hausdorff_distance, Compact, PointCloud};
pub use contraction::{
    average_contraction_check, composition_fixed_point, jacobian_fd_error, lipschitz_estimate,
    spectral_norm, uniform_grid,
};

use crate::scalar::Real;

/// Upper edge `2 k^2` of the invariant cube `[2, 2k^2]^k` of the plain maps.
pub fn invariant_upper<T: Real>(k: usize) -> T {
    T::from_usize_(2 * k * k)
}
