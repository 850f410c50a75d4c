//! Grid approximations of the range `sup - inf` of an iterated process.
//!
//! The grid proxy underestimates the true range; no correction is applied.

use rand::Rng;

use super::process::{iterate_fdd, Process};
use crate::error::{Error, Result};
use crate::kernel::StableParams;
use crate::scalar::Real;

fn grid<T: Real>(t: T, grid_size: usize) -> Result<Vec<T>> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter(
            "grid needs at least two points".into(),
        ));
    }
    if t == T::zero() || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "range horizon must be finite and nonzero, got {t}"
        )));
    }
    let last = T::from_usize_(grid_size - 1);
    Ok((0..grid_size)
        .map(|i| {
            if i == grid_size - 1 {
                t
            } else {
                t * T::from_usize_(i) / last
            }
        })
        .collect())
}

fn spread<T: Real>(v: &[T]) -> T {
    let (lo, hi) = v
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    hi - lo
}

/// `max - min` of `I^(depth)` over `grid_size` equispaced points of `[0, t]`.
pub fn range_sample<T: Real, R: Rng + ?Sized>(
    p: &StableParams<T>,
    depth: usize,
    t: T,
    grid_size: usize,
    rng: &mut R,
) -> Result<T> {
    let times = grid(t, grid_size)?;
    let out = iterate_fdd(&Process::Stable(*p), &times, depth, rng)?;
    Ok(spread(&out.values))
}

/// Grid range of a single level on `[0, 1]`.
pub fn single_level_range<T: Real, R: Rng + ?Sized>(
    p: &StableParams<T>,
    grid_size: usize,
    rng: &mut R,
) -> Result<T> {
    range_sample(p, 1, T::one(), grid_size, rng)
}

/// `prod_{i < levels} D_i^(alpha^-i)` with `D_i` i.i.d. single-level grid ranges.
pub fn range_product_sample<T: Real, R: Rng + ?Sized>(
    p: &StableParams<T>,
    levels: usize,
    grid_size: usize,
    rng: &mut R,
) -> Result<T> {
    let inv = T::one() / p.alpha;
    let mut expo = T::one();
    let mut log = T::zero();
    for _ in 0..levels {
        log = log + expo * single_level_range(p, grid_size, rng)?.ln();
        expo = expo * inv;
    }
    Ok(log.exp())
}
