use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `(alpha, sigma, r)`: symmetric alpha-stable increments of scale `sigma`
/// plus a linear drift `r`. The characteristic exponent at time 1 is
/// `-|u|^alpha sigma^alpha + i r u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableParams<T> {
    pub alpha: T,
    pub sigma: T,
    pub r: T,
}

impl<T: Real> StableParams<T> {
    pub fn new(alpha: T, sigma: T, r: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::lit(2.0)) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} not in (0, 2]"
            )));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma = {sigma} must be positive"
            )));
        }
        if !r.is_finite() {
            return Err(Error::InvalidParameter(format!("r = {r} must be finite")));
        }
        Ok(Self { alpha, sigma, r })
    }

    /// Standard linear Brownian motion, `(2, 1/sqrt 2, 0)`.
    pub fn brownian() -> Self {
        Self {
            alpha: T::lit(2.0),
            sigma: T::FRAC_1_SQRT_2(),
            r: T::zero(),
        }
    }

    pub fn is_brownian(&self) -> bool {
        *self == Self::brownian()
    }
}
