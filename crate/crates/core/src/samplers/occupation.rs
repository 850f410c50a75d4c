//! Occupation histograms and divergence probes.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use super::process::{iterate_fdd, Process};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::kernel::StableParams;
use crate::rng::RandomStream;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Values that fell outside the edges and were counted in an end bin.
    pub clipped: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Normalized density per bin.
    pub fn density(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| c as f64 / (total * (e[1] - e[0])))
            .collect()
    }

    /// Fraction of counts in bins lying inside `[lo, hi]`.
    pub fn mass_within(&self, lo: f64, hi: f64) -> f64 {
        let inside: u64 = self
            .counts
            .iter()
            .zip(self.edges.windows(2))
            .filter(|(_, e)| e[0] >= lo && e[1] <= hi)
            .map(|(c, _)| *c)
            .sum();
        inside as f64 / self.total().max(1) as f64
    }

    /// `bin_left,bin_right,count,density` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count,density\n");
        for ((e, c), d) in self.edges.windows(2).zip(&self.counts).zip(self.density()) {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(e[0]),
                fmt_f64(e[1]),
                c,
                fmt_f64(d)
            );
        }
        out
    }

    pub fn build(values: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameter("bins must be >= 1".into()));
        }
        let (lo, hi) = match range {
            Some((lo, hi)) if lo < hi && lo.is_finite() && hi.is_finite() => (lo, hi),
            Some((lo, hi)) => {
                return Err(Error::InvalidParameter(format!(
                    "bad histogram range [{lo}, {hi}]"
                )))
            }
            None => {
                let finite = values.iter().filter(|v| v.is_finite());
                let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                });
                if !lo.is_finite() {
                    (-0.5, 0.5)
                } else if lo == hi {
                    (lo - 0.5, hi + 0.5)
                } else {
                    (lo, hi)
                }
            }
        };
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();
        let mut counts = vec![0u64; bins];
        let mut clipped = 0;
        for &v in values {
            let idx = if v.is_nan() || v < lo {
                clipped += 1;
                0
            } else if v > hi {
                clipped += 1;
                bins - 1
            } else {
                (((v - lo) / width) as usize).min(bins - 1)
            };
            counts[idx] += 1;
        }
        Ok(Self {
            edges,
            counts,
            clipped,
        })
    }
}

/// Bin the values of `I^(depth)` at `n_points` equispaced times of `[0, 1]`.
pub fn occupation_histogram<T: Real, R: Rng + ?Sized>(
    process: &Process<T>,
    depth: usize,
    n_points: usize,
    bins: usize,
    range_clip: Option<(f64, f64)>,
    rng: &mut R,
) -> Result<Histogram> {
    if n_points == 0 {
        return Err(Error::InvalidParameter("n_points must be >= 1".into()));
    }
    let times: Vec<T> = if n_points == 1 {
        vec![T::lit(0.5)]
    } else {
        let last = T::from_usize_(n_points - 1);
        (0..n_points).map(|i| T::from_usize_(i) / last).collect()
    };
    let values = iterate_fdd(process, &times, depth, rng)?.values;
    let values: Vec<f64> = values.into_iter().map(Real::as_f64).collect();
    Histogram::build(&values, bins, range_clip)
}

/// Empirical `P(|I^(n)(1)| > threshold)` for `n = 1..=depth_max`; overflow
/// to an infinity counts as an exceedance.
pub fn divergence_probe<T: Real>(
    p: &StableParams<T>,
    depth_max: usize,
    threshold: T,
    count: usize,
    stream: RandomStream,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    let process = Process::Stable(*p);
    let exceed: Vec<Vec<bool>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream(i as u64).rng();
            let mut v = vec![T::one()];
            let mut row = Vec::with_capacity(depth_max);
            for _ in 0..depth_max {
                if v[0].is_finite() {
                    v = iterate_fdd(&process, &v, 1, &mut rng)?.values;
                }
                row.push(v[0].is_infinite() || v[0].abs() > threshold);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok((0..depth_max)
        .map(|n| exceed.iter().filter(|r| r[n]).count() as f64 / count as f64)
        .collect())
}
