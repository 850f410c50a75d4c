//! Joint evaluation at finite time sets and n-fold iteration.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;

use super::stable::sample_stable_standard;
use crate::error::{Error, Result};
use crate::kernel::{gaps, prefix_sums, GapVector, StableParams};
use crate::rng::RandomStream;
use crate::scalar::Real;

/// Process iterated by [`iterate_fdd`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Process<T> {
    /// Two-sided stable process with the given parameters.
    Stable(StableParams<T>),
    /// `|B|` for a standard Brownian motion `B`, defined on `[0, inf)`.
    ReflectedBrownian,
}

impl<T: Real> Process<T> {
    pub fn brownian() -> Self {
        Process::Stable(StableParams::brownian())
    }
}

/// Infinite operands win; `inf - inf` keeps the accumulated side.
#[inline]
fn sat_add<T: Real>(acc: T, inc: T) -> T {
    if acc.is_infinite() {
        acc
    } else {
        acc + inc
    }
}

fn increment<T: Real, R: Rng + ?Sized>(p: &StableParams<T>, gap: T, rng: &mut R) -> T {
    let z = sample_stable_standard(p.alpha, rng);
    let scale = if p.alpha == T::lit(2.0) {
        gap.sqrt()
    } else {
        gap.powf(T::one() / p.alpha)
    };
    let noise = if z == T::zero() {
        T::zero()
    } else {
        p.sigma * scale * z
    };
    let drift = p.r * gap;
    if noise.is_infinite() {
        noise
    } else if drift.is_infinite() {
        drift
    } else {
        drift + noise
    }
}

/// Fill `out[idx]` for the given `(|time|, idx)` pairs on one side of 0,
/// building the one-sided path by summing increments over sorted gaps.
/// Infinite times are left untouched. Returns the number of outputs that
/// overflowed.
fn one_side<T: Real, R: Rng + ?Sized>(
    p: &StableParams<T>,
    mut pts: Vec<(T, usize)>,
    sign: T,
    out: &mut [T],
    rng: &mut R,
) -> usize {
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut prev_t = T::zero();
    let mut acc = T::zero();
    let mut overflow = 0;
    let mut first = true;
    for (t, idx) in pts {
        if !(first || t != prev_t) {
            out[idx] = sign * acc;
            continue;
        }
        first = false;
        let gap = t - prev_t;
        acc = sat_add(acc, increment(p, gap, rng));
        prev_t = t;
        let v = sign * acc;
        if v.is_infinite() {
            overflow += 1;
        }
        out[idx] = v;
    }
    overflow
}

/// Evaluation that tolerates infinite inputs (they map to themselves).
fn eval_saturating<T: Real, R: Rng + ?Sized>(
    p: &StableParams<T>,
    times: &[T],
    rng: &mut R,
) -> (Vec<T>, usize) {
    let mut out = vec![T::zero(); times.len()];
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        if t.is_infinite() {
            out[i] = t;
        } else if t > T::zero() {
            pos.push((t, i));
        } else if t < T::zero() {
            neg.push((-t, i));
        }
    }
    let a = one_side(p, pos, T::one(), &mut out, rng);
    // X(-t) = -X'(t) for an independent copy X'
    let b = one_side(p, neg, -T::one(), &mut out, rng);
    (out, a + b)
}

fn check_finite<T: Real>(times: &[T]) -> Result<()> {
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite time {t}")));
    }
    Ok(())
}

/// Joint draw of `(X(t_1), ..., X(t_N))` for the two-sided stable process.
/// Equal times share one value and `X(0) = 0`.
pub fn eval_process_at<T: Real, R: Rng + ?Sized>(
    p: &StableParams<T>,
    times: &[T],
    rng: &mut R,
) -> Result<Vec<T>> {
    check_finite(times)?;
    Ok(eval_saturating(p, times, rng).0)
}

fn reflected_saturating<T: Real, R: Rng + ?Sized>(times: &[T], rng: &mut R) -> (Vec<T>, usize) {
    let (mut v, o) = eval_saturating(&StableParams::brownian(), times, rng);
    for x in &mut v {
        *x = x.abs();
    }
    (v, o)
}

/// Joint draw of `|B(t_i)|` for `t_i >= 0`.
pub fn eval_reflected_at<T: Real, R: Rng + ?Sized>(times: &[T], rng: &mut R) -> Result<Vec<T>> {
    check_finite(times)?;
    if let Some(t) = times.iter().find(|t| **t < T::zero()) {
        return Err(Error::InvalidInput(format!(
            "reflected Brownian motion needs t >= 0, got {t}"
        )));
    }
    Ok(reflected_saturating(times, rng).0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iterated<T> {
    pub values: Vec<T>,
    /// Output coordinates that saturated to an infinity.
    pub overflowed: usize,
}

/// `I^(n)(t_i) = X_n(... X_1(t_i))` with independent levels.
pub fn iterate_fdd<T: Real, R: Rng + ?Sized>(
    process: &Process<T>,
    times: &[T],
    depth: usize,
    rng: &mut R,
) -> Result<Iterated<T>> {
    check_finite(times)?;
    if matches!(process, Process::ReflectedBrownian) && times.iter().any(|t| *t < T::zero()) {
        return Err(Error::InvalidInput(
            "reflected iteration needs nonnegative times".into(),
        ));
    }
    let mut cur = times.to_vec();
    for _ in 0..depth {
        cur = match process {
            Process::Stable(p) => eval_saturating(p, &cur, rng).0,
            Process::ReflectedBrownian => reflected_saturating(&cur, rng).0,
        };
    }
    let overflowed = cur.iter().filter(|v| v.is_infinite()).count();
    Ok(Iterated {
        values: cur,
        overflowed,
    })
}

/// `count` independent draws of [`iterate_fdd`]; draw `i` uses
/// `stream.substream(i)`. Returns the rows and the total overflow count.
pub fn iterate_batch<T: Real>(
    process: &Process<T>,
    times: &[T],
    depth: usize,
    count: usize,
    stream: RandomStream,
) -> Result<(Vec<Vec<T>>, usize)> {
    let rows: Vec<Iterated<T>> = (0..count)
        .into_par_iter()
        .map(|i| iterate_fdd(process, times, depth, &mut stream.substream(i as u64).rng()))
        .collect::<Result<_>>()?;
    let overflow = rows.iter().map(|r| r.overflowed).sum();
    Ok((rows.into_iter().map(|r| r.values).collect(), overflow))
}

/// One step of the gaps chain: gaps of `(0, X(gbar_1), ..., X(gbar_k))`.
pub fn gaps_chain_step<T: Real, R: Rng + ?Sized>(
    g: &GapVector<T>,
    p: &StableParams<T>,
    rng: &mut R,
) -> Result<GapVector<T>> {
    let t = prefix_sums(g.as_slice());
    let mut vals = eval_process_at(p, &t[1..], rng)?;
    vals.insert(0, T::zero());
    gaps(&vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{ks_one_sample, ks_two_sample, normal_cdf};

    fn bm() -> StableParams<f64> {
        StableParams::brownian()
    }

    #[test]
    fn brownian_variance_is_time() {
        let mut rng = RandomStream::from_seed(31).rng();
        for t in [0.5, 3.0, -2.0] {
            let n = 1_000_000;
            let xs: Vec<f64> = (0..n)
                .map(|_| eval_process_at(&bm(), &[t], &mut rng).unwrap()[0])
                .collect();
            let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
            assert!((var / t.abs() - 1.0).abs() < 0.01, "t = {t}: var {var}");
        }
    }

    #[test]
    fn duplicates_and_anchor() {
        let mut rng = RandomStream::from_seed(32).rng();
        for _ in 0..100 {
            let v = eval_process_at(&bm(), &[1.5, 0.0, 1.5, -1.0, -1.0], &mut rng).unwrap();
            assert_eq!(v[0], v[2]);
            assert_eq!(v[3], v[4]);
            assert_eq!(v[1], 0.0);
        }
        assert!(eval_process_at(&bm(), &[f64::NAN], &mut rng).is_err());
        assert!(eval_process_at(&bm(), &[f64::INFINITY], &mut rng).is_err());
    }

    #[test]
    fn permutation_equivariance() {
        // Same stream, permuted times: the sorted walk consumes draws in the
        // same order, so values are permuted accordingly.
        let t = [0.3, -1.2, 2.5, 0.7, -0.1];
        let perm = [3, 0, 4, 1, 2];
        let tp: Vec<f64> = perm.iter().map(|&i| t[i]).collect();
        let a = eval_process_at(&bm(), &t, &mut RandomStream::new(5, 1).rng()).unwrap();
        let b = eval_process_at(&bm(), &tp, &mut RandomStream::new(5, 1).rng()).unwrap();
        for (j, &i) in perm.iter().enumerate() {
            assert_eq!(b[j], a[i]);
        }
    }

    #[test]
    fn disjoint_increments_uncorrelated() {
        let mut rng = RandomStream::from_seed(33).rng();
        let n = 100_000;
        let mut xy = Vec::with_capacity(n);
        for _ in 0..n {
            let v = eval_process_at(&bm(), &[1.0, 2.5, 3.0], &mut rng).unwrap();
            xy.push((v[1] - v[0], v[2] - v[1]));
        }
        let mx = xy.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let my = xy.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let cov = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / n as f64;
        let sx = (xy.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n as f64).sqrt();
        let sy = (xy.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n as f64).sqrt();
        let rho = cov / (sx * sy);
        assert!(rho.abs() < 3.0 / (n as f64).sqrt(), "rho {rho}");
    }

    #[test]
    fn stable_scaling() {
        let p = StableParams::new(1.5, 1.0, 0.4).unwrap();
        let t = 3.7f64;
        let mut rng = RandomStream::from_seed(34).rng();
        let n = 100_000;
        let a: Vec<f64> = (0..n)
            .map(|_| {
                (eval_process_at(&p, &[t], &mut rng).unwrap()[0] - t * p.r) / t.powf(1.0 / p.alpha)
            })
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|_| eval_process_at(&p, &[1.0], &mut rng).unwrap()[0] - p.r)
            .collect();
        assert!(ks_two_sample(&a, &b).unwrap() < 0.01);
    }

    #[test]
    fn reflected_marginal_is_folded_gaussian() {
        let mut rng = RandomStream::from_seed(35).rng();
        let t = 2.0f64;
        let xs: Vec<f64> = (0..100_000)
            .map(|_| eval_reflected_at(&[t, 0.0], &mut rng).unwrap())
            .map(|v| {
                assert!(v[0] >= 0.0);
                assert_eq!(v[1], 0.0);
                v[0]
            })
            .collect();
        let d = ks_one_sample(&xs, |x| {
            if x < 0.0 {
                0.0
            } else {
                2.0 * normal_cdf(x / t.sqrt()) - 1.0
            }
        })
        .unwrap();
        assert!(d < 0.01, "KS {d}");
        assert!(eval_reflected_at(&[-1.0], &mut rng).is_err());
    }

    #[test]
    fn depth_zero_is_identity() {
        let mut rng = RandomStream::from_seed(36).rng();
        let t = [1.0, -2.0, 0.5];
        assert_eq!(
            iterate_fdd(&Process::brownian(), &t, 0, &mut rng)
                .unwrap()
                .values,
            t.to_vec()
        );
    }

    #[test]
    fn divergent_regime_saturates_without_nan() {
        let p = Process::Stable(StableParams::new(0.5f64, 1.0, 0.0).unwrap());
        let (rows, _) =
            iterate_batch(&p, &[1.0, 2.0, -1.0], 60, 200, RandomStream::from_seed(37)).unwrap();
        assert!(rows.iter().flatten().all(|v| !v.is_nan()));
    }

    #[test]
    fn batch_reproducible() {
        let p = Process::brownian();
        let a = iterate_batch(&p, &[1.0, 2.0], 5, 50, RandomStream::from_seed(38)).unwrap();
        let b = iterate_batch(&p, &[1.0, 2.0], 5, 50, RandomStream::from_seed(38)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaps_step_k1_is_half_normal() {
        let mut rng = RandomStream::from_seed(39).rng();
        let g = GapVector::new(vec![1.7f64]).unwrap();
        let xs: Vec<f64> = (0..100_000)
            .map(|_| gaps_chain_step(&g, &bm(), &mut rng).unwrap().as_slice()[0])
            .collect();
        let d = ks_one_sample(&xs, |x| {
            if x < 0.0 {
                0.0
            } else {
                2.0 * normal_cdf(x / 1.7f64.sqrt()) - 1.0
            }
        })
        .unwrap();
        assert!(d < 0.01, "KS {d}");
    }

    #[test]
    fn gaps_step_depends_on_gaps_only() {
        // Two time vectors with gaps (0.5, 1.5): (0, 0.5, 2) and (0, -1.5, 0.5)
        // shifted so that 0 sits elsewhere. Output gaps must agree in law.
        let mut rng = RandomStream::from_seed(40).rng();
        let n = 100_000;
        let mut a = vec![Vec::new(); 2];
        let mut b = vec![Vec::new(); 2];
        for _ in 0..n {
            let v = eval_process_at(&bm(), &[0.5, 2.0], &mut rng).unwrap();
            let ga = gaps(&[0.0, v[0], v[1]]).unwrap();
            let w = eval_process_at(&bm(), &[-1.5, 0.5], &mut rng).unwrap();
            let gb = gaps(&[0.0, w[0], w[1]]).unwrap();
            for i in 0..2 {
                a[i].push(ga.as_slice()[i]);
                b[i].push(gb.as_slice()[i]);
            }
        }
        for i in 0..2 {
            let d = ks_two_sample(&a[i], &b[i]).unwrap();
            assert!(d < 0.02, "marginal {i}: KS {d}");
        }
    }

    #[test]
    fn exponential_gaps_map_to_sqrt_rate() {
        let mut rng = RandomStream::from_seed(41).rng();
        let lambda = 3.0f64;
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let g = -(1.0 - rng.random::<f64>()).ln() / lambda;
                gaps_chain_step(&GapVector::new(vec![g]).unwrap(), &bm(), &mut rng)
                    .unwrap()
                    .as_slice()[0]
            })
            .collect();
        let rate = (2.0 * lambda).sqrt();
        let d = ks_one_sample(&xs, |x| 1.0 - (-rate * x.max(0.0)).exp()).unwrap();
        assert!(d < 0.01, "KS {d}");
    }
}
