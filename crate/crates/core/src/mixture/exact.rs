//! Exact finite-dimensional sampling of the n-th iterated Brownian motion
//! under randomized initial times.

use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;

use super::chain::exp_vector;
use super::{EncodingMixture, PruningPolicy};
use crate::error::{Error, Result};
use crate::kernel::{prefix_sums, BranchTable};
use crate::perm::Permutation;
use crate::rng::RandomStream;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct ExactSamples<T> {
    /// One row per draw, `k` columns (the coordinates at `t_1..t_k`).
    pub samples: Vec<Vec<T>>,
    /// Encoding mixture after `n` steps.
    pub mixture: EncodingMixture<T>,
    /// Total weight dropped by pruning across all steps.
    pub tv_bound: T,
}

/// Propagate the initial law (gaps `~ Exp(lambda0_i)`, labelling `tau0`)
/// through `depth` encoding-chain steps, then draw `count` samples.
///
/// Draw `i` uses the substream `stream.substream(i)`, so output does not
/// depend on the thread count.
pub fn exact_iterated_sampler<T: Real>(
    depth: usize,
    lambda0: &[T],
    tau0: &Permutation,
    count: usize,
    policy: &PruningPolicy<T>,
    stream: RandomStream,
) -> Result<ExactSamples<T>> {
    let k = lambda0.len();
    let mut mixture = EncodingMixture::single(lambda0.to_vec(), tau0.clone())?;
    let table = BranchTable::plain(k)?;
    let mut tv = T::zero();
    for _ in 0..depth {
        let (next, rep) = mixture.encoding_step_with(&table, policy)?;
        tv = tv + rep.dropped_weight;
        if tv > policy.tv_budget {
            return Err(Error::CapacityExceeded(format!(
                "accumulated pruning mass {tv} exceeds the budget {}",
                policy.tv_budget
            )));
        }
        mixture = next;
    }
    let weights: Vec<f64> = mixture.atoms().iter().map(|a| a.weight.as_f64()).collect();
    let alias = WeightedAliasIndex::new(weights)
        .map_err(|e| Error::InvalidParameter(format!("alias table: {e}")))?;
    let samples = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream(i as u64).rng();
            let atom = &mixture.atoms()[alias.sample(&mut rng)];
            let y = exp_vector(&atom.rates, &mut rng);
            let bar = prefix_sums(&y);
            let origin = bar[atom.label.at(0)];
            (1..=k).map(|j| bar[atom.label.at(j)] - origin).collect()
        })
        .collect();
    Ok(ExactSamples {
        samples,
        mixture,
        tv_bound: tv,
    })
}

/// Monte Carlo estimate of `E f(I^(n)(t_1..t_k))` and its standard error.
pub fn expectation<T: Real, F>(
    depth: usize,
    lambda0: &[T],
    tau0: &Permutation,
    f: F,
    count: usize,
    policy: &PruningPolicy<T>,
    stream: RandomStream,
) -> Result<(f64, f64)>
where
    F: Fn(&[T]) -> f64,
{
    if count == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let draws = exact_iterated_sampler(depth, lambda0, tau0, count, policy, stream)?;
    let vals: Vec<f64> = draws.samples.iter().map(|x| f(x)).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let se = if vals.len() > 1 {
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}
