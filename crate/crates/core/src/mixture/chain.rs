//! Parameter-level Markov chain and reconstruction of finite-dimensional
//! samples from limiting gaps.

use rand::Rng;
use rand_distr::{Distribution, Open01};

use crate::error::{Error, Result};
use crate::kernel::{prefix_sums, BranchKind, BranchTable, GapVector};
use crate::perm::Permutation;
use crate::scalar::Real;

/// Draw a branch index with probability proportional to `weights`.
fn pick<T: Real, R: Rng + ?Sized>(weights: &[T], rng: &mut R) -> usize {
    let total: f64 = weights.iter().map(|w| w.as_f64()).sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w.as_f64();
        if u < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// One transition `lambda -> F_b(lambda)` with `b` drawn with probability `w_b(lambda)`.
pub fn param_chain_step<T: Real, R: Rng + ?Sized>(
    table: &BranchTable,
    lambda: &[T],
    rng: &mut R,
) -> Result<Vec<T>> {
    let mut branches = table.evaluate(lambda)?;
    let weights: Vec<T> = branches.iter().map(|(_, w)| *w).collect();
    let b = pick(&weights, rng);
    Ok(branches.swap_remove(b).0)
}

/// The parameter chain for a fixed dimension and map family.
#[derive(Clone, Debug)]
pub struct ParamChain {
    table: BranchTable,
}

impl ParamChain {
    pub fn new(kind: BranchKind, k: usize) -> Result<Self> {
        let table = match kind {
            BranchKind::Plain => BranchTable::plain(k)?,
            BranchKind::Reflected => BranchTable::reflected(k)?,
        };
        Ok(Self { table })
    }

    pub fn plain(k: usize) -> Result<Self> {
        Self::new(BranchKind::Plain, k)
    }

    pub fn k(&self) -> usize {
        self.table.k
    }

    pub fn table(&self) -> &BranchTable {
        &self.table
    }

    pub fn step<T: Real, R: Rng + ?Sized>(&self, lambda: &[T], rng: &mut R) -> Result<Vec<T>> {
        param_chain_step(&self.table, lambda, rng)
    }

    /// Run `n_steps` transitions from `lambda0`; keep the state after step
    /// `s` whenever `s > burn_in` and `(s - burn_in).is_multiple_of(thin)`.
    pub fn run<T: Real, R: Rng + ?Sized>(
        &self,
        lambda0: &[T],
        n_steps: usize,
        burn_in: usize,
        thin: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<T>>> {
        if thin == 0 {
            return Err(Error::InvalidParameter("thin must be >= 1".into()));
        }
        let mut cur = lambda0.to_vec();
        let mut out = Vec::with_capacity(n_steps.saturating_sub(burn_in) / thin);
        for s in 1..=n_steps {
            cur = self.step(&cur, rng)?;
            if s > burn_in && (s - burn_in).is_multiple_of(thin) {
                out.push(cur.clone());
            }
        }
        Ok(out)
    }
}

fn exp_draw<T: Real, R: Rng + ?Sized>(rate: T, rng: &mut R) -> T {
    let u: f64 = Open01.sample(rng);
    T::lit(-u.ln()) / rate
}

/// Gaps with independent coordinates `G_i ~ Exp(rate lambda_i)`, one per parameter vector.
pub fn sample_gaps_limit<T: Real, R: Rng + ?Sized>(
    params: &[Vec<T>],
    rng: &mut R,
) -> Result<Vec<GapVector<T>>> {
    params
        .iter()
        .map(|lambda| GapVector::new(lambda.iter().map(|&l| exp_draw(l, rng)).collect()))
        .collect()
}

pub(crate) fn exp_vector<T: Real, R: Rng + ?Sized>(rates: &[T], rng: &mut R) -> Vec<T> {
    rates.iter().map(|&l| exp_draw(l, rng)).collect()
}

/// Finite-dimensional sample from `k` limiting gaps: uniform anchor `U` in
/// `{0..k}`, uniform `tau`, the vector `gbar[tau(i)] - gbar[U]` with its
/// single zero removed.
pub fn reconstruct_fdd<T: Real, R: Rng + ?Sized>(
    gaps: &[GapVector<T>],
    rng: &mut R,
) -> Vec<Vec<T>> {
    gaps.iter()
        .map(|g| {
            let k = g.len();
            let bar = prefix_sums(g.as_slice());
            let anchor = rng.random_range(0..=k);
            let tau = Permutation::random(k + 1, rng);
            (0..=k)
                .filter(|&i| tau.at(i) != anchor)
                .map(|i| bar[tau.at(i)] - bar[anchor])
                .collect()
        })
        .collect()
}

/// Reflected case: uniform `tau` on `{1..k}`, output `gbar[tau(i)]` for `i = 1..k`.
pub fn reconstruct_fdd_reflected<T: Real, R: Rng + ?Sized>(
    gaps: &[GapVector<T>],
    rng: &mut R,
) -> Vec<Vec<T>> {
    gaps.iter()
        .map(|g| {
            let k = g.len();
            let bar = prefix_sums(g.as_slice());
            let tau = Permutation::random_fixing_zero(k + 1, rng);
            (1..=k).map(|i| bar[tau.at(i)]).collect()
        })
        .collect()
}
