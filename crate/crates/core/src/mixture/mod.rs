//! Finite mixtures of products of exponential laws and their exact
//! propagation under the gaps operator, together with the parameter-level
//! chains and the samplers built on top of them.

mod chain;
mod exact;
mod prune;

use std::cmp::Ordering;
use std::fmt::Debug;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::BranchTable;
use crate::perm::Permutation;
use crate::scalar::Real;

pub use chain::{
    param_chain_step, reconstruct_fdd, reconstruct_fdd_reflected, sample_gaps_limit, ParamChain,
};
pub use exact::{exact_iterated_sampler, expectation, ExactSamples};
pub use prune::{PruneReport, PruningPolicy};

/// Above this many raw atoms a step is refused before any allocation.
pub const RAW_EXPANSION_CAP: usize = 50_000_000;

/// Tag attached to each atom: `()` for plain mixtures, a labelling
/// permutation for the encoding chain.
pub trait Label: Clone + Ord + Hash + Debug + Send + Sync {
    fn to_record(&self) -> Option<Vec<usize>>;
    fn from_record(rec: Option<Vec<usize>>, k: usize) -> Result<Self>;
}

impl Label for () {
    fn to_record(&self) -> Option<Vec<usize>> {
        None
    }
    fn from_record(rec: Option<Vec<usize>>, _k: usize) -> Result<Self> {
        match rec {
            None => Ok(()),
            Some(_) => Err(Error::InvalidInput(
                "unexpected labelling in plain mixture".into(),
            )),
        }
    }
}

impl Label for Permutation {
    fn to_record(&self) -> Option<Vec<usize>> {
        Some(self.as_slice().to_vec())
    }
    fn from_record(rec: Option<Vec<usize>>, k: usize) -> Result<Self> {
        let p =
            Permutation::new(rec.ok_or_else(|| Error::InvalidInput("missing labelling".into()))?)?;
        if p.len() != k + 1 {
            return Err(Error::InvalidInput(format!(
                "labelling {p:?} does not match k = {k}"
            )));
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom<T, L> {
    pub weight: T,
    pub rates: Vec<T>,
    pub label: L,
}

/// Weighted atoms, each a product of `k` exponential laws.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture<T, L> {
    k: usize,
    atoms: Vec<Atom<T, L>>,
}

pub type ExponentialMixture<T> = Mixture<T, ()>;
pub type EncodingMixture<T> = Mixture<T, Permutation>;

pub(crate) fn cmp_rates<T: Real>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

impl<T: Real, L: Label> Mixture<T, L> {
    pub fn new(k: usize, atoms: Vec<Atom<T, L>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("mixture dimension must be >= 1".into()));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidInput(
                "mixture needs at least one atom".into(),
            ));
        }
        for a in &atoms {
            if a.rates.len() != k {
                return Err(Error::InvalidInput(format!(
                    "atom with {} rates in a k = {k} mixture",
                    a.rates.len()
                )));
            }
            if !a.rates.iter().all(|r| *r > T::zero() && r.is_finite()) {
                return Err(Error::InvalidParameter(
                    "atom rates must be positive and finite".into(),
                ));
            }
            if !(a.weight > T::zero()) || !a.weight.is_finite() {
                return Err(Error::InvalidParameter(
                    "atom weights must be positive".into(),
                ));
            }
        }
        let m = Self { k, atoms };
        let total = m.total_weight().as_f64();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(m)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atoms(&self) -> &[Atom<T, L>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Density `sum_a w_a prod_i lambda_i exp(-lambda_i x_i)`; zero outside the orthant.
    pub fn density(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.k);
        if x.iter().any(|v| *v < T::zero()) {
            return T::zero();
        }
        self.atoms
            .iter()
            .map(|a| {
                let expo: T = a.rates.iter().zip(x).map(|(&l, &xi)| l * xi).sum();
                let prod = a.rates.iter().fold(T::one(), |acc, &l| acc * l);
                a.weight * prod * (-expo).exp()
            })
            .sum()
    }

    /// Replace every atom by its branches, then prune.
    fn expand<F>(
        &self,
        branches: usize,
        policy: &PruningPolicy<T>,
        f: F,
    ) -> Result<(Self, PruneReport<T>)>
    where
        F: Fn(&Atom<T, L>) -> Vec<Atom<T, L>> + Sync,
    {
        let raw = self.atoms.len().saturating_mul(branches);
        if raw > RAW_EXPANSION_CAP {
            return Err(Error::CapacityExceeded(format!(
                "{raw} raw atoms exceed {RAW_EXPANSION_CAP}"
            )));
        }
        #[allow(clippy::redundant_closure)]
        let atoms: Vec<Atom<T, L>> = self.atoms.par_iter().flat_map_iter(|a| f(a)).collect();
        let mut next = Self { k: self.k, atoms };
        let report = next.prune(policy)?;
        Ok((next, report))
    }

    pub fn to_records(&self) -> Vec<AtomRecord<T>> {
        self.atoms
            .iter()
            .map(|a| AtomRecord {
                weight: a.weight,
                rates: a.rates.clone(),
                labelling: a.label.to_record(),
            })
            .collect()
    }

    pub fn from_records(records: Vec<AtomRecord<T>>) -> Result<Self> {
        let k = records.first().map(|r| r.rates.len()).unwrap_or(0);
        let atoms = records
            .into_iter()
            .map(|r| {
                Ok(Atom {
                    weight: r.weight,
                    rates: r.rates,
                    label: L::from_record(r.labelling, k)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(k, atoms)
    }
}

impl<T: Real + Serialize, L: Label> Mixture<T, L> {
    /// JSON array of `{weight, rates, labelling?}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_records())?)
    }
}

impl<T: Real + for<'de> Deserialize<'de>, L: Label> Mixture<T, L> {
    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_records(serde_json::from_str(s)?)
    }
}

/// Serialized form of one atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord<T> {
    pub weight: T,
    pub rates: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labelling: Option<Vec<usize>>,
}

impl<T: Real> ExponentialMixture<T> {
    pub fn single(rates: Vec<T>) -> Result<Self> {
        let k = rates.len();
        Self::new(
            k,
            vec![Atom {
                weight: T::one(),
                rates,
                label: (),
            }],
        )
    }

    fn step_with(
        &self,
        table: &BranchTable,
        policy: &PruningPolicy<T>,
    ) -> Result<(Self, PruneReport<T>)> {
        if table.k != self.k {
            return Err(Error::InvalidInput(
                "branch table dimension mismatch".into(),
            ));
        }
        self.expand(table.len(), policy, |a| {
            table
                .evaluate(&a.rates)
                .expect("atom rates validated")
                .into_iter()
                .map(|(rates, w)| Atom {
                    weight: a.weight * w,
                    rates,
                    label: (),
                })
                .collect()
        })
    }

    /// One application of the Brownian gaps operator.
    pub fn op_step(&self, policy: &PruningPolicy<T>) -> Result<(Self, PruneReport<T>)> {
        self.step_with(&BranchTable::plain(self.k)?, policy)
    }

    /// One application of the reflected-Brownian gaps operator.
    pub fn op_step_reflected(&self, policy: &PruningPolicy<T>) -> Result<(Self, PruneReport<T>)> {
        self.step_with(&BranchTable::reflected(self.k)?, policy)
    }

    /// `n` steps with a shared table; returns the accumulated dropped weight.
    pub fn op_steps(
        &self,
        n: usize,
        reflected: bool,
        policy: &PruningPolicy<T>,
    ) -> Result<(Self, T)> {
        let table = if reflected {
            BranchTable::reflected(self.k)?
        } else {
            BranchTable::plain(self.k)?
        };
        let mut cur = self.clone();
        let mut tv = T::zero();
        for _ in 0..n {
            let (next, rep) = cur.step_with(&table, policy)?;
            tv = tv + rep.dropped_weight;
            cur = next;
        }
        Ok((cur, tv))
    }
}

impl<T: Real> EncodingMixture<T> {
    pub fn single(rates: Vec<T>, labelling: Permutation) -> Result<Self> {
        let k = rates.len();
        if labelling.len() != k + 1 {
            return Err(Error::InvalidInput("labelling must act on {0..k}".into()));
        }
        Self::new(
            k,
            vec![Atom {
                weight: T::one(),
                rates,
                label: labelling,
            }],
        )
    }

    /// One transition of the encoding chain: atom `(w, lambda, tau)` becomes
    /// `(w * w_{tau'}(lambda), F_{tau'}(lambda), tau' ∘ tau)` over all `tau'`.
    pub fn encoding_step(&self, policy: &PruningPolicy<T>) -> Result<(Self, PruneReport<T>)> {
        let table = BranchTable::plain(self.k)?;
        self.encoding_step_with(&table, policy)
    }

    pub(crate) fn encoding_step_with(
        &self,
        table: &BranchTable,
        policy: &PruningPolicy<T>,
    ) -> Result<(Self, PruneReport<T>)> {
        self.expand(table.len(), policy, |a| {
            table
                .evaluate(&a.rates)
                .expect("atom rates validated")
                .into_iter()
                .zip(&table.branches)
                .map(|((rates, w), br)| Atom {
                    weight: a.weight * w,
                    rates,
                    label: br.label.compose(&a.label),
                })
                .collect()
        })
    }

    /// Forget the labellings.
    pub fn marginal(&self) -> ExponentialMixture<T> {
        let mut m = Mixture {
            k: self.k,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    weight: a.weight,
                    rates: a.rates.clone(),
                    label: (),
                })
                .collect(),
        };
        m.merge_exact();
        m
    }
}
