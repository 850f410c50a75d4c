use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{cmp_rates, Atom, Label, Mixture};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Controls atom merging and dropping after each propagation step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruningPolicy<T> {
    /// Coordinatewise relative tolerance for merging rate vectors.
    pub merge_tolerance: T,
    pub max_atoms: usize,
    /// Atoms lighter than this are dropped.
    pub min_weight: T,
    /// Largest dropped mass tolerated in a single prune.
    pub tv_budget: T,
    /// When false only exact duplicates are merged, and exceeding
    /// `max_atoms` is an error.
    pub enabled: bool,
}

impl<T: Real> Default for PruningPolicy<T> {
    fn default() -> Self {
        Self {
            merge_tolerance: T::lit(1e-12),
            max_atoms: 200_000,
            min_weight: T::lit(1e-12),
            tv_budget: T::lit(1e-6),
            enabled: true,
        }
    }
}

impl<T: Real> PruningPolicy<T> {
    pub fn disabled(max_atoms: usize) -> Self {
        Self {
            enabled: false,
            max_atoms,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PruneReport<T> {
    /// Sum of dropped weights; bounds the total-variation perturbation.
    pub dropped_weight: T,
    pub merged: usize,
    pub dropped: usize,
}

fn within_tol<T: Real>(a: &[T], b: &[T], tol: T) -> bool {
    a.iter()
        .zip(b)
        .all(|(&x, &y)| (x - y).abs() <= tol * x.abs().max(y.abs()))
}

impl<T: Real, L: Label> Mixture<T, L> {
    fn sort_by_key_order(&mut self) {
        self.atoms.sort_by(|a, b| {
            a.label
                .cmp(&b.label)
                .then_with(|| cmp_rates(&a.rates, &b.rates))
        });
    }

    /// Merge atoms with identical label and bitwise-identical rates. Lossless.
    pub(crate) fn merge_exact(&mut self) -> usize {
        self.sort_by_key_order();
        let before = self.atoms.len();
        let mut out: Vec<Atom<T, L>> = Vec::with_capacity(before);
        for a in self.atoms.drain(..) {
            match out.last_mut() {
                Some(last) if last.label == a.label && last.rates == a.rates => {
                    last.weight = last.weight + a.weight
                }
                _ => out.push(a),
            }
        }
        self.atoms = out;
        before - self.atoms.len()
    }

    /// Merge near-duplicates, drop light atoms, cap the atom count and
    /// renormalize. Atoms end up sorted by weight, heaviest first.
    pub fn prune(&mut self, policy: &PruningPolicy<T>) -> Result<PruneReport<T>> {
        let total_before = self.total_weight();
        let mut merged = self.merge_exact();
        let mut report = PruneReport {
            dropped_weight: T::zero(),
            merged: 0,
            dropped: 0,
        };

        if policy.enabled {
            // Tolerance merge against the running group representative, in
            // (label, rates) order.
            let mut out: Vec<Atom<T, L>> = Vec::with_capacity(self.atoms.len());
            for a in self.atoms.drain(..) {
                match out.last_mut() {
                    Some(last)
                        if last.label == a.label
                            && within_tol(&last.rates, &a.rates, policy.merge_tolerance) =>
                    {
                        last.weight = last.weight + a.weight;
                        merged += 1;
                    }
                    _ => out.push(a),
                }
            }
            let mut dropped = T::zero();
            let mut n_dropped = 0;
            out.retain(|a| {
                if a.weight < policy.min_weight {
                    dropped = dropped + a.weight;
                    n_dropped += 1;
                    false
                } else {
                    true
                }
            });
            self.atoms = out;
            self.sort_by_weight();
            if self.atoms.len() > policy.max_atoms {
                for a in self.atoms.drain(policy.max_atoms..) {
                    dropped = dropped + a.weight;
                    n_dropped += 1;
                }
            }
            if self.atoms.is_empty() {
                return Err(Error::CapacityExceeded("pruning removed every atom".into()));
            }
            if dropped > policy.tv_budget {
                return Err(Error::CapacityExceeded(format!(
                    "pruning would drop mass {dropped} above the budget {}",
                    policy.tv_budget
                )));
            }
            report.dropped_weight = dropped;
            report.dropped = n_dropped;
        } else {
            if self.atoms.len() > policy.max_atoms {
                return Err(Error::CapacityExceeded(format!(
                    "{} atoms exceed the cap {} with pruning disabled",
                    self.atoms.len(),
                    policy.max_atoms
                )));
            }
            self.sort_by_weight();
        }
        report.merged = merged;

        let kept = self.total_weight();
        if report.dropped_weight > T::zero() {
            let scale = total_before / kept;
            for a in &mut self.atoms {
                a.weight = a.weight * scale;
            }
        }
        Ok(report)
    }

    fn sort_by_weight(&mut self) {
        self.atoms.sort_by(|a, b| {
            b.weight
                .partial_cmp(&a.weight)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.label.cmp(&b.label))
                .then_with(|| cmp_rates(&a.rates, &b.rates))
        });
    }
}
