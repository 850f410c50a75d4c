//! Permutations of `{0, ..., k}` stored as explicit index arrays.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `k` for which permutations of `{0..k}` are enumerated in full.
pub const MAX_ENUM_K: usize = 8;

/// Bijection `i -> map[i]` on `{0, ..., n-1}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= map.len() || seen[v] {
                return Err(Error::InvalidInput(format!("{map:?} is not a permutation")));
            }
            seen[v] = true;
        }
        Ok(Self { map })
    }

    /// Size of the underlying index set (`k + 1` for a permutation of `{0..k}`).
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// `self ∘ other`, i.e. `i -> self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(
            self.len(),
            other.len(),
            "composing permutations of different sizes"
        );
        Permutation {
            map: other.map.iter().map(|&j| self.map[j]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { map: inv }
    }

    pub fn fixes_zero(&self) -> bool {
        self.map.first() == Some(&0)
    }

    /// Uniform permutation of `{0..n-1}` (Fisher–Yates).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            map.swap(i, j);
        }
        Self { map }
    }

    /// Uniform permutation of `{0..n-1}` among those with `0 -> 0`.
    pub fn random_fixing_zero<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        for i in (2..n).rev() {
            let j = rng.random_range(1..=i);
            map.swap(i, j);
        }
        Self { map }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.map)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.map
    }
}

fn check_cap(k: usize) -> Result<()> {
    if k > MAX_ENUM_K {
        return Err(Error::CapacityExceeded(format!(
            "enumerating permutations of {{0..{k}}} exceeds the cap k <= {MAX_ENUM_K}"
        )));
    }
    Ok(())
}

/// All permutations of `{0..k}` in lexicographic order.
pub fn all_permutations(k: usize) -> Result<Vec<Permutation>> {
    check_cap(k)?;
    Ok(lex_permutations((0..=k).collect()))
}

/// All permutations of `{0..k}` fixing 0, i.e. permutations of `{1..k}` with
/// the anchor `0 -> 0` prepended, in lexicographic order.
pub fn all_permutations_fixing_zero(k: usize) -> Result<Vec<Permutation>> {
    check_cap(k)?;
    Ok(lex_permutations((1..=k).collect())
        .into_iter()
        .map(|p| {
            let mut map = Vec::with_capacity(k + 1);
            map.push(0);
            map.extend(p.map);
            Permutation { map }
        })
        .collect())
}

fn lex_permutations(mut cur: Vec<usize>) -> Vec<Permutation> {
    let mut out = vec![Permutation { map: cur.clone() }];
    while next_permutation(&mut cur) {
        out.push(Permutation { map: cur.clone() });
    }
    out
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
