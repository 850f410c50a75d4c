use std::cmp::Ordering;

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;

/// `(0, x1, x1 + x2, ..., x1 + ... + xk)`.
pub fn prefix_sums<T: Num + Clone>(x: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len() + 1);
    let mut acc = T::zero();
    out.push(acc.clone());
    for v in x {
        acc = acc + v.clone();
        out.push(acc.clone());
    }
    out
}

/// Strictly positive spacings between consecutive sorted points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GapVector<T>(Vec<T>);

impl<T: Num + Clone + PartialOrd> GapVector<T> {
    pub fn new(gaps: Vec<T>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(Error::InvalidInput(
                "gap vector must have length >= 1".into(),
            ));
        }
        if !gaps.iter().all(|g| *g > T::zero()) {
            return Err(Error::DegenerateInput(
                "gaps must be strictly positive".into(),
            ));
        }
        Ok(Self(gaps))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

/// Indices of `points` in increasing order of value. Fails on ties or
/// unordered values (NaN).
fn sorted_order<T: PartialOrd>(points: &[T]) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut bad = false;
    order.sort_by(|&a, &b| {
        points[a].partial_cmp(&points[b]).unwrap_or_else(|| {
            bad = true;
            Ordering::Equal
        })
    });
    if bad {
        return Err(Error::InvalidInput("unordered value (NaN) in input".into()));
    }
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            return Err(Error::DegenerateInput(
                "entries must be pairwise distinct".into(),
            ));
        }
    }
    Ok(order)
}

/// Gaps sequence of a set of `k + 1` distinct points.
pub fn gaps<T: Num + Clone + PartialOrd>(points: &[T]) -> Result<GapVector<T>> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    let order = sorted_order(points)?;
    let diffs = order
        .windows(2)
        .map(|w| points[w[1]].clone() - points[w[0]].clone())
        .collect();
    GapVector::new(diffs)
}

/// A time vector with `t0 = 0`, stored as its gaps and labelling permutation
/// so that `t_i = gbar[label(i)] - gbar[label(0)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Encoding<T> {
    pub gaps: GapVector<T>,
    pub labelling: Permutation,
}

impl<T: Num + Clone + PartialOrd> Encoding<T> {
    pub fn new(gaps: GapVector<T>, labelling: Permutation) -> Result<Self> {
        if labelling.len() != gaps.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "labelling of size {} does not match {} gaps",
                labelling.len(),
                gaps.len()
            )));
        }
        Ok(Self { gaps, labelling })
    }
}

/// Encode `t` (with `t[0] = 0`, distinct entries). The labelling sends each
/// index to the rank of its entry.
pub fn encode<T: Num + Clone + PartialOrd + std::fmt::Debug>(t: &[T]) -> Result<Encoding<T>> {
    match t.first() {
        None => return Err(Error::InvalidInput("empty time vector".into())),
        Some(t0) if *t0 != T::zero() => return Err(Error::InvalidAnchor(format!("{t0:?}"))),
        _ => {}
    }
    let order = sorted_order(t)?;
    let mut rank = vec![0; t.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let diffs = order
        .windows(2)
        .map(|w| t[w[1]].clone() - t[w[0]].clone())
        .collect();
    Ok(Encoding {
        gaps: GapVector::new(diffs)?,
        labelling: Permutation::new(rank)?,
    })
}

pub fn decode<T: Num + Clone + PartialOrd>(e: &Encoding<T>) -> Vec<T> {
    let bar = prefix_sums(e.gaps.as_slice());
    let origin = bar[e.labelling.at(0)].clone();
    (0..e.labelling.len())
        .map(|i| bar[e.labelling.at(i)].clone() - origin.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::all_permutations;
    use crate::rng::RandomStream;
    use num_rational::Ratio;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn prefix_sums_examples() {
        assert_eq!(prefix_sums(&[1, 2, 3]), vec![0, 1, 3, 6]);
        assert_eq!(prefix_sums::<i32>(&[]), vec![0]);
        assert_eq!(prefix_sums(&[0.5, 0.5]), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn gaps_examples() {
        assert_eq!(gaps(&[0, 3, 1]).unwrap().as_slice(), &[1, 2]);
        assert_eq!(gaps(&[0, -2, 5]).unwrap().as_slice(), &[2, 5]);
        assert!(matches!(gaps(&[0, 1, 1]), Err(Error::DegenerateInput(_))));
        assert!(gaps(&[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn encode_sorted_is_identity() {
        let e = encode(&[0, 1, 2]).unwrap();
        assert_eq!(e.gaps.as_slice(), &[1, 1]);
        assert_eq!(e.labelling, Permutation::identity(3));
    }

    #[test]
    fn encode_matches_enumeration() {
        // Brute force: exactly one permutation of {0,1,2} satisfies
        // t_i = gbar[tau(i)] - gbar[tau(0)] for t = (0, -1, 1).
        let t = [0i64, -1, 1];
        let e = encode(&t).unwrap();
        let bar = prefix_sums(e.gaps.as_slice());
        let hits: Vec<Permutation> = all_permutations(2)
            .unwrap()
            .into_iter()
            .filter(|p| (0..3).all(|i| t[i] == bar[p.at(i)] - bar[p.at(0)]))
            .collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].as_slice(), &[1, 0, 2]);
        assert_eq!(e.labelling, hits[0]);
        assert_eq!(e.gaps.as_slice(), &[1, 1]);
    }

    #[test]
    fn encode_errors() {
        assert!(matches!(encode(&[1.0, 2.0]), Err(Error::InvalidAnchor(_))));
        assert!(matches!(
            encode(&[0.0, 2.0, 2.0]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn round_trip_exact_over_rationals() {
        let mut rng = RandomStream::from_seed(11).rng();
        for _ in 0..1000 {
            let k = rng.random_range(1..7);
            let mut t = vec![Ratio::new(0i64, 1)];
            while t.len() < k + 1 {
                let v = Ratio::new(rng.random_range(-1000..1000), rng.random_range(1..50));
                if !t.contains(&v) {
                    t.push(v);
                }
            }
            assert_eq!(decode(&encode(&t).unwrap()), t);
        }
    }

    #[test]
    fn round_trip_f64() {
        let mut rng = RandomStream::from_seed(12).rng();
        for _ in 0..1000 {
            let k = rng.random_range(1..7);
            let mut t = vec![0.0f64];
            t.extend((0..k).map(|_| rng.random_range(-10.0..10.0)));
            let back = decode(&encode(&t).unwrap());
            for (a, b) in t.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-12 * 10.0, "{a} vs {b}");
            }
            assert_eq!(back[0], 0.0);
        }
    }

    proptest! {
        #[test]
        fn gaps_translation_invariant(
            pts in proptest::collection::btree_set(-10_000i64..10_000, 2..8),
            shift in -10_000i64..10_000,
        ) {
            let pts: Vec<i64> = pts.into_iter().collect();
            let shifted: Vec<i64> = pts.iter().map(|p| p + shift).collect();
            prop_assert_eq!(gaps(&pts).unwrap(), gaps(&shifted).unwrap());
        }
    }
}
