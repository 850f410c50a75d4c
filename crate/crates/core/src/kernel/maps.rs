//! Rate maps `F` and branch weights `w` of the parameter-level chains.
//!
//! For a product of exponentials with rates `c`, one application of the
//! gaps operator yields a mixture over branches; branch `b` has rates
//! `F_b(c)` with `F_{b,i}(c) = sum_j M_b[i][j] sqrt(2 c_j)` for an integer
//! incidence matrix `M_b`, and weight `2^-k prod_j sqrt(2 c_j) / prod_i F_{b,i}(c)`.

use crate::error::{Error, Result};
use crate::perm::{all_permutations, all_permutations_fixing_zero, Permutation};
use crate::scalar::Real;

fn check_rates<T: Real>(c: &[T]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::InvalidParameter("empty rate vector".into()));
    }
    if let Some(bad) = c.iter().find(|v| !(**v > T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rate {bad} must be positive and finite"
        )));
    }
    Ok(())
}

fn sqrt2<T: Real>(c: &[T]) -> Vec<T> {
    let two = T::lit(2.0);
    c.iter().map(|&v| (two * v).sqrt()).collect()
}

/// `2^-k prod s / prod F`, switching to log space for `k > 4`.
fn branch_weight<T: Real>(s: &[T], f: &[T]) -> T {
    let k = s.len();
    let half = T::lit(0.5);
    if k > 4 {
        let log: T = s.iter().map(|v| v.ln()).sum::<T>()
            - f.iter().map(|v| v.ln()).sum::<T>()
            - T::from_usize_(k) * T::LN_2();
        log.exp()
    } else {
        s.iter()
            .zip(f)
            .fold(T::one(), |acc, (&a, &b)| acc * half * a / b)
    }
}

/// `E_{tau,i} = { j in 1..=k : min(tau(j-1), tau(j)) < i <= max(tau(j-1), tau(j)) }`
/// for `i = 1..=k`; returned as 1-based `j` indices.
pub fn e_sets(tau: &Permutation) -> Vec<Vec<usize>> {
    let k = tau.len() - 1;
    (1..=k)
        .map(|i| {
            (1..=k)
                .filter(|&j| {
                    let (a, b) = (tau.at(j - 1), tau.at(j));
                    a.min(b) < i && i <= a.max(b)
                })
                .collect()
        })
        .collect()
}

/// `F_{tau,i}(c) = sum_{j in E_{tau,i}} sqrt(2 c_j)`.
pub fn f_tau<T: Real>(tau: &Permutation, c: &[T]) -> Result<Vec<T>> {
    check_rates(c)?;
    check_dim(tau, c)?;
    let s = sqrt2(c);
    Ok(e_sets(tau)
        .iter()
        .map(|e| e.iter().map(|&j| s[j - 1]).sum())
        .collect())
}

pub fn w_tau<T: Real>(tau: &Permutation, c: &[T]) -> Result<T> {
    let f = f_tau(tau, c)?;
    Ok(branch_weight(&sqrt2(c), &f))
}

fn check_dim<T>(tau: &Permutation, c: &[T]) -> Result<()> {
    if tau.len() != c.len() + 1 {
        return Err(Error::InvalidInput(format!(
            "permutation of size {} does not act on {} rates",
            tau.len(),
            c.len()
        )));
    }
    Ok(())
}

/// Reflected-chain map for `tau` fixing 0 and `subset` (1-based indices in
/// `D`). Returns `(F_{tau,D}(c), w_{tau,D}(c))`.
pub fn f_w_reflected<T: Real>(tau: &Permutation, subset: &[usize], c: &[T]) -> Result<(Vec<T>, T)> {
    check_rates(c)?;
    check_dim(tau, c)?;
    if !tau.fixes_zero() {
        return Err(Error::InvalidInput(format!(
            "reflected labelling {tau:?} must fix 0"
        )));
    }
    let k = c.len();
    let s = sqrt2(c);
    let in_d = |j: usize| subset.contains(&j);
    let f: Vec<T> = (1..=k)
        .map(|i| {
            let mut acc = T::zero();
            for j in 1..=k {
                let (a, b) = (tau.at(j - 1), tau.at(j));
                if in_d(j) {
                    if a.min(b) < i && i <= a.max(b) {
                        acc = acc + s[j - 1];
                    }
                } else {
                    if b >= i {
                        acc = acc + s[j - 1];
                    }
                    if a >= i {
                        acc = acc + s[j - 1];
                    }
                }
            }
            acc
        })
        .collect();
    let w = branch_weight(&s, &f);
    Ok((f, w))
}

/// Encoding-chain transition from labelling `tau` through `tau_next`:
/// returns `(F_{tau,tau'}(lambda), w_{tau,tau'}(lambda))` where
/// `F_j = sum_{i : m_i < j <= M_i} sqrt(2 lambda_i)` with `m_i, M_i` the
/// min/max of `tau'(i-1), tau'(i)`. The result depends on `tau'` only.
pub fn e_w_pair<T: Real>(
    tau: &Permutation,
    tau_next: &Permutation,
    lambda: &[T],
) -> Result<(Vec<T>, T)> {
    check_rates(lambda)?;
    check_dim(tau, lambda)?;
    check_dim(tau_next, lambda)?;
    let k = lambda.len();
    let s = sqrt2(lambda);
    let mut f = vec![T::zero(); k];
    for i in 1..=k {
        let lo = tau_next.at(i - 1).min(tau_next.at(i));
        let hi = tau_next.at(i - 1).max(tau_next.at(i));
        for fj in &mut f[lo..hi] {
            *fj = *fj + s[i - 1];
        }
    }
    let w = branch_weight(&s, &f);
    Ok((f, w))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchKind {
    /// Two-sided Brownian motion, branches indexed by permutations of `{0..k}`.
    Plain,
    /// Reflected Brownian motion, branches indexed by `(tau fixing 0, D)`.
    Reflected,
}

/// One branch of a map family, with its incidence matrix precomputed.
#[derive(Clone, Debug)]
pub struct Branch {
    pub label: Permutation,
    /// Reflected chains only: the subset `D` as 1-based indices.
    pub subset: Option<Vec<usize>>,
    /// Row-major `k x k` matrix: `F_i = sum_j incidence[i*k + j] * s_j`.
    incidence: Vec<u8>,
}

impl Branch {
    pub fn multiplicity(&self, k: usize, i: usize, j: usize) -> u8 {
        self.incidence[i * k + j]
    }
}

/// All branches of the plain or reflected family for a fixed `k`, in a
/// deterministic order (lexicographic labelling, then subset bitmask).
#[derive(Clone, Debug)]
pub struct BranchTable {
    pub k: usize,
    pub kind: BranchKind,
    pub branches: Vec<Branch>,
}

impl BranchTable {
    pub fn plain(k: usize) -> Result<Self> {
        let branches = all_permutations(k)?
            .into_iter()
            .map(|tau| {
                let mut incidence = vec![0u8; k * k];
                for (i, e) in e_sets(&tau).iter().enumerate() {
                    for &j in e {
                        incidence[i * k + (j - 1)] = 1;
                    }
                }
                Branch {
                    label: tau,
                    subset: None,
                    incidence,
                }
            })
            .collect();
        Ok(Self {
            k,
            kind: BranchKind::Plain,
            branches,
        })
    }

    pub fn reflected(k: usize) -> Result<Self> {
        if k >= 32 {
            return Err(Error::CapacityExceeded(format!(
                "k = {k} too large for subset enumeration"
            )));
        }
        let mut branches = Vec::new();
        for tau in all_permutations_fixing_zero(k)? {
            for mask in 0u32..(1u32 << k) {
                let subset: Vec<usize> = (1..=k).filter(|j| mask & (1 << (j - 1)) != 0).collect();
                let mut incidence = vec![0u8; k * k];
                for i in 1..=k {
                    for j in 1..=k {
                        let (a, b) = (tau.at(j - 1), tau.at(j));
                        let m = if mask & (1 << (j - 1)) != 0 {
                            u8::from(a.min(b) < i && i <= a.max(b))
                        } else {
                            u8::from(b >= i) + u8::from(a >= i)
                        };
                        incidence[(i - 1) * k + (j - 1)] = m;
                    }
                }
                branches.push(Branch {
                    label: tau.clone(),
                    subset: Some(subset),
                    incidence,
                });
            }
        }
        Ok(Self {
            k,
            kind: BranchKind::Reflected,
            branches,
        })
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Rates of branch `b` given `s = sqrt(2c)`.
    pub fn rates_from_sqrt<T: Real>(&self, b: usize, s: &[T]) -> Vec<T> {
        let k = self.k;
        let inc = &self.branches[b].incidence;
        (0..k)
            .map(|i| {
                (0..k).fold(T::zero(), |acc, j| match inc[i * k + j] {
                    0 => acc,
                    1 => acc + s[j],
                    m => acc + T::from_u8(m).unwrap() * s[j],
                })
            })
            .collect()
    }

    /// `(F_b(c), w_b(c))` for every branch, in table order.
    pub fn evaluate<T: Real>(&self, c: &[T]) -> Result<Vec<(Vec<T>, T)>> {
        check_rates(c)?;
        if c.len() != self.k {
            return Err(Error::InvalidInput(format!(
                "expected {} rates, got {}",
                self.k,
                c.len()
            )));
        }
        let s = sqrt2(c);
        Ok((0..self.len())
            .map(|b| {
                let f = self.rates_from_sqrt(b, &s);
                let w = branch_weight(&s, &f);
                (f, w)
            })
            .collect())
    }

    /// Analytic Jacobian of `F_b` at `c`: `dF_i/dc_j = M[i][j] / sqrt(2 c_j)`.
    pub fn jacobian<T: Real>(&self, b: usize, c: &[T]) -> Vec<Vec<T>> {
        let k = self.k;
        let s = sqrt2(c);
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| T::from_u8(self.branches[b].multiplicity(k, i, j)).unwrap() / s[j])
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use rand::Rng;

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn e_sets_table() {
        assert_eq!(e_sets(&perm(&[0, 1, 2])), vec![vec![1], vec![2]]);
        assert_eq!(e_sets(&perm(&[0, 2, 1])), vec![vec![1], vec![1, 2]]);
        assert_eq!(e_sets(&perm(&[2, 1, 0])), vec![vec![2], vec![1]]);
    }

    #[test]
    fn f_tau_examples() {
        assert_eq!(
            f_tau(&perm(&[0, 2, 1]), &[2.0, 2.0]).unwrap(),
            vec![2.0, 4.0]
        );
        assert_eq!(f_tau(&perm(&[0, 1]), &[8.0]).unwrap(), vec![4.0]);
        assert!(matches!(
            f_tau(&perm(&[0, 1]), &[0.0]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            w_tau(&perm(&[0, 1]), &[-1.0]),
            Err(Error::InvalidParameter(_))
        ));
        for k in 1..=5 {
            for tau in all_permutations(k).unwrap() {
                for v in f_tau(&tau, &vec![2.0; k]).unwrap() {
                    assert!((2.0..=2.0 * k as f64).contains(&v));
                }
            }
        }
    }

    #[test]
    fn w_tau_examples() {
        let mut rng = RandomStream::from_seed(3).rng();
        for _ in 0..20 {
            let c = [rng.random_range(0.1..10.0), rng.random_range(0.1..10.0)];
            assert!((w_tau::<f64>(&perm(&[0, 1, 2]), &c).unwrap() - 0.25).abs() < 1e-15);
        }
        assert!((w_tau::<f64>(&perm(&[0, 2, 1]), &[3.0, 3.0]).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn every_e_set_nonempty() {
        for k in 1..=5 {
            for tau in all_permutations(k).unwrap() {
                let e = e_sets(&tau);
                assert!(e
                    .iter()
                    .all(|s| !s.is_empty() && s.iter().all(|&j| (1..=k).contains(&j))));
                let total: usize = e.iter().map(Vec::len).sum();
                let widths: usize = (1..=k).map(|j| tau.at(j).abs_diff(tau.at(j - 1))).sum();
                assert_eq!(total, widths);
            }
        }
    }

    #[test]
    fn reflected_k1_matches_plain() {
        for d in [vec![1], vec![]] {
            let (f, w) = f_w_reflected(&perm(&[0, 1]), &d, &[8.0f64]).unwrap();
            assert_eq!(f, vec![4.0]);
            assert!((w - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn reflected_table_agrees_with_direct() {
        let mut rng = RandomStream::from_seed(5).rng();
        for k in 1..=4 {
            let table = BranchTable::reflected(k).unwrap();
            let c: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..20.0)).collect();
            for (b, (f, w)) in table.evaluate(&c).unwrap().into_iter().enumerate() {
                let br = &table.branches[b];
                let (f2, w2) = f_w_reflected(&br.label, br.subset.as_ref().unwrap(), &c).unwrap();
                for (x, y) in f.iter().zip(&f2) {
                    assert!((x - y).abs() < 1e-12 * y);
                }
                assert!((w - w2).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn e_w_pair_k1() {
        let id = perm(&[0, 1]);
        for next in [perm(&[0, 1]), perm(&[1, 0])] {
            let (f, w) = e_w_pair(&id, &next, &[2.0f64]).unwrap();
            assert_eq!(f, vec![2.0]);
            assert!((w - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn e_w_pair_marginal_is_plain_family() {
        let mut rng = RandomStream::from_seed(9).rng();
        for k in 1..=3 {
            let c: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..20.0)).collect();
            let from = Permutation::random(k + 1, &mut rng);
            let mut pair: Vec<(Vec<u64>, f64)> = Vec::new();
            let mut plain: Vec<(Vec<u64>, f64)> = Vec::new();
            for tau in all_permutations(k).unwrap() {
                let (f, w) = e_w_pair(&from, &tau, &c).unwrap();
                pair.push((f.iter().map(|v| v.to_bits()).collect(), w));
                let f = f_tau(&tau, &c).unwrap();
                plain.push((
                    f.iter().map(|v| v.to_bits()).collect(),
                    w_tau(&tau, &c).unwrap(),
                ));
            }
            let agg = |v: Vec<(Vec<u64>, f64)>| {
                let mut m = std::collections::BTreeMap::new();
                for (f, w) in v {
                    *m.entry(f).or_insert(0.0) += w;
                }
                m
            };
            let (a, b) = (agg(pair), agg(plain));
            assert_eq!(a.len(), b.len());
            for ((fa, wa), (fb, wb)) in a.iter().zip(b.iter()) {
                assert_eq!(fa, fb);
                assert!((wa - wb).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn monotone_in_every_coordinate() {
        let mut rng = RandomStream::from_seed(4).rng();
        let table = BranchTable::plain(3).unwrap();
        for _ in 0..100 {
            let c: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..20.0)).collect();
            let j = rng.random_range(0..3);
            let mut d = c.clone();
            d[j] += rng.random_range(0.0..5.0);
            for ((fc, _), (fd, _)) in table
                .evaluate(&c)
                .unwrap()
                .iter()
                .zip(table.evaluate(&d).unwrap())
            {
                assert!(fc.iter().zip(&fd).all(|(a, b)| a <= b));
            }
        }
    }

    #[test]
    fn log_space_weights_match_direct() {
        let s = [2.0f64, 3.0, 4.0, 5.0, 6.0];
        let f = [7.0f64, 8.0, 9.0, 10.0, 11.0];
        let direct: f64 = s.iter().zip(&f).map(|(a, b)| 0.5 * a / b).product();
        assert!((branch_weight(&s, &f) - direct).abs() < 1e-15);
    }
}
