//! Composition fixed points, Jacobian norms and average contraction.

use crate::error::{Error, Result};
use crate::kernel::BranchTable;
use crate::perm::Permutation;
use crate::scalar::Real;

const POWER_STEPS: usize = 50;
const POWER_TOL: f64 = 1e-10;

/// `per_axis^k` points equally spaced on `[lo, hi]^k`, endpoints included.
pub fn uniform_grid<T: Real>(k: usize, lo: T, hi: T, per_axis: usize) -> Vec<Vec<T>> {
    let axis: Vec<T> = if per_axis <= 1 {
        vec![(lo + hi) * T::lit(0.5)]
    } else {
        (0..per_axis)
            .map(|i| lo + (hi - lo) * T::from_usize_(i) / T::from_usize_(per_axis - 1))
            .collect()
    };
    let mut out = vec![Vec::with_capacity(k)];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

fn branch_index(table: &BranchTable, tau: &Permutation) -> Result<usize> {
    table
        .branches
        .iter()
        .position(|b| &b.label == tau)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "labelling of length {} does not match k = {}",
                tau.len(),
                table.k
            ))
        })
}

fn apply<T: Real>(table: &BranchTable, b: usize, c: &[T]) -> Vec<T> {
    let s: Vec<T> = c.iter().map(|&x| (T::lit(2.0) * x).sqrt()).collect();
    table.rates_from_sqrt(b, &s)
}

/// Fixed point of `F_{tau_1} ∘ ... ∘ F_{tau_m}` reached by iterating from
/// `(2, ..., 2)` until successive iterates differ by less than `tol`.
pub fn composition_fixed_point<T: Real>(
    taus: &[Permutation],
    k: usize,
    tol: T,
    max_iter: usize,
) -> Result<Vec<T>> {
    if taus.is_empty() {
        return Err(Error::InvalidInput("empty composition".into()));
    }
    let table = BranchTable::plain(k)?;
    let idx = taus
        .iter()
        .map(|t| branch_index(&table, t))
        .collect::<Result<Vec<_>>>()?;
    let comp = |c: &[T]| {
        idx.iter()
            .rev()
            .fold(c.to_vec(), |acc, &b| apply(&table, b, &acc))
    };
    let mut cur = vec![T::lit(2.0); k];
    let mut change = T::infinity();
    for _ in 0..max_iter {
        let next = comp(&cur);
        change = next
            .iter()
            .zip(&cur)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        cur = next;
        if change < tol {
            return Ok(cur);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_change: change.as_f64(),
    })
}

fn matmul<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> Vec<Vec<T>> {
    let k = a.len();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| (0..k).map(|m| a[i][m] * b[m][j]).sum())
                .collect()
        })
        .collect()
}

/// Largest singular value of a square matrix: power iteration on `JᵀJ`
/// accelerated by repeated squaring, then a Rayleigh quotient.
pub fn spectral_norm<T: Real>(j: &[Vec<T>]) -> T {
    let k = j.len();
    let a: Vec<Vec<T>> = (0..k)
        .map(|r| {
            (0..k)
                .map(|c| (0..k).map(|m| j[m][r] * j[m][c]).sum())
                .collect()
        })
        .collect();
    let fro = |m: &[Vec<T>]| m.iter().flatten().map(|&x| x * x).sum::<T>().sqrt();
    let scale = fro(&a);
    if scale == T::zero() {
        return T::zero();
    }
    let mut p: Vec<Vec<T>> = a
        .iter()
        .map(|row| row.iter().map(|&x| x / scale).collect())
        .collect();
    for _ in 0..POWER_STEPS {
        let sq = matmul(&p, &p);
        let n = fro(&sq);
        let next: Vec<Vec<T>> = sq
            .into_iter()
            .map(|row| row.into_iter().map(|x| x / n).collect())
            .collect();
        let change = p
            .iter()
            .flatten()
            .zip(next.iter().flatten())
            .map(|(&x, &y)| (x - y).abs())
            .fold(T::zero(), T::max);
        p = next;
        if change <= T::lit(POWER_TOL) {
            break;
        }
    }
    // the dominant column of the converged power spans the top eigenvector
    let v: Vec<T> = (0..k)
        .map(|c| (0..k).map(|r| p[r][c]).collect::<Vec<T>>())
        .max_by(|x, y| {
            let (nx, ny) = (
                x.iter().map(|&t| t * t).sum::<T>(),
                y.iter().map(|&t| t * t).sum::<T>(),
            );
            nx.partial_cmp(&ny).unwrap()
        })
        .unwrap();
    let av: Vec<T> = a
        .iter()
        .map(|row| row.iter().zip(&v).map(|(&x, &y)| x * y).sum())
        .collect();
    let num: T = v.iter().zip(&av).map(|(&x, &y)| x * y).sum();
    let den: T = v.iter().map(|&x| x * x).sum();
    (num / den).sqrt()
}

/// Largest spectral norm of the Jacobian of `F_tau` over the grid.
pub fn lipschitz_estimate<T: Real>(tau: &Permutation, k: usize, grid: &[Vec<T>]) -> Result<T> {
    let table = BranchTable::plain(k)?;
    let b = branch_index(&table, tau)?;
    let mut best = T::zero();
    for c in grid {
        crate::kernel::f_tau(tau, c)?;
        best = best.max(spectral_norm(&table.jacobian(b, c)));
    }
    Ok(best)
}

/// Largest relative deviation over the grid between the analytic Jacobian
/// of `F_tau` and central differences with step `1e-5 c_j`.
pub fn jacobian_fd_error(tau: &Permutation, k: usize, grid: &[Vec<f64>]) -> Result<f64> {
    let table = BranchTable::plain(k)?;
    let b = branch_index(&table, tau)?;
    let mut worst = 0.0f64;
    for c in grid {
        let an = table.jacobian(b, c);
        for j in 0..k {
            let h = 1e-5 * c[j];
            let mut up = c.clone();
            let mut dn = c.clone();
            up[j] += h;
            dn[j] -= h;
            let (fu, fd) = (apply(&table, b, &up), apply(&table, b, &dn));
            for i in 0..k {
                let fd_ij = (fu[i] - fd[i]) / (up[j] - dn[j]);
                let err = if an[i][j] == 0.0 {
                    fd_ij.abs()
                } else {
                    ((fd_ij - an[i][j]) / an[i][j]).abs()
                };
                worst = worst.max(err);
            }
        }
    }
    Ok(worst)
}

/// Maximum over the grid of `sum_tau w_tau(c) log N_tau(c)`, with `N_tau`
/// the spectral norm of the Jacobian. Returns `(margin < 0, margin)`.
pub fn average_contraction_check<T: Real>(k: usize, grid: &[Vec<T>]) -> Result<(bool, T)> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let table = BranchTable::plain(k)?;
    let mut margin = T::neg_infinity();
    for c in grid {
        let evals = table.evaluate(c)?;
        let avg: T = evals
            .iter()
            .enumerate()
            .map(|(b, (_, w))| *w * spectral_norm(&table.jacobian(b, c)).ln())
            .sum();
        margin = margin.max(avg);
    }
    Ok((margin < T::zero(), margin))
}
