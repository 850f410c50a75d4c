//! Outer box covers of the iterated images of the invariant cube.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::invariant_upper;
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::kernel::BranchTable;
use crate::scalar::Real;

/// Pieces per axis each box is split into by [`BoxSet::ifs_step`].
pub const DEFAULT_SUBDIVISIONS: usize = 1;

/// Largest number of grid cells a box set may address.
pub const DENSE_CELL_CAP: u64 = 1 << 24;

/// Boxes `prod_i [n_i s, (n_i + 1) s)` on a grid of side `s`, restricted to
/// the cells meeting the invariant cube `[2, 2k^2]^k`. Cells are stored as
/// sorted linear indices.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet<T> {
    resolution: T,
    k: usize,
    /// Integer index of the first cell on every axis.
    origin: i64,
    /// Cells per axis.
    base: u64,
    keys: Vec<u64>,
}

impl<T: Real> BoxSet<T> {
    fn grid(k: usize, resolution: T) -> Result<(T, i64, u64)> {
        if k == 0 || !(resolution > T::zero()) {
            return Err(Error::InvalidParameter(
                "box grid needs k >= 1 and positive resolution".into(),
            ));
        }
        let mut s = resolution;
        loop {
            let origin = (T::lit(2.0) / s).floor().to_i64().unwrap();
            let last = (invariant_upper::<T>(k) / s).floor().to_i64().unwrap();
            let base = (last - origin + 1) as u64;
            let cells = (base as f64).powi(k as i32);
            if cells <= DENSE_CELL_CAP as f64 {
                return Ok((s, origin, base));
            }
            // too many cells for this k: coarsen
            s = s * T::lit(2.0);
        }
    }

    /// Every cell meeting the invariant cube. The resolution is doubled
    /// until the grid fits in [`DENSE_CELL_CAP`] cells.
    pub fn full(k: usize, resolution: T) -> Result<Self> {
        let (s, origin, base) = Self::grid(k, resolution)?;
        let n = base.pow(k as u32);
        Ok(Self {
            resolution: s,
            k,
            origin,
            base,
            keys: (0..n).collect(),
        })
    }

    /// The cells containing the given points (which must lie in the cube).
    pub fn from_points(k: usize, resolution: T, points: &[Vec<T>]) -> Result<Self> {
        let (s, origin, base) = Self::grid(k, resolution)?;
        let mut set = Self {
            resolution: s,
            k,
            origin,
            base,
            keys: Vec::new(),
        };
        let mut keys = Vec::with_capacity(points.len());
        for p in points {
            let idx: Vec<i64> = p
                .iter()
                .map(|&x| (x / s).floor().to_i64().unwrap())
                .collect();
            keys.push(
                set.key(&idx).ok_or_else(|| {
                    Error::InvalidInput("point outside the invariant cube".into())
                })?,
            );
        }
        keys.sort_unstable();
        keys.dedup();
        set.keys = keys;
        Ok(set)
    }

    pub fn resolution(&self) -> T {
        self.resolution
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    fn key(&self, idx: &[i64]) -> Option<u64> {
        let mut key = 0u64;
        for &i in idx.iter().rev() {
            let off = i - self.origin;
            if off < 0 || off as u64 >= self.base {
                return None;
            }
            key = key * self.base + off as u64;
        }
        Some(key)
    }

    fn index(&self, mut key: u64) -> Vec<i64> {
        (0..self.k)
            .map(|_| {
                let off = key % self.base;
                key /= self.base;
                self.origin + off as i64
            })
            .collect()
    }

    /// Integer indices of every box, in storage order.
    pub fn boxes(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        self.keys.iter().map(|&key| self.index(key))
    }

    pub fn centers(&self) -> Vec<Vec<T>> {
        let half = T::lit(0.5);
        self.boxes()
            .map(|idx| {
                idx.iter()
                    .map(|&i| (T::from_i64(i).unwrap() + half) * self.resolution)
                    .collect()
            })
            .collect()
    }

    /// Half the diagonal of one box.
    pub fn half_diagonal(&self) -> T {
        self.resolution * T::from_usize_(self.k).sqrt() * T::lit(0.5)
    }

    pub fn contains_point(&self, p: &[T]) -> bool {
        let idx: Vec<i64> = p
            .iter()
            .map(|&x| (x / self.resolution).floor().to_i64().unwrap_or(i64::MIN))
            .collect();
        self.key(&idx)
            .is_some_and(|key| self.keys.binary_search(&key).is_ok())
    }

    /// `self ⊆ other` (same grid).
    pub fn is_subset(&self, other: &BoxSet<T>) -> bool {
        self.resolution == other.resolution
            && self.k == other.k
            && self
                .keys
                .iter()
                .all(|key| other.keys.binary_search(key).is_ok())
    }

    /// Union over the plain maps of the images of every box, with each box
    /// split into [`DEFAULT_SUBDIVISIONS`]`^k` pieces. See [`BoxSet::ifs_step_with`].
    pub fn ifs_step(&self) -> Result<Self> {
        self.ifs_step_with(DEFAULT_SUBDIVISIONS)
    }

    /// Outer cover of the union over the plain maps of the images of every
    /// box. Each box is split into `sub^k` pieces; `F` is nondecreasing in
    /// every coordinate, so the image of a piece lies in the box spanned by
    /// the images of its lower and upper corners, and every cell meeting
    /// that span is marked.
    pub fn ifs_step_with(&self, sub: usize) -> Result<Self> {
        if sub == 0 {
            return Err(Error::InvalidParameter("subdivisions must be >= 1".into()));
        }
        let table = BranchTable::plain(self.k)?;
        let k = self.k;
        let total = self.base.pow(k as u32);
        let bits: Vec<AtomicU64> = (0..total.div_ceil(64)).map(|_| AtomicU64::new(0)).collect();
        let s = self.resolution;
        let two = T::lit(2.0);
        let step = s / T::from_usize_(sub);
        let last_cell = self.origin + self.base as i64 - 1;
        self.keys.par_iter().for_each(|&key| {
            let idx = self.index(key);
            // sqrt(2c) at the sub-piece edges, per axis
            let edges: Vec<Vec<T>> = idx
                .iter()
                .map(|&i| {
                    let lo = T::from_i64(i).unwrap() * s;
                    (0..=sub)
                        .map(|m| (two * (lo + step * T::from_usize_(m))).sqrt())
                        .collect()
                })
                .collect();
            let mut piece = vec![0usize; k];
            let mut lo_s = vec![T::zero(); k];
            let mut hi_s = vec![T::zero(); k];
            let mut ranges = vec![(0i64, 0i64); k];
            let mut cur = vec![0i64; k];
            loop {
                for a in 0..k {
                    lo_s[a] = edges[a][piece[a]];
                    hi_s[a] = edges[a][piece[a] + 1];
                }
                for b in 0..table.len() {
                    let lo = table.rates_from_sqrt(b, &lo_s);
                    let hi = table.rates_from_sqrt(b, &hi_s);
                    let mut empty = false;
                    for a in 0..k {
                        let first = (lo[a] / s).floor().to_i64().unwrap().max(self.origin);
                        let last = (hi[a] / s).floor().to_i64().unwrap().min(last_cell);
                        empty |= first > last;
                        ranges[a] = (first, last);
                        cur[a] = first;
                    }
                    if empty {
                        continue;
                    }
                    loop {
                        let key = self.key(&cur).expect("clamped to grid");
                        bits[(key / 64) as usize].fetch_or(1 << (key % 64), Ordering::Relaxed);
                        if !odometer(&mut cur, |a| ranges[a]) {
                            break;
                        }
                    }
                }
                if !odometer_usize(&mut piece, sub) {
                    break;
                }
            }
        });
        let keys: Vec<u64> = bits
            .iter()
            .enumerate()
            .flat_map(|(w, word)| {
                let v = word.load(Ordering::Relaxed);
                (0..64)
                    .filter(move |b| v & (1 << b) != 0)
                    .map(move |b| w as u64 * 64 + b)
            })
            .collect();
        Ok(Self {
            keys,
            ..self.clone_grid()
        })
    }

    fn clone_grid(&self) -> Self {
        Self {
            resolution: self.resolution,
            k: self.k,
            origin: self.origin,
            base: self.base,
            keys: Vec::new(),
        }
    }

    /// `n` steps of [`BoxSet::ifs_step`].
    pub fn iterate(&self, n: usize) -> Result<Self> {
        let mut cur = self.clone();
        for _ in 0..n {
            cur = cur.ifs_step()?;
        }
        Ok(cur)
    }

    /// CSV of box centers, header `c1,...,ck`.
    pub fn to_csv(&self) -> String {
        let mut out = (1..=self.k)
            .map(|i| format!("c{i}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for c in self.centers() {
            out.push_str(
                &c.iter()
                    .map(|v| fmt_f64(v.as_f64()))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out
    }
}

/// Advance a multi-index over `prod_a [lo_a, hi_a]`; false once exhausted.
fn odometer(cur: &mut [i64], range: impl Fn(usize) -> (i64, i64)) -> bool {
    for (a, c) in cur.iter_mut().enumerate() {
        let (lo, hi) = range(a);
        if *c < hi {
            *c += 1;
            return true;
        }
        *c = lo;
    }
    false
}

fn odometer_usize(cur: &mut [usize], n: usize) -> bool {
    for c in cur.iter_mut() {
        if *c + 1 < n {
            *c += 1;
            return true;
        }
        *c = 0;
    }
    false
}
