//! Chaos-game point clouds and Hausdorff distances.

use rand::Rng;
use rayon::prelude::*;

use super::kdtree::KdTree;
use super::BoxSet;
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::kernel::BranchTable;
use crate::mixture::ParamChain;
use crate::rng::RandomStream;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud<T> {
    pub k: usize,
    pub points: Vec<Vec<T>>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(k: usize, points: Vec<Vec<T>>) -> Result<Self> {
        if points.iter().any(|p| p.len() != k) {
            return Err(Error::InvalidInput(format!(
                "every point must have {k} coordinates"
            )));
        }
        if points
            .iter()
            .flatten()
            .any(|&x| !(x > T::zero() && x.is_finite()))
        {
            return Err(Error::InvalidInput(
                "point coordinates must be positive and finite".into(),
            ));
        }
        Ok(Self { k, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with header `x1,...,xk`.
    pub fn to_csv(&self) -> String {
        let mut out = (1..=self.k)
            .map(|i| format!("x{i}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for p in &self.points {
            out.push_str(
                &p.iter()
                    .map(|v| fmt_f64(v.as_f64()))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out
    }
}

/// Run the parameter chain from `(2, ..., 2)` and keep the states after `burn_in`.
pub fn chaos_game<T: Real>(
    k: usize,
    steps: usize,
    burn_in: usize,
    stream: &RandomStream,
) -> Result<PointCloud<T>> {
    let chain = ParamChain::plain(k)?;
    let start = vec![T::lit(2.0); k];
    let points = chain.run(&start, steps, burn_in, 1, &mut stream.rng())?;
    PointCloud::new(k, points)
}

/// Classical chaos game: from `(2, ..., 2)` apply a uniformly chosen plain
/// map at every step and keep the states after `burn_in`.
pub fn chaos_game_uniform<T: Real>(
    k: usize,
    steps: usize,
    burn_in: usize,
    stream: &RandomStream,
) -> Result<PointCloud<T>> {
    let table = BranchTable::plain(k)?;
    let mut rng = stream.rng();
    let mut cur = vec![T::lit(2.0); k];
    let mut points = Vec::with_capacity(steps.saturating_sub(burn_in));
    for s in 1..=steps {
        let b = rng.random_range(0..table.len());
        let sq: Vec<T> = cur.iter().map(|&c| (T::lit(2.0) * c).sqrt()).collect();
        cur = table.rates_from_sqrt(b, &sq);
        if s > burn_in {
            points.push(cur.clone());
        }
    }
    PointCloud::new(k, points)
}

/// A compact set given by representative points, each standing for a
/// neighbourhood of the given radius.
pub trait Compact<T> {
    fn dim(&self) -> usize;
    fn representatives(&self) -> Vec<Vec<T>>;
    fn radius(&self) -> T;
}

impl<T: Real> Compact<T> for PointCloud<T> {
    fn dim(&self) -> usize {
        self.k
    }

    fn representatives(&self) -> Vec<Vec<T>> {
        self.points.clone()
    }

    fn radius(&self) -> T {
        T::zero()
    }
}

impl<T: Real> Compact<T> for BoxSet<T> {
    fn dim(&self) -> usize {
        self.k()
    }

    fn representatives(&self) -> Vec<Vec<T>> {
        self.centers()
    }

    fn radius(&self) -> T {
        self.half_diagonal()
    }
}

fn directed<T: Real>(from: &[Vec<T>], to: &KdTree<'_, T>) -> T {
    from.par_iter()
        .map(|p| to.nearest_sq(p))
        .reduce(T::zero, T::max)
        .sqrt()
}

/// Hausdorff distance between the representative sets, enlarged by the
/// radius of each argument so it bounds the distance between the sets they cover.
pub fn hausdorff_distance<T: Real, A: Compact<T>, B: Compact<T>>(a: &A, b: &B) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let pa = a.representatives();
    let pb = b.representatives();
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::InvalidInput(
            "Hausdorff distance of an empty set".into(),
        ));
    }
    let ta = KdTree::new(&pa, a.dim());
    let tb = KdTree::new(&pb, b.dim());
    let d = directed(&pa, &tb).max(directed(&pb, &ta));
    Ok(d + a.radius() + b.radius())
}
