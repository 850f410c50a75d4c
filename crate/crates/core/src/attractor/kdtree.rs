//! Static kd-tree for nearest-neighbour distances.

use crate::scalar::Real;

pub(crate) struct KdTree<'a, T> {
    points: &'a [Vec<T>],
    /// Permutation of point indices arranged as an implicit balanced tree.
    order: Vec<usize>,
    k: usize,
}

impl<'a, T: Real> KdTree<'a, T> {
    pub(crate) fn new(points: &'a [Vec<T>], k: usize) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(points, &mut order, 0, k);
        Self { points, order, k }
    }

    /// Squared distance from `q` to the nearest stored point.
    pub(crate) fn nearest_sq(&self, q: &[T]) -> T {
        let mut best = T::infinity();
        self.search(q, 0, self.order.len(), 0, &mut best);
        best
    }

    fn search(&self, q: &[T], lo: usize, hi: usize, depth: usize, best: &mut T) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = &self.points[self.order[mid]];
        let d = dist_sq(p, q);
        if d < *best {
            *best = d;
        }
        let axis = depth % self.k;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < T::zero() {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, depth + 1, best);
        if diff * diff < *best {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build<T: Real>(points: &[Vec<T>], idx: &mut [usize], depth: usize, k: usize) {
    if idx.len() <= 1 {
        return;
    }
    let axis = depth % k;
    let mid = idx.len() / 2;
    idx.select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis].partial_cmp(&points[b][axis]).unwrap()
    });
    let (left, right) = idx.split_at_mut(mid);
    build(points, left, depth + 1, k);
    build(points, &mut right[1..], depth + 1, k);
}

pub(crate) fn dist_sq<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}
