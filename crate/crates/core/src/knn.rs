//! Exact k-nearest-neighbor queries over a static point set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Vector3;
use crate::scalar::Real;

/// `(squared distance, index)`, ordered lexicographically.
#[derive(Debug, Clone, Copy)]
struct Candidate<T> {
    d2: T,
    idx: u32,
}

impl<T: Real> PartialEq for Candidate<T> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<T: Real> Eq for Candidate<T> {}
impl<T: Real> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real> Ord for Candidate<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.d2
            .partial_cmp(&o.d2)
            .unwrap_or(Ordering::Equal)
            .then(self.idx.cmp(&o.idx))
    }
}

/// Balanced kd-tree stored as a permutation of point indices: the median of
/// each range is the node, left and right halves are the subtrees.
pub struct KdTree<'a, T> {
    points: &'a [Vector3<T>],
    order: Vec<u32>,
    axes: Vec<u8>,
}

impl<'a, T: Real> KdTree<'a, T> {
    pub fn build(points: &'a [Vector3<T>]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut axes = vec![0u8; points.len()];
        Self::split(points, &mut order, &mut axes, 0);
        Self {
            points,
            order,
            axes,
        }
    }

    fn split(points: &[Vector3<T>], order: &mut [u32], axes: &mut [u8], base: usize) {
        if order.len() <= 1 {
            return;
        }
        // widest spread axis
        let (mut lo, mut hi) = (points[order[0] as usize], points[order[0] as usize]);
        for &i in order.iter() {
            lo = lo.component_min(&points[i as usize]);
            hi = hi.component_max(&points[i as usize]);
        }
        let ext = hi - lo;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            points[a as usize][axis]
                .partial_cmp(&points[b as usize][axis])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        axes[base + mid] = axis as u8;
        let (left, rest) = order.split_at_mut(mid);
        let (laxes, raxes) = axes.split_at_mut(base + mid);
        Self::split(points, left, &mut laxes[base..], 0);
        Self::split(points, &mut rest[1..], &mut raxes[1..], 0);
    }

    /// The `k` points nearest `query` (excluding index `skip`), ascending by
    /// distance with ties resolved toward the lower index.
    pub fn nearest(&self, query: Vector3<T>, k: usize, skip: Option<u32>) -> Vec<u32> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, self.order.len(), query, k, skip, &mut heap);
        let mut out = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| c.idx).collect()
    }

    fn search(
        &self,
        start: usize,
        end: usize,
        q: Vector3<T>,
        k: usize,
        skip: Option<u32>,
        heap: &mut BinaryHeap<Candidate<T>>,
    ) {
        if start >= end {
            return;
        }
        let mid = start + (end - start) / 2;
        let idx = self.order[mid];
        let p = self.points[idx as usize];
        if skip != Some(idx) {
            let cand = Candidate {
                d2: p.distance_squared(&q),
                idx,
            };
            if heap.len() < k {
                heap.push(cand);
            } else if cand < *heap.peek().unwrap() {
                heap.pop();
                heap.push(cand);
            }
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff <= T::zero() {
            ((start, mid), (mid + 1, end))
        } else {
            ((mid + 1, end), (start, mid))
        };
        self.search(near.0, near.1, q, k, skip, heap);
        // equal distance may still win on index, so prune only when strictly farther
        if heap.len() < k || diff * diff <= heap.peek().unwrap().d2 {
            self.search(far.0, far.1, q, k, skip, heap);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[Vector3<f64>], i: usize, k: usize) -> Vec<u32> {
        let mut all: Vec<(f64, u32)> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, p)| {
                let d = *p - points[i];
                (d.x * d.x + d.y * d.y + d.z * d.z, j as u32)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        all.into_iter().take(k).map(|x| x.1).collect()
    }

    proptest! {
        #[test]
        fn matches_brute_force_on_lattice_ties(
            pts in prop::collection::vec(prop::array::uniform3(0i32..4), 5..80),
            k in 1usize..5,
        ) {
            // integer lattice forces many exact distance ties
            let points: Vec<Vector3<f64>> = pts.iter().map(|p| Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64)).collect();
            let k = k.min(points.len() - 1);
            let tree = KdTree::build(&points);
            for i in 0..points.len() {
                prop_assert_eq!(tree.nearest(points[i], k, Some(i as u32)), brute(&points, i, k));
            }
        }
    }
}
