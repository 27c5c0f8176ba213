//! Balanced 2-d tree over planar points.
//!
//! The tree is stored implicitly: `order` holds point indices arranged so that
//! the median of every sub-range `[lo, hi)` sits at `(lo + hi) / 2` and splits
//! the range on the axis chosen for that depth. Duplicate coordinates are kept.

use std::cmp::Ordering;

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 2]>,
    order: Vec<usize>,
}

impl KdTree {
    pub fn new(points: Vec<[f64; 2]>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(&points, &mut order, 0);
        KdTree { points, order }
    }

    pub fn from_points<I: IntoIterator<Item = [f64; 2]>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> [f64; 2] {
        self.points[index]
    }

    /// Indices of all points with Euclidean distance `<= radius` from `query`,
    /// in ascending index order.
    pub fn within_radius(&self, query: [f64; 2], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if radius < 0.0 || radius.is_nan() {
            return out;
        }
        let r2 = radius * radius;
        self.radius_rec(0, self.order.len(), 0, query, radius, r2, &mut out);
        out.sort_unstable();
        out
    }

    /// Nearest point to `query`, skipping `exclude`. Distance ties resolve to
    /// the smallest index.
    pub fn nearest_excluding(&self, query: [f64; 2], exclude: Option<usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.nearest_rec(0, self.order.len(), 0, query, exclude, &mut best);
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    pub fn nearest(&self, query: [f64; 2]) -> Option<(usize, f64)> {
        self.nearest_excluding(query, None)
    }

    /// The `k` nearest points as (index, distance), sorted by distance then index.
    pub fn k_nearest(&self, query: [f64; 2], k: usize) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.knn_rec(0, self.order.len(), 0, query, k, &mut heap);
        heap.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn radius_rec(
        &self,
        lo: usize,
        hi: usize,
        depth: usize,
        q: [f64; 2],
        radius: f64,
        r2: f64,
        out: &mut Vec<usize>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = self.points[idx];
        if dist2(p, q) <= r2 {
            out.push(idx);
        }
        let axis = depth % 2;
        let diff = q[axis] - p[axis];
        if diff <= radius {
            self.radius_rec(lo, mid, depth + 1, q, radius, r2, out);
        }
        if diff >= -radius {
            self.radius_rec(mid + 1, hi, depth + 1, q, radius, r2, out);
        }
    }

    fn nearest_rec(
        &self,
        lo: usize,
        hi: usize,
        depth: usize,
        q: [f64; 2],
        exclude: Option<usize>,
        best: &mut Option<(usize, f64)>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = self.points[idx];
        if Some(idx) != exclude {
            let d2 = dist2(p, q);
            let better = match *best {
                None => true,
                Some((bi, bd)) => d2 < bd || (d2 == bd && idx < bi),
            };
            if better {
                *best = Some((idx, d2));
            }
        }
        let axis = depth % 2;
        let diff = q[axis] - p[axis];
        let (first, second) = if diff <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_rec(first.0, first.1, depth + 1, q, exclude, best);
        // equality keeps tie candidates on the far side reachable
        if best.is_none_or(|(_, bd)| diff * diff <= bd) {
            self.nearest_rec(second.0, second.1, depth + 1, q, exclude, best);
        }
    }

    fn knn_rec(&self, lo: usize, hi: usize, depth: usize, q: [f64; 2], k: usize, heap: &mut Vec<(f64, usize)>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = self.points[idx];
        let d2 = dist2(p, q);
        let key = (d2, idx);
        if heap.len() < k || cmp_key(&key, heap.last().unwrap()) == Ordering::Less {
            let pos = heap
                .binary_search_by(|probe| cmp_key(probe, &key))
                .unwrap_or_else(|e| e);
            heap.insert(pos, key);
            heap.truncate(k);
        }
        let axis = depth % 2;
        let diff = q[axis] - p[axis];
        let (first, second) = if diff <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.knn_rec(first.0, first.1, depth + 1, q, k, heap);
        if heap.len() < k || diff * diff <= heap.last().unwrap().0 {
            self.knn_rec(second.0, second.1, depth + 1, q, k, heap);
        }
    }
}

fn cmp_key(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn build(points: &[[f64; 2]], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 2;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis]
            .total_cmp(&points[b][axis])
            .then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}

#[inline]
pub(crate) fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

#[inline]
pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    dist2(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_radius(points: &[[f64; 2]], q: [f64; 2], r: f64) -> Vec<usize> {
        (0..points.len()).filter(|&i| dist2(points[i], q) <= r * r).collect()
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<[f64; 2]> {
        (0..n)
            .map(|_| [rng.gen_range(0.0..extent), rng.gen_range(0.0..extent)])
            .collect()
    }

    #[test]
    fn empty_tree_answers_nothing() {
        let t = KdTree::new(vec![]);
        assert!(t.within_radius([0.0, 0.0], 10.0).is_empty());
        assert!(t.nearest([0.0, 0.0]).is_none());
        assert!(t.k_nearest([0.0, 0.0], 3).is_empty());
    }

    #[test]
    fn duplicates_are_kept() {
        let t = KdTree::new(vec![[1.0, 1.0]; 5]);
        assert_eq!(t.within_radius([1.0, 1.0], 0.0), vec![0, 1, 2, 3, 4]);
        assert_eq!(t.nearest_excluding([1.0, 1.0], Some(0)), Some((1, 0.0)));
    }

    #[test]
    fn radius_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let pts = random_points(&mut rng, 300, 1000.0);
            let t = KdTree::new(pts.clone());
            for _ in 0..20 {
                let q = [rng.gen_range(-100.0..1100.0), rng.gen_range(-100.0..1100.0)];
                let r = rng.gen_range(0.0..300.0);
                assert_eq!(t.within_radius(q, r), brute_radius(&pts, q, r));
            }
        }
    }

    #[test]
    fn knn_and_nearest_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // integer grid coordinates force many distance ties
        let pts: Vec<[f64; 2]> = (0..400)
            .map(|_| [rng.gen_range(0..20) as f64, rng.gen_range(0..20) as f64])
            .collect();
        let t = KdTree::new(pts.clone());
        for _ in 0..50 {
            let q = [rng.gen_range(0..20) as f64 + 0.5, rng.gen_range(0..20) as f64];
            let mut all: Vec<(f64, usize)> = pts.iter().enumerate().map(|(i, p)| (dist2(*p, q), i)).collect();
            all.sort_by(cmp_key);
            let k = rng.gen_range(1..15);
            let got: Vec<usize> = t.k_nearest(q, k).into_iter().map(|(i, _)| i).collect();
            let want: Vec<usize> = all.iter().take(k).map(|&(_, i)| i).collect();
            assert_eq!(got, want);
            assert_eq!(t.nearest(q).unwrap().0, all[0].1);
            let ex = all[0].1;
            assert_eq!(t.nearest_excluding(q, Some(ex)).unwrap().0, all[1].1);
        }
    }

    #[test]
    fn queries_are_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(&mut rng, 500, 500.0);
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.shuffle(&mut rng);
        let shuffled: Vec<[f64; 2]> = perm.iter().map(|&i| pts[i]).collect();
        let a = KdTree::new(pts.clone());
        let b = KdTree::new(shuffled);
        for _ in 0..50 {
            let q = [rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0)];
            let r = rng.gen_range(0.0..120.0);
            let mut ra: Vec<usize> = a.within_radius(q, r);
            let mut rb: Vec<usize> = b.within_radius(q, r).into_iter().map(|i| perm[i]).collect();
            ra.sort_unstable();
            rb.sort_unstable();
            assert_eq!(ra, rb);
            assert_eq!(a.nearest(q).unwrap().1, b.nearest(q).unwrap().1);
        }
    }

    proptest! {
        #[test]
        fn radius_query_is_exact(
            pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 0..120),
            qx in -60.0f64..60.0, qy in -60.0f64..60.0, r in 0.0f64..40.0,
        ) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let t = KdTree::new(pts.clone());
            prop_assert_eq!(t.within_radius([qx, qy], r), brute_radius(&pts, [qx, qy], r));
        }
    }
}
