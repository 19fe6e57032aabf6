use rand::seq::SliceRandom;

use crate::kernel::{squared_euclidean, LocationSet};
use crate::rng::{substream, Domain};

/// How locations are ordered before sequential sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OrderingKind {
    /// Lexicographic by coordinate; the natural choice on grids.
    Coordinate,
    /// Uniformly random permutation drawn from the seed.
    #[default]
    Random,
    /// Greedy maximum-minimum distance ordering.
    Maximin,
    /// Input order.
    Given,
}

/// Permutation mapping ordered position to original index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ordering {
    permutation: Vec<usize>,
    kind: OrderingKind,
}

impl Ordering {
    /// Wraps a permutation; `None` if it is not a bijection on `0..n`.
    pub fn from_permutation(permutation: Vec<usize>, kind: OrderingKind) -> Option<Self> {
        let n = permutation.len();
        let mut seen = vec![false; n];
        for &p in &permutation {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return None;
            }
        }
        Some(Self { permutation, kind })
    }

    pub fn identity(n: usize) -> Self {
        Self { permutation: (0..n).collect(), kind: OrderingKind::Given }
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn kind(&self) -> OrderingKind {
        self.kind
    }

    /// Original index at each ordered position.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Ordered position of each original index.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.permutation.len()];
        for (pos, &orig) in self.permutation.iter().enumerate() {
            inv[orig] = pos;
        }
        inv
    }
}

/// Lexicographic ordering, first coordinate as primary key, original index
/// as the final tie-break.
pub fn order_coordinate(locations: &LocationSet) -> Ordering {
    let mut perm: Vec<usize> = (0..locations.len()).collect();
    perm.sort_by(|&a, &b| {
        let (pa, pb) = (locations.point(a), locations.point(b));
        pa.iter()
            .zip(pb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ordering { permutation: perm, kind: OrderingKind::Coordinate }
}

pub fn order_random(n: usize, seed: u64) -> Ordering {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut substream(seed, Domain::Ordering, 0));
    Ordering { permutation: perm, kind: OrderingKind::Random }
}

/// Greedy maximin ordering.
///
/// The first point is the one nearest the coordinate-wise centroid; each
/// later point maximizes its minimum distance to the points already
/// ordered. Ties go to the smallest original index. Quadratic time with an
/// incrementally updated minimum-distance array.
pub fn order_maximin(locations: &LocationSet) -> Ordering {
    let (coords, dim) = locations.embedded();
    let n = coords.len() / dim;
    let point = |i: usize| &coords[i * dim..(i + 1) * dim];
    let mut perm = Vec::with_capacity(n);
    if n == 0 {
        return Ordering { permutation: perm, kind: OrderingKind::Maximin };
    }
    let mut centroid = vec![0.0; dim];
    for p in coords.chunks_exact(dim) {
        for (c, x) in centroid.iter_mut().zip(p) {
            *c += x;
        }
    }
    for c in &mut centroid {
        *c /= n as f64;
    }
    let first = (0..n)
        .map(|i| (squared_euclidean(point(i), &centroid), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
        .expect("nonempty");
    let mut placed = vec![false; n];
    let mut min_d2 = vec![f64::INFINITY; n];
    let mut current = first;
    for _ in 0..n {
        perm.push(current);
        placed[current] = true;
        let cp = point(current);
        let mut next = None;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            if placed[i] {
                continue;
            }
            let d = squared_euclidean(point(i), cp);
            if d < min_d2[i] {
                min_d2[i] = d;
            }
            // strict comparison keeps the smallest index on ties
            if min_d2[i] > best {
                best = min_d2[i];
                next = Some(i);
            }
        }
        match next {
            Some(i) => current = i,
            None => break,
        }
    }
    Ordering { permutation: perm, kind: OrderingKind::Maximin }
}

/// Dispatches on `kind`; `seed` is used only by random orderings.
pub fn order(locations: &LocationSet, kind: OrderingKind, seed: u64) -> Ordering {
    match kind {
        OrderingKind::Coordinate => order_coordinate(locations),
        OrderingKind::Random => order_random(locations.len(), seed),
        OrderingKind::Maximin => order_maximin(locations),
        OrderingKind::Given => Ordering::identity(locations.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Metric;
    use crate::rng::{substream, Domain};
    use proptest::prelude::*;
    use rand::Rng;

    fn line(xs: &[f64]) -> LocationSet {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        LocationSet::new(&pts, Metric::Euclidean).unwrap()
    }

    /// Replays the greedy rule by exhaustive search at each step.
    fn maximin_oracle(locs: &LocationSet) -> Vec<usize> {
        let n = locs.len();
        let dim = locs.dim();
        let mut centroid = vec![0.0; dim];
        for p in locs.points() {
            for k in 0..dim {
                centroid[k] += p[k] / n as f64;
            }
        }
        let mut first = 0;
        for i in 1..n {
            let di: f64 = (0..dim).map(|k| (locs.point(i)[k] - centroid[k]).powi(2)).sum();
            let df: f64 = (0..dim).map(|k| (locs.point(first)[k] - centroid[k]).powi(2)).sum();
            if di < df {
                first = i;
            }
        }
        let mut out = vec![first];
        while out.len() < n {
            let mut best = None;
            let mut best_d = -1.0;
            for i in 0..n {
                if out.contains(&i) {
                    continue;
                }
                let d = out.iter().map(|&j| locs.distance(i, j)).fold(f64::INFINITY, f64::min);
                if d > best_d {
                    best_d = d;
                    best = Some(i);
                }
            }
            out.push(best.unwrap());
        }
        out
    }

    #[test]
    fn coordinate_examples() {
        let pts = vec![vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]];
        let locs = LocationSet::new(&pts, Metric::Euclidean).unwrap();
        assert_eq!(order_coordinate(&locs).permutation(), &[3, 1, 2, 0]);
        assert_eq!(order_coordinate(&line(&[0.0, 0.1, 0.2])).permutation(), &[0, 1, 2]);
        assert_eq!(order_coordinate(&line(&[0.5, 0.1, 0.5])).permutation(), &[1, 0, 2]);
    }

    #[test]
    fn maximin_collinear_example() {
        let locs = line(&[0.0, 0.1, 0.5, 1.0]);
        let o = order_maximin(&locs);
        assert_eq!(&o.permutation()[..2], &[2, 0]);
        assert_eq!(o.permutation(), maximin_oracle(&locs).as_slice());
        assert_eq!(order_maximin(&line(&[0.3])).permutation(), &[0]);
    }

    #[test]
    fn maximin_square_corners() {
        let pts = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let locs = LocationSet::new(&pts, Metric::Euclidean).unwrap();
        let o = order_maximin(&locs);
        // all corners tie with the centroid; index 0 first, then its opposite
        assert_eq!(o.permutation()[0], 0);
        assert_eq!(o.permutation()[1], 3);
        assert_eq!(o.permutation(), maximin_oracle(&locs).as_slice());
    }

    #[test]
    fn maximin_matches_exhaustive_replay() {
        let mut rng = substream(5, Domain::Benchmark, 0);
        for _ in 0..20 {
            let n = rng.random_range(2..60);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
            let locs = LocationSet::new(&pts, Metric::Euclidean).unwrap();
            assert_eq!(order_maximin(&locs).permutation(), maximin_oracle(&locs).as_slice());
        }
    }

    #[test]
    fn random_ordering_is_seeded() {
        assert_eq!(order_random(50, 3), order_random(50, 3));
        assert_ne!(order_random(50, 3), order_random(50, 4));
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Ordering::from_permutation(vec![0, 0, 1], OrderingKind::Given).is_none());
        assert!(Ordering::from_permutation(vec![0, 3, 1], OrderingKind::Given).is_none());
        let o = Ordering::from_permutation(vec![2, 0, 1], OrderingKind::Given).unwrap();
        assert_eq!(o.inverse(), vec![1, 2, 0]);
    }

    proptest! {
        #[test]
        fn orderings_are_permutations(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..80), seed in any::<u64>()) {
            let points: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
            let locs = LocationSet::new(&points, Metric::Euclidean).unwrap();
            for kind in [OrderingKind::Coordinate, OrderingKind::Random, OrderingKind::Maximin, OrderingKind::Given] {
                let o = order(&locs, kind, seed);
                prop_assert!(Ordering::from_permutation(o.permutation().to_vec(), kind).is_some());
            }
        }

        #[test]
        fn maximin_property_holds(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..60)) {
            let points: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
            let locs = LocationSet::new(&points, Metric::Euclidean).unwrap();
            let perm = order_maximin(&locs).permutation().to_vec();
            for j in 1..perm.len() {
                let min_to_prev = |c: usize| perm[..j].iter().map(|&p| locs.distance(c, p)).fold(f64::INFINITY, f64::min);
                let chosen = min_to_prev(perm[j]);
                for &c in &perm[j..] {
                    prop_assert!(chosen >= min_to_prev(c));
                }
            }
        }
    }
}
