//! Static kd-tree with exact k-nearest-neighbor queries.
//!
//! Results are ordered by `(squared distance, index)`, so equidistant
//! points come back smallest index first, identical to a brute-force scan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::kernel::{squared_euclidean, LocationSet};

const LEAF_SIZE: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.index.cmp(&other.index))
    }
}

#[derive(Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// kd-tree over the metric embedding of a [`LocationSet`].
#[derive(Debug)]
pub struct KdTree {
    coords: Vec<f64>,
    dim: usize,
    /// Point indices, permuted so each leaf owns a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// One neighbor returned by a query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl KdTree {
    pub fn new(locations: &LocationSet) -> Self {
        let (coords, dim) = locations.embedded();
        Self::from_coords(coords, dim)
    }

    pub(crate) fn from_coords(coords: Vec<f64>, dim: usize) -> Self {
        let n = coords.len() / dim;
        let mut tree = Self { coords, dim, order: (0..n).collect(), nodes: Vec::new() };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split along the axis of largest spread
        let mut axis = 0;
        let mut best = -1.0;
        for d in 0..self.dim {
            let (lo, hi) = self.order[start..end].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let c = self.coords[i * self.dim + d];
                (lo.min(c), hi.max(c))
            });
            if hi - lo > best {
                best = hi - lo;
                axis = d;
            }
        }
        let mid = start + (end - start) / 2;
        {
            let (coords, dim) = (&self.coords, self.dim);
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                coords[a * dim + axis].total_cmp(&coords[b * dim + axis])
            });
        }
        let value = self.coords[self.order[mid] * self.dim + axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// The `k` nearest points to `query` (given in embedded coordinates),
    /// nearest first.
    pub(crate) fn nearest_embedded(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        let k = k.min(self.len());
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort_unstable();
        out.into_iter().map(|c| Neighbor { index: c.index, distance: c.dist2.sqrt() }).collect()
    }

    fn search(&self, node: usize, query: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = Candidate { dist2: squared_euclidean(query, self.point(i)), index: i };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, k, heap);
                let plane = diff * diff;
                // `<=` keeps equidistant points reachable for the index tie-break
                if heap.len() < k || plane <= heap.peek().expect("heap is full").dist2 {
                    self.search(far, query, k, heap);
                }
            }
        }
    }
}

/// Exact `k` nearest neighbors of `query` among `locations`.
pub fn knn_query(tree: &KdTree, locations: &LocationSet, query: &[f64], k: usize) -> Result<Vec<Neighbor>> {
    if tree.is_empty() {
        return Err(Error::Empty("location set"));
    }
    if query.len() != locations.dim() {
        return Err(Error::DimensionMismatch { expected: locations.dim(), found: query.len() });
    }
    let single = LocationSet::from_flat(query.to_vec(), locations.dim(), locations.metric())?;
    let (q, _) = single.embedded();
    Ok(tree.nearest_embedded(&q, k))
}

/// Brute-force reference for [`knn_query`].
pub fn knn_brute_force(locations: &LocationSet, query: &[f64], k: usize) -> Vec<Neighbor> {
    let (coords, dim) = locations.embedded();
    let single =
        LocationSet::from_flat(query.to_vec(), locations.dim(), locations.metric()).expect("query dimension matches");
    let (q, _) = single.embedded();
    let mut all: Vec<Candidate> = coords
        .chunks_exact(dim)
        .enumerate()
        .map(|(index, p)| Candidate { dist2: squared_euclidean(&q, p), index })
        .collect();
    all.sort_unstable();
    all.truncate(k);
    all.into_iter().map(|c| Neighbor { index: c.index, distance: c.dist2.sqrt() }).collect()
}
