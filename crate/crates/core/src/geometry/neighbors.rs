use crate::error::{Error, Result};
use crate::kernel::LocationSet;

use super::kdtree::KdTree;

/// Rule for choosing the `m` neighbors of each location.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum NeighborPolicy {
    /// The `m` nearest locations overall.
    #[default]
    All,
    /// `ceil(m / 2)` nearest from the location's own pool (itself
    /// included) and `floor(m / 2)` nearest from the other pool. `pools[i]`
    /// is the pool of ordered position `i`.
    SplitPools { pools: Vec<bool> },
}

/// Neighbor sets `c(i)` for every ordered position, split into previously
/// ordered members `c_p(i)` and the rest `c_l(i)`, which starts with `i`.
///
/// Stored contiguously: the entries of position `i` are
/// `indices[offsets[i]..offsets[i + 1]]`, with `c_p(i)` first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborPlan {
    m: usize,
    offsets: Vec<usize>,
    n_prev: Vec<usize>,
    indices: Vec<usize>,
}

impl NeighborPlan {
    pub fn len(&self) -> usize {
        self.n_prev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_prev.is_empty()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `c_p(i)`: members ordered before `i`, nearest first.
    pub fn prev(&self, i: usize) -> &[usize] {
        let s = self.offsets[i];
        &self.indices[s..s + self.n_prev[i]]
    }

    /// `c_l(i)`: `i` followed by the later-ordered members, nearest first.
    pub fn later(&self, i: usize) -> &[usize] {
        &self.indices[self.offsets[i] + self.n_prev[i]..self.offsets[i + 1]]
    }

    /// `c(i)`: `i`, then `c_p(i)`, then the rest of `c_l(i)`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let later = self.later(i);
        let mut out = Vec::with_capacity(later.len() + self.n_prev[i]);
        out.push(later[0]);
        out.extend_from_slice(self.prev(i));
        out.extend_from_slice(&later[1..]);
        out
    }

    fn from_sets(m: usize, sets: Vec<Vec<usize>>) -> Self {
        let n = sets.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut n_prev = Vec::with_capacity(n);
        let mut indices = Vec::with_capacity(sets.iter().map(Vec::len).sum());
        offsets.push(0);
        for (i, set) in sets.into_iter().enumerate() {
            debug_assert_eq!(set[0], i);
            let prev: Vec<usize> = set.iter().copied().filter(|&j| j < i).collect();
            n_prev.push(prev.len());
            indices.extend(prev);
            indices.push(i);
            indices.extend(set.iter().copied().filter(|&j| j > i));
            offsets.push(indices.len());
        }
        Self { m, offsets, n_prev, indices }
    }
}

/// Builds `c(i)` for locations already permuted into sampling order.
///
/// Candidates come from all locations, earlier or later in the ordering.
/// Ties in distance go to the smaller ordered index.
pub fn build_neighbor_plan(
    locations_in_order: &LocationSet,
    m: usize,
    policy: &NeighborPolicy,
) -> Result<NeighborPlan> {
    if m < 1 {
        return Err(Error::InvalidParameter("neighbor count m must be >= 1".into()));
    }
    let n = locations_in_order.len();
    let (coords, dim) = locations_in_order.embedded();
    let sets = match policy {
        NeighborPolicy::All => {
            let tree = KdTree::from_coords(coords.clone(), dim);
            let k = m.min(n);
            (0..n)
                .map(|i| {
                    let q = &coords[i * dim..(i + 1) * dim];
                    with_self_first(i, tree.nearest_embedded(q, (k + 1).min(n)).iter().map(|nb| nb.index), k)
                })
                .collect()
        }
        NeighborPolicy::SplitPools { pools } => {
            if pools.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: pools.len() });
            }
            let members: [Vec<usize>; 2] =
                [(0..n).filter(|&i| !pools[i]).collect(), (0..n).filter(|&i| pools[i]).collect()];
            let trees: [KdTree; 2] = [0, 1].map(|p| {
                let sub: Vec<f64> =
                    members[p].iter().flat_map(|&i| coords[i * dim..(i + 1) * dim].iter().copied()).collect();
                KdTree::from_coords(sub, dim)
            });
            let own_quota = m.div_ceil(2);
            let other_quota = m / 2;
            (0..n)
                .map(|i| {
                    let q = &coords[i * dim..(i + 1) * dim];
                    let own = usize::from(pools[i]);
                    let other = 1 - own;
                    let own_k = own_quota.min(members[own].len());
                    let own_hits = trees[own]
                        .nearest_embedded(q, (own_k + 1).min(members[own].len()))
                        .into_iter()
                        .map(|nb| members[own][nb.index]);
                    let mut set = with_self_first(i, own_hits, own_k);
                    set.extend(
                        trees[other].nearest_embedded(q, other_quota).into_iter().map(|nb| members[other][nb.index]),
                    );
                    set
                })
                .collect()
        }
    };
    Ok(NeighborPlan::from_sets(m, sets))
}

/// `{i}` followed by the first `k - 1` candidates other than `i`.
fn with_self_first(i: usize, candidates: impl Iterator<Item = usize>, k: usize) -> Vec<usize> {
    let mut set = Vec::with_capacity(k);
    set.push(i);
    set.extend(candidates.filter(|&j| j != i).take(k.saturating_sub(1)));
    set
}
