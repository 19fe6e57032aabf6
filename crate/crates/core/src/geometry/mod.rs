//! Orderings and nearest-neighbor sets.

mod kdtree;
mod neighbors;
mod ordering;

pub use kdtree::{knn_brute_force, knn_query, KdTree, Neighbor};
pub use neighbors::{build_neighbor_plan, NeighborPlan, NeighborPolicy};
pub use ordering::{order, order_coordinate, order_maximin, order_random, Ordering, OrderingKind};
