//! Edge-density quadtree over an [`EdgeMap`](crate::EdgeMap).

mod morton;
mod sat;
mod tree;
mod verify;

pub use morton::{morton_decode, morton_encode, MortonCode};
pub use sat::SummedAreaTable;
pub use tree::{build_quadtree, effective_depth, ordered_leaves, QuadNode, Quadtree, Region};
pub use verify::{verify_partition, Check, PartitionReport};
