//! Edge-driven quadtree patching for high-resolution images.
//!
//! An image is smoothed, run through a Canny detector, and the resulting edge
//! map drives a quadtree: regions holding more than `v` edge pixels split into
//! four quadrants until the depth limit is reached. The leaves, visited in
//! Morton Z-order, become mixed-scale patches that are box-reduced to a common
//! side `P_m` and then padded or randomly dropped to a fixed length `L`. The
//! result is an ordinary token sequence that any transformer encoder accepts.
//!
//! Float-valued stages are generic over [`Scalar`]; the aliases below pin the
//! common `f32` and `f64` instantiations.

pub mod cache;
pub mod cost;
pub mod edge;
pub mod error;
pub mod overlay;
pub mod patch;
pub mod pipeline;
pub mod quadtree;
pub mod raster;
pub mod scalar;
pub mod stats;

pub use cache::{CacheReader, CacheRecord, CacheWriter};
pub use cost::{attention_cost, CostEstimate};
pub use edge::{canny, gaussian_blur, resolution_schedule, to_grayscale, EdgeConfig};
pub use error::{Error, Result};
pub use overlay::render_overlay;
pub use patch::{
    copatch_mask, dice_score, extract_patches, normalize_sequence, reconstruct_mask,
    uniform_grid_patch, ApfConfig, PatchToken, SequenceGeometry, TokenSequence,
};
pub use pipeline::{preprocess_dataset, process_image, DatasetManifest, ManifestEntry};
pub use quadtree::{
    build_quadtree, morton_encode, ordered_leaves, verify_partition, MortonCode, QuadNode,
    Quadtree, Region, SummedAreaTable,
};
pub use raster::{EdgeMap, GrayImage, RasterImage};
pub use scalar::Scalar;
pub use stats::{stats_report, StatsReport};

pub type Gray32 = GrayImage<f32>;
pub type Gray64 = GrayImage<f64>;
pub type Token32 = PatchToken<f32>;
pub type Token64 = PatchToken<f64>;
pub type Sequence32 = TokenSequence<f32>;
pub type Sequence64 = TokenSequence<f64>;
pub type Record32 = CacheRecord<f32>;
pub type Record64 = CacheRecord<f64>;
