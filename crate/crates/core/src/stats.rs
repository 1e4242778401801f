//! Sequence-length and patch-size statistics.
//!
//! Aggregates are kept as integer sums so the report does not depend on the
//! order images are folded in.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cache::read_cache;
use crate::error::Result;
use crate::quadtree::{ordered_leaves, Quadtree};

/// Per-image contribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageStats {
    pub image_id: String,
    /// Real token count before padding or dropping.
    pub length: u64,
    /// Leaf side -> number of leaves.
    pub patch_sizes: BTreeMap<u32, u64>,
}

impl ImageStats {
    pub fn from_tree(image_id: impl Into<String>, tree: &Quadtree) -> Self {
        let mut patch_sizes = BTreeMap::new();
        for leaf in ordered_leaves(tree) {
            *patch_sizes.entry(leaf.region.size).or_insert(0) += 1;
        }
        Self {
            image_id: image_id.into(),
            length: tree.leaf_count() as u64,
            patch_sizes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Inclusive lower bound.
    pub lower: u64,
    /// Exclusive upper bound.
    pub upper: u64,
    pub count: u64,
}

/// One row of a split-value sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub split_value: u64,
    pub mean_patch_size: f64,
    pub mean_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub images: u64,
    pub mean_length: f64,
    pub min_length: u64,
    pub max_length: u64,
    /// Mean leaf side pooled over every leaf of every image.
    pub mean_patch_size: f64,
    /// Power-of-two buckets of per-image sequence length.
    pub length_histogram: Vec<HistogramBin>,
    pub patch_size_histogram: BTreeMap<u32, u64>,
    pub per_image: Vec<ImageStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
}

impl StatsReport {
    pub fn from_images(per_image: Vec<ImageStats>) -> Self {
        let images = per_image.len() as u64;
        let total_length: u64 = per_image.iter().map(|s| s.length).sum();
        let mut patch_size_histogram = BTreeMap::new();
        let mut buckets: BTreeMap<u32, u64> = BTreeMap::new();
        for s in &per_image {
            for (&side, &n) in &s.patch_sizes {
                *patch_size_histogram.entry(side).or_insert(0) += n;
            }
            *buckets.entry(bucket_of(s.length)).or_insert(0) += 1;
        }
        let leaves: u64 = patch_size_histogram.values().sum();
        let side_sum: u64 = patch_size_histogram
            .iter()
            .map(|(&side, &n)| side as u64 * n)
            .sum();
        let length_histogram = buckets
            .into_iter()
            .map(|(k, count)| {
                let (lower, upper) = if k == 0 { (0, 1) } else { (1 << (k - 1), 1 << k) };
                HistogramBin { lower, upper, count }
            })
            .collect();
        Self {
            images,
            mean_length: ratio(total_length, images),
            min_length: per_image.iter().map(|s| s.length).min().unwrap_or(0),
            max_length: per_image.iter().map(|s| s.length).max().unwrap_or(0),
            mean_patch_size: ratio(side_sum, leaves),
            length_histogram,
            patch_size_histogram,
            per_image,
            sweep: Vec::new(),
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// 0 for length 0, else `floor(log2(len)) + 1`.
fn bucket_of(len: u64) -> u32 {
    64 - len.leading_zeros()
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Statistics of a cache file. Lengths come from the recorded pre-drop leaf
/// counts; patch sizes only from the tokens that survived dropping.
pub fn stats_report(cache: &Path) -> Result<StatsReport> {
    let records = read_cache::<f32>(cache)?;
    let per_image = records
        .iter()
        .map(|rec| {
            let mut patch_sizes = BTreeMap::new();
            for t in rec.sequence.real_tokens() {
                *patch_sizes.entry(t.size).or_insert(0) += 1;
            }
            ImageStats {
                image_id: rec.image_id.clone(),
                length: rec.sequence.leaf_count as u64,
                patch_sizes,
            }
        })
        .collect();
    Ok(StatsReport::from_images(per_image))
}

/// Mean length and mean patch size per split value, for trees over the same
/// corpus that differ only in `v`.
pub fn sweep_row(split_value: u64, trees: &[Quadtree]) -> SweepRow {
    let stats: Vec<ImageStats> = trees
        .iter()
        .map(|t| ImageStats::from_tree(String::new(), t))
        .collect();
    let report = StatsReport::from_images(stats);
    SweepRow {
        split_value,
        mean_patch_size: report.mean_patch_size,
        mean_length: report.mean_length,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadtree::build_quadtree;
    use crate::raster::EdgeMap;

    fn image(id: &str, length: u64, side: u32) -> ImageStats {
        ImageStats {
            image_id: id.into(),
            length,
            patch_sizes: BTreeMap::from([(side, length)]),
        }
    }

    #[test]
    fn single_root_leaf() {
        let tree = build_quadtree(&EdgeMap::empty(64, 64), 0, 9);
        let r = StatsReport::from_images(vec![ImageStats::from_tree("a", &tree)]);
        assert_eq!(r.mean_length, 1.0);
        assert_eq!(r.mean_patch_size, 64.0);
    }

    #[test]
    fn mean_of_two() {
        let r = StatsReport::from_images(vec![image("a", 100, 4), image("b", 300, 2)]);
        assert_eq!(r.mean_length, 200.0);
        assert_eq!((r.min_length, r.max_length), (100, 300));
        assert_eq!(r.mean_patch_size, (400.0 + 600.0) / 400.0);
        assert_eq!(
            r.length_histogram,
            vec![
                HistogramBin { lower: 64, upper: 128, count: 1 },
                HistogramBin { lower: 256, upper: 512, count: 1 },
            ]
        );
    }

    #[test]
    fn empty_report() {
        let r = StatsReport::from_images(Vec::new());
        assert_eq!((r.images, r.mean_length, r.mean_patch_size), (0, 0.0, 0.0));
        assert!(r.length_histogram.is_empty());
    }

    #[test]
    fn aggregates_ignore_order() {
        let a = vec![image("a", 7, 2), image("b", 90, 8), image("c", 33, 4)];
        let mut b = a.clone();
        b.reverse();
        let (ra, rb) = (StatsReport::from_images(a), StatsReport::from_images(b));
        assert_eq!(ra.mean_length.to_bits(), rb.mean_length.to_bits());
        assert_eq!(ra.mean_patch_size.to_bits(), rb.mean_patch_size.to_bits());
        assert_eq!(ra.length_histogram, rb.length_histogram);
        assert_eq!(ra.patch_size_histogram, rb.patch_size_histogram);
    }

    #[test]
    fn json_keys_are_stable() {
        let r = StatsReport::from_images(vec![image("a", 5, 2)]);
        let j1 = r.to_json().unwrap();
        let j2 = StatsReport::from_images(vec![image("a", 5, 2)]).to_json().unwrap();
        assert_eq!(j1, j2);
        let first_keys: Vec<&str> = j1
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        assert_eq!(
            first_keys,
            [
                "images",
                "mean_length",
                "min_length",
                "max_length",
                "mean_patch_size",
                "length_histogram",
                "patch_size_histogram",
                "per_image"
            ]
        );
    }
}
