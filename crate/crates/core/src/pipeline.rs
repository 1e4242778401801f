//! Dataset-level preprocessing: blur, Canny, quadtree, tokens, cache.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{CacheRecord, CacheWriter};
use crate::edge::detect_edges;
use crate::error::Result;
use crate::patch::{
    copatch_mask, extract_patches, normalize_sequence, ApfConfig, SequenceGeometry, TokenSequence,
};
use crate::quadtree::{build_quadtree, Quadtree};
use crate::raster::{EdgeMap, GrayImage, RasterImage};
use crate::scalar::Scalar;
use crate::stats::{sweep_row, ImageStats, StatsReport, SweepRow};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    /// Record id; defaults to the image path as written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl ManifestEntry {
    pub fn image_id(&self) -> String {
        self.id
            .clone()
            .unwrap_or_else(|| self.image.to_string_lossy().into_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub config: ApfConfig,
    /// Derive kernel and depth limit from each image's resolution.
    #[serde(default)]
    pub auto_schedule: bool,
    /// Directory relative entry paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, config: ApfConfig) -> Self {
        Self {
            entries,
            config,
            auto_schedule: false,
            base_dir: None,
        }
    }

    /// Reads a JSON manifest; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut manifest: Self = serde_json::from_reader(File::open(path)?)?;
        manifest.base_dir = path.parent().map(Path::to_path_buf);
        Ok(manifest)
    }

    pub fn count(&self) -> usize {
        self.entries.len()
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub edges: Duration,
    pub tree: Duration,
    pub tokens: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.edges + self.tree + self.tokens
    }
}

/// Everything produced for one image.
#[derive(Debug, Clone)]
pub struct Processed<T> {
    pub edges: EdgeMap,
    pub tree: Quadtree,
    pub sequence: TokenSequence<T>,
    pub mask: Option<TokenSequence<T>>,
    pub timings: StageTimings,
}

/// Runs one image (and optional mask) through the full pass.
pub fn process_image<T: Scalar>(
    img: &RasterImage,
    mask: Option<&GrayImage<T>>,
    cfg: &ApfConfig,
    seed: u64,
) -> Result<Processed<T>> {
    cfg.validate()?;
    let t0 = Instant::now();
    let edges = detect_edges::<T>(img, &cfg.edge_config())?;
    let t1 = Instant::now();
    let tree = build_quadtree(&edges, cfg.split_value, cfg.depth_limit);
    cfg.validate_for_grid(tree.grid_size)?;
    let t2 = Instant::now();

    let geometry = SequenceGeometry {
        patch_size: cfg.patch_size,
        grid_size: tree.grid_size,
        original_size: tree.original_size,
        channels: img.channels,
    };
    let tokens = extract_patches::<T>(img, &tree, cfg.patch_size)?;
    let sequence = normalize_sequence(tokens, geometry, cfg.seq_len, seed)?;
    let mask = match mask {
        None => None,
        Some(m) => {
            let tokens = copatch_mask(m, &tree, cfg.patch_size)?;
            let geometry = SequenceGeometry { channels: 1, ..geometry };
            // Same seed and count, so the same tokens survive as for the image.
            Some(normalize_sequence(tokens, geometry, cfg.seq_len, seed)?)
        }
    };
    let t3 = Instant::now();
    Ok(Processed {
        edges,
        tree,
        sequence,
        mask,
        timings: StageTimings {
            edges: t1 - t0,
            tree: t2 - t1,
            tokens: t3 - t2,
        },
    })
}

/// Seed for the `index`-th image of a dataset.
pub fn image_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageTiming {
    pub image_id: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub image: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub stats: StatsReport,
    pub timings: Vec<ImageTiming>,
    pub skipped: Vec<Skipped>,
    pub total_seconds: f64,
}

struct Outcome {
    record: CacheRecord<f32>,
    stats: ImageStats,
    seconds: f64,
}

fn run_entry(manifest: &DatasetManifest, index: usize) -> Result<Outcome> {
    let entry = &manifest.entries[index];
    let start = Instant::now();
    let img = RasterImage::load(&manifest.resolve(&entry.image))?;
    let mask = entry
        .mask
        .as_ref()
        .map(|m| GrayImage::<f32>::load(&manifest.resolve(m)))
        .transpose()?;
    let mut cfg = manifest.config;
    if manifest.auto_schedule {
        cfg = cfg.with_schedule(img.width.max(img.height));
    }
    let out = process_image(&img, mask.as_ref(), &cfg, image_seed(cfg.seed, index))?;
    let id = entry.image_id();
    Ok(Outcome {
        stats: ImageStats::from_tree(id.clone(), &out.tree),
        record: CacheRecord {
            image_id: id,
            sequence: out.sequence,
            mask: out.mask,
        },
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Processes every manifest entry and appends one record per image to
/// `writer`, in manifest order. Unreadable inputs are skipped and reported;
/// configuration errors abort the pass.
pub fn preprocess_into<W: Write>(
    manifest: &DatasetManifest,
    writer: &mut CacheWriter<W>,
) -> Result<DatasetReport> {
    manifest.config.validate()?;
    let start = Instant::now();
    let chunk = rayon::current_num_threads().max(1) * 2;
    let mut per_image = Vec::new();
    let mut timings = Vec::new();
    let mut skipped = Vec::new();
    let indices: Vec<usize> = (0..manifest.count()).collect();
    for block in indices.chunks(chunk) {
        let results: Vec<Result<Outcome>> =
            block.par_iter().map(|&i| run_entry(manifest, i)).collect();
        for (&i, res) in block.iter().zip(results) {
            match res {
                Ok(out) => {
                    writer.write_record(&out.record)?;
                    timings.push(ImageTiming {
                        image_id: out.record.image_id,
                        seconds: out.seconds,
                    });
                    per_image.push(out.stats);
                }
                Err(e) if e.is_config() => return Err(e),
                Err(e) => {
                    let image = manifest.entries[i].image.clone();
                    warn!("skipping {}: {e}", image.display());
                    skipped.push(Skipped {
                        image,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(DatasetReport {
        stats: StatsReport::from_images(per_image),
        timings,
        skipped,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

/// [`preprocess_into`] writing a fresh cache file at `out`.
pub fn preprocess_dataset(manifest: &DatasetManifest, out: &Path) -> Result<DatasetReport> {
    manifest.config.validate()?;
    let mut writer = CacheWriter::new(BufWriter::new(File::create(out)?))?;
    let report = preprocess_into(manifest, &mut writer)?;
    writer.finish()?;
    Ok(report)
}

/// Mean sequence length and mean patch size for each split value over one
/// corpus. Edges are computed once per image.
pub fn sweep_split_values(
    images: &[RasterImage],
    cfg: &ApfConfig,
    split_values: &[u64],
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let edges: Vec<EdgeMap> = images
        .par_iter()
        .map(|img| detect_edges::<f32>(img, &cfg.edge_config()))
        .collect::<Result<_>>()?;
    Ok(split_values
        .iter()
        .map(|&v| {
            let trees: Vec<Quadtree> = edges
                .iter()
                .map(|e| build_quadtree(e, v, cfg.depth_limit))
                .collect();
            sweep_row(v, &trees)
        })
        .collect())
}
