//! Leaves to fixed-length token sequences, and back to masks.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::edge::{resolution_schedule, EdgeConfig};
use crate::error::{Error, Result};
use crate::quadtree::{morton_encode, ordered_leaves, effective_depth, MortonCode, Quadtree};
use crate::raster::{GrayImage, RasterImage};
use crate::scalar::Scalar;

/// All tunables of the preprocessing pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApfConfig {
    /// Largest edge count a leaf may hold (`v`).
    pub split_value: u64,
    /// Maximum tree depth (`H`), clamped to the 2×2 floor.
    pub depth_limit: u32,
    /// Gaussian kernel side (`k`).
    pub kernel: u32,
    pub t_low: f64,
    pub t_high: f64,
    /// Token side `P_m`.
    pub patch_size: u32,
    /// Sequence length `L`.
    pub seq_len: u32,
    pub seed: u64,
}

impl Default for ApfConfig {
    fn default() -> Self {
        Self {
            split_value: 20,
            depth_limit: 9,
            kernel: 3,
            t_low: 100.0,
            t_high: 200.0,
            patch_size: 2,
            seq_len: 512,
            seed: 0,
        }
    }
}

impl ApfConfig {
    pub fn edge_config(&self) -> EdgeConfig {
        EdgeConfig {
            kernel: self.kernel,
            sigma: 0.0,
            t_low: self.t_low,
            t_high: self.t_high,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.edge_config().validate()?;
        if self.patch_size < 2 || !self.patch_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "patch size {} must be a power of two >= 2",
                self.patch_size
            )));
        }
        if self.seq_len == 0 {
            return Err(Error::Config("sequence length must be >= 1".into()));
        }
        Ok(())
    }

    /// Kernel and depth limit taken from the per-resolution schedule for an
    /// image whose longer side is `side`.
    pub fn with_schedule(self, side: u32) -> Self {
        let (kernel, depth_limit) = resolution_schedule(side.max(1).next_power_of_two() as u64);
        Self {
            kernel,
            depth_limit,
            ..self
        }
    }

    /// `P_m` may not exceed the smallest leaf the tree can produce.
    pub fn validate_for_grid(&self, grid_size: u32) -> Result<()> {
        let min_leaf = grid_size >> effective_depth(grid_size, self.depth_limit);
        if self.patch_size > min_leaf {
            return Err(Error::Config(format!(
                "patch size {} exceeds the minimum leaf side {min_leaf} of a {grid_size}² grid at depth limit {}",
                self.patch_size, self.depth_limit
            )));
        }
        Ok(())
    }
}

/// One resampled leaf (or a pad placeholder).
#[derive(Debug, Clone, PartialEq)]
pub struct PatchToken<T> {
    pub morton: MortonCode,
    /// Top-left corner in the padded grid.
    pub origin: (u32, u32),
    /// Side of the source leaf; `0` for pads.
    pub size: u32,
    /// `P_m × P_m × channels`, row-major, channels interleaved.
    pub pixels: Vec<T>,
    pub is_pad: bool,
}

impl<T: Scalar> PatchToken<T> {
    pub fn pad(patch_size: u32, channels: u8) -> Self {
        Self {
            morton: MortonCode(0),
            origin: (0, 0),
            size: 0,
            pixels: vec![T::zero(); (patch_size * patch_size) as usize * channels as usize],
            is_pad: true,
        }
    }
}

/// Layout shared by every token of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceGeometry {
    pub patch_size: u32,
    pub grid_size: u32,
    pub original_size: (u32, u32),
    pub channels: u8,
}

impl SequenceGeometry {
    pub fn token_len(&self) -> usize {
        (self.patch_size * self.patch_size) as usize * self.channels as usize
    }
}

/// Exactly `L` tokens: real tokens in Morton order, then pads.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence<T> {
    pub tokens: Vec<PatchToken<T>>,
    pub geometry: SequenceGeometry,
    pub seed: u64,
    /// Real tokens before padding or dropping.
    pub leaf_count: u32,
}

impl<T: Scalar> TokenSequence<T> {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn real_tokens(&self) -> impl Iterator<Item = &PatchToken<T>> {
        self.tokens.iter().filter(|t| !t.is_pad)
    }

    pub fn real_count(&self) -> usize {
        self.real_tokens().count()
    }

    /// Real tokens discarded to fit `L`.
    pub fn dropped(&self) -> u32 {
        self.leaf_count.saturating_sub(self.tokens.len() as u32)
    }

    /// Copy with every intensity snapped to the nearest 8-bit level, the
    /// precision stored in a cache file.
    pub fn quantized(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.tokens {
            for p in &mut t.pixels {
                *p = T::from_u8_unit(p.to_u8_unit());
            }
        }
        out
    }
}

/// Box-reduces a `side × side × channels` block by repeated 2×2 averaging.
///
/// Pairwise sums keep constant blocks exact.
fn box_reduce<T: Scalar>(mut block: Vec<T>, mut side: usize, target: usize, channels: usize) -> Vec<T> {
    let quarter = T::lit(0.25);
    while side > target {
        let half = side / 2;
        let mut next = vec![T::zero(); half * half * channels];
        for y in 0..half {
            for x in 0..half {
                for c in 0..channels {
                    let at = |xx: usize, yy: usize| block[(yy * side + xx) * channels + c];
                    let top = at(2 * x, 2 * y) + at(2 * x + 1, 2 * y);
                    let bottom = at(2 * x, 2 * y + 1) + at(2 * x + 1, 2 * y + 1);
                    next[(y * half + x) * channels + c] = (top + bottom) * quarter;
                }
            }
        }
        block = next;
        side = half;
    }
    block
}

fn extract_with<T: Scalar>(
    tree: &Quadtree,
    patch_size: u32,
    channels: u8,
    sample: impl Fn(u32, u32, usize) -> T,
) -> Result<Vec<PatchToken<T>>> {
    if patch_size == 0 || !patch_size.is_power_of_two() {
        return Err(Error::Config(format!(
            "patch size {patch_size} must be a power of two"
        )));
    }
    let (w, h) = tree.original_size;
    let ch = channels as usize;
    ordered_leaves(tree)
        .into_iter()
        .map(|leaf| {
            let r = leaf.region;
            if r.size < patch_size {
                return Err(Error::LeafTooSmall {
                    leaf: r.size,
                    x: r.x,
                    y: r.y,
                    patch: patch_size,
                });
            }
            let side = r.size as usize;
            let mut block = vec![T::zero(); side * side * ch];
            for dy in 0..r.size {
                let y = r.y + dy;
                if y >= h {
                    break;
                }
                for dx in 0..r.size {
                    let x = r.x + dx;
                    if x >= w {
                        break;
                    }
                    let base = (dy as usize * side + dx as usize) * ch;
                    for c in 0..ch {
                        block[base + c] = sample(x, y, c);
                    }
                }
            }
            Ok(PatchToken {
                morton: tree.morton_of(leaf),
                origin: (r.x, r.y),
                size: r.size,
                pixels: box_reduce(block, side, patch_size as usize, ch),
                is_pad: false,
            })
        })
        .collect()
}

/// Resamples every leaf of `tree`, in Morton order, to `patch_size²` pixels.
/// Padding beyond the original image contributes zeros.
pub fn extract_patches<T: Scalar>(
    img: &RasterImage,
    tree: &Quadtree,
    patch_size: u32,
) -> Result<Vec<PatchToken<T>>> {
    if img.dimensions() != tree.original_size {
        return Err(Error::DimensionMismatch {
            expected: tree.original_size,
            actual: img.dimensions(),
        });
    }
    let ch = img.channels as usize;
    let width = img.width as usize;
    extract_with(tree, patch_size, img.channels, |x, y, c| {
        T::from_u8_unit(img.data[(y as usize * width + x as usize) * ch + c])
    })
}

/// Same geometry as [`extract_patches`], applied to a single-channel mask so
/// image and mask tokens correspond index by index.
pub fn copatch_mask<T: Scalar>(
    mask: &GrayImage<T>,
    tree: &Quadtree,
    patch_size: u32,
) -> Result<Vec<PatchToken<T>>> {
    if mask.dimensions() != tree.original_size {
        return Err(Error::DimensionMismatch {
            expected: tree.original_size,
            actual: mask.dimensions(),
        });
    }
    extract_with(tree, patch_size, 1, |x, y, _| mask.get(x, y))
}

/// Pads with zero tokens, or drops a seeded uniform random subset, so the
/// result holds exactly `seq_len` tokens. Surviving tokens keep their order.
pub fn normalize_sequence<T: Scalar>(
    tokens: Vec<PatchToken<T>>,
    geometry: SequenceGeometry,
    seq_len: u32,
    seed: u64,
) -> Result<TokenSequence<T>> {
    if seq_len == 0 {
        return Err(Error::Config("sequence length must be >= 1".into()));
    }
    if tokens.iter().any(|t| t.is_pad) {
        return Err(Error::Config("cannot normalize a sequence that already holds pads".into()));
    }
    let count = tokens.len();
    let target = seq_len as usize;
    let tokens = if count > target {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = index::sample(&mut rng, count, target).into_vec();
        keep.sort_unstable();
        let mut slots: Vec<Option<PatchToken<T>>> = tokens.into_iter().map(Some).collect();
        keep.into_iter()
            .map(|i| slots[i].take().expect("distinct indices"))
            .collect()
    } else {
        let mut tokens = tokens;
        tokens.resize_with(target, || PatchToken::pad(geometry.patch_size, geometry.channels));
        tokens
    };
    Ok(TokenSequence {
        tokens,
        geometry,
        seed,
        leaf_count: count as u32,
    })
}

/// Standard ViT tiling: row-major, non-overlapping `patch × patch` tiles of
/// the zero-padded square, without resampling.
pub fn uniform_grid_patch<T: Scalar>(img: &RasterImage, patch: u32) -> Result<TokenSequence<T>> {
    let side = img.width.max(img.height);
    let grid = side.next_power_of_two();
    if patch == 0 || patch > side || !grid.is_multiple_of(patch) {
        return Err(Error::Config(format!(
            "patch {patch} must divide the padded side {grid} and not exceed the image side {side}"
        )));
    }
    let per_side = grid / patch;
    let ch = img.channels as usize;
    let width = img.width as usize;
    let mut tokens = Vec::with_capacity((per_side * per_side) as usize);
    for ty in 0..per_side {
        for tx in 0..per_side {
            let (ox, oy) = (tx * patch, ty * patch);
            let mut pixels = vec![T::zero(); (patch * patch) as usize * ch];
            for dy in 0..patch {
                let y = oy + dy;
                if y >= img.height {
                    break;
                }
                for dx in 0..patch {
                    let x = ox + dx;
                    if x >= img.width {
                        break;
                    }
                    let src = (y as usize * width + x as usize) * ch;
                    let dst = (dy * patch + dx) as usize * ch;
                    for c in 0..ch {
                        pixels[dst + c] = T::from_u8_unit(img.data[src + c]);
                    }
                }
            }
            tokens.push(PatchToken {
                morton: morton_encode(tx, ty),
                origin: (ox, oy),
                size: patch,
                pixels,
                is_pad: false,
            });
        }
    }
    let n = tokens.len() as u32;
    Ok(TokenSequence {
        tokens,
        geometry: SequenceGeometry {
            patch_size: patch,
            grid_size: grid,
            original_size: img.dimensions(),
            channels: img.channels,
        },
        seed: 0,
        leaf_count: n,
    })
}

/// Paints per-token predictions back onto the image plane.
///
/// `predictions[i]` holds `P_m²` values for the i-th real token. Each is
/// upsampled by nearest neighbour to the token's leaf; pads and dropped
/// regions stay 0. The result is cropped to the original size.
pub fn reconstruct_mask<T: Scalar, P: AsRef<[T]>>(
    seq: &TokenSequence<T>,
    predictions: &[P],
) -> Result<GrayImage<T>> {
    let real: Vec<&PatchToken<T>> = seq.real_tokens().collect();
    if predictions.len() != real.len() {
        return Err(Error::CountMismatch {
            expected: real.len(),
            actual: predictions.len(),
        });
    }
    let pm = seq.geometry.patch_size;
    let per_token = (pm * pm) as usize;
    let (w, h) = seq.geometry.original_size;
    let mut out = vec![T::zero(); w as usize * h as usize];
    for (token, pred) in real.iter().zip(predictions) {
        let pred = pred.as_ref();
        if pred.len() != per_token {
            return Err(Error::CountMismatch {
                expected: per_token,
                actual: pred.len(),
            });
        }
        let scale = (token.size / pm).max(1);
        let (ox, oy) = token.origin;
        for dy in 0..token.size {
            let y = oy + dy;
            if y >= h {
                break;
            }
            let row = (dy / scale * pm) as usize;
            for dx in 0..token.size {
                let x = ox + dx;
                if x >= w {
                    break;
                }
                out[y as usize * w as usize + x as usize] = pred[row + (dx / scale) as usize];
            }
        }
    }
    GrayImage::new(w, h, out)
}

/// `2|X∩Y| / (|X|+|Y|)` on masks binarized at 0.5; two empty masks score 1.
pub fn dice_score<T: Scalar>(pred: &GrayImage<T>, truth: &GrayImage<T>) -> Result<f64> {
    if pred.dimensions() != truth.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: truth.dimensions(),
            actual: pred.dimensions(),
        });
    }
    let half = T::lit(0.5);
    let (mut both, mut a, mut b) = (0u64, 0u64, 0u64);
    for (&p, &t) in pred.data.iter().zip(&truth.data) {
        let (p, t) = (p >= half, t >= half);
        a += p as u64;
        b += t as u64;
        both += (p && t) as u64;
    }
    if a + b == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (a + b) as f64)
}
