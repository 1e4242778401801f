//! Grayscale conversion, Gaussian smoothing and Canny edge detection.
//!
//! Intensities live in `[0, 1]` internally while Canny thresholds are given on
//! the familiar 0–255 gradient scale (so `100`/`200` mean what they mean for
//! 8-bit images); they are divided by 255 before comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{EdgeMap, GrayImage, RasterImage};
use crate::scalar::Scalar;

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Per-resolution `(resolution, kernel, depth limit)` schedule.
pub const RESOLUTION_SCHEDULE: [(u64, u32, u32); 7] = [
    (512, 3, 9),
    (1024, 3, 10),
    (4096, 5, 12),
    (8192, 7, 13),
    (16384, 9, 14),
    (32768, 11, 15),
    (65536, 13, 16),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeConfig {
    /// Gaussian window side, odd.
    pub kernel: u32,
    /// Standard deviation; `0` derives it from `kernel`.
    pub sigma: f64,
    /// Hysteresis low threshold on the 0–255 gradient scale.
    pub t_low: f64,
    /// Hysteresis high threshold on the 0–255 gradient scale.
    pub t_high: f64,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        Self {
            kernel: 3,
            sigma: 0.0,
            t_low: 100.0,
            t_high: 200.0,
        }
    }
}

impl EdgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel == 0 || self.kernel.is_multiple_of(2) {
            return Err(Error::InvalidKernel {
                kernel: self.kernel,
                limit: u32::MAX,
            });
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::Config(format!("sigma {} must be >= 0", self.sigma)));
        }
        if !(self.t_low >= 0.0 && self.t_low <= self.t_high) {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 <= t_low <= t_high (got {}, {})",
                self.t_low, self.t_high
            )));
        }
        Ok(())
    }

    /// Sigma actually used for blurring.
    pub fn effective_sigma(&self) -> f64 {
        if self.sigma > 0.0 {
            self.sigma
        } else {
            sigma_for_kernel(self.kernel)
        }
    }
}

/// Conventional sigma for a kernel of side `kernel` when none is given.
pub fn sigma_for_kernel(kernel: u32) -> f64 {
    0.3 * ((kernel as f64 - 1.0) / 2.0 - 1.0) + 0.8
}

/// `(kernel, depth_limit)` for an image of side `resolution`.
///
/// Listed resolutions map exactly; others take the entry nearest in log2
/// space, preferring the smaller resolution on a tie.
pub fn resolution_schedule(resolution: u64) -> (u32, u32) {
    let target = (resolution.max(1) as f64).log2();
    let mut best = RESOLUTION_SCHEDULE[0];
    let mut best_dist = f64::INFINITY;
    for entry in RESOLUTION_SCHEDULE {
        let dist = (target - (entry.0 as f64).log2()).abs();
        if dist < best_dist {
            best = entry;
            best_dist = dist;
        }
    }
    (best.1, best.2)
}

pub fn to_grayscale<T: Scalar>(img: &RasterImage) -> Result<GrayImage<T>> {
    let data: Vec<T> = match img.channels {
        1 => img.data.iter().map(|&v| T::from_u8_unit(v)).collect(),
        3 => img
            .data
            .chunks_exact(3)
            .map(|px| {
                let luma = (LUMA[0] * px[0] as f64 + LUMA[1] * px[1] as f64 + LUMA[2] * px[2] as f64)
                    / 255.0;
                T::lit(luma.clamp(0.0, 1.0))
            })
            .collect(),
        c => return Err(Error::UnsupportedChannels(c)),
    };
    GrayImage::new(img.width, img.height, data)
}

/// Normalized 1D Gaussian weights of length `kernel`.
pub fn gaussian_kernel<T: Scalar>(kernel: u32, sigma: f64) -> Vec<T> {
    let sigma = if sigma > 0.0 {
        sigma
    } else {
        sigma_for_kernel(kernel)
    };
    let half = (kernel / 2) as f64;
    let raw: Vec<f64> = (0..kernel)
        .map(|i| {
            let d = i as f64 - half;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| T::lit(w / total)).collect()
}

/// Separable Gaussian blur with edge replication.
///
/// Each tap is accumulated relative to the centre sample, so a constant
/// neighbourhood reproduces its value exactly.
pub fn gaussian_blur<T: Scalar>(img: &GrayImage<T>, cfg: &EdgeConfig) -> Result<GrayImage<T>> {
    let limit = img.width.min(img.height);
    if cfg.kernel.is_multiple_of(2) || cfg.kernel > limit {
        return Err(Error::InvalidKernel {
            kernel: cfg.kernel,
            limit,
        });
    }
    let weights = gaussian_kernel::<T>(cfg.kernel, cfg.effective_sigma());
    let half = (cfg.kernel / 2) as i64;
    let (w, h) = (img.width as usize, img.height as usize);

    let mut tmp = vec![T::zero(); w * h];
    for y in 0..h {
        let row = &img.data[y * w..(y + 1) * w];
        for x in 0..w {
            let centre = row[x];
            let mut acc = centre;
            for (k, &wt) in weights.iter().enumerate() {
                let sx = (x as i64 + k as i64 - half).clamp(0, w as i64 - 1) as usize;
                acc += wt * (row[sx] - centre);
            }
            tmp[y * w + x] = acc;
        }
    }

    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let centre = tmp[y * w + x];
            let mut acc = centre;
            for (k, &wt) in weights.iter().enumerate() {
                let sy = (y as i64 + k as i64 - half).clamp(0, h as i64 - 1) as usize;
                acc += wt * (tmp[sy * w + x] - centre);
            }
            out[y * w + x] = acc.max(T::zero()).min(T::one());
        }
    }
    GrayImage::new(img.width, img.height, out)
}

/// Gradient direction quantized to four bins, in image coordinates (y down).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// 0°: gradient along x.
    Horizontal,
    /// 45°: gradient along (+1, +1).
    Diagonal,
    /// 90°: gradient along y.
    Vertical,
    /// 135°: gradient along (-1, +1).
    AntiDiagonal,
}

impl Direction {
    fn quantize<T: Scalar>(gx: T, gy: T) -> Self {
        // tan(22.5°) and tan(67.5°)
        let lo = T::lit(0.414_213_562_373_095_1);
        let hi = T::lit(2.414_213_562_373_095);
        let (ax, ay) = (gx.abs(), gy.abs());
        if ay <= ax * lo {
            Direction::Horizontal
        } else if ay >= ax * hi {
            Direction::Vertical
        } else if (gx > T::zero()) == (gy > T::zero()) {
            Direction::Diagonal
        } else {
            Direction::AntiDiagonal
        }
    }

    /// Pixel step along the gradient.
    pub fn offset(self) -> (i64, i64) {
        match self {
            Direction::Horizontal => (1, 0),
            Direction::Diagonal => (1, 1),
            Direction::Vertical => (0, 1),
            Direction::AntiDiagonal => (-1, 1),
        }
    }
}

/// Sobel response of a grayscale image.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub width: u32,
    pub height: u32,
    pub magnitude: Vec<T>,
    pub direction: Vec<Direction>,
}

/// 3×3 Sobel gradients with replicated borders, L2 magnitude.
pub fn sobel_gradients<T: Scalar>(img: &GrayImage<T>) -> Gradients<T> {
    let (w, h) = (img.width as i64, img.height as i64);
    let at = |x: i64, y: i64| -> T {
        let x = x.clamp(0, w - 1) as usize;
        let y = y.clamp(0, h - 1) as usize;
        img.data[y * w as usize + x]
    };
    let two = T::lit(2.0);
    let n = (w * h) as usize;
    let mut magnitude = Vec::with_capacity(n);
    let mut direction = Vec::with_capacity(n);
    for y in 0..h {
        for x in 0..w {
            let gx = (at(x + 1, y - 1) + two * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + two * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + two * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + two * at(x, y - 1) + at(x + 1, y - 1));
            magnitude.push((gx * gx + gy * gy).sqrt());
            direction.push(Direction::quantize(gx, gy));
        }
    }
    Gradients {
        width: img.width,
        height: img.height,
        magnitude,
        direction,
    }
}

/// Pixels that are local maxima along their quantized gradient.
///
/// Ties are broken asymmetrically (strictly greater than the backward
/// neighbour, at least the forward one) so a plateau of two equal responses
/// yields a single pixel.
pub fn suppress_non_maxima<T: Scalar>(grad: &Gradients<T>) -> Vec<bool> {
    let (w, h) = (grad.width as i64, grad.height as i64);
    let mag = |x: i64, y: i64| -> T {
        if x < 0 || y < 0 || x >= w || y >= h {
            T::zero()
        } else {
            grad.magnitude[(y * w + x) as usize]
        }
    };
    let mut keep = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let m = grad.magnitude[i];
            if m <= T::zero() {
                continue;
            }
            let (dx, dy) = grad.direction[i].offset();
            keep[i] = m > mag(x - dx, y - dy) && m >= mag(x + dx, y + dy);
        }
    }
    keep
}

/// Canny edge detector on an already smoothed image.
pub fn canny<T: Scalar>(img: &GrayImage<T>, cfg: &EdgeConfig) -> Result<EdgeMap> {
    if !(cfg.t_low >= 0.0 && cfg.t_low <= cfg.t_high) {
        return Err(Error::Config(format!(
            "thresholds must satisfy 0 <= t_low <= t_high (got {}, {})",
            cfg.t_low, cfg.t_high
        )));
    }
    let grad = sobel_gradients(img);
    let thin = suppress_non_maxima(&grad);
    let low = T::lit(cfg.t_low / 255.0);
    let high = T::lit(cfg.t_high / 255.0);

    let (w, h) = (img.width as i64, img.height as i64);
    let weak: Vec<bool> = thin
        .iter()
        .zip(&grad.magnitude)
        .map(|(&t, &m)| t && m >= low)
        .collect();

    let mut edges = EdgeMap::empty(img.width, img.height);
    let mut stack = Vec::new();
    for (i, (&is_weak, &m)) in weak.iter().zip(&grad.magnitude).enumerate() {
        if is_weak && m >= high && !edges.bits[i] {
            edges.bits[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = ((j as i64) % w, (j as i64) / w);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (jx + dx, jy + dy);
                        if nx < 0 || ny < 0 || nx >= w || ny >= h {
                            continue;
                        }
                        let k = (ny * w + nx) as usize;
                        if weak[k] && !edges.bits[k] {
                            edges.bits[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    Ok(edges)
}

/// Grayscale, blur and Canny in one call.
pub fn detect_edges<T: Scalar>(img: &RasterImage, cfg: &EdgeConfig) -> Result<EdgeMap> {
    cfg.validate()?;
    let gray = to_grayscale::<T>(img)?;
    let smooth = gaussian_blur(&gray, cfg)?;
    canny(&smooth, cfg)
}
