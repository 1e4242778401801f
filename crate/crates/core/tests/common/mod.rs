#![allow(dead_code)]

use quadpatch::{EdgeMap, GrayImage, RasterImage};
use rand::Rng;

/// Leaf `(x, y, size, depth)` in DFS order.
pub type RefLeaf = (u32, u32, u32, u32);

/// Quadtree leaves by direct recursion, counting pixels one by one.
pub fn reference_leaves(edges: &EdgeMap, v: u64, depth_limit: u32) -> Vec<RefLeaf> {
    let side = edges.width.max(edges.height).max(1);
    let mut grid = 1u32;
    while grid < side {
        grid *= 2;
    }
    // Levels available above the 2×2 floor.
    let mut floor_depth = 0u32;
    let mut s = grid;
    while s > 2 {
        s /= 2;
        floor_depth += 1;
    }
    let max_depth = depth_limit.min(floor_depth);

    fn count(edges: &EdgeMap, x0: u32, y0: u32, size: u32) -> u64 {
        let mut n = 0;
        for y in y0..y0 + size {
            for x in x0..x0 + size {
                if x < edges.width && y < edges.height && edges.get(x, y) {
                    n += 1;
                }
            }
        }
        n
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        edges: &EdgeMap,
        x: u32,
        y: u32,
        size: u32,
        depth: u32,
        v: u64,
        max_depth: u32,
        out: &mut Vec<RefLeaf>,
    ) {
        if count(edges, x, y, size) > v && depth < max_depth {
            let h = size / 2;
            rec(edges, x, y, h, depth + 1, v, max_depth, out);
            rec(edges, x + h, y, h, depth + 1, v, max_depth, out);
            rec(edges, x, y + h, h, depth + 1, v, max_depth, out);
            rec(edges, x + h, y + h, h, depth + 1, v, max_depth, out);
        } else {
            out.push((x, y, size, depth));
        }
    }

    let mut out = Vec::new();
    rec(edges, 0, 0, grid, 0, v, max_depth, &mut out);
    out
}

/// Edge map with a random mixture of noise, lines and filled blocks.
pub fn random_edge_map<R: Rng>(rng: &mut R, max_side: u32) -> EdgeMap {
    let w = rng.gen_range(1..=max_side);
    let h = if rng.gen_bool(0.5) { w } else { rng.gen_range(1..=max_side) };
    let density: f64 = match rng.gen_range(0..4) {
        0 => 0.0,
        1 => rng.gen_range(0.0..0.02),
        2 => rng.gen_range(0.0..0.3),
        _ => rng.gen_range(0.0..1.0),
    };
    let mut m = EdgeMap::from_fn(w, h, |_, _| rng.gen_bool(density));
    for _ in 0..rng.gen_range(0..6) {
        let (x0, y0) = (rng.gen_range(0..w), rng.gen_range(0..h));
        let (x1, y1) = (rng.gen_range(x0..w.max(x0 + 1)), rng.gen_range(y0..h.max(y0 + 1)));
        let filled = rng.gen_bool(0.3);
        for y in y0..=y1.min(h - 1) {
            for x in x0..=x1.min(w - 1) {
                if filled || y == y0 || x == x0 {
                    m.set(x, y, true);
                }
            }
        }
    }
    m
}

/// Gray image of random filled circles and rectangles over a smooth ramp.
pub fn shapes_image<R: Rng>(rng: &mut R, width: u32, height: u32, shapes: usize) -> RasterImage {
    let mut px: Vec<u8> = (0..height)
        .flat_map(|y| (0..width).map(move |x| (40 + (x + y) * 40 / (width + height)) as u8))
        .collect();
    for _ in 0..shapes {
        let value: u8 = rng.gen_range(120..=255);
        let cx = rng.gen_range(0..width) as i64;
        let cy = rng.gen_range(0..height) as i64;
        let r = rng.gen_range(4..=(width.min(height) as i64 / 6).max(5));
        let circle = rng.gen_bool(0.5);
        for y in (cy - r).max(0)..(cy + r).min(height as i64) {
            for x in (cx - r).max(0)..(cx + r).min(width as i64) {
                let inside = if circle {
                    (x - cx).pow(2) + (y - cy).pow(2) <= r * r
                } else {
                    true
                };
                if inside {
                    px[(y as usize) * width as usize + x as usize] = value;
                }
            }
        }
    }
    RasterImage::new(width, height, 1, px).unwrap()
}

/// `side²` black image with a white circle outline of the given thickness.
pub fn circle_outline(side: u32, radius: f64, thickness: f64) -> RasterImage {
    let c = side as f64 / 2.0;
    RasterImage::gray_from_fn(side, side, |x, y| {
        let d = ((x as f64 + 0.5 - c).powi(2) + (y as f64 + 0.5 - c).powi(2)).sqrt();
        if (d - radius).abs() <= thickness / 2.0 {
            255
        } else {
            0
        }
    })
    .unwrap()
}

/// Random binary mask: either pixel noise or a few filled shapes.
pub fn random_mask<R: Rng>(rng: &mut R, max_side: u32) -> GrayImage<f32> {
    let w = rng.gen_range(2..=max_side);
    let h = rng.gen_range(2..=max_side);
    if rng.gen_bool(0.3) {
        let p: f64 = rng.gen();
        GrayImage::from_fn(w, h, |_, _| if rng.gen_bool(p) { 1.0 } else { 0.0 }).unwrap()
    } else {
        let shapes = rng.gen_range(0..5);
        let img = shapes_image(rng, w, h, shapes);
        GrayImage::from_fn(w, h, |x, y| if img.pixel(x, y)[0] >= 120 { 1.0 } else { 0.0 }).unwrap()
    }
}

/// Pixels with a 4-neighbour of a different value; outside the image counts
/// as 0, matching the zero padding.
pub fn boundary_map(mask: &GrayImage<f32>) -> EdgeMap {
    let (w, h) = mask.dimensions();
    let at = |x: i64, y: i64| -> f32 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0.0
        } else {
            mask.get(x as u32, y as u32)
        }
    };
    EdgeMap::from_fn(w, h, |x, y| {
        let (x, y) = (x as i64, y as i64);
        let v = at(x, y);
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .any(|&(dx, dy)| at(x + dx, y + dy) != v)
    })
}
