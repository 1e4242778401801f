use crate::quadtree::{ordered_leaves, Quadtree};
use crate::raster::RasterImage;

pub const HIGHLIGHT: [u8; 3] = [0, 255, 0];

/// RGB copy of `img` with every leaf outlined by 1-pixel green lines.
///
/// Each leaf paints its top row and left column; the image's own right and
/// bottom border close the frame, so shared boundaries stay one pixel wide.
pub fn render_overlay(img: &RasterImage, tree: &Quadtree) -> RasterImage {
    let (w, h) = (img.width, img.height);
    let mut data = Vec::with_capacity(w as usize * h as usize * 3);
    match img.channels {
        1 => img.data.iter().for_each(|&v| data.extend_from_slice(&[v, v, v])),
        _ => data.extend_from_slice(&img.data),
    }
    let mut paint = |x: u32, y: u32| {
        if x < w && y < h {
            let i = (y as usize * w as usize + x as usize) * 3;
            data[i..i + 3].copy_from_slice(&HIGHLIGHT);
        }
    };
    for leaf in ordered_leaves(tree) {
        let r = leaf.region;
        for dx in 0..r.size {
            paint(r.x + dx, r.y);
        }
        for dy in 0..r.size {
            paint(r.x, r.y + dy);
        }
    }
    for x in 0..w {
        paint(x, h - 1);
    }
    for y in 0..h {
        paint(w - 1, y);
    }
    RasterImage {
        width: w,
        height: h,
        channels: 3,
        data,
    }
}
