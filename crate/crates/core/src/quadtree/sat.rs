use crate::raster::EdgeMap;

use super::Region;

/// Summed-area table of edge pixels: `at(x, y)` counts edges in `[0,x)×[0,y)`.
#[derive(Debug, Clone)]
pub struct SummedAreaTable {
    width: u32,
    height: u32,
    table: Vec<u64>,
}

impl SummedAreaTable {
    pub fn new(edges: &EdgeMap) -> Self {
        let (w, h) = (edges.width as usize, edges.height as usize);
        let stride = w + 1;
        let mut table = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            for x in 0..w {
                row += edges.bits[y * w + x] as u64;
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
            }
        }
        Self {
            width: edges.width,
            height: edges.height,
            table,
        }
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> u64 {
        let x = x.min(self.width) as usize;
        let y = y.min(self.height) as usize;
        self.table[y * (self.width as usize + 1) + x]
    }

    /// Edge pixels in `[x0,x1)×[y0,y1)`; coordinates past the map count as empty.
    #[inline]
    pub fn rect_count(&self, x0: u32, y0: u32, x1: u32, y1: u32) -> u64 {
        if x0 >= x1 || y0 >= y1 {
            return 0;
        }
        self.at(x1, y1) + self.at(x0, y0) - self.at(x0, y1) - self.at(x1, y0)
    }

    #[inline]
    pub fn region_count(&self, r: &Region) -> u64 {
        self.rect_count(
            r.x,
            r.y,
            r.x.saturating_add(r.size),
            r.y.saturating_add(r.size),
        )
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_map_is_zero() {
        let sat = SummedAreaTable::new(&EdgeMap::empty(7, 5));
        for y in 0..=5 {
            for x in 0..=7 {
                assert_eq!(sat.at(x, y), 0);
            }
        }
    }

    #[test]
    fn full_map_area() {
        let sat = SummedAreaTable::new(&EdgeMap::full(4, 4));
        assert_eq!(sat.region_count(&Region { x: 0, y: 0, size: 4 }), 16);
    }

    #[test]
    fn corner_edges() {
        let mut m = EdgeMap::empty(4, 4);
        m.set(0, 0, true);
        m.set(3, 3, true);
        let sat = SummedAreaTable::new(&m);
        assert_eq!(sat.region_count(&Region { x: 0, y: 0, size: 2 }), 1);
        assert_eq!(sat.region_count(&Region { x: 2, y: 2, size: 2 }), 1);
        assert_eq!(sat.region_count(&Region { x: 0, y: 0, size: 8 }), 2);
    }

    #[test]
    fn random_rectangles_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (w, h) = (rng.gen_range(1..40), rng.gen_range(1..40));
            let p: f64 = rng.gen();
            let m = EdgeMap::from_fn(w, h, |_, _| rng.gen_bool(p));
            let sat = SummedAreaTable::new(&m);
            for _ in 0..40 {
                let (x0, x1) = (rng.gen_range(0..=w + 4), rng.gen_range(0..=w + 4));
                let (y0, y1) = (rng.gen_range(0..=h + 4), rng.gen_range(0..=h + 4));
                let brute = (y0..y1.min(h))
                    .flat_map(|y| (x0..x1.min(w)).map(move |x| (x, y)))
                    .filter(|&(x, y)| m.get(x, y))
                    .count() as u64;
                assert_eq!(sat.rect_count(x0, y0, x1, y1), brute);
            }
        }
    }
}
