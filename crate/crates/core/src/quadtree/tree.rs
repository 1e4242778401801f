use serde::{Deserialize, Serialize};

use crate::raster::EdgeMap;

use super::{morton_encode, MortonCode, SummedAreaTable};

/// Square, power-of-two sized area of the padded grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub x: u32,
    pub y: u32,
    pub size: u32,
}

impl Region {
    /// NW, NE, SW, SE.
    pub fn quadrants(&self) -> [Region; 4] {
        let h = self.size / 2;
        [
            Region { x: self.x, y: self.y, size: h },
            Region { x: self.x + h, y: self.y, size: h },
            Region { x: self.x, y: self.y + h, size: h },
            Region { x: self.x + h, y: self.y + h, size: h },
        ]
    }

    pub fn area(&self) -> u64 {
        self.size as u64 * self.size as u64
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x - self.x < self.size && y - self.y < self.size
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadNode {
    pub region: Region,
    pub depth: u32,
    pub edge_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Box<[QuadNode; 4]>>,
}

impl QuadNode {
    pub fn leaf(region: Region, depth: u32, edge_count: u64) -> Self {
        Self {
            region,
            depth,
            edge_count,
            children: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a QuadNode>) {
        match &self.children {
            None => out.push(self),
            Some(children) => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    pub(crate) fn visit<'a>(&'a self, f: &mut impl FnMut(&'a QuadNode)) {
        f(self);
        if let Some(children) = &self.children {
            children.iter().for_each(|c| c.visit(f));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadtree {
    pub root: QuadNode,
    /// Side of the padded power-of-two square.
    pub grid_size: u32,
    /// `(width, height)` before padding.
    pub original_size: (u32, u32),
    pub split_value: u64,
    pub depth_limit: u32,
}

/// Depth limit clamped so the smallest leaf is 2×2 (1×1 only for a 1×1 grid).
pub fn effective_depth(grid_size: u32, depth_limit: u32) -> u32 {
    if grid_size <= 2 {
        return 0;
    }
    depth_limit.min(grid_size.trailing_zeros() - 1)
}

impl Quadtree {
    pub fn effective_depth(&self) -> u32 {
        effective_depth(self.grid_size, self.depth_limit)
    }

    /// Side of the smallest possible leaf, `Z′ / 2^H_eff`.
    pub fn min_leaf_side(&self) -> u32 {
        self.grid_size >> self.effective_depth()
    }

    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.root.visit(&mut |node| n += node.is_leaf() as usize);
        n
    }

    /// Morton code of the leaf's top-left cell on the finest possible grid.
    pub fn morton_of(&self, node: &QuadNode) -> MortonCode {
        let cell = self.min_leaf_side();
        morton_encode(node.region.x / cell, node.region.y / cell)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Builds the quadtree over `edges` padded (bottom/right) to a power-of-two
/// square. A node splits iff it holds more than `split_value` edge pixels and
/// its depth is below the effective depth limit.
pub fn build_quadtree(edges: &EdgeMap, split_value: u64, depth_limit: u32) -> Quadtree {
    let grid_size = edges.width.max(edges.height).max(1).next_power_of_two();
    let max_depth = effective_depth(grid_size, depth_limit);
    let sat = SummedAreaTable::new(edges);

    fn grow(sat: &SummedAreaTable, region: Region, depth: u32, v: u64, max_depth: u32) -> QuadNode {
        let edge_count = sat.region_count(&region);
        let mut node = QuadNode::leaf(region, depth, edge_count);
        if edge_count > v && depth < max_depth {
            let [nw, ne, sw, se] = region.quadrants();
            node.children = Some(Box::new([
                grow(sat, nw, depth + 1, v, max_depth),
                grow(sat, ne, depth + 1, v, max_depth),
                grow(sat, sw, depth + 1, v, max_depth),
                grow(sat, se, depth + 1, v, max_depth),
            ]));
        }
        node
    }

    let root = grow(
        &sat,
        Region { x: 0, y: 0, size: grid_size },
        0,
        split_value,
        max_depth,
    );
    Quadtree {
        root,
        grid_size,
        original_size: (edges.width, edges.height),
        split_value,
        depth_limit,
    }
}

/// Leaves in depth-first NW, NE, SW, SE order (ascending Morton order).
pub fn ordered_leaves(tree: &Quadtree) -> Vec<&QuadNode> {
    let mut out = Vec::new();
    tree.root.collect_leaves(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_map_single_leaf() {
        for v in [0, 1, 100] {
            let t = build_quadtree(&EdgeMap::empty(64, 64), v, 9);
            assert_eq!(t.leaf_count(), 1);
            assert!(t.root.is_leaf());
        }
    }

    #[test]
    fn nw_cluster_stops_at_floor() {
        let mut m = EdgeMap::empty(4, 4);
        m.set(0, 0, true);
        m.set(1, 0, true);
        m.set(0, 1, true);
        let t = build_quadtree(&m, 2, 5);
        assert_eq!(t.effective_depth(), 1);
        let leaves = ordered_leaves(&t);
        assert_eq!(leaves.len(), 4);
        assert_eq!(leaves[0].region, Region { x: 0, y: 0, size: 2 });
        assert_eq!(leaves[0].edge_count, 3);
        assert!(leaves.iter().all(|l| l.depth == 1));
    }

    #[test]
    fn full_map_full_depth() {
        for (side, h) in [(8u32, 9u32), (16, 2), (32, 4), (64, 20)] {
            let t = build_quadtree(&EdgeMap::full(side, side), 0, h);
            let he = t.effective_depth();
            assert_eq!(t.leaf_count(), 4usize.pow(he));
            assert!(ordered_leaves(&t).iter().all(|l| l.region.size == side >> he));
        }
    }

    #[test]
    fn degenerate_inputs() {
        let t = build_quadtree(&EdgeMap::full(1, 1), 0, 9);
        assert_eq!((t.grid_size, t.leaf_count()), (1, 1));
        let t = build_quadtree(&EdgeMap::full(2, 2), 0, 9);
        assert_eq!((t.grid_size, t.leaf_count()), (2, 1));
    }

    #[test]
    fn padding_is_bottom_right() {
        let t = build_quadtree(&EdgeMap::full(5, 3), 0, 9);
        assert_eq!(t.grid_size, 8);
        assert_eq!(t.original_size, (5, 3));
        assert_eq!(t.root.edge_count, 15);
        // 2x2 leaves in the zero padding stay unsplit above the floor.
        let leaves = ordered_leaves(&t);
        assert!(leaves.iter().any(|l| l.region == Region { x: 0, y: 4, size: 4 }));
    }

    #[test]
    fn uniform_depth_one_order() {
        let t = build_quadtree(&EdgeMap::full(4, 4), 0, 1);
        let got: Vec<_> = ordered_leaves(&t).iter().map(|l| (l.region.x, l.region.y)).collect();
        assert_eq!(got, vec![(0, 0), (2, 0), (0, 2), (2, 2)]);
    }

    #[test]
    fn dfs_equals_morton_sort() {
        let mut m = EdgeMap::empty(4, 4);
        m.set(0, 0, true);
        m.set(1, 0, true);
        m.set(0, 1, true);
        let t = build_quadtree(&m, 2, 5);
        let dfs: Vec<Region> = ordered_leaves(&t).iter().map(|l| l.region).collect();
        let mut sorted = dfs.clone();
        sorted.sort_by_key(|r| morton_encode(r.x / 2, r.y / 2));
        assert_eq!(dfs, sorted);
    }

    #[test]
    fn json_dump_roundtrip() {
        let t = build_quadtree(&EdgeMap::full(8, 8), 10, 9);
        let json = t.to_json().unwrap();
        assert!(json.contains("\"edge_count\": 64"));
        let back: Quadtree = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
