//! Structural checks for a [`Quadtree`], usable on hand-built trees.

use std::fmt;

use super::{morton_encode, ordered_leaves, QuadNode, Quadtree, Region};

/// `Ok` or the first counterexample found.
pub type Check = Result<(), String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionReport {
    /// Leaves tile the padded grid exactly, children tile their parent.
    pub tiling: Check,
    /// Split criterion and depth bookkeeping at every node.
    pub criterion: Check,
    /// Leaf traversal order is strictly increasing in Morton code.
    pub morton: Check,
}

impl PartitionReport {
    pub fn passed(&self) -> bool {
        self.tiling.is_ok() && self.criterion.is_ok() && self.morton.is_ok()
    }
}

impl fmt::Display for PartitionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, check) in [
            ("tiling", &self.tiling),
            ("criterion", &self.criterion),
            ("morton", &self.morton),
        ] {
            match check {
                Ok(()) => writeln!(f, "{name}: pass")?,
                Err(e) => writeln!(f, "{name}: FAIL ({e})")?,
            }
        }
        Ok(())
    }
}

pub fn verify_partition(tree: &Quadtree) -> PartitionReport {
    let leaves = ordered_leaves(tree);
    PartitionReport {
        tiling: check_tiling(tree, &leaves),
        criterion: check_criterion(tree),
        morton: check_morton(&leaves),
    }
}

fn fmt_region(r: &Region) -> String {
    format!("({}, {}, {})", r.x, r.y, r.size)
}

fn check_tiling(tree: &Quadtree, leaves: &[&QuadNode]) -> Check {
    let grid = tree.grid_size as u64;
    for (i, leaf) in leaves.iter().enumerate() {
        let r = &leaf.region;
        if r.size == 0 || !r.size.is_power_of_two() {
            return Err(format!("leaf #{i} {} has non power-of-two side", fmt_region(r)));
        }
        if r.x % r.size != 0 || r.y % r.size != 0 {
            return Err(format!("leaf #{i} {} is not aligned to its side", fmt_region(r)));
        }
        if r.x as u64 + r.size as u64 > grid || r.y as u64 + r.size as u64 > grid {
            return Err(format!("leaf #{i} {} extends past the grid", fmt_region(r)));
        }
    }

    // Aligned power-of-two squares occupy contiguous Morton ranges, so
    // sorting by range start exposes every overlap between neighbours.
    let cell = leaves.iter().map(|l| l.region.size).min().unwrap_or(1);
    let mut spans: Vec<(u128, u128, usize)> = leaves
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let start = morton_encode(l.region.x / cell, l.region.y / cell).0 as u128;
            let side = (l.region.size / cell) as u128;
            (start, start + side * side, i)
        })
        .collect();
    spans.sort();
    for pair in spans.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.0 < a.1 {
            return Err(format!(
                "leaves #{} {} and #{} {} overlap",
                a.2,
                fmt_region(&leaves[a.2].region),
                b.2,
                fmt_region(&leaves[b.2].region)
            ));
        }
    }
    let covered: u128 = leaves.iter().map(|l| l.region.area() as u128).sum();
    if covered != (grid as u128) * (grid as u128) {
        return Err(format!("leaves cover {covered} of {} pixels", grid * grid));
    }

    let root = &tree.root.region;
    if *root != (Region { x: 0, y: 0, size: tree.grid_size }) {
        return Err(format!("root region {} is not the grid", fmt_region(root)));
    }
    let mut err = None;
    tree.root.visit(&mut |node| {
        if err.is_some() {
            return;
        }
        if let Some(children) = &node.children {
            let expect = node.region.quadrants();
            for (c, e) in children.iter().zip(expect.iter()) {
                if c.region != *e {
                    err = Some(format!(
                        "child {} of {} should be {}",
                        fmt_region(&c.region),
                        fmt_region(&node.region),
                        fmt_region(e)
                    ));
                    return;
                }
            }
        }
    });
    err.map_or(Ok(()), Err)
}

fn check_criterion(tree: &Quadtree) -> Check {
    let v = tree.split_value;
    let max_depth = tree.effective_depth();
    if tree.root.depth != 0 {
        return Err(format!("root depth {} != 0", tree.root.depth));
    }
    let mut err = None;
    tree.root.visit(&mut |node| {
        if err.is_some() {
            return;
        }
        let at = fmt_region(&node.region);
        if node.depth > max_depth {
            err = Some(format!("node {at} at depth {} exceeds {max_depth}", node.depth));
            return;
        }
        match &node.children {
            Some(children) => {
                if node.edge_count <= v {
                    err = Some(format!(
                        "internal node {at} has edge_count {} <= v = {v}",
                        node.edge_count
                    ));
                } else if let Some(c) = children.iter().find(|c| c.depth != node.depth + 1) {
                    err = Some(format!(
                        "child {} depth {} under parent depth {}",
                        fmt_region(&c.region),
                        c.depth,
                        node.depth
                    ));
                } else {
                    let sum: u64 = children.iter().map(|c| c.edge_count).sum();
                    if sum != node.edge_count {
                        err = Some(format!(
                            "children of {at} hold {sum} edges, parent records {}",
                            node.edge_count
                        ));
                    }
                }
            }
            None => {
                if node.edge_count > v && node.depth != max_depth {
                    err = Some(format!(
                        "leaf {at} has edge_count {} > v = {v} above depth {max_depth}",
                        node.edge_count
                    ));
                }
            }
        }
    });
    err.map_or(Ok(()), Err)
}

fn check_morton(leaves: &[&QuadNode]) -> Check {
    let cell = leaves.iter().map(|l| l.region.size).min().unwrap_or(1).max(1);
    let codes: Vec<_> = leaves
        .iter()
        .map(|l| morton_encode(l.region.x / cell, l.region.y / cell))
        .collect();
    for (i, pair) in codes.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(format!(
                "leaf #{} code {} follows leaf #{} code {}",
                i + 1,
                pair[1].0,
                i,
                pair[0].0
            ));
        }
    }
    Ok(())
}
