//! Geometry for the two icicle plots and the center grid.
//!
//! The leaf axis is measured in leaf units: every leaf spans exactly 1 and
//! gaps are added between leaves, so the axis extent is `n + sum(gaps)`.
//! The depth axis always spans [0, 1]. Renderers scale each axis to fit.

use serde::{Deserialize, Serialize};

use crate::cluster::Hierarchy;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Leaves along x, depth along y (concepts).
    Horizontal,
    /// Leaves along y, depth along x (codes).
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRect {
    pub node: usize,
    pub depth: usize,
    pub rect: Rect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcicleLayout {
    pub orientation: Orientation,
    /// Requested depth clamped to the tree's own maximum depth.
    pub display_depth: usize,
    pub gap_max: f64,
    /// Leaf-axis extent: leaf count plus all gaps.
    pub extent: f64,
    /// Rectangles for every node with depth ≤ `display_depth`, by node id order.
    pub rects: Vec<NodeRect>,
    /// Gap after each leaf position except the last.
    pub gaps: Vec<f64>,
    /// Leaf-axis interval per leaf index.
    pub leaf_intervals: Vec<(f64, f64)>,
    /// Leaf-axis interval per node id (all nodes, including hidden ones).
    pub node_intervals: Vec<(f64, f64)>,
}

/// Leaves follow the hierarchy's leaf order; the gap between consecutive
/// leaves u, v is `gap_max / (1 + depth(lca(u, v)))`.
pub fn icicle_layout<T>(h: &Hierarchy<T>, display_depth: usize, gap_max: f64, orientation: Orientation) -> Result<IcicleLayout>
where
    T: crate::scalar::Scalar,
{
    if display_depth == 0 {
        return Err(Error::Config("display depth must be at least 1".into()));
    }
    if !(0.0..=0.2).contains(&gap_max) {
        return Err(Error::Config(format!("gap_max {gap_max} outside [0, 0.2]")));
    }
    let order = h.leaf_order();
    let n = order.len();
    let gaps: Vec<f64> = order.windows(2).map(|w| gap_max / (1.0 + h.nodes()[h.lca(w[0], w[1])].depth as f64)).collect();

    let mut leaf_intervals = vec![(0.0, 0.0); n];
    let mut pos = 0.0;
    for (p, &leaf) in order.iter().enumerate() {
        leaf_intervals[leaf] = (pos, pos + 1.0);
        pos += 1.0;
        if let Some(g) = gaps.get(p) {
            pos += g;
        }
    }
    let node_intervals: Vec<(f64, f64)> = h
        .nodes()
        .iter()
        .map(|v| (leaf_intervals[order[v.leaf_range.0]].0, leaf_intervals[order[v.leaf_range.1 - 1]].1))
        .collect();

    let depth = display_depth.min(h.max_depth());
    let band = 1.0 / (depth + 1) as f64;
    let rects = h
        .nodes()
        .iter()
        .filter(|v| v.depth <= depth)
        .map(|v| {
            let (a, b) = node_intervals[v.id];
            let d0 = v.depth as f64 * band;
            let rect = match orientation {
                Orientation::Horizontal => Rect { x: a, y: d0, width: b - a, height: band },
                Orientation::Vertical => Rect { x: d0, y: a, width: band, height: b - a },
            };
            NodeRect { node: v.id, depth: v.depth, rect }
        })
        .collect();

    Ok(IcicleLayout { orientation, display_depth: depth, gap_max, extent: pos, rects, gaps, leaf_intervals, node_intervals })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageSlot {
    pub code: usize,
    pub concept: usize,
    pub rect: Rect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub concept_node: usize,
    pub code_node: usize,
    pub rect: Rect,
    /// First code and first concept in leaf order, for thumbnails.
    pub representative: (usize, usize),
    /// Row-major by code (rows) then concept (columns), both in leaf order.
    pub image_slots: Vec<ImageSlot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub concept_depth: usize,
    pub code_depth: usize,
    pub cells: Vec<GridCell>,
}

/// Deduplicates a selection and finds its common cut depth: every internal
/// node must sit at that depth, leaves may end above it.
fn checked_selection<T: Scalar>(h: &Hierarchy<T>, sel: &[usize], what: &str) -> Result<(Vec<usize>, usize)> {
    if sel.is_empty() {
        return Err(Error::Selection(format!("empty {what} node selection")));
    }
    let mut ids = Vec::with_capacity(sel.len());
    for &id in sel {
        if h.node(id).is_none() {
            return Err(Error::Selection(format!("{what} node {id} does not exist")));
        }
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    let depth = ids.iter().map(|&id| h.nodes()[id].depth).max().unwrap_or(0);
    if let Some(&bad) = ids.iter().find(|&&id| !h.is_cut_node(id, depth)) {
        return Err(Error::Selection(format!(
            "{what} node {bad} is at depth {}, selection depth is {depth}",
            h.nodes()[bad].depth
        )));
    }
    ids.sort_by_key(|&id| h.nodes()[id].leaf_range.0);
    Ok((ids, depth))
}

fn interval(layout: &IcicleLayout, id: usize) -> (f64, f64) {
    layout.node_intervals[id]
}

/// One cell per (concept node, code node) pair. Each selection must lie on a
/// single depth cut of its hierarchy. Cells inherit x from the concept icicle and y from the code
/// icicle, and are split into one image slot per (code, concept) leaf pair.
pub fn grid_layout<T: Scalar>(
    concept_tree: &Hierarchy<T>,
    concepts: &IcicleLayout,
    code_tree: &Hierarchy<T>,
    codes: &IcicleLayout,
    concept_sel: &[usize],
    code_sel: &[usize],
) -> Result<GridLayout> {
    let (csel, concept_depth) = checked_selection(concept_tree, concept_sel, "concept")?;
    let (rsel, code_depth) = checked_selection(code_tree, code_sel, "code")?;
    let ordered = |h: &Hierarchy<T>, id: usize| -> Vec<usize> {
        let (s, e) = h.nodes()[id].leaf_range;
        h.leaf_order()[s..e].to_vec()
    };
    let mut cells = Vec::with_capacity(csel.len() * rsel.len());
    for &r in &rsel {
        let (y0, y1) = interval(codes, r);
        let code_leaves = ordered(code_tree, r);
        for &c in &csel {
            let (x0, x1) = interval(concepts, c);
            let concept_leaves = ordered(concept_tree, c);
            let mut image_slots = Vec::with_capacity(code_leaves.len() * concept_leaves.len());
            for &code in &code_leaves {
                let (sy0, sy1) = codes.leaf_intervals[code];
                for &concept in &concept_leaves {
                    let (sx0, sx1) = concepts.leaf_intervals[concept];
                    image_slots.push(ImageSlot { code, concept, rect: Rect { x: sx0, y: sy0, width: sx1 - sx0, height: sy1 - sy0 } });
                }
            }
            cells.push(GridCell {
                concept_node: c,
                code_node: r,
                rect: Rect { x: x0, y: y0, width: x1 - x0, height: y1 - y0 },
                representative: (code_leaves[0], concept_leaves[0]),
                image_slots,
            });
        }
    }
    Ok(GridLayout { concept_depth, code_depth, cells })
}
