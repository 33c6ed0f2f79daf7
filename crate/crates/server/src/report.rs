//! Serializable payloads shared by the CLI and the HTTP API.

use concept_lens::cluster::{normalize_subset, Hierarchy, HierarchyDoc, HierarchyKind};
use concept_lens::consistency::{map_color, ColorDomain, ConsistencyStats, EditGrid};
use concept_lens::layout::{GridLayout, IcicleLayout, Orientation, Rect};
use concept_lens::Result;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeStat {
    pub id: usize,
    pub mean: f64,
    pub std: f64,
    /// `#rrggbb` on the bivariate scale.
    pub color: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub kind: HierarchyKind,
    pub snapshot_id: String,
    /// Opposite-side leaf indices the stats were averaged over; `None` means all.
    pub selection: Option<Vec<usize>>,
    pub stats: Vec<NodeStat>,
}

fn stat_rows(stats: &[ConsistencyStats<f64>], domain: &ColorDomain<f64>) -> Vec<NodeStat> {
    stats
        .iter()
        .enumerate()
        .map(|(id, s)| NodeStat { id, mean: s.mean, std: s.std, color: map_color(s, domain).hex() })
        .collect()
}

pub fn consistency_report(
    grid: &EditGrid<f64>,
    domain: &ColorDomain<f64>,
    h: &Hierarchy<f64>,
    selection: Option<&[usize]>,
) -> Result<ConsistencyReport> {
    let bound = match h.kind {
        HierarchyKind::Concept => grid.num_codes(),
        HierarchyKind::Code => grid.num_directions(),
    };
    let selection = selection.map(|s| normalize_subset(s, bound, h.kind.opposite().as_str())).transpose()?;
    let stats = grid.hierarchy_consistency(h, selection.as_deref())?;
    Ok(ConsistencyReport { kind: h.kind, snapshot_id: h.snapshot_id.clone(), selection, stats: stat_rows(&stats, domain) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyPayload {
    pub hierarchy: HierarchyDoc<f64>,
    pub num_nodes: usize,
    pub max_depth: usize,
    /// Unconditioned stats per node id.
    pub stats: Vec<NodeStat>,
}

pub fn hierarchy_payload(grid: &EditGrid<f64>, domain: &ColorDomain<f64>, h: &Hierarchy<f64>) -> Result<HierarchyPayload> {
    let report = consistency_report(grid, domain, h, None)?;
    Ok(HierarchyPayload { hierarchy: h.to_doc(), num_nodes: h.nodes().len(), max_depth: h.max_depth(), stats: report.stats })
}

/// Rounds to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn scale_rect(r: Rect, sx: f64, sy: f64) -> Rect {
    Rect { x: sig9(r.x * sx), y: sig9(r.y * sy), width: sig9(r.width * sx), height: sig9(r.height * sy) }
}

fn scale_interval((a, b): (f64, f64), s: f64) -> (f64, f64) {
    (sig9(a * s), sig9(b * s))
}

/// Maps the leaf axis from leaf units onto [0, 1]; `extent` keeps the
/// original length so clients can recover leaf units.
pub fn normalize_icicle(layout: &IcicleLayout) -> IcicleLayout {
    let s = 1.0 / layout.extent;
    let (sx, sy) = match layout.orientation {
        Orientation::Horizontal => (s, 1.0),
        Orientation::Vertical => (1.0, s),
    };
    let mut out = layout.clone();
    for nr in &mut out.rects {
        nr.rect = scale_rect(nr.rect, sx, sy);
    }
    out.gaps.iter_mut().for_each(|g| *g = sig9(*g * s));
    out.leaf_intervals.iter_mut().for_each(|i| *i = scale_interval(*i, s));
    out.node_intervals.iter_mut().for_each(|i| *i = scale_interval(*i, s));
    out
}

pub fn normalize_grid(grid: &GridLayout, concepts: &IcicleLayout, codes: &IcicleLayout) -> GridLayout {
    let (sx, sy) = (1.0 / concepts.extent, 1.0 / codes.extent);
    let mut out = grid.clone();
    for cell in &mut out.cells {
        cell.rect = scale_rect(cell.rect, sx, sy);
        for slot in &mut cell.image_slots {
            slot.rect = scale_rect(slot.rect, sx, sy);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutPayload {
    pub concept_snapshot: String,
    pub code_snapshot: String,
    pub concept: IcicleLayout,
    pub code: IcicleLayout,
    pub grid: GridLayout,
}
