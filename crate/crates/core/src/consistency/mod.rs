//! Edit-consistency sets and statistics, the color-scale domain, and the
//! bivariate color mapping.

mod color;
mod domain;
mod stats;

pub use color::{color_at, corner_colors, lab_to_srgb, map_color, srgb_to_lab, BiColor, BLUE, CENTER_FADE, GRAY, PURPLE, RED};
pub use domain::{color_domain, ColorDomain, DOMAIN_SPREAD, MIN_HALFWIDTH};
pub use stats::{
    code_consistency, code_set, concept_consistency, concept_set, edit_distance, node_consistency, ConsistencySet,
    ConsistencyStats, EditGrid, SetConditioning,
};
