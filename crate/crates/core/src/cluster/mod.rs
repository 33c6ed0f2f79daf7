//! Concept and code hierarchies: centering, cosine distances, aggregated
//! concept distance, complete linkage, optimal leaf ordering, steering.

mod build;
mod distance;
mod hierarchy;
mod linkage;
mod ordering;

pub use build::{build_hierarchy, build_with_centered, side_distances};
pub use distance::{
    center_features, code_distance_matrix, code_distances, concept_distance_matrix, concept_distances, cosine_distance,
    normalize_subset, CenteredFeatures, DistanceMatrix,
};
pub use hierarchy::{fresh_snapshot_id, Hierarchy, HierarchyDoc, HierarchyKind, Merge, Node, NodeDoc};
pub use linkage::{agglomerate, linkage, natural_order};
pub use ordering::{optimal_leaf_order, order_cost};
