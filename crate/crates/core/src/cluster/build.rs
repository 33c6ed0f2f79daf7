use crate::cluster::distance::{center_features, code_distances, concept_distances, normalize_subset, CenteredFeatures, DistanceMatrix};
use crate::cluster::hierarchy::{Hierarchy, HierarchyKind};
use crate::cluster::linkage::agglomerate;
use crate::cluster::ordering::optimal_leaf_order;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::store::FeatureStore;

/// Distance matrix for one side, optionally aggregated over an opposite-side subset.
pub fn side_distances<T: Scalar>(
    store: &FeatureStore<T>,
    centered: &CenteredFeatures<T>,
    kind: HierarchyKind,
    conditioning: Option<&[usize]>,
) -> Result<DistanceMatrix<T>> {
    match kind {
        HierarchyKind::Concept => concept_distances(centered, conditioning),
        HierarchyKind::Code => code_distances(store, centered, conditioning),
    }
}

/// center → distances → complete linkage → optimal leaf order.
pub fn build_with_centered<T: Scalar>(
    store: &FeatureStore<T>,
    centered: &CenteredFeatures<T>,
    kind: HierarchyKind,
    conditioning: Option<&[usize]>,
) -> Result<Hierarchy<T>> {
    let bound = match kind {
        HierarchyKind::Concept => store.num_codes(),
        HierarchyKind::Code => store.num_directions(),
    };
    let conditioning = conditioning.map(|c| normalize_subset(c, bound, kind.opposite().as_str())).transpose()?;
    let dist = side_distances(store, centered, kind, conditioning.as_deref())?;
    let tree = agglomerate(&dist, kind)?;
    let order = optimal_leaf_order(&tree, &dist);
    let mut tree = tree.with_leaf_order(order)?;
    tree.conditioning = conditioning;
    Ok(tree)
}

pub fn build_hierarchy<T: Scalar>(store: &FeatureStore<T>, kind: HierarchyKind, conditioning: Option<&[usize]>) -> Result<Hierarchy<T>> {
    build_with_centered(store, &center_features(store), kind, conditioning)
}
