use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{normalize_subset, Hierarchy, HierarchyKind, Node};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::store::FeatureStore;

/// Mean and population standard deviation of a set of edit distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyStats<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> ConsistencyStats<T> {
    /// Two-pass population statistics; a singleton has std exactly 0.
    pub fn of(values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Selection("consistency over an empty set".into()));
        }
        let count = T::from_count(values.len());
        let mean = values.iter().fold(T::zero(), |a, &v| a + v) / count;
        let var = values.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / count;
        Ok(ConsistencyStats { mean, std: var.sqrt() })
    }

    /// Component-wise mean of several summaries.
    pub fn average(items: &[Self]) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Selection("averaging zero summaries".into()));
        }
        let count = T::from_count(items.len());
        let (m, s) = items.iter().fold((T::zero(), T::zero()), |(m, s), x| (m + x.mean, s + x.std));
        Ok(ConsistencyStats { mean: m / count, std: s / count })
    }
}

/// Which side a consistency set was formed over and its anchor on the other side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SetConditioning {
    /// Directions `members` applied to code `anchor`.
    Concepts { members: Vec<usize>, anchor: usize },
    /// Codes `members` edited by direction `anchor`.
    Codes { members: Vec<usize>, anchor: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencySet<T> {
    pub values: Vec<T>,
    pub conditioning: SetConditioning,
}

/// ‖f_G(w_n) − f_G(w_n + α d_m)‖ on raw features.
pub fn edit_distance<T: Scalar>(store: &FeatureStore<T>, n: usize, m: usize) -> T {
    store
        .base(n)
        .iter()
        .zip(store.edited(n, m))
        .fold(T::zero(), |acc, (&b, &e)| acc + (b - e) * (b - e))
        .sqrt()
}

/// Edit distances for the selected directions on one code.
pub fn concept_set<T: Scalar>(store: &FeatureStore<T>, directions: &[usize], code: usize) -> Result<ConsistencySet<T>> {
    let members = normalize_subset(directions, store.num_directions(), "concept")?;
    check_index(code, store.num_codes(), "code")?;
    let values = members.iter().map(|&m| edit_distance(store, code, m)).collect();
    Ok(ConsistencySet { values, conditioning: SetConditioning::Concepts { members, anchor: code } })
}

/// Edit distances for the selected codes under one direction.
pub fn code_set<T: Scalar>(store: &FeatureStore<T>, codes: &[usize], direction: usize) -> Result<ConsistencySet<T>> {
    let members = normalize_subset(codes, store.num_codes(), "code")?;
    check_index(direction, store.num_directions(), "concept")?;
    let values = members.iter().map(|&n| edit_distance(store, n, direction)).collect();
    Ok(ConsistencySet { values, conditioning: SetConditioning::Codes { members, anchor: direction } })
}

fn check_index(i: usize, bound: usize, what: &str) -> Result<()> {
    if i >= bound {
        return Err(Error::Selection(format!("{what} index {i} out of range (< {bound})")));
    }
    Ok(())
}

pub fn concept_consistency<T: Scalar>(store: &FeatureStore<T>, directions: &[usize], code: usize) -> Result<ConsistencyStats<T>> {
    ConsistencyStats::of(&concept_set(store, directions, code)?.values)
}

pub fn code_consistency<T: Scalar>(store: &FeatureStore<T>, codes: &[usize], direction: usize) -> Result<ConsistencyStats<T>> {
    ConsistencyStats::of(&code_set(store, codes, direction)?.values)
}

/// All N×M edit distances, computed once.
///
/// Entries are bit-identical to [`edit_distance`], so statistics computed
/// from the grid match the per-call functions exactly.
#[derive(Clone, Debug)]
pub struct EditGrid<T> {
    num_codes: usize,
    num_directions: usize,
    values: Vec<T>,
}

impl<T: Scalar> EditGrid<T> {
    pub fn new(store: &FeatureStore<T>) -> Self {
        let (n, m) = (store.num_codes(), store.num_directions());
        let values = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (0..m).map(move |j| edit_distance(store, i, j)))
            .collect();
        EditGrid { num_codes: n, num_directions: m, values }
    }

    pub fn num_codes(&self) -> usize {
        self.num_codes
    }

    pub fn num_directions(&self) -> usize {
        self.num_directions
    }

    #[inline]
    pub fn get(&self, code: usize, direction: usize) -> T {
        self.values[code * self.num_directions + direction]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Stats of a node's leaf set averaged over the opposite-side selection.
    /// `selection` must already be sorted and deduplicated.
    fn node_stats_sorted(&self, kind: HierarchyKind, leaves: &[usize], selection: &[usize]) -> Result<ConsistencyStats<T>> {
        let mut buf = Vec::with_capacity(leaves.len());
        let per: Vec<ConsistencyStats<T>> = selection
            .iter()
            .map(|&anchor| {
                buf.clear();
                match kind {
                    HierarchyKind::Concept => buf.extend(leaves.iter().map(|&m| self.get(anchor, m))),
                    HierarchyKind::Code => buf.extend(leaves.iter().map(|&n| self.get(n, anchor))),
                }
                ConsistencyStats::of(&buf)
            })
            .collect::<Result<_>>()?;
        ConsistencyStats::average(&per)
    }

    fn opposite_selection(&self, kind: HierarchyKind, selection: Option<&[usize]>) -> Result<Vec<usize>> {
        let bound = match kind {
            HierarchyKind::Concept => self.num_codes,
            HierarchyKind::Code => self.num_directions,
        };
        match selection {
            Some(s) => normalize_subset(s, bound, kind.opposite().as_str()),
            None => Ok((0..bound).collect()),
        }
    }

    /// For a concept node: per selected code, stats over the node's directions,
    /// then the mean of those means and of those stds. Code nodes mirror this
    /// over a concept selection. `None` selects the whole opposite side.
    pub fn node_consistency<U>(&self, kind: HierarchyKind, node: &Node<U>, selection: Option<&[usize]>) -> Result<ConsistencyStats<T>> {
        let sel = self.opposite_selection(kind, selection)?;
        self.node_stats_sorted(kind, &node.leaves, &sel)
    }

    /// Stats for every node of `h`, indexed by node id.
    pub fn hierarchy_consistency<U: Scalar>(&self, h: &Hierarchy<U>, selection: Option<&[usize]>) -> Result<Vec<ConsistencyStats<T>>> {
        let sel = self.opposite_selection(h.kind, selection)?;
        h.nodes().par_iter().map(|v| self.node_stats_sorted(h.kind, &v.leaves, &sel)).collect()
    }
}

pub fn node_consistency<T: Scalar, U>(
    store: &FeatureStore<T>,
    kind: HierarchyKind,
    node: &Node<U>,
    selection: Option<&[usize]>,
) -> Result<ConsistencyStats<T>> {
    let leaves = match kind {
        HierarchyKind::Concept => normalize_subset(&node.leaves, store.num_directions(), "concept")?,
        HierarchyKind::Code => normalize_subset(&node.leaves, store.num_codes(), "code")?,
    };
    let bound = match kind {
        HierarchyKind::Concept => store.num_codes(),
        HierarchyKind::Code => store.num_directions(),
    };
    let sel = match selection {
        Some(s) => normalize_subset(s, bound, kind.opposite().as_str())?,
        None => (0..bound).collect(),
    };
    let per: Vec<ConsistencyStats<T>> = sel
        .iter()
        .map(|&anchor| match kind {
            HierarchyKind::Concept => concept_consistency(store, &leaves, anchor),
            HierarchyKind::Code => code_consistency(store, &leaves, anchor),
        })
        .collect::<Result<_>>()?;
    ConsistencyStats::average(&per)
}
