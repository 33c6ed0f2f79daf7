use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyKind {
    Concept,
    Code,
}

impl HierarchyKind {
    pub fn opposite(self) -> Self {
        match self {
            HierarchyKind::Concept => HierarchyKind::Code,
            HierarchyKind::Code => HierarchyKind::Concept,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HierarchyKind::Concept => "concept",
            HierarchyKind::Code => "code",
        }
    }
}

impl std::fmt::Display for HierarchyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for HierarchyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concept" => Ok(HierarchyKind::Concept),
            "code" => Ok(HierarchyKind::Code),
            other => Err(Error::Config(format!("unknown hierarchy kind {other:?}"))),
        }
    }
}

/// One agglomeration step joining clusters `a < b` (by id) at `height`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge<T> {
    pub a: usize,
    pub b: usize,
    pub height: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node<T> {
    pub id: usize,
    pub parent: Option<usize>,
    /// Left child first, in display order.
    pub children: Option<[usize; 2]>,
    pub height: T,
    /// Sorted leaf indices.
    pub leaves: Vec<usize>,
    pub depth: usize,
    /// Half-open position range of this node's leaves within `leaf_order`.
    pub leaf_range: (usize, usize),
}

impl<T> Node<T> {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn cardinality(&self) -> usize {
        self.leaves.len()
    }
}

/// Binary agglomerative tree over `n` items.
///
/// Leaf nodes carry ids `0..n` (the item index); internal nodes carry ids
/// `n..2n-1` in merge order, so the root is always `2n - 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hierarchy<T> {
    pub kind: HierarchyKind,
    pub snapshot_id: String,
    /// Opposite-side leaf indices the distances were aggregated over.
    pub conditioning: Option<Vec<usize>>,
    nodes: Vec<Node<T>>,
    leaf_order: Vec<usize>,
}

pub fn fresh_snapshot_id(kind: HierarchyKind) -> String {
    format!("{}-{}", kind.as_str(), uuid::Uuid::new_v4().simple())
}

impl<T: Scalar> Hierarchy<T> {
    /// Assembles a tree from a full merge sequence and a leaf order; children
    /// are oriented so that each node's leaves are contiguous in `leaf_order`.
    pub fn from_merges(kind: HierarchyKind, n: usize, merges: &[Merge<T>], leaf_order: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Data("hierarchy over zero items".into()));
        }
        if merges.len() != n - 1 {
            return Err(Error::Data(format!("{n} leaves need {} merges, got {}", n - 1, merges.len())));
        }
        check_permutation(&leaf_order, n)?;
        let mut position = vec![0; n];
        for (p, &leaf) in leaf_order.iter().enumerate() {
            position[leaf] = p;
        }
        let mut nodes: Vec<Node<T>> = (0..n)
            .map(|i| Node {
                id: i,
                parent: None,
                children: None,
                height: T::zero(),
                leaves: vec![i],
                depth: 0,
                leaf_range: (position[i], position[i] + 1),
            })
            .collect();
        for (step, m) in merges.iter().enumerate() {
            let id = n + step;
            for c in [m.a, m.b] {
                if c >= id || nodes[c].parent.is_some() {
                    return Err(Error::Data(format!("merge {step} reuses or forward-references cluster {c}")));
                }
            }
            let (ra, rb) = (nodes[m.a].leaf_range, nodes[m.b].leaf_range);
            let (left, right) = if ra.0 <= rb.0 { (m.a, m.b) } else { (m.b, m.a) };
            let (rl, rr) = (nodes[left].leaf_range, nodes[right].leaf_range);
            if rl.1 != rr.0 {
                return Err(Error::Data(format!("leaf order splits the leaves of merge {step}")));
            }
            let mut leaves = [nodes[m.a].leaves.as_slice(), nodes[m.b].leaves.as_slice()].concat();
            leaves.sort_unstable();
            nodes[m.a].parent = Some(id);
            nodes[m.b].parent = Some(id);
            nodes.push(Node {
                id,
                parent: None,
                children: Some([left, right]),
                height: m.height,
                leaves,
                depth: 0,
                leaf_range: (rl.0, rr.1),
            });
        }
        // ids increase toward the root, so a reverse sweep sees parents first
        for id in (0..nodes.len()).rev() {
            if let Some(p) = nodes[id].parent {
                nodes[id].depth = nodes[p].depth + 1;
            }
        }
        let h = Hierarchy { kind, snapshot_id: fresh_snapshot_id(kind), conditioning: None, nodes, leaf_order };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_leaves();
        if self.nodes.len() != 2 * n - 1 {
            return Err(Error::Data(format!("{} nodes for {n} leaves", self.nodes.len())));
        }
        check_permutation(&self.leaf_order, n)?;
        let roots = self.nodes.iter().filter(|v| v.parent.is_none()).count();
        if roots != 1 {
            return Err(Error::Data(format!("{roots} roots")));
        }
        for (id, v) in self.nodes.iter().enumerate() {
            if v.id != id {
                return Err(Error::Data(format!("node at position {id} has id {}", v.id)));
            }
            let placed: Vec<usize> = {
                let mut p = self.leaf_order[v.leaf_range.0..v.leaf_range.1].to_vec();
                p.sort_unstable();
                p
            };
            if placed != v.leaves {
                return Err(Error::Data(format!("leaf range of node {id} disagrees with its leaf set")));
            }
            match v.children {
                None if id >= n => return Err(Error::Data(format!("internal node {id} has no children"))),
                Some(_) if id < n => return Err(Error::Data(format!("leaf {id} has children"))),
                Some([l, r]) => {
                    let (cl, cr) = (&self.nodes[l], &self.nodes[r]);
                    if cl.parent != Some(id) || cr.parent != Some(id) {
                        return Err(Error::Data(format!("children of {id} do not point back")));
                    }
                    if cl.height > v.height || cr.height > v.height {
                        return Err(Error::Data(format!("merge height decreases at node {id}")));
                    }
                    if cl.leaf_range.1 != cr.leaf_range.0 || cl.leaf_range.0 != v.leaf_range.0 || cr.leaf_range.1 != v.leaf_range.1 {
                        return Err(Error::Data(format!("children of {id} do not tile its leaf range")));
                    }
                    if cl.depth != v.depth + 1 || cr.depth != v.depth + 1 {
                        return Err(Error::Data(format!("depth mismatch below node {id}")));
                    }
                }
                None => {}
            }
        }
        if self.nodes[self.root()].depth != 0 {
            return Err(Error::Data("root depth must be 0".into()));
        }
        Ok(())
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.len().div_ceil(2)
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Option<&Node<T>> {
        self.nodes.get(id)
    }

    pub fn leaf_order(&self) -> &[usize] {
        &self.leaf_order
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|v| v.depth).max().unwrap_or(0)
    }

    /// Merge sequence in agglomeration order, children as (smaller id, larger id).
    pub fn merges(&self) -> Vec<Merge<T>> {
        self.nodes[self.num_leaves()..]
            .iter()
            .map(|v| {
                let [l, r] = v.children.expect("internal node");
                Merge { a: l.min(r), b: l.max(r), height: v.height }
            })
            .collect()
    }

    /// Same tree with children re-oriented to follow a new leaf order.
    pub fn with_leaf_order(&self, leaf_order: Vec<usize>) -> Result<Self> {
        let mut h = Self::from_merges(self.kind, self.num_leaves(), &self.merges(), leaf_order)?;
        h.snapshot_id = self.snapshot_id.clone();
        h.conditioning = self.conditioning.clone();
        Ok(h)
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        let (mut x, mut y) = (a, b);
        while x != y {
            if self.nodes[x].depth >= self.nodes[y].depth {
                x = self.nodes[x].parent.expect("non-root has a parent");
            } else {
                y = self.nodes[y].parent.expect("non-root has a parent");
            }
        }
        x
    }

    /// Nodes forming the display cut at `depth`: nodes at exactly that depth,
    /// plus leaves that end above it. Returned in leaf order.
    pub fn cut_nodes(&self, depth: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            let v = &self.nodes[id];
            match v.children {
                Some([l, r]) if v.depth < depth => {
                    stack.push(r);
                    stack.push(l);
                }
                _ => out.push(id),
            }
        }
        out
    }

    pub fn is_cut_node(&self, id: usize, depth: usize) -> bool {
        self.nodes.get(id).is_some_and(|v| v.depth == depth || (v.is_leaf() && v.depth < depth))
    }

    /// Cluster label (a node id) per leaf index for the cut at `depth`.
    pub fn cut_at_depth(&self, depth: usize) -> Vec<usize> {
        let mut labels = vec![0; self.num_leaves()];
        for id in self.cut_nodes(depth) {
            for &leaf in &self.nodes[id].leaves {
                labels[leaf] = id;
            }
        }
        labels
    }

    /// Cluster label per leaf after undoing the last `k - 1` merges.
    pub fn cut_clusters(&self, k: usize) -> Vec<usize> {
        let n = self.num_leaves();
        let k = k.clamp(1, n);
        let limit = n + (n - k);
        (0..n)
            .map(|leaf| {
                let mut id = leaf;
                while let Some(p) = self.nodes[id].parent.filter(|&p| p < limit) {
                    id = p;
                }
                id
            })
            .collect()
    }

    pub fn to_doc(&self) -> HierarchyDoc<T> {
        HierarchyDoc {
            kind: self.kind,
            snapshot_id: self.snapshot_id.clone(),
            conditioning: self.conditioning.clone(),
            leaf_order: self.leaf_order.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|v| NodeDoc {
                    id: v.id,
                    parent: v.parent,
                    children: v.children,
                    height: v.height,
                    depth: v.depth,
                    leaf_range: [v.leaf_range.0, v.leaf_range.1],
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: HierarchyDoc<T>) -> Result<Self> {
        let n = doc.leaf_order.len();
        if n == 0 || doc.nodes.len() != 2 * n - 1 {
            return Err(Error::Format(format!("{} nodes for {n} leaves", doc.nodes.len())));
        }
        check_permutation(&doc.leaf_order, n).map_err(|e| Error::Format(e.to_string()))?;
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for (pos, d) in doc.nodes.into_iter().enumerate() {
            let [s, e] = d.leaf_range;
            if d.id != pos || s >= e || e > n {
                return Err(Error::Format(format!("node entry {pos} malformed")));
            }
            let mut leaves = doc.leaf_order[s..e].to_vec();
            leaves.sort_unstable();
            nodes.push(Node {
                id: d.id,
                parent: d.parent,
                children: d.children,
                height: d.height,
                leaves,
                depth: d.depth,
                leaf_range: (s, e),
            });
        }
        if nodes.iter().any(|v| v.parent.is_some_and(|p| p >= nodes.len()) || v.children.is_some_and(|c| c.iter().any(|&x| x >= nodes.len()))) {
            return Err(Error::Format("node reference out of range".into()));
        }
        let h = Hierarchy { kind: doc.kind, snapshot_id: doc.snapshot_id, conditioning: doc.conditioning, nodes, leaf_order: doc.leaf_order };
        h.validate().map_err(|e| Error::Format(e.to_string()))?;
        Ok(h)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("hierarchy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: HierarchyDoc<T> = serde_json::from_str(text).map_err(|e| Error::Format(format!("hierarchy: {e}")))?;
        Self::from_doc(doc)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Equal trees irrespective of snapshot id.
    pub fn same_dendrogram(&self, other: &Self) -> bool {
        self.kind == other.kind && self.nodes == other.nodes && self.leaf_order == other.leaf_order
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::Data(format!("leaf order has {} entries for {n} leaves", order.len())));
    }
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Data(format!("leaf order is not a permutation (at {i})")));
        }
    }
    Ok(())
}

/// Serialized hierarchy: nodes with id/parent/children/height/depth/leaf range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyDoc<T> {
    pub kind: HierarchyKind,
    pub snapshot_id: String,
    #[serde(default)]
    pub conditioning: Option<Vec<usize>>,
    pub leaf_order: Vec<usize>,
    pub nodes: Vec<NodeDoc<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc<T> {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Option<[usize; 2]>,
    pub height: T,
    pub depth: usize,
    pub leaf_range: [usize; 2],
}
