use crate::cluster::distance::DistanceMatrix;
use crate::cluster::hierarchy::{Hierarchy, HierarchyKind, Merge};
use crate::error::Result;
use crate::scalar::Scalar;

/// Complete-linkage agglomeration.
///
/// Keeps a working matrix of inter-cluster distances updated with
/// `d(A ∪ B, C) = max(d(A, C), d(B, C))`, which equals the maximum pairwise
/// member distance. Each step merges the closest pair; ties go to the
/// smallest `(min id, max id)`. O(n³) time, O(n²) memory.
pub fn linkage<T: Scalar>(dist: &DistanceMatrix<T>) -> Vec<Merge<T>> {
    let n = dist.size();
    let mut work: Vec<T> = dist.values().to_vec();
    let mut cluster_id: Vec<usize> = (0..n).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(T, usize, usize, usize, usize)> = None;
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                let d = work[i * n + j];
                let (lo, hi) = (cluster_id[i].min(cluster_id[j]), cluster_id[i].max(cluster_id[j]));
                let better = match best {
                    None => true,
                    Some((bd, blo, bhi, _, _)) => d < bd || (d == bd && (lo, hi) < (blo, bhi)),
                };
                if better {
                    best = Some((d, lo, hi, i, j));
                }
            }
        }
        let (height, a, b, i, j) = best.expect("at least two active clusters");
        merges.push(Merge { a, b, height });
        // slot i now holds the merged cluster, slot j retires
        for &x in &active {
            if x != i && x != j {
                let v = work[i * n + x].max(work[j * n + x]);
                work[i * n + x] = v;
                work[x * n + i] = v;
            }
        }
        cluster_id[i] = n + step;
        active.retain(|&x| x != j);
    }
    merges
}

/// In-order leaf sequence of a merge list with children taken as given.
pub fn natural_order<T: Scalar>(n: usize, merges: &[Merge<T>]) -> Vec<usize> {
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for m in merges {
        let mut joined = std::mem::take(&mut members[m.a]);
        joined.append(&mut std::mem::take(&mut members[m.b]));
        members.push(joined);
    }
    members.pop().unwrap_or_default()
}

pub fn agglomerate<T: Scalar>(dist: &DistanceMatrix<T>, kind: HierarchyKind) -> Result<Hierarchy<T>> {
    let merges = linkage(dist);
    let order = natural_order(dist.size(), &merges);
    Hierarchy::from_merges(kind, dist.size(), &merges, order)
}
