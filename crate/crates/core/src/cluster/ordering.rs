//! Optimal leaf ordering by dynamic programming over
//! (subtree, leftmost leaf, rightmost leaf).
//!
//! For a node with children `l` and `r`, the best cost of an ordering that
//! starts at leaf `i ∈ l` and ends at `j ∈ r` is
//! `min_{h, m} C(l; i, h) + D(h, m) + C(r; m, j)`, where `h` must be a valid
//! right end for `l` starting at `i` (a leaf of the other child of `l`, or
//! `i` itself when `l` is a leaf) and likewise for `m`. The inner minimum
//! over `h` is hoisted per `(i, m)`, giving O(n³) total work.

use crate::cluster::distance::DistanceMatrix;
use crate::cluster::hierarchy::Hierarchy;
use crate::scalar::Scalar;

/// (endpoint group, valid opposite endpoints) pairs for one subtree.
fn endpoint_groups<T: Scalar>(h: &Hierarchy<T>, id: usize) -> Vec<(&[usize], &[usize])> {
    let v = &h.nodes()[id];
    match v.children {
        None => vec![(&v.leaves[..], &v.leaves[..])],
        Some([a, b]) => {
            let (la, lb) = (&h.nodes()[a].leaves[..], &h.nodes()[b].leaves[..]);
            vec![(la, lb), (lb, la)]
        }
    }
}

/// Sum of distances between consecutive leaves.
pub fn order_cost<T: Scalar>(order: &[usize], dist: &DistanceMatrix<T>) -> T {
    order.windows(2).fold(T::zero(), |acc, w| acc + dist.get(w[0], w[1]))
}

/// Minimum-cost leaf order among the 2^(n−1) orders reachable by flipping
/// internal nodes. Among equal-cost optima the smallest starting leaf wins,
/// then the smallest ending leaf; inner choices prefer smaller indices.
pub fn optimal_leaf_order<T: Scalar>(h: &Hierarchy<T>, dist: &DistanceMatrix<T>) -> Vec<usize> {
    let n = h.num_leaves();
    assert_eq!(n, dist.size(), "hierarchy and distance matrix cover different item sets");
    if n == 1 {
        return vec![0];
    }
    let mut cost = vec![T::zero(); n * n];
    // back[i*n + j] = (x, y): order runs i..x inside i's child, then y..j
    let mut back = vec![(0u32, 0u32); n * n];
    let mut best_via = vec![(T::zero(), 0usize); n];

    // internal ids are in merge order, so children are always solved first
    for id in n..h.nodes().len() {
        let [l, r] = h.nodes()[id].children.expect("internal node");
        let left_groups = endpoint_groups(h, l);
        let right_groups = endpoint_groups(h, r);
        for &(starts, left_ends) in &left_groups {
            for &i in starts {
                // best_via[m] = min_h cost(i, h) + D(h, m), for every m in r
                for &(_, right_heads) in &right_groups {
                    for &m in right_heads {
                        let mut best = (T::infinity(), 0);
                        for &hh in left_ends {
                            let c = cost[i * n + hh] + dist.get(hh, m);
                            if c < best.0 {
                                best = (c, hh);
                            }
                        }
                        best_via[m] = best;
                    }
                }
                for &(ends, heads) in &right_groups {
                    for &j in ends {
                        let mut best = (T::infinity(), 0, 0);
                        for &m in heads {
                            let c = best_via[m].0 + cost[m * n + j];
                            if c < best.0 {
                                best = (c, best_via[m].1, m);
                            }
                        }
                        let (c, hh, m) = best;
                        cost[i * n + j] = c;
                        cost[j * n + i] = c;
                        back[i * n + j] = (hh as u32, m as u32);
                        back[j * n + i] = (m as u32, hh as u32);
                    }
                }
            }
        }
    }

    let root = h.root();
    let mut best = (T::infinity(), 0, 0);
    let [rl, rr] = h.nodes()[root].children.expect("root is internal");
    let mut starts: Vec<usize> = h.nodes()[rl].leaves.iter().chain(&h.nodes()[rr].leaves).copied().collect();
    starts.sort_unstable();
    let in_left = |x: usize| h.nodes()[rl].leaves.binary_search(&x).is_ok();
    for &a in &starts {
        let others = if in_left(a) { &h.nodes()[rr].leaves } else { &h.nodes()[rl].leaves };
        for &b in others {
            let c = cost[a * n + b];
            if c < best.0 {
                best = (c, a, b);
            }
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut stack = vec![(best.1, best.2)];
    while let Some((a, b)) = stack.pop() {
        if a == b {
            order.push(a);
            continue;
        }
        let (x, y) = back[a * n + b];
        stack.push((y as usize, b));
        stack.push((a, x as usize));
    }
    order
}
