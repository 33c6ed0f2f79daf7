//! Independent reference implementations. Nothing here calls into the
//! engine's numeric paths; inputs are built through public constructors only.

use concept_lens::cluster::{natural_order, DistanceMatrix, Hierarchy, HierarchyKind, Merge};
use concept_lens::matrix::Matrix;
use concept_lens::store::FeatureStore;
use rand::Rng;

/// Random store with f32-representable features in [-1, 1).
pub fn random_store(rng: &mut impl Rng, n: usize, m: usize, k: usize) -> FeatureStore<f64> {
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-1.0f32..1.0) as f64).collect() };
    let base = draw(n * k);
    let edited = draw(n * m * k);
    FeatureStore::new(5.0, Matrix::from_row_major(n, k, base).unwrap(), m, edited, None, None).unwrap()
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    1.0 - dot / (nu * nv)
}

/// Edited features minus their mean over all N·M pairs, as `c[n][m][..]`.
pub fn centered(store: &FeatureStore<f64>) -> Vec<Vec<Vec<f64>>> {
    let (n, m, k) = (store.num_codes(), store.num_directions(), store.feature_dim());
    let mut mean = vec![0.0; k];
    for i in 0..n {
        for j in 0..m {
            for (c, x) in store.edited(i, j).iter().enumerate() {
                mean[c] += x;
            }
        }
    }
    mean.iter_mut().for_each(|x| *x /= (n * m) as f64);
    (0..n)
        .map(|i| (0..m).map(|j| store.edited(i, j).iter().zip(&mean).map(|(x, mu)| x - mu).collect()).collect())
        .collect()
}

/// Mean over `codes` of the cosine distance between centered edits of two directions.
pub fn concept_distances(store: &FeatureStore<f64>, codes: Option<&[usize]>) -> Vec<Vec<f64>> {
    let c = centered(store);
    let all: Vec<usize> = (0..store.num_codes()).collect();
    let codes = codes.unwrap_or(&all);
    let m = store.num_directions();
    let mut out = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..m {
            if a != b {
                out[a][b] = codes.iter().map(|&n| cosine(&c[n][a], &c[n][b])).sum::<f64>() / codes.len() as f64;
            }
        }
    }
    out
}

/// Unsteered: cosine between base rows. Steered: mean over `concepts` of the
/// cosine between centered edits of two codes.
pub fn code_distances(store: &FeatureStore<f64>, concepts: Option<&[usize]>) -> Vec<Vec<f64>> {
    let n = store.num_codes();
    let mut out = vec![vec![0.0; n]; n];
    let c = centered(store);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            out[a][b] = match concepts {
                None => cosine(store.base(a), store.base(b)),
                Some(s) => s.iter().map(|&m| cosine(&c[a][m], &c[b][m])).sum::<f64>() / s.len() as f64,
            };
        }
    }
    out
}

pub fn edit_distance(store: &FeatureStore<f64>, n: usize, m: usize) -> f64 {
    store.base(n).iter().zip(store.edited(n, m)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Complete linkage by re-scanning every cluster pair at every step, with
/// inter-cluster distance recomputed from members. Returns (min id, max id, height).
pub fn naive_complete_linkage(d: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    let mut next = n;
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in x + 1..clusters.len() {
                let mut h = f64::NEG_INFINITY;
                for &p in &clusters[x].1 {
                    for &q in &clusters[y].1 {
                        h = h.max(d[p][q]);
                    }
                }
                let (lo, hi) = (clusters[x].0.min(clusters[y].0), clusters[x].0.max(clusters[y].0));
                let take = match best {
                    None => true,
                    Some((bh, blo, bhi, _, _)) => h < bh || (h == bh && (lo, hi) < (blo, bhi)),
                };
                if take {
                    best = Some((h, lo, hi, x, y));
                }
            }
        }
        let (h, lo, hi, x, y) = best.unwrap();
        let mut members = clusters[x].1.clone();
        members.extend(&clusters[y].1);
        clusters.remove(y);
        clusters.remove(x);
        clusters.push((next, members));
        next += 1;
        out.push((lo, hi, h));
    }
    out
}

/// Symmetric random matrix; `ties` draws small integers so equal distances are common.
pub fn random_distances(rng: &mut impl Rng, n: usize, ties: bool) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = if ties { rng.random_range(1..5) as f64 } else { rng.random_range(0.0..2.0) };
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

pub fn to_matrix(d: &[Vec<f64>]) -> DistanceMatrix<f64> {
    DistanceMatrix::new(d.len(), d.concat()).unwrap()
}

/// Tree of random shape: each step joins two random active clusters.
pub fn random_hierarchy(rng: &mut impl Rng, n: usize, kind: HierarchyKind) -> Hierarchy<f64> {
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::new();
    for step in 0..n.saturating_sub(1) {
        let x = active.swap_remove(rng.random_range(0..active.len()));
        let y = active.swap_remove(rng.random_range(0..active.len()));
        merges.push(Merge { a: x.min(y), b: x.max(y), height: (step + 1) as f64 });
        active.push(n + step);
    }
    let order = natural_order(n, &merges);
    Hierarchy::from_merges(kind, n, &merges, order).unwrap()
}

/// Every leaf order reachable by flipping internal nodes.
pub fn flip_orders(h: &Hierarchy<f64>, id: usize) -> Vec<Vec<usize>> {
    match h.nodes()[id].children {
        None => vec![vec![id]],
        Some([l, r]) => {
            let (a, b) = (flip_orders(h, l), flip_orders(h, r));
            let mut out = Vec::with_capacity(2 * a.len() * b.len());
            for x in &a {
                for y in &b {
                    out.push([x.as_slice(), y.as_slice()].concat());
                    out.push([y.as_slice(), x.as_slice()].concat());
                }
            }
            out
        }
    }
}

pub fn path_cost(order: &[usize], d: &[Vec<f64>]) -> f64 {
    order.windows(2).map(|w| d[w[0]][w[1]]).sum()
}

/// Depth of the deepest node whose leaf set holds both leaves.
pub fn lca_depth(h: &Hierarchy<f64>, a: usize, b: usize) -> usize {
    h.nodes()
        .iter()
        .filter(|v| v.leaves.contains(&a) && v.leaves.contains(&b))
        .map(|v| v.depth)
        .max()
        .unwrap()
}

/// Right singular vectors (rows) and singular values of `a` via the
/// symmetric eigendecomposition of AᵀA, sorted by descending value.
pub fn svd_oracle(a: &Matrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    let eig = nalgebra::SymmetricEigen::new(m.transpose() * &m);
    let mut idx: Vec<usize> = (0..a.cols()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let values = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
    let vectors = idx.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (values, vectors)
}

/// Distance from `v` to `w` or `-w`, whichever is closer.
pub fn sign_free_gap(v: &[f64], w: &[f64]) -> f64 {
    let plus: f64 = v.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let minus: f64 = v.iter().zip(w).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    plus.min(minus)
}

pub fn random_subset(rng: &mut impl Rng, bound: usize) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (0..bound).filter(|_| rng.random_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}
