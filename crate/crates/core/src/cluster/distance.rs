use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};
use crate::store::FeatureStore;

const SYMMETRY_TOL: f64 = 1e-9;

/// Symmetric, zero-diagonal, non-negative distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix<T> {
    size: usize,
    values: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// `values` is the full row-major size×size matrix.
    pub fn new(size: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::Corrupt(format!("distance matrix of size {size} needs {} values", size * size)));
        }
        let d = DistanceMatrix { size, values };
        d.check()?;
        Ok(d)
    }

    /// Builds from a closure evaluated on the upper triangle.
    pub fn from_fn(size: usize, f: impl Fn(usize, usize) -> T) -> Result<Self> {
        let mut values = vec![T::zero(); size * size];
        for i in 0..size {
            for j in i + 1..size {
                let v = f(i, j);
                values[i * size + j] = v;
                values[j * size + i] = v;
            }
        }
        Self::new(size, values)
    }

    fn check(&self) -> Result<()> {
        let n = self.size;
        for i in 0..n {
            if self.get(i, i) != T::zero() {
                return Err(Error::Data(format!("distance diagonal ({i},{i}) is {}", self.get(i, i))));
            }
            for j in 0..n {
                let v = self.get(i, j);
                if !v.is_finite() || v < T::zero() {
                    return Err(Error::Data(format!("distance ({i},{j}) = {v} is negative or not finite")));
                }
                if (v - self.get(j, i)).abs().as_f64() > SYMMETRY_TOL {
                    return Err(Error::Data(format!("distance matrix asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.size + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Edited features minus their global mean over all (code, direction) pairs.
#[derive(Clone, Debug)]
pub struct CenteredFeatures<T> {
    num_codes: usize,
    num_directions: usize,
    dim: usize,
    data: Vec<T>,
    mean: Vec<T>,
}

impl<T: Scalar> CenteredFeatures<T> {
    pub fn get(&self, n: usize, m: usize) -> &[T] {
        let off = (n * self.num_directions + m) * self.dim;
        &self.data[off..off + self.dim]
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.num_codes, self.num_directions, self.dim)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Each centered vector scaled to unit length; a zero vector is an error.
    fn normalized(&self) -> Result<Vec<T>> {
        let mut out = self.data.clone();
        for (idx, chunk) in out.chunks_exact_mut(self.dim).enumerate() {
            let len = norm(chunk);
            if len == T::zero() {
                let (n, m) = (idx / self.num_directions, idx % self.num_directions);
                return Err(Error::Degenerate(format!("centered feature of code {n}, direction {m} is zero")));
            }
            chunk.iter_mut().for_each(|v| *v = *v / len);
        }
        Ok(out)
    }
}

/// The mean is accumulated in fixed (code, direction) order, so results are
/// reproducible bit for bit.
pub fn center_features<T: Scalar>(store: &FeatureStore<T>) -> CenteredFeatures<T> {
    let (n, m, k) = (store.num_codes(), store.num_directions(), store.feature_dim());
    let mut mean = vec![T::zero(); k];
    for chunk in store.edited_features().chunks_exact(k) {
        for (acc, &v) in mean.iter_mut().zip(chunk) {
            *acc = *acc + v;
        }
    }
    let count = T::from_count(n * m);
    mean.iter_mut().for_each(|v| *v = *v / count);
    let data = store
        .edited_features()
        .chunks_exact(k)
        .flat_map(|chunk| chunk.iter().zip(&mean).map(|(&v, &mu)| v - mu))
        .collect();
    CenteredFeatures { num_codes: n, num_directions: m, dim: k, data, mean }
}

/// 1 − cos(u, v), clamped to [0, 2].
pub fn cosine_distance<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    let (nu, nv) = (norm(u), norm(v));
    if nu == T::zero() || nv == T::zero() {
        return Err(Error::Degenerate("cosine distance of a zero vector".into()));
    }
    Ok(clamp_distance(T::one() - dot(u, v) / (nu * nv)))
}

fn clamp_distance<T: Scalar>(d: T) -> T {
    d.max(T::zero()).min(T::of(2.0))
}

/// Sorted, deduplicated copy of a selection, checked against `bound`.
pub fn normalize_subset(subset: &[usize], bound: usize, what: &str) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::Selection(format!("empty {what} selection")));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= bound) {
        return Err(Error::Selection(format!("{what} index {bad} out of range (< {bound})")));
    }
    let mut out = subset.to_vec();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Mean over `over` of the cosine distance between unit rows `a` and `b`,
/// where `row(o, x)` addresses the unit vector for outer index `o` and item `x`.
fn aggregated<'a, T: Scalar>(size: usize, over: &[usize], row: impl Fn(usize, usize) -> &'a [T] + Sync) -> Result<DistanceMatrix<T>> {
    let count = T::from_count(over.len());
    let upper: Vec<Vec<T>> = (0..size)
        .into_par_iter()
        .map(|a| {
            (a + 1..size)
                .map(|b| {
                    let sum = over
                        .iter()
                        .fold(T::zero(), |acc, &o| acc + clamp_distance(T::one() - dot(row(o, a), row(o, b))));
                    sum / count
                })
                .collect()
        })
        .collect();
    let mut values = vec![T::zero(); size * size];
    for (a, tail) in upper.iter().enumerate() {
        for (off, &v) in tail.iter().enumerate() {
            let b = a + 1 + off;
            values[a * size + b] = v;
            values[b * size + a] = v;
        }
    }
    DistanceMatrix::new(size, values)
}

/// Aggregated concept distance: for directions j, k, the mean over codes in
/// `code_subset` (default: all) of the cosine distance between their centered
/// edits of the same code. The centering mean is always the global one.
pub fn concept_distances<T: Scalar>(centered: &CenteredFeatures<T>, code_subset: Option<&[usize]>) -> Result<DistanceMatrix<T>> {
    let (n, m, k) = centered.shape();
    let codes = match code_subset {
        Some(s) => normalize_subset(s, n, "code")?,
        None => (0..n).collect(),
    };
    let unit = centered.normalized()?;
    aggregated(m, &codes, |code, dir| {
        let off = (code * m + dir) * k;
        &unit[off..off + k]
    })
}

pub fn concept_distance_matrix<T: Scalar>(store: &FeatureStore<T>, code_subset: Option<&[usize]>) -> Result<DistanceMatrix<T>> {
    concept_distances(&center_features(store), code_subset)
}

/// Without a subset, codes are compared by the cosine distance of their base
/// features. With a concept subset, by how the selected concepts move them:
/// the mean over those directions of the centered-edit cosine distance.
pub fn code_distances<T: Scalar>(
    store: &FeatureStore<T>,
    centered: &CenteredFeatures<T>,
    concept_subset: Option<&[usize]>,
) -> Result<DistanceMatrix<T>> {
    let (n, m, k) = centered.shape();
    match concept_subset {
        None => {
            let mut unit = store.base_features().to_vec();
            for (idx, chunk) in unit.chunks_exact_mut(k).enumerate() {
                let len = norm(chunk);
                if len == T::zero() {
                    return Err(Error::Degenerate(format!("base feature of code {idx} is zero")));
                }
                chunk.iter_mut().for_each(|v| *v = *v / len);
            }
            aggregated(n, &[0], |_, code| &unit[code * k..(code + 1) * k])
        }
        Some(s) => {
            let dirs = normalize_subset(s, m, "concept")?;
            let unit = centered.normalized()?;
            aggregated(n, &dirs, |dir, code| {
                let off = (code * m + dir) * k;
                &unit[off..off + k]
            })
        }
    }
}

pub fn code_distance_matrix<T: Scalar>(store: &FeatureStore<T>, concept_subset: Option<&[usize]>) -> Result<DistanceMatrix<T>> {
    code_distances(store, &center_features(store), concept_subset)
}
