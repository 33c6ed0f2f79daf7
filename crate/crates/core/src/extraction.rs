//! Concept direction discovery from generator affine weights.
//!
//! Each round drops `r` random rows from every layer matrix, stacks the
//! remainder, and harvests the leading right singular vectors of the stack
//! (optionally skipping the very first). Rounds repeat with fresh row draws
//! until the direction budget is met.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::right_singular;
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::store::WeightBundle;

const DUPLICATE_COSINE: f64 = 1.0 - 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Rows removed from each layer per round. No default: it depends on the generator.
    pub rows_to_drop: usize,
    pub top_k: usize,
    pub exclude_first: bool,
    pub budget: usize,
    pub seed: u64,
}

impl ExtractionConfig {
    pub fn new(rows_to_drop: usize, seed: u64) -> Self {
        ExtractionConfig { rows_to_drop, top_k: 20, exclude_first: true, budget: 400, seed }
    }

    pub fn validate<T: Scalar>(&self, bundle: &WeightBundle<T>) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        check_drop(bundle, self.rows_to_drop)
    }
}

fn check_drop<T: Scalar>(bundle: &WeightBundle<T>, r: usize) -> Result<()> {
    match bundle.layers().iter().find(|l| r >= l.matrix.rows()) {
        Some(l) => Err(Error::Config(format!(
            "cannot drop {r} rows from layer {:?} with {} rows",
            l.name,
            l.matrix.rows()
        ))),
        None => Ok(()),
    }
}

/// SplitMix64 over (seed, round) so every round gets an independent stream.
pub fn round_seed(seed: u64, round: usize) -> u64 {
    let mut z = seed ^ (round as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Removes `r` uniformly chosen rows from every layer (without replacement,
/// independently per layer) and stacks what remains, preserving row order.
pub fn stack_and_drop<T: Scalar>(bundle: &WeightBundle<T>, r: usize, seed: u64) -> Result<Matrix<T>> {
    check_drop(bundle, r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = Vec::with_capacity(bundle.layers().len());
    for layer in bundle.layers() {
        let a = &layer.matrix;
        let mut dropped = vec![false; a.rows()];
        for i in index::sample(&mut rng, a.rows(), r) {
            dropped[i] = true;
        }
        let kept: Vec<&[T]> = (0..a.rows()).filter(|&i| !dropped[i]).map(|i| a.row(i)).collect();
        parts.push(Matrix::from_rows(&kept)?);
    }
    Matrix::vstack(&parts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundDirection<T> {
    pub vector: Vec<T>,
    /// 1-based rank of the singular value.
    pub rank: usize,
    pub singular_value: T,
}

fn normalize_sign<T: Scalar>(v: &mut [T]) {
    let tiny = T::epsilon().sqrt();
    if let Some(&first) = v.iter().find(|x| x.abs() > tiny) {
        if first < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Right singular vectors ranked by singular value. With `exclude_first`
/// the top one is skipped and ranks `2..=top_k+1` are returned.
pub fn extract_round<T: Scalar>(stacked: &Matrix<T>, top_k: usize, exclude_first: bool) -> Result<Vec<RoundDirection<T>>> {
    let skip = usize::from(exclude_first);
    let needed = top_k + skip;
    let svd = right_singular(stacked);
    let sigma_max = svd.values.first().copied().unwrap_or_else(T::zero);
    let tol = sigma_max * T::from_count(stacked.rows().max(stacked.cols())) * T::epsilon();
    let rank = svd.values.iter().take_while(|&&s| s > tol && s > T::zero()).count();
    if rank < needed {
        return Err(Error::Extraction {
            message: format!(
                "stacked matrix {}x{} has numerical rank {rank}, need {needed}",
                stacked.rows(),
                stacked.cols()
            ),
            achievable: rank.saturating_sub(skip),
        });
    }
    Ok(svd
        .vectors
        .into_iter()
        .zip(svd.values)
        .enumerate()
        .skip(skip)
        .take(top_k)
        .map(|(i, (mut vector, singular_value))| {
            let n = crate::scalar::norm(&vector);
            vector.iter_mut().for_each(|x| *x = *x / n);
            normalize_sign(&mut vector);
            RoundDirection { vector, rank: i + 1, singular_value }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance<T> {
    pub round: usize,
    pub rank: usize,
    pub singular_value: T,
    /// Index of an earlier direction this one repeats, if any.
    pub duplicate_of: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet<T> {
    pub directions: Matrix<T>,
    pub provenance: Vec<Provenance<T>>,
}

impl<T: Scalar> DirectionSet<T> {
    pub fn len(&self) -> usize {
        self.directions.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duplicate_count(&self) -> usize {
        self.provenance.iter().filter(|p| p.duplicate_of.is_some()).count()
    }

    pub fn rounds(&self) -> usize {
        self.provenance.last().map_or(0, |p| p.round + 1)
    }
}

pub fn extract_budget<T: Scalar>(bundle: &WeightBundle<T>, cfg: &ExtractionConfig) -> Result<DirectionSet<T>> {
    cfg.validate(bundle)?;
    let rounds = cfg.budget.div_ceil(cfg.top_k);
    let per_round: Vec<Vec<RoundDirection<T>>> = (0..rounds)
        .into_par_iter()
        .map(|round| {
            let stacked = stack_and_drop(bundle, cfg.rows_to_drop, round_seed(cfg.seed, round))?;
            let dirs = extract_round(&stacked, cfg.top_k, cfg.exclude_first)?;
            if dirs.is_empty() {
                return Err(Error::Extraction { message: format!("round {round} produced no directions"), achievable: 0 });
            }
            Ok(dirs)
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<Vec<T>> = Vec::with_capacity(cfg.budget);
    let mut provenance = Vec::with_capacity(cfg.budget);
    'outer: for (round, dirs) in per_round.into_iter().enumerate() {
        let earlier = rows.len();
        for d in dirs {
            if rows.len() == cfg.budget {
                break 'outer;
            }
            let duplicate_of = rows[..earlier]
                .iter()
                .position(|prev| crate::scalar::dot(prev, &d.vector).abs().as_f64() >= DUPLICATE_COSINE);
            provenance.push(Provenance { round, rank: d.rank, singular_value: d.singular_value, duplicate_of });
            rows.push(d.vector);
        }
    }
    Ok(DirectionSet { directions: Matrix::from_rows(&rows)?, provenance })
}
