//! Deterministic synthetic stores with planted concept and code groups.
//!
//! Directions fall into `concept_groups` groups; groups pair up into
//! super-groups so the planted structure is itself two levels deep. Each
//! group further splits into two subgroups whose edits differ only on codes
//! of `steer_group`, which is what steering on that code group should expose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::store::FeatureStore;

const OFFSET_SCALE: f64 = 2.0;
const SUPER_SCALE: f64 = 4.0;
const GROUP_SCALE: f64 = 2.0;
const SUBGROUP_SCALE: f64 = 1.0;
const CODE_JITTER: f64 = 0.3;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub num_codes: usize,
    pub num_directions: usize,
    pub feature_dim: usize,
    pub latent_dim: usize,
    pub seed: u64,
    pub concept_groups: usize,
    pub code_groups: usize,
    /// Norm scale of the Gaussian noise added to edited features.
    pub noise: f64,
    pub steer_group: usize,
    pub alpha: f64,
}

impl SyntheticConfig {
    pub fn new(num_codes: usize, num_directions: usize, feature_dim: usize, latent_dim: usize, seed: u64) -> Self {
        SyntheticConfig {
            num_codes,
            num_directions,
            feature_dim,
            latent_dim,
            seed,
            concept_groups: 4,
            code_groups: 3,
            noise: 0.02,
            steer_group: 0,
            alpha: 5.0,
        }
    }
}

/// Ground truth labels of a synthetic store.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedTruth {
    pub concept_groups: Vec<usize>,
    /// `2 * group + subgroup` per direction.
    pub concept_subgroups: Vec<usize>,
    pub code_groups: Vec<usize>,
    pub steer_group: usize,
}

impl PlantedTruth {
    pub fn codes_in_group(&self, group: usize) -> Vec<usize> {
        (0..self.code_groups.len()).filter(|&n| self.code_groups[n] == group).collect()
    }
}

fn unit_gaussian(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `count` unit vectors, mutually orthogonal for the first `k` of them.
fn planted_basis(rng: &mut ChaCha8Rng, k: usize, count: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v = unit_gaussian(rng, k);
        if basis.len() < k {
            for b in &basis {
                let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-8 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= n);
        }
        basis.push(v);
    }
    basis
}

fn f32_exact<T: Scalar>(v: f64) -> T {
    T::from_f32_exact(v as f32)
}

pub fn generate_planted<T: Scalar>(cfg: &SyntheticConfig) -> Result<(FeatureStore<T>, PlantedTruth)> {
    let (n, m, k, d) = (cfg.num_codes, cfg.num_directions, cfg.feature_dim, cfg.latent_dim);
    if n == 0 || m == 0 || k == 0 || d == 0 {
        return Err(Error::Config("synthetic counts must all be at least 1".into()));
    }
    if cfg.concept_groups == 0 || cfg.code_groups == 0 {
        return Err(Error::Config("group counts must be at least 1".into()));
    }
    if !cfg.noise.is_finite() || cfg.noise < 0.0 || !cfg.alpha.is_finite() {
        return Err(Error::Config("noise and alpha must be finite, noise non-negative".into()));
    }
    let groups = cfg.concept_groups.min(m);
    let code_groups = cfg.code_groups.min(n);
    let concept_groups: Vec<usize> = (0..m).map(|j| j * groups / m).collect();
    let concept_subgroups: Vec<usize> = (0..m)
        .map(|j| {
            let g = concept_groups[j];
            let first = concept_groups.iter().position(|&x| x == g).unwrap();
            2 * g + (j - first) % 2
        })
        .collect();
    let code_group_of: Vec<usize> = (0..n).map(|i| i * code_groups / n).collect();
    let supers = groups.div_ceil(2);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let basis = planted_basis(&mut rng, k, 1 + code_groups + supers + 2 * groups);
    let offset = &basis[0];
    let code_dirs = &basis[1..1 + code_groups];
    let super_dirs = &basis[1 + code_groups..1 + code_groups + supers];
    let group_dirs = &basis[1 + code_groups + supers..1 + code_groups + supers + groups];
    let sub_dirs = &basis[1 + code_groups + supers + groups..];

    let jitter_scale = CODE_JITTER / (k as f64).sqrt();
    let mut base = Vec::with_capacity(n * k);
    for &h in &code_group_of {
        for c in 0..k {
            let j: f64 = rng.sample(StandardNormal);
            base.push(OFFSET_SCALE * offset[c] + code_dirs[h][c] + jitter_scale * j);
        }
    }

    let noise_scale = cfg.noise / (k as f64).sqrt();
    let mut edited = Vec::with_capacity(n * m * k);
    for (i, &h) in code_group_of.iter().enumerate() {
        let gain = 1.0 + 0.25 * h as f64;
        for j in 0..m {
            let g = concept_groups[j];
            let sign = if concept_subgroups[j].is_multiple_of(2) { 1.0 } else { -1.0 };
            let steer = if h == cfg.steer_group { SUBGROUP_SCALE * sign } else { 0.0 };
            for c in 0..k {
                let effect = SUPER_SCALE * super_dirs[g / 2][c] + GROUP_SCALE * group_dirs[g][c] + steer * sub_dirs[g][c];
                let eps: f64 = if cfg.noise > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                edited.push(f32_exact::<T>(base[i * k + c] + gain * effect + noise_scale * eps));
            }
        }
    }
    let base: Vec<T> = base.into_iter().map(f32_exact).collect();

    let latents: Vec<T> = (0..n * d).map(|_| f32_exact(rng.sample(StandardNormal))).collect();
    let directions: Vec<T> = (0..m).flat_map(|_| unit_gaussian(&mut rng, d)).map(f32_exact).collect();

    let store = FeatureStore::new(
        cfg.alpha,
        Matrix::from_row_major(n, k, base)?,
        m,
        edited,
        Some(Matrix::from_row_major(n, d, latents)?),
        Some(Matrix::from_row_major(m, d, directions)?),
    )?;
    let truth = PlantedTruth { concept_groups, concept_subgroups, code_groups: code_group_of, steer_group: cfg.steer_group };
    Ok((store, truth))
}

/// Synthetic store with default planted structure (4 concept groups, 3 code groups).
pub fn generate_synthetic<T: Scalar>(
    num_codes: usize,
    num_directions: usize,
    feature_dim: usize,
    latent_dim: usize,
    seed: u64,
) -> Result<FeatureStore<T>> {
    generate_planted(&SyntheticConfig::new(num_codes, num_directions, feature_dim, latent_dim, seed)).map(|(s, _)| s)
}

/// Fraction of item pairs on which two labelings agree (same vs. different).
pub fn rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings of different length");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}
