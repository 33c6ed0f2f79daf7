use serde::{Deserialize, Serialize};

use crate::consistency::stats::{ConsistencyStats, EditGrid};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::store::FeatureStore;

/// Smallest half-width either axis may have.
pub const MIN_HALFWIDTH: f64 = 1e-6;
/// Domain spans this many population standard deviations around the mean.
pub const DOMAIN_SPREAD: f64 = 2.0;

/// Clamped ranges for the two color axes, as center ± half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorDomain<T> {
    pub mean_center: T,
    pub mean_halfwidth: T,
    pub std_center: T,
    pub std_halfwidth: T,
}

fn axis<T: Scalar>(values: &[T]) -> Result<(T, T)> {
    let s = ConsistencyStats::of(values)?;
    let spread = T::of(DOMAIN_SPREAD) * s.std;
    let lo = (s.mean - spread).max(T::zero());
    let hi = s.mean + spread;
    let half = ((hi - lo) / T::of(2.0)).max(T::of(MIN_HALFWIDTH));
    Ok(((lo + hi) / T::of(2.0), half))
}

impl<T: Scalar> ColorDomain<T> {
    /// Mean axis: mean ± 2σ of all N×M edit distances, floored at 0.
    /// Std axis: mean ± 2σ of the per-code stds (over all directions) pooled
    /// with the per-direction stds (over all codes), floored at 0.
    pub fn from_grid(grid: &EditGrid<T>) -> Result<Self> {
        let (n, m) = (grid.num_codes(), grid.num_directions());
        let (mean_center, mean_halfwidth) = axis(grid.values())?;
        let mut stds = Vec::with_capacity(n + m);
        let mut buf = Vec::with_capacity(n.max(m));
        for code in 0..n {
            buf.clear();
            buf.extend((0..m).map(|d| grid.get(code, d)));
            stds.push(ConsistencyStats::of(&buf)?.std);
        }
        for d in 0..m {
            buf.clear();
            buf.extend((0..n).map(|code| grid.get(code, d)));
            stds.push(ConsistencyStats::of(&buf)?.std);
        }
        let (std_center, std_halfwidth) = axis(&stds)?;
        Ok(ColorDomain { mean_center, mean_halfwidth, std_center, std_halfwidth })
    }

    pub fn mean_range(&self) -> (T, T) {
        (self.mean_center - self.mean_halfwidth, self.mean_center + self.mean_halfwidth)
    }

    pub fn std_range(&self) -> (T, T) {
        (self.std_center - self.std_halfwidth, self.std_center + self.std_halfwidth)
    }

    /// Position of `stats` in the unit square, clamped.
    pub fn normalize(&self, stats: &ConsistencyStats<T>) -> (f64, f64) {
        let unit = |v: T, c: T, h: T| {
            let (lo, hi) = (c - h, c + h);
            ((v - lo) / (hi - lo)).as_f64().clamp(0.0, 1.0)
        };
        (
            unit(stats.mean, self.mean_center, self.mean_halfwidth),
            unit(stats.std, self.std_center, self.std_halfwidth),
        )
    }

    pub fn contains(&self, stats: &ConsistencyStats<T>) -> bool {
        let (ml, mh) = self.mean_range();
        let (sl, sh) = self.std_range();
        stats.mean >= ml && stats.mean <= mh && stats.std >= sl && stats.std <= sh
    }
}

pub fn color_domain<T: Scalar>(store: &FeatureStore<T>) -> Result<ColorDomain<T>> {
    ColorDomain::from_grid(&EditGrid::new(store))
}
