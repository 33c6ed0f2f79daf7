//! Right singular vectors via Householder QR followed by one-sided Jacobi.

use crate::matrix::Matrix;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 80;

/// Singular values in non-increasing order, each paired with its right
/// singular vector (unit norm, sign not normalized).
pub struct RightSingular<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

/// Upper-triangular R (cols×cols) of a Householder QR of a tall matrix.
fn householder_r<T: Scalar>(a: &Matrix<T>) -> Vec<Vec<T>> {
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    for j in 0..n.min(m) {
        let norm = cols[j][j..].iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if cols[j][j] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = cols[j][j..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |s, &x| s + x * x);
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::of(2.0);
        for col in cols.iter_mut().skip(j) {
            let proj = v.iter().zip(&col[j..]).fold(T::zero(), |s, (&vi, &ci)| s + vi * ci);
            let f = two * proj / vnorm2;
            for (ci, &vi) in col[j..].iter_mut().zip(&v) {
                *ci = *ci - f * vi;
            }
        }
    }
    // keep the leading n rows; entries below the diagonal are numerically zero
    cols.into_iter()
        .enumerate()
        .map(|(j, c)| (0..n).map(|i| if i <= j && i < m { c[i] } else { T::zero() }).collect())
        .collect()
}

pub fn right_singular<T: Scalar>(a: &Matrix<T>) -> RightSingular<T> {
    let n = a.cols();
    let mut w: Vec<Vec<T>> = if a.rows() > n { householder_r(a) } else { (0..n).map(|j| a.column(j)).collect() };
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = w[p].iter().zip(&w[q]).fold(
                    (T::zero(), T::zero(), T::zero()),
                    |(a, b, g), (&x, &y)| (a + x * x, b + y * y, g + x * y),
                );
                if alpha == T::zero() || beta == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(T, usize)> = w.iter().enumerate().map(|(j, col)| (crate::scalar::norm(col), j)).collect();
    // stable sort keeps column order among equal singular values
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    RightSingular {
        values: order.iter().map(|&(s, _)| s).collect(),
        vectors: order.iter().map(|&(_, j)| v[j].clone()).collect(),
    }
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}
