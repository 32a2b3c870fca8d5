//! Small numerical kernels: compensated summation, root finding, finite
//! differences, and a dense linear solve.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = KahanSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Bisection for a continuous increasing `f` with `f(lo) <= target <= f(hi)`.
/// Returns `x` with `|f(x) - target| <= tol` or the interval midpoint once
/// the bracket is at rounding width.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    tol: f64,
) -> f64 {
    debug_assert!(lo <= hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let v = f(mid);
        if (v - target).abs() <= tol {
            return mid;
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Safeguarded Newton iteration for increasing `f` on a bracket `[lo, hi]`
/// containing `target`. Falls back to bisection whenever the Newton step
/// leaves the bracket or the derivative is near zero.
pub fn newton_bisect<F, D>(
    mut f: F,
    mut df: D,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    tol: f64,
    max_iters: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iters {
        let v = f(x) - target;
        if v.abs() <= tol {
            return Ok(x);
        }
        if v > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let newton = if d.abs() > 1e-12 { x - v / d } else { f64::NAN };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * (1.0 + x.abs()) {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        iters: max_iters,
        residual: f(x) - target,
    })
}

/// Central first derivative with one Richardson extrapolation level.
pub fn fd_first<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    let d = |f: &mut F, h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let d1 = d(&mut f, h);
    let d2 = d(&mut f, 2.0 * h);
    (4.0 * d1 - d2) / 3.0
}

/// Central second derivative with one Richardson extrapolation level.
pub fn fd_second<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    let fx = f(x);
    let s = |f: &mut F, h: f64, fx: f64| (f(x + h) - 2.0 * fx + f(x - h)) / (h * h);
    let s1 = s(&mut f, h, fx);
    let s2 = s(&mut f, 2.0 * h, fx);
    (4.0 * s1 - s2) / 3.0
}

/// Dense linear solve `A x = b` via LU with partial pivoting.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let rhs = DVector::from_column_slice(b);
    m.lu()
        .solve(&rhs)
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| Error::NoMeasure("singular linear system in variance solve".into()))
}
