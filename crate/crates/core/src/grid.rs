//! Grid construction helpers shared by the curve-based operations.

use crate::real::Real;

/// Geometric grid of `count` points on `[lo, hi]`, endpoints included.
///
/// Requires `0 < lo <= hi`. A single-point grid is `[lo]`.
pub fn geometric_grid<R: Real>(lo: R, hi: R, count: usize) -> Vec<R> {
    assert!(lo > R::zero() && hi >= lo, "geometric grid needs 0 < lo <= hi");
    if count <= 1 || lo == hi {
        return vec![lo];
    }
    let ratio = (hi / lo).powf(R::one() / R::of_usize(count - 1));
    let mut out = Vec::with_capacity(count);
    let mut v = lo;
    for i in 0..count {
        if i == count - 1 {
            v = hi;
        }
        out.push(v);
        v *= ratio;
    }
    out
}

/// Linear grid of `count` points on `[lo, hi]`, endpoints included.
pub fn linear_grid<R: Real>(lo: R, hi: R, count: usize) -> Vec<R> {
    assert!(hi >= lo, "linear grid needs lo <= hi");
    if count <= 1 || lo == hi {
        return vec![lo];
    }
    let step = (hi - lo) / R::of_usize(count - 1);
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                lo + step * R::of_usize(i)
            }
        })
        .collect()
}
