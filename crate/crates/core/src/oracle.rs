//! Exhaustive-enumeration reference implementations.
//!
//! These oracles are for tests and the acceptance suite: they recompute
//! quantities by brute force (full enumeration over the sample space and the
//! sign space, or dense parameter grids) and deliberately share no code with
//! the estimators they check.

use crate::empirical::{DiscreteDistribution, SampleSet, StarHullSpec, TabulatedClass};
use crate::error::{Error, Result};
use crate::real::Real;

const ENUMERATION_BUDGET: u64 = 1 << 24;

/// Visit every sample of size `n` (as an index tuple) together with its
/// product probability.
pub fn for_each_sample<R: Real>(
    dist: &DiscreteDistribution<R>,
    n: usize,
    mut visit: impl FnMut(&[usize], R),
) -> Result<()> {
    let k = dist.len();
    if n == 0 {
        return Err(Error::Precondition("sample size must be at least 1".into()));
    }
    let total = (k as u64).checked_pow(n as u32).filter(|t| *t <= ENUMERATION_BUDGET);
    if total.is_none() {
        return Err(Error::Capacity { n, cap: 24 });
    }
    let mut indices = vec![0usize; n];
    loop {
        let prob = indices.iter().map(|&i| dist.mass(i)).fold(R::one(), |p, m| p * m);
        visit(&indices, prob);
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(());
            }
            indices[pos] += 1;
            if indices[pos] < k {
                break;
            }
            indices[pos] = 0;
            pos += 1;
        }
    }
}

/// Exact conditional Rademacher average by direct summation over all sign
/// vectors, recomputing every signed sum from scratch.
pub fn conditional_rademacher_bruteforce<R: Real>(
    class: &TabulatedClass<R>,
    sample: &SampleSet,
) -> Result<R> {
    let n = sample.n();
    if n > 24 {
        return Err(Error::Capacity { n, cap: 24 });
    }
    let sampled = class.sampled(sample)?;
    let mut acc = R::zero();
    for bits in 0u64..(1 << n) {
        let mut best: Option<R> = None;
        for row in &sampled {
            let mut s = R::zero();
            for (i, v) in row.iter().enumerate() {
                if (bits >> i) & 1 == 1 {
                    s -= *v;
                } else {
                    s += *v;
                }
            }
            best = Some(best.map_or(s, |b: R| b.max(s)));
        }
        acc += best.unwrap_or(R::zero());
    }
    Ok(acc / R::of_usize(1 << n) / R::of_usize(n))
}

/// Exact expected Rademacher average `E R_n F`: full enumeration over both
/// the sample space and the sign space.
pub fn expected_rademacher_exhaustive<R: Real>(
    class: &TabulatedClass<R>,
    dist: &DiscreteDistribution<R>,
    n: usize,
) -> Result<R> {
    let mut total = R::zero();
    let mut failure = None;
    for_each_sample(dist, n, |indices, prob| {
        if failure.is_some() {
            return;
        }
        let sample = SampleSet::new(indices.to_vec(), dist.len(), 0).expect("valid indices");
        match conditional_rademacher_bruteforce(class, &sample) {
            Ok(v) => total += prob * v,
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Exact `E sup_f (Pf - P_n f)` (or the reverse) by full sample enumeration.
pub fn expected_sup_deviation_exhaustive<R: Real>(
    class: &TabulatedClass<R>,
    dist: &DiscreteDistribution<R>,
    n: usize,
    empirical_minus_true: bool,
) -> Result<R> {
    let true_means: Vec<R> = class
        .rows()
        .iter()
        .map(|row| crate::empirical::true_mean(dist, row))
        .collect::<Result<_>>()?;
    let n_r = R::of_usize(n);
    let mut total = R::zero();
    for_each_sample(dist, n, |indices, prob| {
        let mut best: Option<R> = None;
        for (row, &pf) in class.rows().iter().zip(&true_means) {
            let pnf: R = indices.iter().map(|&i| row[i]).sum::<R>() / n_r;
            let dev = if empirical_minus_true { pnf - pf } else { pf - pnf };
            best = Some(best.map_or(dev, |b: R| b.max(dev)));
        }
        total += prob * best.unwrap_or(R::zero());
    })?;
    Ok(total)
}

/// Star-hull ball supremum by dense enumeration over the scaling parameter:
/// for every sign vector, maximize `R_n (f0 + alpha (f - f0))` over functions
/// and an `alpha` grid of the given resolution, subject to
/// `P_n (g - f0)^2 <= radius`. A grid supremum can only fall below the true
/// one, by at most one grid step times the largest per-function correlation.
pub fn star_hull_gridded_conditional<R: Real>(
    hull: &StarHullSpec<R>,
    sample: &SampleSet,
    radius: R,
    alpha_steps: usize,
) -> Result<R> {
    let n = sample.n();
    if n > 24 {
        return Err(Error::Capacity { n, cap: 24 });
    }
    let base = hull.base().sampled(sample)?;
    let center: Vec<R> = sample.indices().iter().map(|&i| hull.center()[i]).collect();
    let deltas: Vec<Vec<R>> = base
        .iter()
        .map(|row| row.iter().zip(&center).map(|(v, c)| *v - *c).collect())
        .collect();
    let n_r = R::of_usize(n);
    let dist_sq: Vec<R> =
        deltas.iter().map(|d| d.iter().map(|v| *v * *v).sum::<R>() / n_r).collect();
    let steps_r = R::of_usize(alpha_steps);
    let mut acc = R::zero();
    for bits in 0u64..(1 << n) {
        let sign = |i: usize| if (bits >> i) & 1 == 1 { -R::one() } else { R::one() };
        let center_sum: R = center.iter().enumerate().map(|(i, v)| sign(i) * *v).sum();
        let mut best = R::zero();
        for (delta, &d) in deltas.iter().zip(&dist_sq) {
            let s: R = delta.iter().enumerate().map(|(i, v)| sign(i) * *v).sum();
            for step in 0..=alpha_steps {
                let alpha = R::of_usize(step) / steps_r;
                if d * alpha * alpha <= radius {
                    best = best.max(alpha * s);
                }
            }
        }
        acc += (center_sum + best) / n_r;
    }
    Ok(acc / R::of_usize(1 << n))
}
