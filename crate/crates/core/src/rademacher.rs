//! Exact and Monte Carlo Rademacher averages: conditional (expectation over
//! signs only) and expected (over signs and data), with localization over
//! variance balls and closed-form star-hull localization.
//!
//! Exact conditional averages enumerate all `2^n` sign vectors with a
//! Gray-code walk that updates per-function signed sums incrementally. Monte
//! Carlo estimators derive one seed per draw from `(master seed, draw index)`
//! and aggregate per-chunk partial sums in a fixed order, so serial and
//! parallel runs agree bit for bit.

use rayon::prelude::*;
use serde::Serialize;

use crate::empirical::{SampleSet, SigmaVector, StarHullSpec, TabulatedClass};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{derive_seed, seeded_rng, STREAM_DATA, STREAM_SIGMA};

/// Largest `n` for which exact sign enumeration is attempted.
pub const ENUMERATION_CAP: usize = 20;
/// Default number of Monte Carlo sign draws above the cap.
pub const DEFAULT_SIGMA_DRAWS: usize = 4096;
/// Number of points on the alpha grid used by the loss-class localization.
pub const ALPHA_GRID_POINTS: usize = 64;

const MC_CHUNK: usize = 256;

/// How the expectation over sign vectors is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    /// Exact enumeration when `n` is within the cap, Monte Carlo otherwise.
    Auto,
    /// Exact enumeration only; errors above the cap.
    Exact,
    /// Monte Carlo with the given number of draws.
    MonteCarlo { draws: usize },
}

impl SigmaMode {
    fn resolve(self, n: usize) -> Result<Resolved> {
        match self {
            SigmaMode::Auto => Ok(if n <= ENUMERATION_CAP {
                Resolved::Exact
            } else {
                Resolved::MonteCarlo(DEFAULT_SIGMA_DRAWS)
            }),
            SigmaMode::Exact => {
                if n <= ENUMERATION_CAP {
                    Ok(Resolved::Exact)
                } else {
                    Err(Error::Capacity { n, cap: ENUMERATION_CAP })
                }
            }
            SigmaMode::MonteCarlo { draws } => {
                if draws == 0 {
                    Err(Error::Precondition("at least one sigma draw required".into()))
                } else {
                    Ok(Resolved::MonteCarlo(draws))
                }
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Resolved {
    Exact,
    MonteCarlo(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    ExactEnumeration,
    MonteCarlo,
}

/// A Rademacher-average estimate with its sampling metadata.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "R: Serialize"))]
pub struct RademacherEstimate<R: Real> {
    pub value: R,
    /// Zero for exact enumeration.
    pub std_error: R,
    pub method: EstimateMethod,
    pub num_sigma_draws: usize,
    pub num_data_draws: usize,
    pub seed: u64,
}

impl<R: Real> RademacherEstimate<R> {
    fn exact(value: R, sigma_vectors: usize) -> Self {
        Self {
            value,
            std_error: R::zero(),
            method: EstimateMethod::ExactEnumeration,
            num_sigma_draws: sigma_vectors,
            num_data_draws: 1,
            seed: 0,
        }
    }

    fn monte_carlo(value: R, std_error: R, draws: usize, seed: u64) -> Self {
        Self {
            value,
            std_error,
            method: EstimateMethod::MonteCarlo,
            num_sigma_draws: draws,
            num_data_draws: 1,
            seed,
        }
    }
}

/// Gray-code walk over all `2^n` sign vectors starting from all `+1`.
///
/// `advance` flips exactly one position per step and returns its index, so
/// callers can maintain incremental statistics.
pub struct SigmaGrayWalk {
    sigma: Vec<i8>,
    step: u64,
    total: u64,
}

impl SigmaGrayWalk {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("sign vectors must be nonempty".into()));
        }
        if n > ENUMERATION_CAP {
            return Err(Error::Capacity { n, cap: ENUMERATION_CAP });
        }
        Ok(Self { sigma: vec![1; n], step: 0, total: 1u64 << n })
    }

    pub fn sigma(&self) -> &[i8] {
        &self.sigma
    }

    pub fn num_vectors(&self) -> u64 {
        self.total
    }

    /// Flip to the next Gray-code state; `None` once all states were visited.
    pub fn advance(&mut self) -> Option<usize> {
        self.step += 1;
        if self.step >= self.total {
            return None;
        }
        let bit = self.step.trailing_zeros() as usize;
        self.sigma[bit] = -self.sigma[bit];
        Some(bit)
    }
}

/// Mean over all `2^n` sign vectors of a statistic of the per-function signed
/// sums `Σ_i sigma_i f(X_i)` (unnormalized).
fn enumerate_signed_sum_mean<R: Real>(
    sampled: &[Vec<R>],
    n: usize,
    mut stat: impl FnMut(&[R]) -> R,
) -> Result<R> {
    let mut walk = SigmaGrayWalk::new(n)?;
    let mut sums: Vec<R> = sampled.iter().map(|row| row.iter().copied().sum()).collect();
    let mut acc = stat(&sums);
    while let Some(bit) = walk.advance() {
        let s = R::of_sign(walk.sigma()[bit]);
        let two_s = R::two() * s;
        for (f, row) in sampled.iter().enumerate() {
            sums[f] += two_s * row[bit];
        }
        acc += stat(&sums);
    }
    Ok(acc / R::of_usize(walk.num_vectors() as usize))
}

/// Monte Carlo mean and standard error of a per-sign-vector statistic.
///
/// Draw `d` uses the seed derived from `(seed, STREAM_SIGMA, d)`. Partial
/// sums are accumulated per chunk of 256 draws and combined in chunk order,
/// which makes the reduction independent of the execution schedule.
fn sigma_monte_carlo<R, F>(n: usize, draws: usize, seed: u64, stat: F) -> (R, R)
where
    R: Real,
    F: Fn(&SigmaVector) -> R + Sync,
{
    let chunks: Vec<(R, R)> = (0..draws.div_ceil(MC_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * MC_CHUNK;
            let hi = (lo + MC_CHUNK).min(draws);
            let mut sum = R::zero();
            let mut sum_sq = R::zero();
            for d in lo..hi {
                let mut rng = seeded_rng(derive_seed(seed, STREAM_SIGMA, d as u64));
                let sigma = SigmaVector::random(n, &mut rng);
                let v = stat(&sigma);
                sum += v;
                sum_sq += v * v;
            }
            (sum, sum_sq)
        })
        .collect();
    let mut sum = R::zero();
    let mut sum_sq = R::zero();
    for (s, ss) in chunks {
        sum += s;
        sum_sq += ss;
    }
    let count = R::of_usize(draws);
    let mean = sum / count;
    let std_error = if draws > 1 {
        let var = ((sum_sq - count * mean * mean) / (count - R::one())).max(R::zero());
        (var / count).sqrt()
    } else {
        R::zero()
    };
    (mean, std_error)
}

fn sup_or_zero<R: Real>(sums: &[R]) -> R {
    sums.iter().copied().fold(None, |m: Option<R>, v| Some(m.map_or(v, |m| m.max(v))))
        .unwrap_or(R::zero())
}

/// Exact conditional Rademacher average `E_sigma sup_f R_n f` by full sign
/// enumeration. Requires `n <= 20`; the supremum over an empty class is 0.
pub fn conditional_rademacher_exact<R: Real>(
    class: &TabulatedClass<R>,
    sample: &SampleSet,
) -> Result<RademacherEstimate<R>> {
    let n = sample.n();
    if n > ENUMERATION_CAP {
        return Err(Error::Capacity { n, cap: ENUMERATION_CAP });
    }
    if class.is_empty() {
        return Ok(RademacherEstimate::exact(R::zero(), 1 << n));
    }
    let sampled = class.sampled(sample)?;
    let mean = enumerate_signed_sum_mean(&sampled, n, sup_or_zero)?;
    Ok(RademacherEstimate::exact(mean / R::of_usize(n), 1 << n))
}

/// Monte Carlo conditional Rademacher average over independent sign draws.
pub fn conditional_rademacher_mc<R: Real>(
    class: &TabulatedClass<R>,
    sample: &SampleSet,
    draws: usize,
    seed: u64,
) -> Result<RademacherEstimate<R>> {
    if draws == 0 {
        return Err(Error::Precondition("at least one sigma draw required".into()));
    }
    let n = sample.n();
    if class.is_empty() {
        return Ok(RademacherEstimate::monte_carlo(R::zero(), R::zero(), draws, seed));
    }
    let sampled = class.sampled(sample)?;
    let n_r = R::of_usize(n);
    let (mean, se) = sigma_monte_carlo(n, draws, seed, |sigma| {
        sampled
            .iter()
            .map(|row| {
                row.iter()
                    .zip(sigma.signs())
                    .map(|(v, &s)| R::of_sign(s) * *v)
                    .sum::<R>()
            })
            .fold(None, |m: Option<R>, v| Some(m.map_or(v, |m| m.max(v))))
            .unwrap_or(R::zero())
            / n_r
    });
    Ok(RademacherEstimate::monte_carlo(mean, se, draws, seed))
}

fn conditional_value<R: Real>(
    class: &TabulatedClass<R>,
    sample: &SampleSet,
    resolved: Resolved,
    seed: u64,
) -> Result<R> {
    match resolved {
        Resolved::Exact => Ok(conditional_rademacher_exact(class, sample)?.value),
        Resolved::MonteCarlo(draws) => Ok(conditional_rademacher_mc(class, sample, draws, seed)?.value),
    }
}

/// Expected Rademacher average `E R_n F`: Monte Carlo over samples drawn
/// from `dist`, with the conditional average per sample evaluated exactly
/// when `n` is within the enumeration cap (in `Auto` mode) or by an inner
/// Monte Carlo otherwise.
pub fn expected_rademacher<R: Real>(
    class_on_full_space: &TabulatedClass<R>,
    dist: &crate::empirical::DiscreteDistribution<R>,
    n: usize,
    data_draws: usize,
    sigma_mode: SigmaMode,
    seed: u64,
) -> Result<RademacherEstimate<R>> {
    if data_draws == 0 {
        return Err(Error::Precondition("at least one data draw required".into()));
    }
    let resolved = sigma_mode.resolve(n)?;
    let chunks: Vec<Result<(R, R)>> = (0..data_draws.div_ceil(MC_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * MC_CHUNK;
            let hi = (lo + MC_CHUNK).min(data_draws);
            let mut sum = R::zero();
            let mut sum_sq = R::zero();
            for d in lo..hi {
                let sample = dist.sample(n, derive_seed(seed, STREAM_DATA, d as u64))?;
                let v = conditional_value(
                    class_on_full_space,
                    &sample,
                    resolved,
                    derive_seed(seed, STREAM_SIGMA, d as u64),
                )?;
                sum += v;
                sum_sq += v * v;
            }
            Ok((sum, sum_sq))
        })
        .collect();
    let mut sum = R::zero();
    let mut sum_sq = R::zero();
    for chunk in chunks {
        let (s, ss) = chunk?;
        sum += s;
        sum_sq += ss;
    }
    let count = R::of_usize(data_draws);
    let mean = sum / count;
    let std_error = if data_draws > 1 {
        let var = ((sum_sq - count * mean * mean) / (count - R::one())).max(R::zero());
        (var / count).sqrt()
    } else {
        R::zero()
    };
    let num_sigma_draws = match resolved {
        Resolved::Exact => 1usize << n.min(ENUMERATION_CAP),
        Resolved::MonteCarlo(draws) => draws,
    };
    Ok(RademacherEstimate {
        value: mean,
        std_error,
        method: EstimateMethod::MonteCarlo,
        num_sigma_draws,
        num_data_draws: data_draws,
        seed,
    })
}

/// Per-function data of a star-hull ball computation: squared empirical
/// distances to the center and the center's own sampled values.
struct HullGeometry<R: Real> {
    deltas: Vec<Vec<R>>,
    center: Vec<R>,
    dist_sq: Vec<R>,
    n: usize,
}

impl<R: Real> HullGeometry<R> {
    fn new(hull: &StarHullSpec<R>, sample: &SampleSet) -> Result<Self> {
        let sampled = hull.base().sampled(sample)?;
        let n = sample.n();
        let n_r = R::of_usize(n);
        let center: Vec<R> = sample.indices().iter().map(|&i| hull.center()[i]).collect();
        let deltas: Vec<Vec<R>> = sampled
            .iter()
            .map(|row| row.iter().zip(&center).map(|(v, c)| *v - *c).collect())
            .collect();
        let dist_sq = deltas
            .iter()
            .map(|d| d.iter().map(|v| *v * *v).sum::<R>() / n_r)
            .collect();
        Ok(Self { deltas, center, dist_sq, n })
    }

    fn alpha_max(&self, radius: R) -> Vec<R> {
        self.dist_sq
            .iter()
            .map(|&d| {
                if d <= R::zero() {
                    R::one()
                } else {
                    (radius / d).sqrt().min(R::one())
                }
            })
            .collect()
    }
}

/// Exact or Monte Carlo conditional Rademacher average of the star-hull ball
/// `{f0 + alpha (f - f0) : P_n (g - f0)^2 <= radius}`.
///
/// For each sign vector the supremum has the closed form
/// `R_n f0 + max(0, max_f alpha_max(f) R_n (f - f0))` with
/// `alpha_max(f) = min(1, sqrt(radius / P_n (f - f0)^2))`, the constraint
/// being vacuous when `P_n (f - f0)^2 = 0`.
pub fn star_hull_local_conditional<R: Real>(
    hull: &StarHullSpec<R>,
    sample: &SampleSet,
    radius: R,
    sigma_mode: SigmaMode,
    seed: u64,
) -> Result<RademacherEstimate<R>> {
    if radius < R::zero() {
        return Err(Error::Precondition("radius must be nonnegative".into()));
    }
    let geom = HullGeometry::new(hull, sample)?;
    let alpha = geom.alpha_max(radius);
    let n = geom.n;
    let n_r = R::of_usize(n);
    match sigma_mode.resolve(n)? {
        Resolved::Exact => {
            // Row 0 carries the center; rows 1.. carry the deltas.
            let mut rows = Vec::with_capacity(geom.deltas.len() + 1);
            rows.push(geom.center.clone());
            rows.extend(geom.deltas.iter().cloned());
            let mean = enumerate_signed_sum_mean(&rows, n, |sums| {
                let best = sums[1..]
                    .iter()
                    .zip(&alpha)
                    .map(|(s, a)| *a * *s)
                    .fold(R::zero(), |m, v| m.max(v));
                sums[0] + best
            })?;
            Ok(RademacherEstimate::exact(mean / n_r, 1 << n))
        }
        Resolved::MonteCarlo(draws) => {
            let (mean, se) = sigma_monte_carlo(n, draws, seed, |sigma| {
                let center: R = geom
                    .center
                    .iter()
                    .zip(sigma.signs())
                    .map(|(v, &s)| R::of_sign(s) * *v)
                    .sum();
                let best = geom
                    .deltas
                    .iter()
                    .zip(&alpha)
                    .map(|(row, a)| {
                        *a * row
                            .iter()
                            .zip(sigma.signs())
                            .map(|(v, &s)| R::of_sign(s) * *v)
                            .sum::<R>()
                    })
                    .fold(R::zero(), |m, v| m.max(v));
                (center + best) / n_r
            });
            Ok(RademacherEstimate::monte_carlo(mean, se, draws, seed))
        }
    }
}

/// Star-hull ball supremum for one fixed sign vector, center 0 relative
/// (deltas to the center), exposed for the sub-root property checks.
pub struct StarHullSigmaCurve<R: Real> {
    signed: Vec<R>,
    dist_sq: Vec<R>,
    n: usize,
}

impl<R: Real> StarHullSigmaCurve<R> {
    pub fn new(hull: &StarHullSpec<R>, sample: &SampleSet, sigma: &SigmaVector) -> Result<Self> {
        if sigma.len() != sample.n() {
            return Err(Error::Dimension(format!(
                "{} signs vs sample size {}",
                sigma.len(),
                sample.n()
            )));
        }
        let geom = HullGeometry::new(hull, sample)?;
        let signed = geom
            .deltas
            .iter()
            .map(|row| {
                row.iter()
                    .zip(sigma.signs())
                    .map(|(v, &s)| R::of_sign(s) * *v)
                    .sum::<R>()
            })
            .collect();
        Ok(Self { signed, dist_sq: geom.dist_sq, n: geom.n })
    }

    /// `max(0, max_f min(1, sqrt(r / d_f)) s_f) / n` at radius `r`.
    pub fn value(&self, radius: R) -> R {
        let best = self
            .signed
            .iter()
            .zip(&self.dist_sq)
            .map(|(&s, &d)| {
                if d <= R::zero() {
                    s
                } else {
                    (radius / d).sqrt().min(R::one()) * s
                }
            })
            .fold(R::zero(), |m, v| m.max(v));
        best / R::of_usize(self.n)
    }

    /// `value(r) / sqrt(r)`, evaluated in a form that is nonincreasing in `r`
    /// under floating-point semantics (monotone square root and division).
    pub fn ratio(&self, radius: R) -> R {
        let sqrt_r = radius.sqrt();
        let best = self
            .signed
            .iter()
            .zip(&self.dist_sq)
            .map(|(&s, &d)| {
                if d <= R::zero() {
                    s / sqrt_r
                } else {
                    (s / d.sqrt()).min(s / sqrt_r)
                }
            })
            .fold(R::zero(), |m, v| m.max(v));
        best / R::of_usize(self.n)
    }
}

/// Frozen set of sign vectors (full enumeration or seeded draws) with the
/// per-function signed sums precomputed, so localized averages become a
/// deterministic, cheaply re-evaluable function of the radius. Freezing the
/// signs across radius queries is what keeps an empirically estimated
/// localized average exactly sub-root during a fixed-point solve.
pub struct LocalizedSigmaCache<R: Real> {
    signed: Vec<Vec<R>>,
    pn_sq: Vec<R>,
    pn_mean: Vec<R>,
    n: usize,
    exact: bool,
    seed: u64,
}

impl<R: Real> LocalizedSigmaCache<R> {
    /// Build the cache for `class` on `sample`, optionally translating every
    /// function by `center` (values over ground points).
    pub fn build(
        class: &TabulatedClass<R>,
        sample: &SampleSet,
        center: Option<&[R]>,
        sigma_mode: SigmaMode,
        seed: u64,
    ) -> Result<Self> {
        let n = sample.n();
        let n_r = R::of_usize(n);
        let sampled = class.sampled(sample)?;
        let deltas: Vec<Vec<R>> = match center {
            None => sampled,
            Some(c) => {
                let centered: Vec<R> = sample.indices().iter().map(|&i| c[i]).collect();
                sampled
                    .iter()
                    .map(|row| row.iter().zip(&centered).map(|(v, c)| *v - *c).collect())
                    .collect()
            }
        };
        let pn_sq: Vec<R> = deltas
            .iter()
            .map(|row| row.iter().map(|v| *v * *v).sum::<R>() / n_r)
            .collect();
        let pn_mean: Vec<R> = deltas
            .iter()
            .map(|row| row.iter().copied().sum::<R>() / n_r)
            .collect();
        let (signed, exact) = match sigma_mode.resolve(n)? {
            Resolved::Exact => {
                let vectors = 1usize << n;
                if vectors.saturating_mul(deltas.len().max(1)) > (1 << 24) {
                    return Err(Error::Capacity { n, cap: ENUMERATION_CAP });
                }
                let mut walk = SigmaGrayWalk::new(n)?;
                let mut sums: Vec<R> =
                    deltas.iter().map(|row| row.iter().copied().sum()).collect();
                let mut all = Vec::with_capacity(vectors);
                all.push(sums.clone());
                while let Some(bit) = walk.advance() {
                    let two_s = R::two() * R::of_sign(walk.sigma()[bit]);
                    for (f, row) in deltas.iter().enumerate() {
                        sums[f] += two_s * row[bit];
                    }
                    all.push(sums.clone());
                }
                (all, true)
            }
            Resolved::MonteCarlo(draws) => {
                let rows: Vec<Vec<R>> = (0..draws)
                    .into_par_iter()
                    .map(|d| {
                        let mut rng = seeded_rng(derive_seed(seed, STREAM_SIGMA, d as u64));
                        let sigma = SigmaVector::random(n, &mut rng);
                        deltas
                            .iter()
                            .map(|row| {
                                row.iter()
                                    .zip(sigma.signs())
                                    .map(|(v, &s)| R::of_sign(s) * *v)
                                    .sum::<R>()
                            })
                            .collect()
                    })
                    .collect();
                (rows, false)
            }
        };
        Ok(Self { signed, pn_sq, pn_mean, n, exact, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_sigma(&self) -> usize {
        self.signed.len()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Largest per-function `P_n (f - center)^2`; the hull average saturates
    /// beyond this radius.
    pub fn saturation_radius(&self) -> R {
        self.pn_sq.iter().copied().fold(R::zero(), |m, v| m.max(v))
    }

    /// Mean over the frozen signs of the star-hull ball supremum at `radius`.
    pub fn hull_local_average(&self, radius: R) -> R {
        self.hull_local_stats(radius).0
    }

    /// Mean and standard error of the star-hull ball supremum at `radius`.
    pub fn hull_local_stats(&self, radius: R) -> (R, R) {
        let alpha: Vec<R> = self
            .pn_sq
            .iter()
            .map(|&d| {
                if d <= R::zero() {
                    R::one()
                } else {
                    (radius / d).sqrt().min(R::one())
                }
            })
            .collect();
        let n_r = R::of_usize(self.n);
        let mut sum = R::zero();
        let mut sum_sq = R::zero();
        for sums in &self.signed {
            let v = sums
                .iter()
                .zip(&alpha)
                .map(|(s, a)| *a * *s)
                .fold(R::zero(), |m, v| m.max(v))
                / n_r;
            sum += v;
            sum_sq += v * v;
        }
        let count = R::of_usize(self.signed.len());
        let mean = sum / count;
        let se = if self.exact || self.signed.len() < 2 {
            R::zero()
        } else {
            let var = ((sum_sq - count * mean * mean) / (count - R::one())).max(R::zero());
            (var / count).sqrt()
        };
        (mean, se)
    }

    /// Mean over the frozen signs of the plain localized supremum
    /// `sup { R_n f : stat(f) <= threshold }` (no hull, no zero function;
    /// the supremum over an empty selection is 0).
    pub fn plain_local_average(&self, threshold: R, by: LocalizationMoment) -> R {
        let stats = match by {
            LocalizationMoment::SecondMoment => &self.pn_sq,
            LocalizationMoment::Mean => &self.pn_mean,
        };
        let qualifying: Vec<usize> = stats
            .iter()
            .enumerate()
            .filter(|(_, v)| **v <= threshold)
            .map(|(i, _)| i)
            .collect();
        if qualifying.is_empty() {
            return R::zero();
        }
        let n_r = R::of_usize(self.n);
        let mut sum = R::zero();
        for sums in &self.signed {
            let v = qualifying
                .iter()
                .map(|&f| sums[f])
                .fold(None, |m: Option<R>, v| Some(m.map_or(v, |m| m.max(v))))
                .unwrap_or(R::zero());
            sum += v / n_r;
        }
        sum / R::of_usize(self.signed.len())
    }
}

/// Which moment localizes the plain (non-hull) selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizationMoment {
    SecondMoment,
    Mean,
}

/// Result of the loss-class star-hull localization: the closed-form hull
/// value, the alpha-grid rewriting, and their maximum as the reported value.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "R: Serialize"))]
pub struct LossLocalizedValue<R: Real> {
    pub estimate: RademacherEstimate<R>,
    /// Closed-form star-hull ball value `E_sigma sup` at squared radius `2r`.
    pub hull_form: R,
    /// `sup_alpha alpha E_sigma sup { R_n l_f : P_n l_f <= 2r / alpha^2 }`
    /// over the geometric alpha grid.
    pub alpha_grid_form: R,
}

/// Geometric alpha grid on `[sqrt(2r) , 1]`, endpoints included.
pub fn loss_alpha_grid<R: Real>(radius: R) -> Vec<R> {
    let lo = (R::two() * radius).sqrt().max(R::of(1e-9));
    if lo >= R::one() {
        return vec![R::one()];
    }
    crate::grid::geometric_grid(lo, R::one(), ALPHA_GRID_POINTS)
}

/// Localized conditional Rademacher average of a `{0,1}`-loss class over the
/// star-hull ball of squared radius `2r`.
///
/// Evaluates both the alpha-grid rewriting (a grid supremum, which can only
/// under-approximate) and the exact closed-form star-hull value, and reports
/// their maximum so the result still dominates the localized average.
pub fn loss_star_hull_local_conditional<R: Real>(
    loss_class: &TabulatedClass<R>,
    sample: &SampleSet,
    radius: R,
    sigma_mode: SigmaMode,
    seed: u64,
) -> Result<LossLocalizedValue<R>> {
    if radius < R::zero() {
        return Err(Error::Precondition("radius must be nonnegative".into()));
    }
    let (lo, hi) = loss_class.range();
    if lo < R::zero() || hi > R::one() {
        return Err(Error::Precondition("loss values must lie in [0, 1]".into()));
    }
    let cache = LocalizedSigmaCache::build(loss_class, sample, None, sigma_mode, seed)?;
    let two_r = R::two() * radius;
    let hull_form = cache.hull_local_average(two_r);
    let mut alpha_grid_form = R::zero();
    for alpha in loss_alpha_grid(radius) {
        let threshold = two_r / (alpha * alpha);
        let v = alpha * cache.plain_local_average(threshold, LocalizationMoment::Mean);
        alpha_grid_form = alpha_grid_form.max(v);
    }
    let value = hull_form.max(alpha_grid_form);
    let estimate = if cache.is_exact() {
        RademacherEstimate::exact(value, cache.num_sigma())
    } else {
        // Standard error of the winning hull form; the grid form shares the
        // same frozen sign draws.
        let (_, se) = cache.hull_local_stats(two_r);
        RademacherEstimate::monte_carlo(value, se, cache.num_sigma(), seed)
    };
    Ok(LossLocalizedValue { estimate, hull_form, alpha_grid_form })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::DiscreteDistribution;

    fn constants_class() -> TabulatedClass<f64> {
        TabulatedClass::new(vec![vec![1.0, 1.0], vec![-1.0, -1.0]], -1.0, 1.0, None).unwrap()
    }

    #[test]
    fn exact_conditional_examples() {
        let sample = SampleSet::identity(2);
        // {f ≡ 1}: E_sigma sup = E_sigma R_n f = 0.
        let singleton = TabulatedClass::new(vec![vec![1.0, 1.0]], -1.0, 1.0, None).unwrap();
        let e = conditional_rademacher_exact(&singleton, &sample).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.method, EstimateMethod::ExactEnumeration);
        // {±1 constants}, n = 2: E |sigma_1 + sigma_2| / 2 = 0.5.
        let e = conditional_rademacher_exact(&constants_class(), &sample).unwrap();
        assert_eq!(e.value, 0.5);
        // Zero function only.
        let zero = TabulatedClass::new(vec![vec![0.0; 5]], -1.0, 1.0, None).unwrap();
        let e = conditional_rademacher_exact(&zero, &SampleSet::identity(5)).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn exact_conditional_respects_cap() {
        let n = ENUMERATION_CAP + 1;
        let class = TabulatedClass::new(vec![vec![1.0; n]], -1.0, 1.0, None).unwrap();
        let err = conditional_rademacher_exact(&class, &SampleSet::identity(n));
        assert!(matches!(err, Err(Error::Capacity { .. })));
    }

    #[test]
    fn mc_matches_exact_within_4_std_errors() {
        let sample = SampleSet::identity(2);
        let exact = conditional_rademacher_exact(&constants_class(), &sample).unwrap();
        let mc = conditional_rademacher_mc(&constants_class(), &sample, 10_000, 11).unwrap();
        assert!((mc.value - exact.value).abs() <= 4.0 * mc.std_error);
        // {f ≡ 1}: true value 0.
        let singleton: TabulatedClass<f64> =
            TabulatedClass::new(vec![vec![1.0, 1.0]], -1.0, 1.0, None).unwrap();
        let mc = conditional_rademacher_mc(&singleton, &sample, 10_000, 12).unwrap();
        assert!(mc.value.abs() <= 4.0 * mc.std_error + 1e-12);
    }

    #[test]
    fn single_draw_reproduces_rademacher_sum() {
        let sample = SampleSet::identity(3);
        let row = vec![0.3, -0.4, 0.9];
        let class = TabulatedClass::new(vec![row.clone()], -1.0, 1.0, None).unwrap();
        let mc = conditional_rademacher_mc(&class, &sample, 1, 77).unwrap();
        let mut rng = seeded_rng(derive_seed(77, STREAM_SIGMA, 0));
        let sigma = SigmaVector::random(3, &mut rng);
        let direct = crate::empirical::rademacher_sum(&sample, &sigma, &row).unwrap();
        assert_eq!(mc.value, direct);
        assert_eq!(mc.std_error, 0.0);
    }

    #[test]
    fn expected_rademacher_degenerate_cases() {
        let dist = DiscreteDistribution::<f64>::uniform(3).unwrap();
        // Constant class: value 0 regardless of the sample.
        let constant = TabulatedClass::new(vec![vec![0.7; 3]], -1.0, 1.0, None).unwrap();
        let e = expected_rademacher(&constant, &dist, 4, 64, SigmaMode::Auto, 5).unwrap();
        assert!(e.value.abs() <= 4.0 * e.std_error + 1e-12);
        // Single support point, class {f, -f}, n = 1: E sup = |f(x)|.
        let single = DiscreteDistribution::new(vec!["x".into()], vec![1.0], None).unwrap();
        let pm = TabulatedClass::new(vec![vec![0.6], vec![-0.6]], -1.0, 1.0, None).unwrap();
        let e = expected_rademacher(&pm, &single, 1, 8, SigmaMode::Exact, 5).unwrap();
        assert_eq!(e.value, 0.6);
        // data_draws = 1 reproduces the conditional value of the drawn sample.
        let class = TabulatedClass::new(vec![vec![0.2, 0.9, -0.5]], -1.0, 1.0, None).unwrap();
        let e = expected_rademacher(&class, &dist, 4, 1, SigmaMode::Exact, 21).unwrap();
        let sample = dist.sample(4, derive_seed(21, STREAM_DATA, 0)).unwrap();
        let direct = conditional_rademacher_exact(&class, &sample).unwrap();
        assert_eq!(e.value, direct.value);
    }

    #[test]
    fn star_hull_radius_zero_is_center_only() {
        let class = TabulatedClass::new(vec![vec![0.5, -0.5], vec![0.25, 1.0]], -1.0, 1.0, None)
            .unwrap();
        let hull = StarHullSpec::centered_at_zero(class).unwrap();
        let sample = SampleSet::identity(2);
        let e = star_hull_local_conditional(&hull, &sample, 0.0, SigmaMode::Exact, 0).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn star_hull_large_radius_equals_class_plus_zero() {
        // Class closed under negation, radius beyond every P_n f^2: the hull
        // ball supremum equals the supremum over F ∪ {0}.
        let rows: Vec<Vec<f64>> = vec![vec![0.5, -0.25, 0.75], vec![-0.5, 0.25, -0.75]];
        let class = TabulatedClass::new(rows.clone(), -1.0, 1.0, None).unwrap();
        let sample = SampleSet::identity(3);
        let hull = StarHullSpec::centered_at_zero(class).unwrap();
        let e = star_hull_local_conditional(&hull, &sample, 10.0, SigmaMode::Exact, 0).unwrap();
        let mut with_zero = rows;
        with_zero.push(vec![0.0; 3]);
        let aug = TabulatedClass::new(with_zero, -1.0, 1.0, None).unwrap();
        let direct = conditional_rademacher_exact(&aug, &sample).unwrap();
        assert!((e.value - direct.value).abs() < 1e-15);
    }

    #[test]
    fn star_hull_scales_as_sqrt_radius_below_the_cap() {
        // Singleton class with P_n f^2 = 4: the value at radius 1 is exactly
        // half the value at radius 4.
        let class = TabulatedClass::new(vec![vec![2.0, -2.0]], -2.0, 2.0, None).unwrap();
        let hull = StarHullSpec::centered_at_zero(class).unwrap();
        let sample = SampleSet::identity(2);
        let at_1 = star_hull_local_conditional(&hull, &sample, 1.0, SigmaMode::Exact, 0).unwrap();
        let at_4 = star_hull_local_conditional(&hull, &sample, 4.0, SigmaMode::Exact, 0).unwrap();
        assert_eq!(at_1.value, 0.5 * at_4.value);
    }

    #[test]
    fn star_hull_monotone_in_radius() {
        let class = TabulatedClass::new(
            vec![vec![0.5, -0.25, 0.75], vec![0.1, 0.9, -0.3]],
            -1.0,
            1.0,
            None,
        )
        .unwrap();
        let hull = StarHullSpec::centered_at_zero(class).unwrap();
        let sample = SampleSet::identity(3);
        let mut prev = 0.0;
        for r in [0.0, 0.01, 0.05, 0.2, 0.5, 1.0, 2.0] {
            let v = star_hull_local_conditional(&hull, &sample, r, SigmaMode::Exact, 0)
                .unwrap()
                .value;
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn fixed_sigma_curve_ratio_is_nonincreasing() {
        let class = TabulatedClass::new(
            vec![vec![0.5, -0.25, 0.75, 0.1], vec![0.1, 0.9, -0.3, -0.6]],
            -1.0,
            1.0,
            None,
        )
        .unwrap();
        let hull = StarHullSpec::centered_at_zero(class).unwrap();
        let sample = SampleSet::identity(4);
        let sigma = SigmaVector::new(vec![1, -1, 1, 1]).unwrap();
        let curve = StarHullSigmaCurve::new(&hull, &sample, &sigma).unwrap();
        let grid: Vec<f64> = crate::grid::geometric_grid(1e-4, 4.0, 50);
        for w in grid.windows(2) {
            assert!(curve.ratio(w[0]) >= curve.ratio(w[1]));
            assert!(curve.value(w[0]) <= curve.value(w[1]));
        }
    }

    #[test]
    fn loss_localization_collapses_at_large_radius() {
        // r >= 1/2 pins the alpha range at [1, 1]; the grid form reduces to
        // the plain localized average at threshold 2r.
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![0.0; 3]];
        let loss = TabulatedClass::new(rows, 0.0, 1.0, None).unwrap();
        let sample = SampleSet::identity(3);
        let out =
            loss_star_hull_local_conditional(&loss, &sample, 0.5, SigmaMode::Exact, 0).unwrap();
        let cache = LocalizedSigmaCache::build(&loss, &sample, None, SigmaMode::Exact, 0).unwrap();
        let plain = cache.plain_local_average(1.0, LocalizationMoment::Mean);
        assert!((out.alpha_grid_form - plain).abs() < 1e-15);
        assert!(out.estimate.value >= out.alpha_grid_form);
        assert!(out.estimate.value >= out.hull_form);
    }

    #[test]
    fn loss_localization_zero_radius() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let loss = TabulatedClass::new(rows, 0.0, 1.0, None).unwrap();
        let sample = SampleSet::identity(2);
        let out =
            loss_star_hull_local_conditional(&loss, &sample, 0.0, SigmaMode::Exact, 0).unwrap();
        assert_eq!(out.estimate.value, 0.0);
    }

    #[test]
    fn loss_localization_rejects_bad_range() {
        let rows = vec![vec![2.0, 0.0]];
        let loss = TabulatedClass::new(rows, 0.0, 2.0, None).unwrap();
        let sample = SampleSet::identity(2);
        assert!(matches!(
            loss_star_hull_local_conditional(&loss, &sample, 0.1, SigmaMode::Exact, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn loss_forms_agree_on_uniform_level_instances() {
        // When every nonzero loss row sits at the same empirical level, the
        // two localizations coincide up to the alpha-grid resolution: n = 3,
        // three disjoint unit-loss rows plus a perfect predictor.
        let rows: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0],
        ];
        let loss = TabulatedClass::new(rows, 0.0, 1.0, None).unwrap();
        let sample = SampleSet::identity(3);
        for &r in &[0.01, 0.05, 0.1, 0.15] {
            let out =
                loss_star_hull_local_conditional(&loss, &sample, r, SigmaMode::Exact, 0).unwrap();
            let step = (1.0 / (2.0 * r).sqrt()).powf(1.0 / (ALPHA_GRID_POINTS as f64 - 1.0));
            let tolerance = out.hull_form * (step - 1.0) + 1e-12;
            assert!(
                (out.hull_form - out.alpha_grid_form).abs() <= tolerance.max(1e-3),
                "forms diverge at r = {r}: {} vs {}",
                out.hull_form,
                out.alpha_grid_form
            );
        }
    }

    #[test]
    fn hull_dominates_alpha_grid_form() {
        // The closed-form hull value always dominates the grid rewriting.
        let rows: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0],
        ];
        let loss = TabulatedClass::new(rows, 0.0, 1.0, None).unwrap();
        let sample = SampleSet::identity(4);
        for r in [0.0, 0.05, 0.1, 0.25, 0.5] {
            let out =
                loss_star_hull_local_conditional(&loss, &sample, r, SigmaMode::Exact, 0).unwrap();
            assert!(out.hull_form >= out.alpha_grid_form - 1e-15);
            assert_eq!(out.estimate.value, out.hull_form.max(out.alpha_grid_form));
        }
    }

    #[test]
    fn scaling_property_exact() {
        let sample = SampleSet::identity(3);
        let rows = vec![vec![0.5, -0.25, 0.75], vec![0.1, 0.9, -0.3]];
        let class = TabulatedClass::new(rows.clone(), -1.0, 1.0, None).unwrap();
        let scaled_rows: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().map(|v| 0.25 * v).collect()).collect();
        let scaled = TabulatedClass::new(scaled_rows, -1.0, 1.0, None).unwrap();
        let base = conditional_rademacher_exact(&class, &sample).unwrap();
        let quarter = conditional_rademacher_exact(&scaled, &sample).unwrap();
        assert_eq!(quarter.value, 0.25 * base.value);
    }

    #[test]
    fn gray_walk_visits_every_vector_once() {
        let mut walk = SigmaGrayWalk::new(4).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        let encode = |s: &[i8]| -> u16 {
            s.iter().enumerate().map(|(i, &v)| if v < 0 { 1 << i } else { 0 }).sum()
        };
        seen.insert(encode(walk.sigma()));
        while walk.advance().is_some() {
            assert!(seen.insert(encode(walk.sigma())));
        }
        assert_eq!(seen.len(), 16);
    }
}
